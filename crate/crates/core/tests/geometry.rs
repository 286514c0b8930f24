use loopdyn::geometry::*;
use proptest::prelude::*;
use std::f64::consts::PI;

fn nonuniform_circle(n: usize) -> ClosedCurve {
    let nodes = (0..n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let a = 2.0 * PI * t + 0.3 * (2.0 * PI * t).sin();
            Vec3::new(a.cos(), a.sin(), 0.0)
        })
        .collect();
    ClosedCurve::from_nodes(nodes).unwrap()
}

#[test]
fn resample_nonuniform_circle_equispaced_chords() {
    let c = resample_arclength(&nonuniform_circle(64), 64).unwrap();
    let nodes = c.nodes();
    let chord = (nodes[1] - nodes[0]).norm();
    for i in 0..64 {
        assert!(((nodes[(i + 1) % 64] - nodes[i]).norm() - chord).abs() < 1e-10);
        assert!((nodes[i].norm() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn resample_equispaced_is_identity() {
    let c = circle(1.0, 48);
    let r = resample_arclength(&c, 48).unwrap();
    for (a, b) in c.nodes().iter().zip(r.nodes()) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn resample_preserves_torus_knot_length() {
    let raw = torus_knot(2.0, 0.8, 256);
    // Oracle: composite Gauss-Legendre on the analytic speed.
    let speed = |t: f64| {
        let r = 2.0 + 0.8 * (3.0 * t).cos();
        let dr = -2.4 * (3.0 * t).sin();
        let dx = dr * (2.0 * t).cos() - 2.0 * r * (2.0 * t).sin();
        let dy = dr * (2.0 * t).sin() + 2.0 * r * (2.0 * t).cos();
        let dz = 2.4 * (3.0 * t).cos();
        (dx * dx + dy * dy + dz * dz).sqrt()
    };
    let oracle = loopdyn::quadrature::integrate_interval(0.0, 2.0 * PI, 64, 20, speed);
    let r = resample_arclength(&raw, 128).unwrap();
    assert!((r.length() - oracle).abs() < 1e-6, "{} vs {}", r.length(), oracle);
    let r2 = resample_arclength(&r, 128).unwrap();
    for (a, b) in r.nodes().iter().zip(r2.nodes()) {
        assert!((a - b).norm() < 1e-10);
    }
    let l = r.length();
    for i in 0..128 {
        let s = r.arclength_at(r.node_param(i));
        assert!((s - i as f64 * l / 128.0).abs() < 1e-10 * l);
    }
}

#[test]
fn tangent_of_circle_and_ellipse() {
    let rho = 1.7;
    let c = circle(rho, 40);
    for (i, t) in tangent(&c).iter().enumerate() {
        let a = 2.0 * PI * i as f64 / 40.0;
        assert!((t - Vec3::new(-a.sin(), a.cos(), 0.0)).norm() < 1e-12);
    }
    let e = ellipse(2.0, 1.0, 256);
    for (i, t) in tangent(&e).iter().enumerate() {
        let a = 2.0 * PI * i as f64 / 256.0;
        let exact = Vec3::new(-2.0 * a.sin(), a.cos(), 0.0).normalize();
        assert!((t - exact).norm() < 1e-6);
        assert!((t.norm() - 1.0).abs() < 1e-14);
    }
}

#[test]
fn straight_segment_tangent_and_frame() {
    let seg = StraightSegment::centered(Vec3::z(), 1.0).unwrap();
    let chart = TubeChart::for_line(&seg, Vec3::x());
    let f = chart.frame(0.3);
    assert!((f.tangent - Vec3::z()).norm() < 1e-15);
    assert!((f.n1 - Vec3::x()).norm() < 1e-15);
    assert!((f.n2 - Vec3::y()).norm() < 1e-15);
    let p = chart.tube_point(0.5, 1e-3, 0.0).unwrap().point;
    assert!((p - 1e-3 * Vec3::x()).norm() < 1e-15);
    assert_eq!(chart.area_element(0.5, 0.2, 1.0).unwrap(), 0.2);
}

#[test]
fn curvature_of_circles_and_ellipse() {
    for rho in [1.0, 0.5, 3.0] {
        let c = circle(rho, 32);
        for (h, p) in curvature_vector(&c).iter().zip(c.nodes()) {
            assert!((h.norm() - 1.0 / rho).abs() < 1e-10);
            assert!(h.dot(p) < 0.0);
        }
    }
    let e = ellipse(2.0, 1.0, 512);
    let h = curvature_vector(&e);
    assert!((h[0].norm() - 2.0).abs() < 1e-4);
    for (hv, t) in h.iter().zip(tangent(&e)) {
        assert!(hv.dot(&t).abs() < 1e-8);
    }
}

#[test]
fn planar_curve_frame_uses_normal_direction() {
    let e = ellipse(2.0, 1.0, 64);
    let chart = adapted_frame(&e).unwrap();
    assert!((chart.reference_direction() - Vec3::z()).norm() < 1e-12);
    for (f, t) in chart.node_frames().iter().zip(tangent(&e)) {
        assert!((f.n1 - Vec3::z()).norm() < 1e-12);
        assert!((f.n2 - t.cross(&Vec3::z())).norm() < 1e-12);
    }
}

#[test]
fn perturbed_circle_clearance() {
    let c = perturbed_circle(0.05, 7, 64);
    let chart = TubeChart::with_reference(&c, Vec3::z()).unwrap();
    let worst = tangent(&c).iter().map(|t| t.z.abs()).fold(0.0, f64::max);
    assert!(chart.clearance() >= 0.5);
    assert!(chart.clearance() <= (2.0 - 2.0 * worst).sqrt() + 1e-12);
}

#[test]
fn frame_is_orthonormal_and_continuous_on_all_bundled_curves() {
    for name in BUILTIN_CURVES {
        let c = builtin_curve(name, 128).unwrap();
        let chart = adapted_frame(&c).unwrap();
        let frames = chart.node_frames();
        for f in &frames {
            let m = nalgebra::Matrix3::from_columns(&[f.tangent, f.n1, f.n2]);
            assert!((m.transpose() * m - nalgebra::Matrix3::identity()).norm() < 1e-10, "{name}");
            assert!(m.determinant() > 0.0);
        }
        for i in 0..frames.len() {
            let j = (i + 1) % frames.len();
            assert!((frames[i].n1 - frames[j].n1).norm() < 0.5, "{name}: frame jump at {i}");
        }
    }
}

#[test]
fn stadium_has_flat_stretches_and_continuous_frame() {
    let c = builtin_curve("stadium", 256).unwrap();
    let h = curvature_vector(&c);
    let flat = h.iter().filter(|v| v.norm() < 1e-6).count();
    assert!(flat > 40, "only {flat} flat nodes");
    let chart = adapted_frame(&c).unwrap();
    let mut max_jump: f64 = 0.0;
    let m = 2048;
    let mut prev = chart.frame(0.0).n2;
    for k in 1..=m {
        let cur = chart.frame(k as f64 / m as f64).n2;
        max_jump = max_jump.max((cur - prev).norm());
        prev = cur;
    }
    assert!(max_jump < 0.05);
}

#[test]
fn tube_point_distance_on_circle() {
    let c = circle(1.0, 32);
    let chart = adapted_frame(&c).unwrap();
    let dense: Vec<Vec3> = (0..20000).map(|i| c.point(i as f64 / 20000.0)).collect();
    for k in 0..24 {
        let theta = 2.0 * PI * k as f64 / 24.0;
        let p = chart.tube_point(0.37, 0.1, theta).unwrap();
        assert!(!p.beyond_reach);
        assert!((p.point - c.point(0.37)).norm() - 0.1 < 1e-14);
        let d = dense.iter().map(|q| (p.point - q).norm()).fold(f64::INFINITY, f64::min);
        assert!((d - 0.1).abs() < 1e-6);
    }
    assert_eq!(chart.tube_point(0.0, 0.0, 1.0).unwrap().point, c.point(0.0));
    assert!(chart.tube_point(0.0, 1.5, 0.0).unwrap().beyond_reach);
}

#[test]
fn area_element_closed_form_on_circle() {
    let c = circle(1.0, 32);
    let chart = adapted_frame(&c).unwrap();
    let f = chart.frame(0.2);
    let theta = f.curvature.dot(&f.n2).atan2(f.curvature.dot(&f.n1));
    let a = chart.area_element(0.2, 0.1, theta).unwrap();
    assert!((a - 0.09).abs() < 1e-12);
    assert!(matches!(chart.area_element(0.2, 1.2, theta), Err(loopdyn::Error::NonPositiveArea { .. })));
}

/// Tube area from the area element (trapezoid in s and θ) against `2πrL`.
fn tube_area(chart: &TubeChart, r: f64, ns: usize, nt: usize) -> f64 {
    let c = chart.curve();
    let mut total = 0.0;
    for i in 0..ns {
        let u = i as f64 / ns as f64;
        let speed = c.speed_at(u);
        for k in 0..nt {
            let th = 2.0 * PI * k as f64 / nt as f64;
            total += chart.area_element(u, r, th).unwrap() * speed;
        }
    }
    total * 2.0 * PI / (ns * nt) as f64
}

/// Triangulated area of `∂B_r(γ)` from tube points on an `m × m` grid.
fn triangulated_area(chart: &TubeChart, r: f64, m: usize) -> f64 {
    let p =
        |i: usize, k: usize| chart.tube_point((i % m) as f64 / m as f64, r, 2.0 * PI * (k % m) as f64 / m as f64).unwrap().point;
    let mut a = 0.0;
    for i in 0..m {
        for k in 0..m {
            let (p00, p10, p01, p11) = (p(i, k), p(i + 1, k), p(i, k + 1), p(i + 1, k + 1));
            a += 0.5 * (p10 - p00).cross(&(p11 - p00)).norm();
            a += 0.5 * (p11 - p00).cross(&(p01 - p00)).norm();
        }
    }
    a
}

#[test]
fn tube_area_matches_triangulation_oracle() {
    let c = ellipse(2.0, 1.0, 64);
    let chart = adapted_frame(&c).unwrap();
    let r = 0.2;
    let exact = 2.0 * PI * r * c.length();
    assert!((tube_area(&chart, r, 64, 16) - exact).abs() < 1e-10 * exact);
    // Triangulation converges at second order; Richardson removes the leading term.
    let a1 = triangulated_area(&chart, r, 200);
    let a2 = triangulated_area(&chart, r, 400);
    let extrapolated = (4.0 * a2 - a1) / 3.0;
    assert!((extrapolated - exact).abs() < 1e-5 * exact, "{extrapolated} vs {exact}");
}

#[test]
fn embeddedness_radius_examples() {
    assert!((embeddedness_radius(&circle(1.0, 64)).unwrap() - 1.0).abs() < 1e-9);
    assert!((embeddedness_radius(&circle(2.0, 64)).unwrap() - 2.0).abs() < 1e-9);
    let c = two_lobe(0.15, 0.4, 256);
    let kmax = (0..20000).map(|i| c.curvature_at(i as f64 / 20000.0).norm()).fold(0.0, f64::max);
    assert!(1.0 / kmax > 0.15, "curvature bound {}", 1.0 / kmax);
    // Exhaustive pairwise oracle restricted to pairs facing each other across the neck.
    let pts: Vec<Vec3> = (0..2000).map(|i| c.point(i as f64 / 2000.0)).collect();
    let mut neck = f64::INFINITY;
    for p in pts.iter().filter(|p| p.y > 0.0) {
        for q in pts.iter().filter(|q| q.y < 0.0) {
            if (p.x - q.x).abs() < 0.05 && p.x.abs() < 0.3 {
                neck = neck.min((p - q).norm());
            }
        }
    }
    let r = embeddedness_radius(&c).unwrap();
    assert!((neck - 0.3).abs() < 1e-4);
    assert!((r - 0.15).abs() < 1e-9, "{r}");
}

#[test]
fn closest_point_round_trips() {
    let c = ellipse(2.0, 1.0, 128);
    let chart = adapted_frame(&c).unwrap();
    let p = c.point(0.3);
    let (u, r, th) = chart.closest_point(&p).unwrap();
    assert!((u - 0.3).abs() < 1e-12 && r == 0.0 && th == 0.0);
    for (u0, r0, t0) in [(0.1, 0.05, 1.0), (0.77, 0.2, 4.0), (0.5, 0.01, 0.2)] {
        let x = chart.tube_point(u0, r0, t0).unwrap().point;
        let (u, r, t) = chart.closest_point(&x).unwrap();
        assert!((u - u0).abs() < 1e-8 && (r - r0).abs() < 1e-8 && (t - t0).abs() < 1e-8);
    }
    let far = Vec3::new(0.0, 0.0, 5.0);
    assert!(matches!(chart.closest_point(&far), Err(loopdyn::Error::OutsideTube { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn closest_point_matches_dense_search(u0 in 0.0f64..1.0, r0 in 0.0f64..0.3, t0 in 0.0f64..std::f64::consts::TAU) {
        let c = ellipse(2.0, 1.0, 128);
        let chart = TubeChart::with_reference(&c, Vec3::z()).unwrap();
        let x = chart.tube_point(u0, r0, t0).unwrap().point;
        let (u, r, _) = chart.closest_point(&x).unwrap();
        let dense = (0..40000).map(|i| (x - c.point(i as f64 / 40000.0)).norm()).fold(f64::INFINITY, f64::min);
        prop_assert!((r - dense).abs() < 1e-6);
        prop_assert!((c.point(u) - x).norm() - r < 1e-12);
    }

    #[test]
    fn tube_area_identity_on_bundled_curves(idx in 0usize..4, frac in 0.05f64..0.9) {
        let c = builtin_curve(BUILTIN_CURVES[idx], 128).unwrap();
        let chart = adapted_frame(&c).unwrap();
        let r = frac * chart.embeddedness_radius();
        let exact = 2.0 * PI * r * c.length();
        prop_assert!((tube_area(&chart, r, 256, 16) - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn tube_points_are_injective_below_reach(frac in 0.1f64..0.95) {
        let c = builtin_curve("ellipse", 64).unwrap();
        let chart = adapted_frame(&c).unwrap();
        let r = frac * chart.embeddedness_radius();
        let pts: Vec<(usize, Vec3)> = (0..48)
            .flat_map(|i| (0..8).map(move |k| (i, k)))
            .map(|(i, k)| (i, chart.tube_point(i as f64 / 48.0, r, 2.0 * PI * k as f64 / 8.0).unwrap().point))
            .collect();
        for (a, (_, p)) in pts.iter().enumerate() {
            for (_, q) in pts.iter().skip(a + 1) {
                prop_assert!((p - q).norm() > 1e-9);
            }
        }
    }
}
