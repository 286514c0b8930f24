use loopdyn::geometry::*;
use loopdyn::quadrature::QuadratureSpec;
use loopdyn::strain::*;
use nalgebra::{Matrix3, Rotation3};
use proptest::prelude::*;
use rayon::prelude::*;
use std::f64::consts::PI;

fn quad() -> QuadratureSpec {
    QuadratureSpec::default()
}

/// `Ŝ` of the unit circle at `x` by a dense trapezoid rule on the exact parametrization.
fn circle_hat_brute(x: &Vec3, m: usize) -> Vec3 {
    let mut acc = Vec3::zeros();
    for i in 0..m {
        let t = 2.0 * PI * i as f64 / m as f64;
        let y = Vec3::new(t.cos(), t.sin(), 0.0);
        let d1 = 2.0 * PI * Vec3::new(-t.sin(), t.cos(), 0.0);
        acc += newton_kernel(&(x - y)).unwrap().cross(&d1);
    }
    acc / m as f64
}

#[test]
fn kernel_norm_identity() {
    for x in [Vec3::new(0.3, -1.0, 2.0), Vec3::new(1e-3, 0.0, 0.0), Vec3::new(-5.0, 4.0, 1.0)] {
        let k = newton_kernel(&x).unwrap();
        assert!((k.norm() - 1.0 / (4.0 * PI * x.norm_squared())).abs() < 1e-14 * k.norm());
    }
}

#[test]
fn straight_segment_near_field() {
    let ell = 1.0;
    let eps = 1e-3 * ell;
    let seg = StraightSegment::centered(Vec3::z(), ell).unwrap();
    let chart = TubeChart::for_line(&seg, Vec3::x());
    let b = Vec3::new(0.3, -0.2, 1.0);
    let e = singular_strain(&chart, &b, &(eps * Vec3::x()), &quad()).unwrap();
    let line = b * Vec3::y().transpose() / (2.0 * PI * eps);
    assert!((e.value - line).norm() <= 0.01 * line.norm());
    // Exact finite-segment value: ∫_{-ℓ}^{ℓ} ε/(ε²+s²)^{3/2} ds = 2ℓ/(ε√(ℓ²+ε²)).
    let exact = Vec3::y() * (2.0 * ell / (eps * (ell * ell + eps * eps).sqrt())) / (4.0 * PI);
    assert!((e.hat - exact).norm() < 1e-12 * exact.norm());
    let d = e.decomposition.unwrap();
    assert_eq!(d.leading_log, Vec3::zeros());
    assert!((e.reconstruct(&b).unwrap() - e.value).norm() < 1e-12 * e.value.norm());
}

#[test]
fn straight_segment_remainder_stays_bounded() {
    let seg = StraightSegment::centered(Vec3::z(), 1.0).unwrap();
    let chart = TubeChart::for_line(&seg, Vec3::x());
    for eps in [1e-2, 1e-3, 1e-4, 1e-5] {
        let e = strain_expansion(&chart, &Vec3::z(), eps, 0.5, 0.7, &quad()).unwrap();
        let r = e.decomposition.unwrap().remainder;
        assert!(r.norm() < 2.0 * eps, "remainder {} at eps {eps}", r.norm());
    }
}

#[test]
fn far_field_bound() {
    let c = builtin_curve("torus-knot", 128).unwrap();
    let chart = adapted_frame(&c).unwrap();
    let b = Vec3::new(1.0, 0.5, -0.25);
    for x in [Vec3::new(10.0, 0.0, 0.0), Vec3::new(3.0, 4.0, 8.0), Vec3::new(0.0, 0.0, 5.0)] {
        let e = singular_strain(&chart, &b, &x, &quad()).unwrap();
        assert!(e.value.norm() <= b.norm() * c.length() / (4.0 * PI * e.dist * e.dist));
        assert!(e.decomposition.is_none());
    }
}

#[test]
fn circle_axis_matches_closed_form_and_brute_force() {
    let c = circle(1.0, 32);
    let chart = adapted_frame(&c).unwrap();
    for h in [0.0, 0.3, 2.0] {
        let x = Vec3::new(0.0, 0.0, h);
        let e = singular_strain(&chart, &Vec3::z(), &x, &quad()).unwrap();
        let closed = Vec3::z() * 0.5 / (1.0 + h * h).powf(1.5);
        assert!((e.hat - closed).norm() < 1e-12);
        let brute = circle_hat_brute(&x, 4000);
        assert!((e.hat - brute).norm() < 1e-8);
        assert!(e.error < 1e-10);
    }
}

#[test]
fn refined_quadrature_agrees_near_the_core() {
    let c = builtin_curve("ellipse", 96).unwrap();
    let chart = adapted_frame(&c).unwrap();
    let fine = quad().refined(2);
    for (u, r, th) in [(0.1, 1e-2, 0.3), (0.6, 1e-4, 2.0), (0.33, 1e-6, 4.0)] {
        let x = chart.tube_point(u, r, th).unwrap().point;
        let (a, _) = strain_hat(&c, &x, 0.0, &quad());
        let (b, _) = strain_hat(&c, &x, 0.0, &fine);
        // Node rounding of size 1e-16·L sets a floor relative to the distance.
        let tol = 1e-11 + 1e-16 * c.length() / r;
        assert!((a - b).norm() < tol * a.norm(), "r = {r}: {}", (a - b).norm() / a.norm());
    }
}

#[test]
fn singular_point_rejected() {
    let c = circle(1.0, 32);
    let chart = adapted_frame(&c).unwrap();
    let err = singular_strain(&chart, &Vec3::z(), &c.point(0.25), &quad()).unwrap_err();
    assert_eq!(err.code(), "singular-point");
}

#[test]
fn circle_remainder_over_log_decreases() {
    let c = circle(1.0, 64);
    let chart = adapted_frame(&c).unwrap();
    let mut prev = f64::INFINITY;
    for eps in [1e-2, 1e-3, 1e-4] {
        let worst = (0..16)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / 16.0;
                strain_expansion(&chart, &Vec3::z(), eps, 0.1, th, &quad()).unwrap().decomposition.unwrap().remainder.norm()
            })
            .fold(0.0, f64::max);
        let ratio = worst / eps.ln().abs();
        assert!(ratio < prev, "eps {eps}: {ratio} vs {prev}");
        prev = ratio;
    }
}

#[test]
fn circle_log_coefficient_fit() {
    let c = circle(1.0, 64);
    let chart = adapted_frame(&c).unwrap();
    let f = chart.frame(0.0);
    let dir = f.tangent.cross(&f.curvature);
    let e = dir.normalize();
    let th = 1.0;
    let eps_list = [1e-2, 1e-3, 1e-4, 1e-5];
    let (xs, ys): (Vec<f64>, Vec<f64>) = eps_list
        .iter()
        .map(|&eps| {
            let ev = strain_expansion(&chart, &Vec3::z(), eps, 0.0, th, &quad()).unwrap();
            let d = ev.decomposition.unwrap();
            let y = (2.0 * PI * ev.hat - d.leading_inverse / eps).dot(&e);
            (eps.ln().abs(), y)
        })
        .unzip();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let slope =
        xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope - 0.5 * dir.norm()).abs() < 0.05 * 0.5, "slope {slope}");
}

#[test]
fn w_phi_trivial_cases() {
    let c = builtin_curve("ellipse", 64).unwrap();
    let x = Vec3::new(0.3, 0.2, 0.4);
    let zero = Variation::zero(&c);
    assert_eq!(w_phi(&c, &zero, &x, &quad()).unwrap(), 0.0);
    assert_eq!(dot_s(&c, &Vec3::z(), &zero, &x, &quad()).unwrap(), Matrix3::zeros());
    let tau = Variation::new(&c, tangent(&c)).unwrap();
    // Node tangents are interpolated, so only interpolation-level residue remains.
    let w = w_phi(&c, &tau, &x, &quad()).unwrap();
    let scale = strain_hat(&c, &x, 0.0, &quad()).0.norm();
    assert!(w.abs() < 1e-11 * scale, "{w}");
}

#[test]
fn w_phi_circle_inward_normal_on_axis() {
    let c = circle(1.0, 64);
    let inward: Vec<Vec3> = c.nodes().iter().map(|p| -p).collect();
    let var = Variation::new(&c, inward).unwrap();
    let x = Vec3::new(0.0, 0.0, 0.4);
    let w = w_phi(&c, &var, &x, &quad()).unwrap();
    let m = 4000;
    let mut brute = 0.0;
    for i in 0..m {
        let t = 2.0 * PI * i as f64 / m as f64;
        let y = Vec3::new(t.cos(), t.sin(), 0.0);
        let d1 = 2.0 * PI * Vec3::new(-t.sin(), t.cos(), 0.0);
        brute += newton_kernel(&(x - y)).unwrap().cross(&d1).dot(&(-y)) / m as f64;
    }
    assert!((w - brute).abs() < 1e-8);
}

fn smooth_field(curve: &ClosedCurve, seed: u64) -> Vec<Vec3> {
    let n = curve.len();
    let s = seed as f64;
    (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            Vec3::new((t + s).sin() + 0.3 * (2.0 * t).cos(), (2.0 * t - s).cos(), 0.5 * (3.0 * t + 0.2 * s).sin())
        })
        .collect()
}

#[test]
fn dot_s_matches_finite_difference_in_t() {
    let c = builtin_curve("torus-knot", 96).unwrap();
    let chart = adapted_frame(&c).unwrap();
    let b = Vec3::new(0.2, 1.0, -0.4);
    let phi = smooth_field(&c, 3);
    let var = Variation::new(&c, phi.clone()).unwrap();
    let h = 1e-5;
    let plus = c.displaced(&phi, h).unwrap();
    let minus = c.displaced(&phi, -h).unwrap();
    for (u, r, th) in [(0.2, 0.05, 1.0), (0.7, 0.2, 3.0), (0.45, 0.01, 5.5)] {
        let x = chart.tube_point(u, r, th).unwrap().point;
        let ds = dot_s(&c, &b, &var, &x, &quad()).unwrap();
        let sp = b * strain_hat(&plus, &x, 0.0, &quad()).0.transpose();
        let sm = b * strain_hat(&minus, &x, 0.0, &quad()).0.transpose();
        let fd = (sp - sm) / (2.0 * h);
        assert!((ds - fd).norm() < 1e-6 * fd.norm(), "rel {}", (ds - fd).norm() / fd.norm());
    }
}

#[test]
fn translation_variation_is_negative_directional_derivative() {
    let c = builtin_curve("ellipse", 64).unwrap();
    let shift = Vec3::new(0.3, -0.5, 0.8);
    let var = Variation::new(&c, vec![shift; c.len()]).unwrap();
    let b = Vec3::new(0.0, 0.0, 1.0);
    let x = Vec3::new(0.5, 1.3, 0.2);
    let ds = dot_s(&c, &b, &var, &x, &quad()).unwrap();
    let h = 1e-5;
    let sp = strain_hat(&c, &(x + h * shift), 0.0, &quad()).0;
    let sm = strain_hat(&c, &(x - h * shift), 0.0, &quad()).0;
    let fd = -b * ((sp - sm) / (2.0 * h)).transpose();
    assert!((ds - fd).norm() < 1e-6 * fd.norm());
}

#[test]
fn strain_is_divergence_free() {
    let c = builtin_curve("torus-knot", 96).unwrap();
    let h = 1e-4;
    for x in [Vec3::new(0.5, 0.3, 0.6), Vec3::new(2.5, 0.0, 0.4)] {
        let mut div = 0.0;
        let mut scale: f64 = 0.0;
        for j in 0..3 {
            let mut e = Vec3::zeros();
            e[j] = h;
            let dj = (strain_hat(&c, &(x + e), 0.0, &quad()).0[j] - strain_hat(&c, &(x - e), 0.0, &quad()).0[j]) / (2.0 * h);
            div += dj;
            scale = scale.max(dj.abs());
        }
        assert!(div.abs() < 1e-6 * scale.max(1.0), "div {div}");
    }
}

#[test]
fn circulation_counts_linking() {
    // Strong form of curl Ŝ = τ H¹|γ: Ŝ circulates once around the core.
    let c = circle(1.0, 64);
    let chart = adapted_frame(&c).unwrap();
    let f = chart.frame(0.2);
    let m = 64;
    let circulation = |center: Vec3, rad: f64| {
        let mut acc = 0.0;
        for k in 0..m {
            let th = 2.0 * PI * k as f64 / m as f64;
            let x = center + rad * f.normal(th);
            let dl = rad * f.normal(th + 0.5 * PI) * (2.0 * PI / m as f64);
            acc += strain_hat(&c, &x, 0.0, &quad()).0.dot(&dl);
        }
        acc
    };
    assert!((circulation(f.pos, 0.1) - 1.0).abs() < 1e-10);
    assert!((circulation(f.pos, 0.001) - 1.0).abs() < 1e-10);
    assert!(circulation(f.pos + 3.0 * f.n1, 0.5).abs() < 1e-10);
}

#[test]
fn curl_matches_nye_measure_weakly() {
    // ψ = χ(|x|)(−y, x, 0) with χ = (1 − |x|²/4)⁴ on |x| < 2; curl ψ by hand.
    let c = circle(1.0, 64);
    let chi = |r2: f64| if r2 < 4.0 { (1.0 - r2 / 4.0).powi(4) } else { 0.0 };
    let dchi = |r2: f64| if r2 < 4.0 { -(1.0 - r2 / 4.0).powi(3) } else { 0.0 };
    let curl_psi = |x: &Vec3| {
        let r2 = x.norm_squared();
        let g = 2.0 * dchi(r2);
        Vec3::new(-g * x.x * x.z, -g * x.y * x.z, 2.0 * chi(r2) + g * (x.x * x.x + x.y * x.y))
    };
    let m = 64;
    let h = 4.0 / m as f64;
    let rows: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..m {
                for k in 0..m {
                    let x = Vec3::new(-2.0 + (i as f64 + 0.5) * h, -2.0 + (j as f64 + 0.5) * h, -2.0 + (k as f64 + 0.5) * h);
                    if x.norm_squared() < 4.0 {
                        acc += strain_hat(&c, &x, 0.0, &quad()).0.dot(&curl_psi(&x));
                    }
                }
            }
            acc * h * h * h
        })
        .collect();
    let weak: f64 = rows.iter().sum();
    let nye = 2.0 * PI * chi(1.0);
    assert!((weak - nye).abs() < 0.02 * nye, "{weak} vs {nye}");
}

#[test]
fn far_sphere_has_spectral_decay() {
    let c = builtin_curve("torus-knot", 96).unwrap();
    let m = 64;
    let vals: Vec<f64> = (0..m)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / m as f64;
            strain_hat(&c, &Vec3::new(8.0 * t.cos(), 8.0 * t.sin(), 1.0), 0.0, &quad()).0.z
        })
        .collect();
    let coeffs = spectrum(&vals, 1);
    let peak = coeffs[0].iter().map(|z| z.norm()).fold(0.0, f64::max);
    for (k, z) in coeffs[0].iter().enumerate().take(m / 2).skip(2 * quad().order) {
        assert!(z.norm() < 1e-10 * peak, "mode {k}");
    }
}

#[test]
fn rotation_equivariance() {
    let c = builtin_curve("torus-knot", 64).unwrap();
    let rot = Rotation3::from_euler_angles(0.3, -1.1, 2.0);
    let rc = c.map_nodes(|p| rot * p).unwrap();
    let x = Vec3::new(0.4, 2.1, -0.3);
    let a = strain_hat(&c, &x, 0.0, &quad()).0;
    let b = strain_hat(&rc, &(rot * x), 0.0, &quad()).0;
    assert!((rot * a - b).norm() < 1e-12 * a.norm());
}

#[test]
fn remainder_is_lipschitz_in_the_curve() {
    let base = circle(1.0, 64);
    let chart = adapted_frame(&base).unwrap();
    let mut ratios = Vec::new();
    for amp in [1e-2, 5e-3] {
        let pert = perturbed_circle(amp, 11, 64);
        let pchart = TubeChart::with_reference(&pert, Vec3::z()).unwrap();
        let dist = (0..64).map(|i| (pert.nodes()[i] - base.nodes()[i]).norm()).fold(0.0, f64::max);
        for eps in [1e-2, 1e-3] {
            let mut worst: f64 = 0.0;
            for k in 0..8 {
                let th = 2.0 * PI * k as f64 / 8.0;
                let r0 = strain_expansion(&chart, &Vec3::z(), eps, 0.3, th, &quad()).unwrap().decomposition.unwrap().remainder;
                let r1 = strain_expansion(&pchart, &Vec3::z(), eps, 0.3, th, &quad()).unwrap().decomposition.unwrap().remainder;
                worst = worst.max((r0 - r1).norm());
            }
            ratios.push(worst / (dist * (eps.ln().abs() + 1.0)));
        }
    }
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    assert!(max < 50.0, "{ratios:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_is_homogeneous_of_degree_minus_two(x in -3.0f64..3.0, y in -3.0f64..3.0, z in -3.0f64..3.0, s in 0.1f64..10.0) {
        let v = Vec3::new(x, y, z);
        prop_assume!(v.norm() > 1e-3);
        let a = newton_kernel(&(s * v)).unwrap();
        let b = newton_kernel(&v).unwrap() / (s * s);
        prop_assert!((a - b).norm() <= 1e-13 * b.norm());
    }

    #[test]
    fn decomposition_reconstructs(u in 0.0f64..1.0, th in 0.0f64..std::f64::consts::TAU, le in 2.0f64..6.0) {
        let c = builtin_curve("ellipse", 64).unwrap();
        let chart = adapted_frame(&c).unwrap();
        let b = Vec3::new(0.3, 0.1, 1.0);
        let e = strain_expansion(&chart, &b, 10f64.powf(-le), u, th, &quad()).unwrap();
        let rec = e.reconstruct(&b).unwrap();
        prop_assert!((rec - e.value).norm() <= 1e-12 * e.value.norm());
    }
}
