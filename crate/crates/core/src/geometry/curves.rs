use super::{resample_arclength, ClosedCurve, Vec3};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Names accepted by [`builtin_curve`].
pub const BUILTIN_CURVES: [&str; 4] = ["circle", "ellipse", "stadium", "torus-knot"];

fn expect(c: Result<ClosedCurve>) -> ClosedCurve {
    c.expect("built-in curve parameters are valid")
}

/// Circle of radius `rho` in the xy-plane, `n` uniform nodes.
pub fn circle(rho: f64, n: usize) -> ClosedCurve {
    expect(ClosedCurve::from_nodes(
        (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                Vec3::new(rho * t.cos(), rho * t.sin(), 0.0)
            })
            .collect(),
    ))
}

/// Ellipse with semi-axes `a` (x) and `b` (y), sampled uniformly in the
/// angle parameter (not in arclength).
pub fn ellipse(a: f64, b: f64, n: usize) -> ClosedCurve {
    expect(ClosedCurve::from_nodes(
        (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                Vec3::new(a * t.cos(), b * t.sin(), 0.0)
            })
            .collect(),
    ))
}

/// Non-planar loop winding 2 times around the z-axis and 3 times around the
/// core circle of a torus with radii `big` and `small`.
pub fn torus_knot(big: f64, small: f64, n: usize) -> ClosedCurve {
    expect(ClosedCurve::from_nodes(
        (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                let r = big + small * (3.0 * t).cos();
                Vec3::new(r * (2.0 * t).cos(), r * (2.0 * t).sin(), small * (3.0 * t).sin())
            })
            .collect(),
    ))
}

/// Smooth step from 0 to 1 on `[0, 1]`, flat to all orders at both ends.
fn smooth_step(x: f64) -> f64 {
    let f = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        f(x) / (f(x) + f(1.0 - x))
    }
}

/// Planar stadium: two straight segments of length `straight` joined by
/// smooth half-turns of arclength `turn` each. The curvature vanishes
/// identically on the straight parts.
pub fn stadium(straight: f64, turn: f64, n: usize) -> ClosedCurve {
    let total = 2.0 * (straight + turn);
    let angle = |s: f64| {
        let s = s.rem_euclid(total);
        let first = smooth_step((s - straight) / turn);
        let second = smooth_step((s - 2.0 * straight - turn) / turn);
        PI * (first + second)
    };
    let rule = gauss_legendre(16);
    let sub = 8;
    let mut p = Vec3::new(-0.5 * straight, -turn / PI, 0.0);
    let mut nodes = Vec::with_capacity(n);
    let h = total / n as f64;
    for i in 0..n {
        nodes.push(p);
        let lo = i as f64 * h;
        for k in 0..sub {
            let a = lo + k as f64 * h / sub as f64;
            let w = h / sub as f64;
            for (t, wt) in rule.nodes.iter().zip(&rule.weights) {
                let th = angle(a + 0.5 * w * (t + 1.0));
                p += 0.5 * w * wt * Vec3::new(th.cos(), th.sin(), 0.0);
            }
        }
    }
    expect(ClosedCurve::from_nodes(nodes))
}

/// Planar dumbbell `(cos t, sin t (h₀ + h₁ cos² t), 0)`; its neck has width
/// `2 h₀` at `x = 0`.
pub fn two_lobe(h0: f64, h1: f64, n: usize) -> ClosedCurve {
    expect(ClosedCurve::from_nodes(
        (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                let c = t.cos();
                Vec3::new(c, t.sin() * (h0 + h1 * c * c), 0.0)
            })
            .collect(),
    ))
}

/// Unit circle plus a seeded smooth perturbation of sup-amplitude at most
/// `amplitude` in every component (Fourier modes 1..=4).
pub fn perturbed_circle(amplitude: f64, seed: u64, n: usize) -> ClosedCurve {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = 4;
    let mut coef = vec![[0.0f64; 6]; modes];
    for c in coef.iter_mut() {
        for v in c.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
    }
    let scale = amplitude / (2.0 * modes as f64);
    expect(ClosedCurve::from_nodes(
        (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                let mut p = Vec3::new(t.cos(), t.sin(), 0.0);
                for (k, c) in coef.iter().enumerate() {
                    let m = (k + 1) as f64;
                    let (s, co) = (m * t).sin_cos();
                    p += scale * Vec3::new(c[0] * co + c[1] * s, c[2] * co + c[3] * s, c[4] * co + c[5] * s);
                }
                p
            })
            .collect(),
    ))
}

/// Bundled reference curve by name, resampled to `n` arclength-uniform nodes.
pub fn builtin_curve(name: &str, n: usize) -> Result<ClosedCurve> {
    let raw = match name {
        "circle" => circle(1.0, n),
        "ellipse" => ellipse(2.0, 1.0, n.max(256)),
        "stadium" => stadium(2.0, PI, n.max(256)),
        "torus-knot" => torus_knot(2.0, 0.8, n.max(256)),
        other => return Err(Error::invalid(format!("unknown built-in curve '{other}'"))),
    };
    resample_arclength(&raw, n)
}
