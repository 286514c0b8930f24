//! Gauss–Legendre rules and distance-graded composite panel integration along
//! a centerline.

use crate::geometry::{Centerline, Vec3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::LazyLock;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

const MAX_CACHED_ORDER: usize = 64;

static RULES: LazyLock<Vec<GaussRule>> = LazyLock::new(|| (0..=MAX_CACHED_ORDER).map(compute_rule).collect());

fn compute_rule(n: usize) -> GaussRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussRule { nodes, weights }
}

/// Cached Gauss–Legendre rule with `n` points (computed on demand beyond the cache).
pub fn gauss_legendre(n: usize) -> std::borrow::Cow<'static, GaussRule> {
    if n <= MAX_CACHED_ORDER {
        std::borrow::Cow::Borrowed(&RULES[n])
    } else {
        std::borrow::Cow::Owned(compute_rule(n))
    }
}

/// Settings of the composite panel rule used for all line integrals.
///
/// Panels are bisected until their arclength is at most `ratio` times the
/// distance from the evaluation point to the panel, which grades them
/// geometrically (factor 2) toward the nearest point of the curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    pub order: usize,
    pub ratio: f64,
    pub base_panels: usize,
    pub max_depth: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { order: 8, ratio: 0.25, base_panels: 16, max_depth: 52 }
    }
}

impl QuadratureSpec {
    /// A finer rule, used as a refinement oracle.
    pub fn refined(&self, factor: usize) -> Self {
        QuadratureSpec {
            order: self.order * factor,
            ratio: self.ratio / factor as f64,
            base_panels: self.base_panels * factor,
            max_depth: self.max_depth + 8,
        }
    }
}

/// Value of a vector-valued line integral with an a priori error estimate.
#[derive(Clone, Copy, Debug)]
pub struct LineIntegral<const M: usize> {
    pub value: [f64; M],
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Integrates `f(u, γ(u), γ'(u))` over the parameter domain of `line`.
///
/// Refinement is driven by the distance from `x` to each panel, floored by
/// `floor` (the near-singular scale for integrands such as tube surfaces that
/// never reach the core). Panels are visited left to right, so the summation
/// order is fixed.
pub fn integrate_line<C: Centerline + ?Sized, const M: usize>(
    line: &C,
    x: &Vec3,
    floor: f64,
    spec: &QuadratureSpec,
    mut f: impl FnMut(f64, &Vec3, &Vec3) -> [f64; M],
) -> LineIntegral<M> {
    let rule = gauss_legendre(spec.order);
    let speed = line.speed_bound();
    let mut value = [0.0; M];
    let mut error = 0.0;
    let mut evaluations = 0;
    let mut converged = true;
    let base = spec.base_panels.max(1);
    let mut stack: Vec<(f64, f64, u32)> = Vec::with_capacity(64);
    for p in (0..base).rev() {
        stack.push((p as f64 / base as f64, (p + 1) as f64 / base as f64, 0));
    }
    while let Some((a, b, depth)) = stack.pop() {
        let mid = 0.5 * (a + b);
        let arc = (b - a) * speed;
        let d_lb = (x - line.point(mid)).norm() - 0.5 * arc;
        let d_eff = d_lb.max(0.0).hypot(floor);
        if arc > spec.ratio * d_eff && depth < spec.max_depth {
            stack.push((mid, b, depth + 1));
            stack.push((a, mid, depth + 1));
            continue;
        }
        let half = 0.5 * (b - a);
        let mut panel = [0.0; M];
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let u = mid + half * t;
            let (pos, d1) = line.point_and_derivative(u);
            let v = f(u, &pos, &d1);
            for k in 0..M {
                panel[k] += w * half * v[k];
            }
        }
        evaluations += rule.nodes.len();
        let mag = panel.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if arc > spec.ratio * d_eff {
            converged = false;
            error += mag;
        } else if d_eff > 0.0 {
            let a = 2.0 * d_eff / arc.max(f64::MIN_POSITIVE);
            let rho = a + (a * a + 1.0).sqrt();
            error += mag * rho.powi(-2 * spec.order as i32);
        }
        for k in 0..M {
            value[k] += panel[k];
        }
    }
    LineIntegral { value, error, evaluations, converged }
}

/// Composite Gauss–Legendre integral of a scalar function on `[a, b]` with
/// `panels` equal panels.
pub fn integrate_interval(a: f64, b: f64, panels: usize, order: usize, f: impl Fn(f64) -> f64) -> f64 {
    let rule = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mut s = 0.0;
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            s += w * f(lo + 0.5 * h * (t + 1.0));
        }
        total += 0.5 * h * s;
    }
    total
}
