//! Closed curves, the adapted normal frame and tubular coordinates.
//!
//! Curves are stored as trigonometric interpolants of their nodes. A fine
//! derivative table makes point, tangent and curvature queries at arbitrary
//! parameters cheap. The curve parameter `u` always lives in `[0, 1)`, and
//! node `i` of an `n`-node curve sits at `u = i / n`.

mod curves;
mod frame;
mod io;
mod table;

pub use curves::{builtin_curve, circle, ellipse, perturbed_circle, stadium, torus_knot, two_lobe, BUILTIN_CURVES};
pub use frame::{adapted_frame, FramePoint, TubeChart, TubePoint, ICOSAHEDRAL_DIRECTIONS};
pub use io::{read_curve, write_curve, CurveFile};
pub use table::{resample_spectrum, spectrum, PeriodicTable};

use crate::error::{Error, Result};
use nalgebra::Vector3;

pub type Vec3 = Vector3<f64>;

const TABLE_MIN_LEN: usize = 4096;
const TABLE_MIN_FACTOR: usize = 8;

/// Position and first two parameter derivatives of a centerline.
#[derive(Clone, Copy, Debug)]
pub struct CenterSample {
    pub pos: Vec3,
    pub d1: Vec3,
    pub d2: Vec3,
}

/// A parametrized core line over `u ∈ [0, 1]`.
///
/// Closed curves are periodic; the straight segment helper is open and only
/// serves as an oracle for line-integral checks.
pub trait Centerline: Sync {
    fn point(&self, u: f64) -> Vec3;
    fn point_and_derivative(&self, u: f64) -> (Vec3, Vec3);
    fn sample(&self, u: f64) -> CenterSample;
    fn is_closed(&self) -> bool;
    /// Upper bound on `|γ'(u)|`.
    fn speed_bound(&self) -> f64;
    fn length(&self) -> f64;
    /// Number of uniform samples used to seed nearest-point searches.
    fn seed_count(&self) -> usize {
        512
    }
}

/// Nearest parameter on `line` to `x` and the distance: seeded by uniform
/// sampling (ties resolved toward the smallest parameter), then Newton on the
/// squared distance.
pub fn nearest_param<C: Centerline + ?Sized>(line: &C, x: &Vec3) -> (f64, f64) {
    let m = line.seed_count();
    let closed = line.is_closed();
    let denom = if closed { m } else { m - 1 } as f64;
    let mut best_u = 0.0;
    let mut best_d = f64::INFINITY;
    for i in 0..m {
        let u = i as f64 / denom;
        let d = (x - line.point(u)).norm_squared();
        if d < best_d {
            best_d = d;
            best_u = u;
        }
    }
    let mut u = best_u;
    for _ in 0..50 {
        let s = line.sample(u);
        let d = x - s.pos;
        let g = -d.dot(&s.d1);
        let h = s.d1.norm_squared() - d.dot(&s.d2);
        let step = if h > 0.0 { g / h } else { g / s.d1.norm_squared() };
        let step = step.clamp(-1.0 / denom, 1.0 / denom);
        u -= step;
        if !closed {
            u = u.clamp(0.0, 1.0);
        }
        if step.abs() < 1e-16 {
            break;
        }
    }
    if closed {
        u = u.rem_euclid(1.0);
    }
    (u, (x - line.point(u)).norm())
}

/// Straight open segment from `a` to `b`.
#[derive(Clone, Copy, Debug)]
pub struct StraightSegment {
    pub a: Vec3,
    pub b: Vec3,
}

impl StraightSegment {
    pub fn new(a: Vec3, b: Vec3) -> Result<Self> {
        if (b - a).norm() <= 0.0 {
            return Err(Error::DegenerateCurve("segment endpoints coincide".into()));
        }
        Ok(StraightSegment { a, b })
    }

    /// Segment of half-length `half` centered at the origin along `dir`.
    pub fn centered(dir: Vec3, half: f64) -> Result<Self> {
        let d = dir.normalize();
        Self::new(-half * d, half * d)
    }

    pub fn tangent(&self) -> Vec3 {
        (self.b - self.a).normalize()
    }
}

impl Centerline for StraightSegment {
    fn point(&self, u: f64) -> Vec3 {
        self.a + u * (self.b - self.a)
    }
    fn point_and_derivative(&self, u: f64) -> (Vec3, Vec3) {
        (self.point(u), self.b - self.a)
    }
    fn sample(&self, u: f64) -> CenterSample {
        CenterSample { pos: self.point(u), d1: self.b - self.a, d2: Vec3::zeros() }
    }
    fn is_closed(&self) -> bool {
        false
    }
    fn speed_bound(&self) -> f64 {
        (self.b - self.a).norm()
    }
    fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }
}

/// Periodic sampled closed curve in 3D.
#[derive(Clone, Debug)]
pub struct ClosedCurve {
    nodes: Vec<Vec3>,
    factor: usize,
    table: PeriodicTable,
    cumulative: PeriodicTable,
    length: f64,
    speed_min: f64,
    speed_max: f64,
}

fn flatten(points: &[Vec3]) -> Vec<f64> {
    points.iter().flat_map(|p| [p.x, p.y, p.z]).collect()
}

impl ClosedCurve {
    /// Builds the trigonometric interpolant through `nodes`, which are taken
    /// as uniform-in-parameter samples of a closed curve.
    pub fn from_nodes(nodes: Vec<Vec3>) -> Result<Self> {
        let n = nodes.len();
        if n < 8 {
            return Err(Error::invalid(format!("a closed curve needs at least 8 nodes, got {n}")));
        }
        if nodes.iter().any(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(Error::invalid("curve nodes must be finite"));
        }
        let polygon: f64 = (0..n).map(|i| (nodes[(i + 1) % n] - nodes[i]).norm()).sum();
        for i in 0..n {
            let seg = (nodes[(i + 1) % n] - nodes[i]).norm();
            if seg <= 1e-13 * polygon.max(f64::MIN_POSITIVE) {
                return Err(Error::DegenerateCurve(format!("zero-length segment between nodes {i} and {}", (i + 1) % n)));
            }
        }
        let factor = TABLE_MIN_FACTOR.max(TABLE_MIN_LEN.div_ceil(n));
        let len = n * factor;
        let table = PeriodicTable::new(&flatten(&nodes), 3, 4, len);

        let speeds: Vec<f64> =
            (0..len).map(|i| Vec3::new(table.at(i, 1, 0), table.at(i, 1, 1), table.at(i, 1, 2)).norm()).collect();
        let mut spec = spectrum(&speeds, 1);
        let length = spec[0][0].re;
        spec[0][0] = 0.0.into();
        let cumulative = PeriodicTable::from_spectrum(&spec, -1, 2, len);
        let speed_min = speeds.iter().cloned().fold(f64::INFINITY, f64::min);
        let speed_max = speeds.iter().cloned().fold(0.0, f64::max);
        if speed_min <= 1e-12 * length {
            return Err(Error::DegenerateCurve("interpolant has a stationary point".into()));
        }
        Ok(ClosedCurve { nodes, factor, table, cumulative, length, speed_min, speed_max })
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    /// Total arclength `L`.
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn point(&self, u: f64) -> Vec3 {
        self.eval_vec(u, 0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Parameter of node `i`.
    pub fn node_param(&self, i: usize) -> f64 {
        i as f64 / self.nodes.len() as f64
    }

    pub fn table(&self) -> &PeriodicTable {
        &self.table
    }

    pub fn speed_range(&self) -> (f64, f64) {
        (self.speed_min, self.speed_max)
    }

    fn table_vec(&self, i: usize, p: usize) -> Vec3 {
        Vec3::new(self.table.at(i, p, 0), self.table.at(i, p, 1), self.table.at(i, p, 2))
    }

    #[inline]
    fn eval_vec(&self, u: f64, p: usize) -> Vec3 {
        let mut out = [0.0; 3];
        self.table.eval(u, p, &mut out);
        Vec3::new(out[0], out[1], out[2])
    }

    /// Parameter derivative of order `p` (0..=2) at `u`.
    pub fn derivative(&self, u: f64, p: usize) -> Vec3 {
        self.eval_vec(u, p)
    }

    /// Derivative of order `p` at node `i` (0..=4), read from the table.
    pub fn node_derivative(&self, i: usize, p: usize) -> Vec3 {
        self.table_vec(i * self.factor, p)
    }

    /// Arclength from node 0 to parameter `u` (in `[0, L)` for `u ∈ [0, 1)`).
    pub fn arclength_at(&self, u: f64) -> f64 {
        let mut a = [0.0];
        let mut b = [0.0];
        self.cumulative.eval(u, 0, &mut a);
        self.cumulative.eval(0.0, 0, &mut b);
        self.length * u.rem_euclid(1.0) + a[0] - b[0]
    }

    pub fn speed_at(&self, u: f64) -> f64 {
        self.eval_vec(u, 1).norm()
    }

    /// Unit tangent at parameter `u`.
    pub fn tangent_at(&self, u: f64) -> Vec3 {
        self.eval_vec(u, 1).normalize()
    }

    /// Geometric curvature vector `H` (arclength second derivative) at `u`.
    pub fn curvature_at(&self, u: f64) -> Vec3 {
        curvature_from(self.eval_vec(u, 1), self.eval_vec(u, 2))
    }

    /// Parameter where the arclength measured from node 0 equals `s`.
    pub fn param_at_arclength(&self, s: f64) -> f64 {
        let target = s.rem_euclid(self.length);
        let mut u = target / self.length;
        for _ in 0..50 {
            let f = self.arclength_at(u) - target;
            let f = f - self.length * (f / self.length).round();
            let step = f / self.speed_at(u);
            u -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        u.rem_euclid(1.0)
    }

    /// New curve with the same nodes shifted by `t * phi` (pointwise).
    pub fn displaced(&self, phi: &[Vec3], t: f64) -> Result<Self> {
        if phi.len() != self.len() {
            return Err(Error::invalid("displacement field must match the node count"));
        }
        Self::from_nodes(self.nodes.iter().zip(phi).map(|(p, v)| p + t * v).collect())
    }

    pub fn map_nodes(&self, f: impl Fn(&Vec3) -> Vec3) -> Result<Self> {
        Self::from_nodes(self.nodes.iter().map(f).collect())
    }

    /// Fine-grid samples of the unit tangent (used for clearance estimates).
    pub(crate) fn fine_tangents(&self) -> impl Iterator<Item = Vec3> + '_ {
        (0..self.table.len()).map(move |i| self.table_vec(i, 1).normalize())
    }

    /// Maximum of `|H|` over the fine table.
    pub fn max_curvature(&self) -> f64 {
        (0..self.table.len()).map(|i| curvature_from(self.table_vec(i, 1), self.table_vec(i, 2)).norm()).fold(0.0, f64::max)
    }
}

#[inline]
pub(crate) fn curvature_from(d1: Vec3, d2: Vec3) -> Vec3 {
    let sp2 = d1.norm_squared();
    let tau = d1 / sp2.sqrt();
    (d2 - d2.dot(&tau) * tau) / sp2
}

impl Centerline for ClosedCurve {
    fn point(&self, u: f64) -> Vec3 {
        self.eval_vec(u, 0)
    }
    fn point_and_derivative(&self, u: f64) -> (Vec3, Vec3) {
        (self.eval_vec(u, 0), self.eval_vec(u, 1))
    }
    fn sample(&self, u: f64) -> CenterSample {
        CenterSample { pos: self.eval_vec(u, 0), d1: self.eval_vec(u, 1), d2: self.eval_vec(u, 2) }
    }
    fn is_closed(&self) -> bool {
        true
    }
    fn speed_bound(&self) -> f64 {
        self.speed_max * (1.0 + 1e-9)
    }
    fn length(&self) -> f64 {
        self.length
    }
    fn seed_count(&self) -> usize {
        (4 * self.nodes.len()).max(512)
    }
}

/// Resamples the curve to `n` nodes equispaced in arclength.
pub fn resample_arclength(curve: &ClosedCurve, n: usize) -> Result<ClosedCurve> {
    if n < 8 {
        return Err(Error::invalid(format!("resampling needs at least 8 nodes, got {n}")));
    }
    let l = curve.length();
    let mut nodes = Vec::with_capacity(n);
    let mut u = 0.0;
    for j in 0..n {
        let s = j as f64 * l / n as f64;
        if j > 0 {
            u = (u + 1.0 / n as f64).min(1.0);
        }
        for _ in 0..60 {
            let f = curve.arclength_at(u) + if u >= 1.0 { l } else { 0.0 } - s;
            let step = f / curve.speed_at(u);
            u -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(curve.point(u));
    }
    ClosedCurve::from_nodes(nodes)
}

/// Unit tangent at every node.
pub fn tangent(curve: &ClosedCurve) -> Vec<Vec3> {
    (0..curve.len()).map(|i| curve.node_derivative(i, 1).normalize()).collect()
}

/// Curvature vector `H` at every node, projected normal to the tangent.
pub fn curvature_vector(curve: &ClosedCurve) -> Vec<Vec3> {
    (0..curve.len()).map(|i| curvature_from(curve.node_derivative(i, 1), curve.node_derivative(i, 2))).collect()
}

/// Reach-style lower bound `min(1/max|H|, d/2)` where `d` is the smallest
/// distance between doubly critical point pairs (local minima of the pairwise
/// distance away from the diagonal), refined by Newton iteration.
pub fn embeddedness_radius(curve: &ClosedCurve) -> Result<f64> {
    let kmax = curve.max_curvature();
    let curv_bound = if kmax > 0.0 { 1.0 / kmax } else { f64::INFINITY };
    let half_pair = 0.5 * min_critical_distance(curve);
    let r = curv_bound.min(half_pair);
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::NotEmbedded { radius: r });
    }
    Ok(r)
}

fn min_critical_distance(curve: &ClosedCurve) -> f64 {
    let m = curve.len().max(256);
    let pts: Vec<Vec3> = (0..m).map(|i| curve.point(i as f64 / m as f64)).collect();
    let dist = |i: usize, j: usize| (pts[i % m] - pts[j % m]).norm();
    let mut best = f64::INFINITY;
    for i in 0..m {
        for j in (i + 1)..m {
            let d = dist(i, j);
            if d >= best {
                continue;
            }
            let mut is_min = true;
            'nb: for di in [m - 1, 0, 1] {
                for dj in [m - 1, 0, 1] {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    if dist(i + di, j + dj) < d {
                        is_min = false;
                        break 'nb;
                    }
                }
            }
            if !is_min {
                continue;
            }
            let refined = refine_pair(curve, i as f64 / m as f64, j as f64 / m as f64).unwrap_or(d);
            best = best.min(refined.min(d));
        }
    }
    best
}

/// Newton iteration for a stationary point of `½|γ(u) − γ(v)|²`.
fn refine_pair(curve: &ClosedCurve, mut u: f64, mut v: f64) -> Option<f64> {
    let h = 1.0 / curve.len().max(256) as f64;
    let (u0, v0) = (u, v);
    for _ in 0..30 {
        let a = curve.sample(u);
        let b = curve.sample(v);
        let d = a.pos - b.pos;
        let g = [d.dot(&a.d1), -d.dot(&b.d1)];
        let h11 = a.d1.norm_squared() + d.dot(&a.d2);
        let h22 = b.d1.norm_squared() - d.dot(&b.d2);
        let h12 = -a.d1.dot(&b.d1);
        let det = h11 * h22 - h12 * h12;
        if det <= 0.0 {
            return None;
        }
        let du = (h22 * g[0] - h12 * g[1]) / det;
        let dv = (h11 * g[1] - h12 * g[0]) / det;
        u -= du;
        v -= dv;
        if (u - u0).abs() > 4.0 * h || (v - v0).abs() > 4.0 * h {
            return None;
        }
        if du.abs() + dv.abs() < 1e-15 {
            break;
        }
    }
    Some((curve.point(u) - curve.point(v)).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn circle_length_and_curvature() {
        let c = circle(1.5, 32);
        assert!((c.length() - 3.0 * PI).abs() < 1e-12);
        for h in curvature_vector(&c) {
            assert!((h.norm() - 1.0 / 1.5).abs() < 1e-10);
        }
        let u = 0.3;
        let p = c.point(u);
        let h = c.curvature_at(u);
        assert!((h + p / 1.5 / 1.5).norm() < 1e-10);
    }

    #[test]
    fn arclength_inverse_round_trip() {
        let c = ellipse(2.0, 1.0, 64);
        for k in 0..10 {
            let s = k as f64 * 0.77;
            let u = c.param_at_arclength(s);
            assert!((c.arclength_at(u) - s.rem_euclid(c.length())).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_short_and_degenerate_input() {
        assert!(ClosedCurve::from_nodes(vec![Vec3::zeros(); 4]).is_err());
        let mut nodes: Vec<Vec3> = circle(1.0, 16).nodes().to_vec();
        nodes[3] = nodes[2];
        assert_eq!(ClosedCurve::from_nodes(nodes).unwrap_err().code(), "degenerate-curve");
    }
}
