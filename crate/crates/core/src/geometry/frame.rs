use super::{curvature_from, embeddedness_radius, nearest_param, Centerline, ClosedCurve, Vec3};
use crate::error::{Error, Result};
use std::f64::consts::PI;
use std::sync::LazyLock;

/// Icosahedron vertices oriented with two vertices on the `z` axis.
pub static ICOSAHEDRAL_DIRECTIONS: LazyLock<[Vec3; 12]> = LazyLock::new(|| {
    let mut dirs = [Vec3::zeros(); 12];
    dirs[0] = Vec3::z();
    dirs[1] = -Vec3::z();
    let z = 1.0 / 5f64.sqrt();
    let rho = (1.0 - z * z).sqrt();
    for k in 0..5 {
        let a = 2.0 * PI * k as f64 / 5.0;
        let b = a + PI / 5.0;
        dirs[2 + k] = Vec3::new(rho * a.cos(), rho * a.sin(), z);
        dirs[7 + k] = Vec3::new(rho * b.cos(), rho * b.sin(), -z);
    }
    dirs
});

const MIN_CLEARANCE: f64 = 1e-6;

/// Point on the core line with its adapted frame.
#[derive(Clone, Copy, Debug)]
pub struct FramePoint {
    pub pos: Vec3,
    pub speed: f64,
    pub tangent: Vec3,
    pub n1: Vec3,
    pub n2: Vec3,
    pub curvature: Vec3,
}

impl FramePoint {
    #[inline]
    pub fn normal(&self, theta: f64) -> Vec3 {
        let (s, c) = theta.sin_cos();
        c * self.n1 + s * self.n2
    }
}

/// Result of a tube-coordinate evaluation; `beyond_reach` flags radii at or
/// above the embeddedness estimate.
#[derive(Clone, Copy, Debug)]
pub struct TubePoint {
    pub point: Vec3,
    pub beyond_reach: bool,
}

/// Adapted orthonormal frame `(τ, n₁, n₂)` built from a fixed reference
/// direction, plus the cylindrical coordinates it induces.
#[derive(Clone, Debug)]
pub struct TubeChart<'a, C: Centerline = ClosedCurve> {
    line: &'a C,
    reference: Vec3,
    clearance: f64,
    radius: f64,
}

/// Euclidean distance from `dir` to the set `±τ(S¹)` sampled on the fine table.
pub fn clearance(curve: &ClosedCurve, dir: &Vec3) -> f64 {
    let worst = curve.fine_tangents().map(|t| t.dot(dir).abs()).fold(0.0, f64::max);
    (2.0 - 2.0 * worst.min(1.0)).max(0.0).sqrt()
}

fn rotate_toward(dir: &Vec3, axis: &Vec3, angle: f64) -> Vec3 {
    (angle.cos() * dir + angle.sin() * axis).normalize()
}

/// Chooses the reference direction with the largest clearance from the
/// icosahedral set, refines it by a local pattern search and builds the frame.
pub fn adapted_frame(curve: &ClosedCurve) -> Result<TubeChart<'_>> {
    let mut best = ICOSAHEDRAL_DIRECTIONS[0];
    let mut best_c = clearance(curve, &best);
    for d in ICOSAHEDRAL_DIRECTIONS.iter().skip(1) {
        let c = clearance(curve, d);
        if c > best_c {
            best = *d;
            best_c = c;
        }
    }
    let mut step = 0.25;
    while step > 1e-3 {
        let helper = if best.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let e1 = best.cross(&helper).normalize();
        let e2 = best.cross(&e1);
        let mut improved = false;
        for axis in [e1, -e1, e2, -e2] {
            let cand = rotate_toward(&best, &axis, step);
            let c = clearance(curve, &cand);
            if c > best_c + 1e-12 {
                best = cand;
                best_c = c;
                improved = true;
                break;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    if best_c < MIN_CLEARANCE {
        return Err(Error::NoAdmissibleDirection { clearance: best_c });
    }
    let radius = embeddedness_radius(curve)?;
    Ok(TubeChart { line: curve, reference: best, clearance: best_c, radius })
}

impl<'a> TubeChart<'a, ClosedCurve> {
    /// Frame for a closed curve with a caller-supplied reference direction.
    pub fn with_reference(curve: &'a ClosedCurve, reference: Vec3) -> Result<Self> {
        let n = reference.normalize();
        let c = clearance(curve, &n);
        if c < MIN_CLEARANCE {
            return Err(Error::NoAdmissibleDirection { clearance: c });
        }
        let radius = embeddedness_radius(curve)?;
        Ok(TubeChart { line: curve, reference: n, clearance: c, radius })
    }

    pub fn curve(&self) -> &'a ClosedCurve {
        self.line
    }

    /// Frames at every node.
    pub fn node_frames(&self) -> Vec<FramePoint> {
        (0..self.line.len()).map(|i| self.frame(self.line.node_param(i))).collect()
    }
}

impl<'a, C: Centerline> TubeChart<'a, C> {
    /// Frame along an arbitrary centerline (no embeddedness estimate is made
    /// for open lines; the radius is reported as infinite).
    pub fn for_line(line: &'a C, reference: Vec3) -> Self {
        TubeChart { line, reference: reference.normalize(), clearance: f64::NAN, radius: f64::INFINITY }
    }

    pub fn line(&self) -> &'a C {
        self.line
    }

    pub fn reference_direction(&self) -> Vec3 {
        self.reference
    }

    pub fn clearance(&self) -> f64 {
        self.clearance
    }

    pub fn embeddedness_radius(&self) -> f64 {
        self.radius
    }

    #[inline]
    pub fn frame(&self, u: f64) -> FramePoint {
        let s = self.line.sample(u);
        let speed = s.d1.norm();
        let tangent = s.d1 / speed;
        let n1 = (self.reference - self.reference.dot(&tangent) * tangent).normalize();
        let n2 = tangent.cross(&n1);
        FramePoint { pos: s.pos, speed, tangent, n1, n2, curvature: curvature_from(s.d1, s.d2) }
    }

    /// `Ψ(s, r, θ) = γ(s) + r(cos θ n₁ + sin θ n₂)`.
    pub fn tube_point(&self, u: f64, r: f64, theta: f64) -> Result<TubePoint> {
        if !(r >= 0.0) {
            return Err(Error::invalid(format!("tube radius must be non-negative, got {r}")));
        }
        let f = self.frame(u);
        Ok(TubePoint { point: f.pos + r * f.normal(theta), beyond_reach: r >= self.radius })
    }

    /// `r(1 − r⟨H, ν⟩)`: area density of `∂B_r(γ)` per unit arclength and unit angle.
    pub fn area_element(&self, u: f64, r: f64, theta: f64) -> Result<f64> {
        let f = self.frame(u);
        let a = r * (1.0 - r * f.curvature.dot(&f.normal(theta)));
        if r > 0.0 && a <= 0.0 {
            return Err(Error::NonPositiveArea { param: u, theta });
        }
        Ok(a)
    }

    /// Inverse of [`TubeChart::tube_point`] inside the tube: `(s, r, θ)` with
    /// `s` the curve parameter, `r = dist(x, γ)` and `θ ∈ [0, 2π)`.
    pub fn closest_point(&self, x: &Vec3) -> Result<(f64, f64, f64)> {
        let (u, _) = nearest_param(self.line, x);
        let f = self.frame(u);
        let d = x - f.pos;
        let r = d.norm();
        if r >= self.radius {
            return Err(Error::OutsideTube { param: u, dist: r, radius: self.radius });
        }
        if r <= 1e-14 * self.line.length() {
            return Ok((u, 0.0, 0.0));
        }
        let theta = d.dot(&f.n2).atan2(d.dot(&f.n1)).rem_euclid(2.0 * PI);
        Ok((u, r, theta))
    }
}
