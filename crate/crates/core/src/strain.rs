//! Singular strain of a loop, its near-core decomposition, and its first
//! variation under a deformation of the loop.
//!
//! The strain is `S(x) = b ⊗ Ŝ(x)` with
//! `Ŝ(x) = ∫ k(x − γ(u)) ∧ γ'(u) du` and `k(x) = −x / (4π|x|³)`.

use crate::error::{Error, Result};
use crate::geometry::{nearest_param, Centerline, ClosedCurve, PeriodicTable, TubeChart, Vec3};
use crate::quadrature::{integrate_line, QuadratureSpec};
use nalgebra::Matrix3;
use std::f64::consts::PI;

/// Distances below `SINGULAR_FLOOR · L` count as on the curve.
pub const SINGULAR_FLOOR: f64 = 1e-12;

const FOUR_PI_INV: f64 = 1.0 / (4.0 * PI);

/// `k(x) = ∇G(x) = −x / (4π|x|³)`.
pub fn newton_kernel(x: &Vec3) -> Result<Vec3> {
    let r2 = x.norm_squared();
    if r2 == 0.0 {
        return Err(Error::Singular { dist: 0.0 });
    }
    Ok(-x * (FOUR_PI_INV / (r2 * r2.sqrt())))
}

/// `Dk(x) = −(I − 3 x̂ ⊗ x̂) / (4π|x|³)` (symmetric).
pub fn kernel_gradient(x: &Vec3) -> Result<Matrix3<f64>> {
    let r2 = x.norm_squared();
    if r2 == 0.0 {
        return Err(Error::Singular { dist: 0.0 });
    }
    let r3 = r2 * r2.sqrt();
    Ok(-(Matrix3::identity() - 3.0 * x * x.transpose() / r2) * (FOUR_PI_INV / r3))
}

#[inline]
pub(crate) fn newton_kernel_unchecked(z: &Vec3) -> Vec3 {
    let r2 = z.norm_squared();
    -z * (FOUR_PI_INV / (r2 * r2.sqrt()))
}

#[inline]
pub(crate) fn kernel_cross(z: &Vec3, d1: &Vec3) -> Vec3 {
    let r2 = z.norm_squared();
    let c = -FOUR_PI_INV / (r2 * r2.sqrt());
    z.cross(d1) * c
}

/// `Dk(z) v` without forming the matrix.
#[inline]
pub(crate) fn kernel_gradient_apply(z: &Vec3, v: &Vec3) -> Vec3 {
    let r2 = z.norm_squared();
    let r3 = r2 * r2.sqrt();
    -(v - z * (3.0 * z.dot(v) / r2)) * (FOUR_PI_INV / r3)
}

/// Leading-order split of `Ŝ` near the core:
/// `2π Ŝ = leading_inverse / dist + |log dist| · leading_log + remainder`.
#[derive(Clone, Copy, Debug)]
pub struct StrainDecomposition {
    /// `τ ∧ ν` at the projection.
    pub leading_inverse: Vec3,
    /// `½ τ ∧ H` at the projection.
    pub leading_log: Vec3,
    pub remainder: Vec3,
    /// Curve parameter and angle of the projection.
    pub param: f64,
    pub theta: f64,
}

/// Strain at a point with its quadrature error estimate.
#[derive(Clone, Copy, Debug)]
pub struct StrainEval {
    pub value: Matrix3<f64>,
    /// `Ŝ`, so that `value = b ⊗ hat`.
    pub hat: Vec3,
    pub dist: f64,
    pub error: f64,
    pub decomposition: Option<StrainDecomposition>,
}

impl StrainEval {
    /// Rebuilds `S` from the decomposition.
    pub fn reconstruct(&self, b: &Vec3) -> Option<Matrix3<f64>> {
        self.decomposition.map(|d| {
            let v = (d.leading_inverse / self.dist + self.dist.ln().abs() * d.leading_log + d.remainder) / (2.0 * PI);
            b * v.transpose()
        })
    }
}

/// `Ŝ(x)` with its quadrature error estimate; `floor` is the near-singular
/// scale passed to the panel refinement (zero for points off the core).
pub fn strain_hat<C: Centerline + ?Sized>(line: &C, x: &Vec3, floor: f64, quad: &QuadratureSpec) -> (Vec3, f64) {
    let r = integrate_line(line, x, floor, quad, |_, y, d1| {
        let v = kernel_cross(&(x - y), d1);
        [v.x, v.y, v.z]
    });
    (Vec3::new(r.value[0], r.value[1], r.value[2]), r.error)
}

/// Vector potential `A(x) = ∫ γ'(u) / (4π|x − γ(u)|) du` and `Ŝ = curl A`.
pub fn potential_and_strain<C: Centerline + ?Sized>(line: &C, x: &Vec3, quad: &QuadratureSpec) -> (Vec3, Vec3) {
    let r = integrate_line(line, x, 0.0, quad, |_, y, d1| {
        let z = x - y;
        let g = FOUR_PI_INV / z.norm();
        let s = kernel_cross(&z, d1);
        [g * d1.x, g * d1.y, g * d1.z, s.x, s.y, s.z]
    });
    let v = r.value;
    (Vec3::new(v[0], v[1], v[2]), Vec3::new(v[3], v[4], v[5]))
}

fn check_floor<C: Centerline + ?Sized>(line: &C, dist: f64) -> Result<()> {
    if dist < SINGULAR_FLOOR * line.length() {
        return Err(Error::Singular { dist });
    }
    Ok(())
}

/// Singular strain `S(x) = b ⊗ ∫ k(x − y) ∧ τ_y dH¹_y`.
///
/// Inside the tube of the chart the leading-order decomposition is filled in,
/// with the remainder obtained by subtracting the two leading terms from the
/// resolved integral.
pub fn singular_strain<C: Centerline>(chart: &TubeChart<C>, b: &Vec3, x: &Vec3, quad: &QuadratureSpec) -> Result<StrainEval> {
    let line = chart.line();
    let (param, dist) = nearest_param(line, x);
    check_floor(line, dist)?;
    let (hat, error) = strain_hat(line, x, 0.0, quad);
    let inside = dist < chart.embeddedness_radius() && (line.is_closed() || (param > 0.0 && param < 1.0));
    let decomposition = if inside {
        let f = chart.frame(param);
        let nu = (x - f.pos) / dist;
        let theta = nu.dot(&f.n2).atan2(nu.dot(&f.n1)).rem_euclid(2.0 * PI);
        Some(decompose(&hat, &f.tangent, &nu, &f.curvature, dist, param, theta))
    } else {
        None
    };
    Ok(StrainEval { value: b * hat.transpose(), hat, dist, error, decomposition })
}

fn decompose(hat: &Vec3, tau: &Vec3, nu: &Vec3, h: &Vec3, dist: f64, param: f64, theta: f64) -> StrainDecomposition {
    let leading_inverse = tau.cross(nu);
    let leading_log = 0.5 * tau.cross(h);
    let remainder = 2.0 * PI * hat - leading_inverse / dist - dist.ln().abs() * leading_log;
    StrainDecomposition { leading_inverse, leading_log, remainder, param, theta }
}

/// Strain at `ψ_ε(s, θ)` on the tube surface with its decomposition.
pub fn strain_expansion<C: Centerline>(
    chart: &TubeChart<C>,
    b: &Vec3,
    eps: f64,
    param: f64,
    theta: f64,
    quad: &QuadratureSpec,
) -> Result<StrainEval> {
    if !(eps > 0.0) || eps >= chart.embeddedness_radius() {
        return Err(Error::invalid(format!("core radius {eps} must lie in (0, embeddedness radius)")));
    }
    let f = chart.frame(param);
    let nu = f.normal(theta);
    let x = f.pos + eps * nu;
    let (hat, error) = strain_hat(chart.line(), &x, eps, quad);
    Ok(StrainEval {
        value: b * hat.transpose(),
        hat,
        dist: eps,
        error,
        decomposition: Some(decompose(&hat, &f.tangent, &nu, &f.curvature, eps, param, theta)),
    })
}

/// Variation direction `φ` sampled at the nodes of its host curve.
#[derive(Clone, Debug)]
pub struct Variation {
    phi: Vec<Vec3>,
    table: PeriodicTable,
}

impl Variation {
    pub fn new(curve: &ClosedCurve, phi: Vec<Vec3>) -> Result<Self> {
        if phi.len() != curve.len() {
            return Err(Error::invalid(format!("variation has {} samples, curve has {}", phi.len(), curve.len())));
        }
        let flat: Vec<f64> = phi.iter().flat_map(|p| [p.x, p.y, p.z]).collect();
        let table = PeriodicTable::new(&flat, 3, 2, curve.table().len());
        Ok(Variation { phi, table })
    }

    pub fn zero(curve: &ClosedCurve) -> Self {
        Self::new(curve, vec![Vec3::zeros(); curve.len()]).expect("sizes match")
    }

    pub fn samples(&self) -> &[Vec3] {
        &self.phi
    }

    #[inline]
    pub fn at(&self, u: f64) -> Vec3 {
        let mut out = [0.0; 3];
        self.table.eval(u, 0, &mut out);
        Vec3::new(out[0], out[1], out[2])
    }
}

/// `Ŝ`, `w^φ` and `∇w^φ` at `x` from a single panel sweep.
pub fn strain_and_variation(
    curve: &ClosedCurve,
    variation: &Variation,
    x: &Vec3,
    floor: f64,
    quad: &QuadratureSpec,
) -> (Vec3, f64, Vec3) {
    let r = integrate_line(curve, x, floor, quad, |u, y, d1| {
        let z = x - y;
        let phi = variation.at(u);
        let s = kernel_cross(&z, d1);
        let w = s.dot(&phi);
        let g = kernel_gradient_apply(&z, &d1.cross(&phi));
        [s.x, s.y, s.z, w, g.x, g.y, g.z]
    });
    let v = r.value;
    (Vec3::new(v[0], v[1], v[2]), v[3], Vec3::new(v[4], v[5], v[6]))
}

/// `w^φ(x) = ∫ ⟨k(x − y) ∧ τ_y, φ⟩ dH¹_y`.
pub fn w_phi(curve: &ClosedCurve, variation: &Variation, x: &Vec3, quad: &QuadratureSpec) -> Result<f64> {
    let (_, dist) = nearest_param(curve, x);
    check_floor(curve, dist)?;
    let r = integrate_line(curve, x, 0.0, quad, |u, y, d1| [kernel_cross(&(x - y), d1).dot(&variation.at(u))]);
    Ok(r.value[0])
}

/// `∇w^φ(x) = ∫ Dk(x − y)(τ_y ∧ φ) dH¹_y`, differentiated under the integral.
pub fn grad_w_phi(curve: &ClosedCurve, variation: &Variation, x: &Vec3, quad: &QuadratureSpec) -> Result<Vec3> {
    let (_, dist) = nearest_param(curve, x);
    check_floor(curve, dist)?;
    let r = integrate_line(curve, x, 0.0, quad, |u, y, d1| {
        let g = kernel_gradient_apply(&(x - y), &d1.cross(&variation.at(u)));
        [g.x, g.y, g.z]
    });
    Ok(Vec3::new(r.value[0], r.value[1], r.value[2]))
}

/// `Ṡ^φ(x) = −b ⊗ ∇w^φ(x)`.
pub fn dot_s(curve: &ClosedCurve, b: &Vec3, variation: &Variation, x: &Vec3, quad: &QuadratureSpec) -> Result<Matrix3<f64>> {
    let g = grad_w_phi(curve, variation, x, quad)?;
    Ok(-(b * g.transpose()))
}
