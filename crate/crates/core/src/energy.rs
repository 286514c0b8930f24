//! Core-cutoff elastic energy of a loop and its first variation.
//!
//! The energy outside the `ε`-tube is split at a radius `r̄`. The shell
//! `ε < dist < r̄` is integrated in tube coordinates with the exact area
//! element; everything beyond `r̄` is evaluated through the flux identity
//! `∫_{dist > r̄} |Ŝ|² = −∫_{∂B_r̄} (A ∧ Ŝ)·ν`, where `A` is the vector
//! potential with `curl A = Ŝ`. The identity holds because `A` is
//! divergence-free and harmonic off the core.

use crate::error::{Error, Result};
use crate::geometry::{adapted_frame, ClosedCurve, TubeChart, Vec3};
use crate::quadrature::{gauss_legendre, QuadratureSpec};
use crate::strain::{potential_and_strain, strain_and_variation, strain_hat, Variation};
use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Domain correction `u` entering through `I(u)`; the whole-space default is zero.
pub trait CorrectionField: Sync {
    fn value(&self, x: &Vec3) -> Vec3;
    /// `(∇u)_{ij} = ∂_j u_i`.
    fn gradient(&self, x: &Vec3) -> Matrix3<f64>;
    /// The term `I(u)` added to the core energy.
    fn interaction_energy(&self) -> f64 {
        0.0
    }
    /// `true` when `u ≡ 0`, which lets callers skip its surface terms.
    fn is_zero(&self) -> bool {
        false
    }
    /// `false` if the provider does not claim harmonicity.
    fn is_checked(&self) -> bool {
        true
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroCorrection;

impl CorrectionField for ZeroCorrection {
    fn value(&self, _: &Vec3) -> Vec3 {
        Vec3::zeros()
    }
    fn gradient(&self, _: &Vec3) -> Matrix3<f64> {
        Matrix3::zeros()
    }
    fn is_zero(&self) -> bool {
        true
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConstantCorrection(pub Vec3);

impl CorrectionField for ConstantCorrection {
    fn value(&self, _: &Vec3) -> Vec3 {
        self.0
    }
    fn gradient(&self, _: &Vec3) -> Matrix3<f64> {
        Matrix3::zeros()
    }
}

/// `u(x) = A x` with `I(u) = ½ ∫_box |∇u|²` over an axis-aligned test box.
#[derive(Clone, Copy, Debug)]
pub struct LinearCorrection {
    pub matrix: Matrix3<f64>,
    pub lo: Vec3,
    pub hi: Vec3,
}

impl CorrectionField for LinearCorrection {
    fn value(&self, x: &Vec3) -> Vec3 {
        self.matrix * x
    }
    fn gradient(&self, _: &Vec3) -> Matrix3<f64> {
        self.matrix
    }
    fn interaction_energy(&self) -> f64 {
        dirichlet_energy(self, &self.lo, &self.hi, 4)
    }
}

/// `½ ∫_box |∇u|²` by tensor Gauss–Legendre quadrature with `n` points per axis.
pub fn dirichlet_energy(field: &dyn CorrectionField, lo: &Vec3, hi: &Vec3, n: usize) -> f64 {
    let rule = gauss_legendre(n);
    let h = (hi - lo) * 0.5;
    let c = (hi + lo) * 0.5;
    let mut total = 0.0;
    for (xi, wx) in rule.nodes.iter().zip(&rule.weights) {
        for (yi, wy) in rule.nodes.iter().zip(&rule.weights) {
            for (zi, wz) in rule.nodes.iter().zip(&rule.weights) {
                let x = c + Vec3::new(h.x * xi, h.y * yi, h.z * zi);
                total += wx * wy * wz * field.gradient(&x).norm_squared();
            }
        }
    }
    0.5 * total * h.x * h.y * h.z
}

/// Largest deviation between `u` at a point and its average over a sphere of
/// radius `radius` around it (zero for harmonic fields).
pub fn mean_value_defect(field: &dyn CorrectionField, points: &[Vec3], radius: f64) -> f64 {
    let rule = gauss_legendre(12);
    let nphi = 24;
    points
        .iter()
        .map(|p| {
            let mut avg = Vec3::zeros();
            for (ct, w) in rule.nodes.iter().zip(&rule.weights) {
                let st = (1.0 - ct * ct).sqrt();
                for k in 0..nphi {
                    let ph = 2.0 * PI * k as f64 / nphi as f64;
                    let d = Vec3::new(st * ph.cos(), st * ph.sin(), *ct);
                    avg += field.value(&(p + radius * d)) * (w / (2.0 * nphi as f64));
                }
            }
            (avg - field.value(p)).norm()
        })
        .fold(0.0, f64::max)
}

/// Resolution of the tube and surface quadratures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyOptions {
    pub quad: QuadratureSpec,
    /// Angular points (trapezoid).
    pub n_theta: usize,
    /// Radial Gauss points on `[ε, r̄]` in the logarithmic variable.
    pub n_r: usize,
    /// Arclength samples per curve node (trapezoid).
    pub s_factor: usize,
    /// Tube/far split radius; half the embeddedness radius when absent.
    pub split_radius: Option<f64>,
    /// Radius used only for the reported far-field tail bound; `4 diam(γ)` when absent.
    pub outer_radius: Option<f64>,
}

impl Default for EnergyOptions {
    fn default() -> Self {
        EnergyOptions {
            quad: QuadratureSpec::default(),
            n_theta: 32,
            n_r: 24,
            s_factor: 1,
            split_radius: None,
            outer_radius: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub eps: f64,
    pub total: f64,
    pub tube_part: f64,
    pub far_part: f64,
    pub asymptote: f64,
    pub renormalized: f64,
    pub split_radius: f64,
    pub outer_radius: f64,
    /// Bound on the energy beyond `outer_radius` (already contained in `far_part`).
    pub tail_bound: f64,
}

/// `|log ε|` with the natural logarithm.
pub fn log_abs(eps: f64) -> f64 {
    eps.ln().abs()
}

fn diameter(curve: &ClosedCurve) -> f64 {
    let n = curve.nodes();
    let mut d: f64 = 0.0;
    for (i, p) in n.iter().enumerate() {
        for q in &n[i + 1..] {
            d = d.max((p - q).norm());
        }
    }
    d
}

fn surface_samples(curve: &ClosedCurve, s_factor: usize) -> usize {
    curve.len() * s_factor.max(1)
}

/// `∫_{dist > r} |Ŝ|² dx` by the flux identity on `∂B_r(γ)`.
pub fn exterior_energy_density(chart: &TubeChart, r: f64, opts: &EnergyOptions) -> Result<f64> {
    let curve = chart.curve();
    let ns = surface_samples(curve, opts.s_factor);
    let nt = opts.n_theta;
    let rows: Vec<f64> = (0..ns)
        .into_par_iter()
        .map(|i| {
            let u = i as f64 / ns as f64;
            let f = chart.frame(u);
            let mut acc = 0.0;
            for k in 0..nt {
                let nu = f.normal(2.0 * PI * k as f64 / nt as f64);
                let x = f.pos + r * nu;
                let (a, s) = potential_and_strain(curve, &x, &opts.quad);
                let area = r * (1.0 - r * f.curvature.dot(&nu));
                acc -= a.cross(&s).dot(&nu) * area;
            }
            acc * f.speed
        })
        .collect();
    Ok(rows.iter().sum::<f64>() * 2.0 * PI / (ns * nt) as f64)
}

/// `∫_{ε < dist < r̄} |Ŝ|² dx` in tube coordinates.
fn shell_energy_density(chart: &TubeChart, eps: f64, rbar: f64, opts: &EnergyOptions) -> f64 {
    let curve = chart.curve();
    let ns = surface_samples(curve, opts.s_factor);
    let nt = opts.n_theta;
    let rule = gauss_legendre(opts.n_r);
    let span = (rbar / eps).ln();
    let rows: Vec<f64> = (0..ns)
        .into_par_iter()
        .map(|i| {
            let u = i as f64 / ns as f64;
            let f = chart.frame(u);
            let mut acc = 0.0;
            for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                let v = 0.5 * (t + 1.0);
                let r = eps * (v * span).exp();
                let dr = 0.5 * w * r * span;
                let mut ring = 0.0;
                for k in 0..nt {
                    let nu = f.normal(2.0 * PI * k as f64 / nt as f64);
                    let (s, _) = strain_hat(curve, &(f.pos + r * nu), 0.0, &opts.quad);
                    ring += s.norm_squared() * r * (1.0 - r * f.curvature.dot(&nu));
                }
                acc += ring * dr;
            }
            acc * f.speed
        })
        .collect();
    rows.iter().sum::<f64>() * 2.0 * PI / (ns * nt) as f64
}

fn split_radius(chart: &TubeChart, eps: f64, opts: &EnergyOptions) -> Result<f64> {
    let rbar = opts.split_radius.unwrap_or(0.5 * chart.embeddedness_radius());
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("core radius must be positive, got {eps}")));
    }
    if eps >= rbar {
        return Err(Error::invalid(format!("core radius {eps} must be below the split radius {rbar}")));
    }
    if rbar > chart.embeddedness_radius() {
        return Err(Error::invalid(format!("split radius {rbar} exceeds the embeddedness radius")));
    }
    Ok(rbar)
}

/// Whole-space core energy `½ ∫_{dist > ε} |S|² dx` with its tube/far split.
pub fn core_energy_with_chart(chart: &TubeChart, b: &Vec3, eps: f64, opts: &EnergyOptions) -> Result<EnergyBreakdown> {
    let curve = chart.curve();
    let rbar = split_radius(chart, eps, opts)?;
    let b2 = b.norm_squared();
    let tube_part = 0.5 * b2 * shell_energy_density(chart, eps, rbar, opts);
    let far_part = 0.5 * b2 * exterior_energy_density(chart, rbar, opts)?;
    let total = tube_part + far_part;
    let asymptote = b2 * curve.length() * log_abs(eps) / (4.0 * PI);
    let outer = opts.outer_radius.unwrap_or(4.0 * diameter(curve));
    let l = curve.length();
    Ok(EnergyBreakdown {
        eps,
        total,
        tube_part,
        far_part,
        asymptote,
        renormalized: total - asymptote,
        split_radius: rbar,
        outer_radius: outer,
        tail_bound: b2 * l * l / (8.0 * PI * PI * outer),
    })
}

pub fn core_energy(curve: &ClosedCurve, b: &Vec3, eps: f64, opts: &EnergyOptions) -> Result<EnergyBreakdown> {
    let chart = adapted_frame(curve)?;
    core_energy_with_chart(&chart, b, eps, opts)
}

/// Core energy plus `I(u)`.
pub fn effective_energy(
    curve: &ClosedCurve,
    b: &Vec3,
    eps: f64,
    correction: &dyn CorrectionField,
    opts: &EnergyOptions,
) -> Result<f64> {
    Ok(core_energy(curve, b, eps, opts)?.total + correction.interaction_energy())
}

/// `d/dt E^eff(γ + tφ)` at `t = 0` as a surface integral over `∂B_ε(γ)`:
/// `∫ −½|S|²⟨φ, ν⟩ + w^φ⟨b, (S + ∇u)ν⟩ + ⟨u, Ṡ^φ ν⟩ dH²`.
pub fn energy_variation(
    curve: &ClosedCurve,
    b: &Vec3,
    eps: f64,
    variation: &Variation,
    correction: &dyn CorrectionField,
    opts: &EnergyOptions,
) -> Result<f64> {
    let chart = adapted_frame(curve)?;
    energy_variation_with_chart(&chart, b, eps, variation, correction, opts)
}

pub fn energy_variation_with_chart(
    chart: &TubeChart,
    b: &Vec3,
    eps: f64,
    variation: &Variation,
    correction: &dyn CorrectionField,
    opts: &EnergyOptions,
) -> Result<f64> {
    let curve = chart.curve();
    if !(eps > 0.0) || eps >= chart.embeddedness_radius() {
        return Err(Error::invalid(format!("core radius {eps} must lie in (0, embeddedness radius)")));
    }
    let ns = surface_samples(curve, opts.s_factor);
    let nt = opts.n_theta;
    let b2 = b.norm_squared();
    let with_u = !correction.is_zero();
    let rows: Vec<f64> = (0..ns)
        .into_par_iter()
        .map(|i| {
            let u = i as f64 / ns as f64;
            let f = chart.frame(u);
            let phi = variation.at(u);
            let mut acc = 0.0;
            for k in 0..nt {
                let nu = f.normal(2.0 * PI * k as f64 / nt as f64);
                let x = f.pos + eps * nu;
                let (s, w, gw) = strain_and_variation(curve, variation, &x, eps, &opts.quad);
                let mut traction = b2 * s.dot(&nu);
                let mut coupling = 0.0;
                if with_u {
                    traction += b.dot(&(correction.gradient(&x) * nu));
                    coupling = correction.value(&x).dot(b) * gw.dot(&nu);
                }
                let integrand = -0.5 * b2 * s.norm_squared() * phi.dot(&nu) + w * traction - coupling;
                acc += integrand * eps * (1.0 - eps * f.curvature.dot(&nu));
            }
            acc * f.speed
        })
        .collect();
    Ok(rows.iter().sum::<f64>() * 2.0 * PI / (ns * nt) as f64)
}
