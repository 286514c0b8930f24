//! Renormalized Peach–Koehler force on a loop.
//!
//! `F = −(f₁ + f₂ + f₃) / |log ε|` per unit arclength, where the three terms
//! are the surface integrals over `∂B_ε(γ)` obtained by exchanging the order
//! of integration in the first variation of the energy:
//!
//! * `f₁(s) = −½ ∫ |S|² ν √g dθ`
//! * `f₂(y) = [∫ ⟨b, (S + ∇u)ν⟩ k(x − y) dH²_x] ∧ τ_y`
//! * `f₃(y) = −[∫ ⟨u, b⟩ Dk(x − y) ν dH²_x] ∧ τ_y`
//!
//! so that `−|log ε| ⟨F, φ⟩_{L²(γ)}` is the derivative of the energy along `φ`.

use crate::energy::{log_abs, CorrectionField};
use crate::error::{Error, Result};
use crate::geometry::{Centerline, ClosedCurve, PeriodicTable, TubeChart, Vec3};
use crate::quadrature::{integrate_line, QuadratureSpec};
use crate::strain::{kernel_gradient_apply, newton_kernel_unchecked, strain_hat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForceOptions {
    pub quad: QuadratureSpec,
    /// Angular points on `∂B_ε` (trapezoid, at least 32).
    pub n_theta: usize,
    /// Surface-table samples per curve node for the traction in `f₂`.
    pub surface_factor: usize,
    /// Exponent of the reported Hölder seminorm of the remainder.
    pub holder_alpha: f64,
}

impl Default for ForceOptions {
    fn default() -> Self {
        ForceOptions { quad: QuadratureSpec::default(), n_theta: 32, surface_factor: 2, holder_alpha: 0.5 }
    }
}

/// Per-node force samples with the term-by-term breakdown.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ForceField {
    pub eps: f64,
    /// Arclength coordinate of each node.
    pub arclength: Vec<f64>,
    pub nodes: Vec<Vec3>,
    pub term1: Vec<Vec3>,
    pub term2: Vec<Vec3>,
    pub term3: Vec<Vec3>,
    /// `|b|²/(4π) H`.
    pub leading: Vec<Vec3>,
    pub remainder: Vec<Vec3>,
    pub remainder_sup: f64,
    pub remainder_holder: f64,
    pub holder_alpha: f64,
}

impl ForceField {
    /// `‖F − leading‖_∞ / ‖leading‖_∞`.
    pub fn relative_remainder(&self) -> f64 {
        let lead = self.leading.iter().map(|v| v.norm()).fold(0.0, f64::max);
        self.remainder_sup / lead
    }

    /// `⟨F, φ⟩_{L²(γ)}` by the trapezoid rule over the nodes.
    pub fn pairing(&self, curve: &ClosedCurve, phi: &[Vec3]) -> f64 {
        let n = curve.len();
        (0..n).map(|i| self.nodes[i].dot(&phi[i]) * curve.speed_at(curve.node_param(i))).sum::<f64>() / n as f64
    }
}

/// The three pieces of `f₁` at one parameter: the `1/ε²` part of `|S|²`, its
/// cross term with the regular part, and the square of the regular part.
#[derive(Clone, Copy, Debug)]
pub struct Term1Split {
    pub inverse_square: Vec3,
    pub cross: Vec3,
    pub regular: Vec3,
}

impl Term1Split {
    pub fn total(&self) -> Vec3 {
        self.inverse_square + self.cross + self.regular
    }
}

fn check_eps<C: Centerline>(chart: &TubeChart<C>, eps: f64, opts: &ForceOptions) -> Result<()> {
    if !(eps > 0.0) || eps >= chart.embeddedness_radius() {
        return Err(Error::invalid(format!("core radius {eps} must lie in (0, embeddedness radius)")));
    }
    if opts.n_theta < 32 {
        return Err(Error::invalid(format!("at least 32 angular points are required, got {}", opts.n_theta)));
    }
    if eps.ln().abs() < 1e-12 {
        return Err(Error::invalid("core radius 1 makes the renormalization singular"));
    }
    Ok(())
}

/// `f₁` at parameter `u`, split into its singular pieces.
pub fn term1_split<C: Centerline>(chart: &TubeChart<C>, b: &Vec3, eps: f64, u: f64, opts: &ForceOptions) -> Term1Split {
    let f = chart.frame(u);
    let nt = opts.n_theta;
    let w = 2.0 * PI / nt as f64;
    let c = -0.5 * b.norm_squared() / (4.0 * PI * PI);
    let mut out = Term1Split { inverse_square: Vec3::zeros(), cross: Vec3::zeros(), regular: Vec3::zeros() };
    for m in 0..nt {
        let nu = f.normal(w * m as f64);
        let (hat, _) = strain_hat(chart.line(), &(f.pos + eps * nu), eps, &opts.quad);
        let lead = f.tangent.cross(&nu);
        let rest = 2.0 * PI * hat - lead / eps;
        let da = w * eps * (1.0 - eps * f.curvature.dot(&nu));
        out.inverse_square += nu * (c * da / (eps * eps));
        out.cross += nu * (c * da * 2.0 * lead.dot(&rest) / eps);
        out.regular += nu * (c * da * rest.norm_squared());
    }
    out
}

/// `f₁ = −½ ∫ |S|²(ψ_ε(s, θ)) √g ν dθ` at every node.
pub fn pk_term1(chart: &TubeChart, b: &Vec3, eps: f64, opts: &ForceOptions) -> Result<Vec<Vec3>> {
    check_eps(chart, eps, opts)?;
    let curve = chart.curve();
    Ok((0..curve.len()).into_par_iter().map(|i| term1_split(chart, b, eps, curve.node_param(i), opts).total()).collect())
}

/// `∫_{∂B_ε} weight(x) k(x − y) dH²_x` with panels graded toward `y` at scale `ε`.
///
/// `weight` receives the parameter, the angular index, the surface point and
/// the outward normal.
pub fn surface_kernel_integral<C: Centerline>(
    chart: &TubeChart<C>,
    y: &Vec3,
    eps: f64,
    n_theta: usize,
    quad: &QuadratureSpec,
    mut weight: impl FnMut(f64, usize, &Vec3, &Vec3) -> f64,
) -> Vec3 {
    surface_integral(chart, y, eps, n_theta, quad, |u, m, x, nu| weight(u, m, x, nu) * newton_kernel_unchecked(&(x - y)))
}

/// `∫_{∂B_ε} weight(x) Dk(x − y) ν dH²_x`.
pub fn surface_kernel_gradient_integral<C: Centerline>(
    chart: &TubeChart<C>,
    y: &Vec3,
    eps: f64,
    n_theta: usize,
    quad: &QuadratureSpec,
    mut weight: impl FnMut(f64, usize, &Vec3, &Vec3) -> f64,
) -> Vec3 {
    surface_integral(chart, y, eps, n_theta, quad, |u, m, x, nu| weight(u, m, x, nu) * kernel_gradient_apply(&(x - y), nu))
}

fn surface_integral<C: Centerline>(
    chart: &TubeChart<C>,
    y: &Vec3,
    eps: f64,
    n_theta: usize,
    quad: &QuadratureSpec,
    mut integrand: impl FnMut(f64, usize, &Vec3, &Vec3) -> Vec3,
) -> Vec3 {
    let w = 2.0 * PI / n_theta as f64;
    let r = integrate_line(chart.line(), y, eps, quad, |u, _, _| {
        let f = chart.frame(u);
        let mut acc = Vec3::zeros();
        for m in 0..n_theta {
            let nu = f.normal(w * m as f64);
            let x = f.pos + eps * nu;
            let da = eps * (1.0 - eps * f.curvature.dot(&nu)) * f.speed;
            acc += integrand(u, m, &x, &nu) * da;
        }
        let v = acc * w;
        [v.x, v.y, v.z]
    });
    Vec3::new(r.value[0], r.value[1], r.value[2])
}

/// Table of `⟨Ŝ − τ∧ν/(2πε), ν⟩` on `∂B_ε`, one column per angle. The dropped
/// part is orthogonal to `ν`, so only the regular part of the strain enters.
fn traction_table(chart: &TubeChart, eps: f64, opts: &ForceOptions) -> PeriodicTable {
    let curve = chart.curve();
    let ns = curve.len() * opts.surface_factor.max(1);
    let nt = opts.n_theta;
    let w = 2.0 * PI / nt as f64;
    let rows: Vec<Vec<f64>> = (0..ns)
        .into_par_iter()
        .map(|i| {
            let f = chart.frame(i as f64 / ns as f64);
            (0..nt)
                .map(|m| {
                    let nu = f.normal(w * m as f64);
                    let (hat, _) = strain_hat(curve, &(f.pos + eps * nu), eps, &opts.quad);
                    (hat - f.tangent.cross(&nu) / (2.0 * PI * eps)).dot(&nu)
                })
                .collect()
        })
        .collect();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    PeriodicTable::new(&flat, nt, 2, curve.table().len())
}

/// `f₂(y) = [∫ ⟨b, (S + ∇u)ν⟩ k(x − y) dH²_x] ∧ τ_y` at every node.
pub fn pk_term2(
    chart: &TubeChart,
    b: &Vec3,
    eps: f64,
    correction: &dyn CorrectionField,
    opts: &ForceOptions,
) -> Result<Vec<Vec3>> {
    check_eps(chart, eps, opts)?;
    let table = traction_table(chart, eps, opts);
    Ok(term2_with_table(chart, b, eps, correction, opts, &table))
}

fn term2_with_table(
    chart: &TubeChart,
    b: &Vec3,
    eps: f64,
    correction: &dyn CorrectionField,
    opts: &ForceOptions,
    table: &PeriodicTable,
) -> Vec<Vec3> {
    let curve = chart.curve();
    let nt = opts.n_theta;
    let b2 = b.norm_squared();
    let with_u = !correction.is_zero();
    (0..curve.len())
        .into_par_iter()
        .map(|j| {
            let f = chart.frame(curve.node_param(j));
            let mut row = vec![0.0; nt];
            let mut last = f64::NAN;
            let v = surface_kernel_integral(chart, &f.pos, eps, nt, &opts.quad, |u, m, x, nu| {
                if u != last {
                    table.eval(u, 0, &mut row);
                    last = u;
                }
                let mut g = b2 * row[m];
                if with_u {
                    g += b.dot(&(correction.gradient(x) * nu));
                }
                g
            });
            v.cross(&f.tangent)
        })
        .collect()
}

/// `f₃(y) = −[∫ ⟨u, b⟩ Dk(x − y) ν dH²_x] ∧ τ_y` at every node; exactly zero
/// for the zero provider.
pub fn pk_term3(
    chart: &TubeChart,
    b: &Vec3,
    eps: f64,
    correction: &dyn CorrectionField,
    opts: &ForceOptions,
) -> Result<Vec<Vec3>> {
    check_eps(chart, eps, opts)?;
    let curve = chart.curve();
    if correction.is_zero() {
        return Ok(vec![Vec3::zeros(); curve.len()]);
    }
    Ok((0..curve.len())
        .into_par_iter()
        .map(|j| {
            let f = chart.frame(curve.node_param(j));
            let v = surface_kernel_gradient_integral(chart, &f.pos, eps, opts.n_theta, &opts.quad, |_, _, x, _| {
                correction.value(x).dot(b)
            });
            -v.cross(&f.tangent)
        })
        .collect())
}

/// `sup |R(s) − R(s')| / d(s, s')^α` over node pairs with periodic arclength distance.
pub fn holder_seminorm(values: &[Vec3], arclength: &[f64], length: f64, alpha: f64) -> f64 {
    let n = values.len();
    let mut best: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let d = (arclength[j] - arclength[i]).abs();
            let d = d.min(length - d);
            if d > 0.0 {
                best = best.max((values[i] - values[j]).norm() / d.powf(alpha));
            }
        }
    }
    best
}

/// Assembles `F`, its three terms, the leading curvature part and the remainder.
pub fn pk_force(
    chart: &TubeChart,
    b: &Vec3,
    eps: f64,
    correction: &dyn CorrectionField,
    opts: &ForceOptions,
) -> Result<ForceField> {
    let curve = chart.curve();
    let term1 = pk_term1(chart, b, eps, opts)?;
    let term2 = pk_term2(chart, b, eps, correction, opts)?;
    let term3 = pk_term3(chart, b, eps, correction, opts)?;
    let scale = log_abs(eps);
    let coef = b.norm_squared() / (4.0 * PI);
    let n = curve.len();
    let mut nodes = Vec::with_capacity(n);
    let mut leading = Vec::with_capacity(n);
    let mut remainder = Vec::with_capacity(n);
    let mut arclength = Vec::with_capacity(n);
    for i in 0..n {
        let u = curve.node_param(i);
        let fi = -(term1[i] + term2[i] + term3[i]) / scale;
        let li = coef * curve.curvature_at(u);
        nodes.push(fi);
        leading.push(li);
        remainder.push(fi - li);
        arclength.push(curve.arclength_at(u));
    }
    let remainder_sup = remainder.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let remainder_holder = holder_seminorm(&remainder, &arclength, curve.length(), opts.holder_alpha);
    Ok(ForceField {
        eps,
        arclength,
        nodes,
        term1,
        term2,
        term3,
        leading,
        remainder,
        remainder_sup,
        remainder_holder,
        holder_alpha: opts.holder_alpha,
    })
}
