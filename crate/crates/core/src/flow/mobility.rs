use crate::error::{Error, Result};
use crate::geometry::Vec3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Built-in blend functions `β : [−1, 1] → [0, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlendKind {
    /// `cos²(πz/2)`.
    #[default]
    CosSquared,
    /// `(1 − z²)²`.
    Quartic,
}

impl BlendKind {
    pub fn eval(self, z: f64) -> f64 {
        match self {
            BlendKind::CosSquared => (0.5 * PI * z).cos().powi(2),
            BlendKind::Quartic => (1.0 - z * z).powi(2),
        }
    }
}

/// Serializable description of a [`MobilityLaw`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MobilitySpec {
    /// Slip directions; the six `⟨110⟩` directions when empty.
    pub slip_directions: Vec<[f64; 3]>,
    pub p: f64,
    pub blend: BlendKind,
}

impl Default for MobilitySpec {
    fn default() -> Self {
        MobilitySpec { slip_directions: Vec::new(), p: 16.0, blend: BlendKind::CosSquared }
    }
}

/// The six `⟨110⟩` directions of a cubic lattice, normalized.
pub fn fcc_slip_directions() -> Vec<Vec3> {
    [[1.0, 1.0, 0.0], [1.0, -1.0, 0.0], [1.0, 0.0, 1.0], [1.0, 0.0, -1.0], [0.0, 1.0, 1.0], [0.0, 1.0, -1.0]]
        .iter()
        .map(|v| Vec3::from(*v).normalize())
        .collect()
}

/// Crystallographic mobility
/// `m(τ, b, f) = β(⟨τ, b/|b|⟩) ⟨b^τ, f⟩ b^τ + (1 − β) Σ|⟨f, sᵢ⟩|^p ⟨f, sᵢ⟩ sᵢ / Σ|⟨f, sⱼ⟩|^p`
/// with `b^τ` the unit projection of `b` normal to `τ`.
#[derive(Clone)]
pub struct MobilityLaw {
    slip_directions: Vec<Vec3>,
    p: f64,
    blend: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for MobilityLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MobilityLaw").field("slip_directions", &self.slip_directions).field("p", &self.p).finish()
    }
}

impl Default for MobilityLaw {
    fn default() -> Self {
        MobilityLaw::new(fcc_slip_directions(), 16.0).expect("default mobility law is admissible")
    }
}

impl MobilityLaw {
    /// Law with the default blend `cos²(πz/2)`.
    pub fn new(slip_directions: Vec<Vec3>, p: f64) -> Result<Self> {
        Self::with_blend(slip_directions, p, |z| BlendKind::CosSquared.eval(z))
    }

    /// Law with a custom blend, checked for `β(0) = 1`, `β(±1) = 0`, evenness
    /// and range `[0, 1]` on a sample grid.
    pub fn with_blend(slip_directions: Vec<Vec3>, p: f64, blend: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(p >= 2.0) || !p.is_finite() {
            return Err(Error::invalid(format!("mobility exponent must be finite and ≥ 2, got {p}")));
        }
        if slip_directions.is_empty() {
            return Err(Error::invalid("at least one slip direction is required"));
        }
        for s in &slip_directions {
            if !((s.norm() - 1.0).abs() < 1e-12) {
                return Err(Error::invalid(format!("slip direction {s:?} is not a unit vector")));
            }
        }
        let tol = 1e-12;
        if (blend(0.0) - 1.0).abs() > tol || blend(1.0).abs() > tol || blend(-1.0).abs() > tol {
            return Err(Error::invalid("blend must satisfy β(0) = 1 and β(±1) = 0"));
        }
        for k in 0..=200 {
            let z = k as f64 / 200.0;
            let (a, b) = (blend(z), blend(-z));
            if (a - b).abs() > tol {
                return Err(Error::invalid(format!("blend is not even at z = {z}")));
            }
            if !(-tol..=1.0 + tol).contains(&a) {
                return Err(Error::invalid(format!("blend leaves [0, 1] at z = {z}")));
            }
        }
        Ok(MobilityLaw { slip_directions, p, blend: Arc::new(blend) })
    }

    pub fn from_spec(spec: &MobilitySpec) -> Result<Self> {
        let dirs = if spec.slip_directions.is_empty() {
            fcc_slip_directions()
        } else {
            spec.slip_directions.iter().map(|v| Vec3::from(*v)).collect()
        };
        let kind = spec.blend;
        Self::with_blend(dirs, spec.p, move |z| kind.eval(z))
    }

    pub fn slip_directions(&self) -> &[Vec3] {
        &self.slip_directions
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn blend(&self, z: f64) -> f64 {
        (self.blend)(z)
    }

    /// Glide branch `⟨b^τ, f⟩ b^τ`; zero when `b ∥ τ`.
    pub fn glide(tau: &Vec3, b: &Vec3, f: &Vec3) -> Vec3 {
        let perp = b - b.dot(tau) * tau;
        let n = perp.norm();
        if n <= 1e-12 * b.norm() {
            return Vec3::zeros();
        }
        let bt = perp / n;
        bt.dot(f) * bt
    }

    /// Cross-slip branch, a softmax-weighted choice among the slip directions.
    pub fn cross_slip(&self, f: &Vec3) -> Vec3 {
        let c: Vec<f64> = self.slip_directions.iter().map(|s| s.dot(f)).collect();
        let top = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if top == 0.0 {
            return Vec3::zeros();
        }
        // Weights relative to the largest projection keep |c|^p finite.
        let mut num = Vec3::zeros();
        let mut den = 0.0;
        for (ci, s) in c.iter().zip(&self.slip_directions) {
            let w = (ci.abs() / top).powf(self.p);
            num += w * ci * s;
            den += w;
        }
        num / den
    }

    /// `m(τ, b, f)` for a unit tangent `τ`.
    pub fn apply(&self, tau: &Vec3, b: &Vec3, f: &Vec3) -> Vec3 {
        let bn = b.norm();
        if bn == 0.0 {
            return Vec3::zeros();
        }
        let beta = self.blend((tau.dot(b) / bn).clamp(-1.0, 1.0));
        beta * Self::glide(tau, b, f) + (1.0 - beta) * self.cross_slip(f)
    }
}
