//! Browser bindings: strain slices, force arrows and stepwise flows on the built-in loops.

use loopdyn::energy::ZeroCorrection;
use loopdyn::flow::{step_with, FlowConfig, FlowLaw};
use loopdyn::force::{pk_force, ForceOptions};
use loopdyn::geometry::{adapted_frame, builtin_curve, ClosedCurve, Vec3};
use loopdyn::quadrature::QuadratureSpec;
use loopdyn::strain::singular_strain;
use wasm_bindgen::prelude::*;

fn js_err(e: loopdyn::Error) -> JsError {
    JsError::new(&format!("{}: {e}", e.code()))
}

fn flatten(points: &[Vec3]) -> Vec<f64> {
    points.iter().flat_map(|p| [p.x, p.y, p.z]).collect()
}

/// Node coordinates of a built-in curve as `[x0, y0, z0, x1, ...]`.
#[wasm_bindgen]
pub fn curve_nodes(name: &str, nodes: usize) -> Result<Vec<f64>, JsError> {
    Ok(flatten(builtin_curve(name, nodes).map_err(js_err)?.nodes()))
}

/// Frobenius norm of the strain on an `res × res` grid of the plane `z = height`
/// spanning `[-extent, extent]²`, row-major in y. Points on the curve give NaN.
#[wasm_bindgen]
pub fn strain_slice(name: &str, nodes: usize, b: &[f64], height: f64, extent: f64, res: usize) -> Result<Vec<f64>, JsError> {
    if b.len() != 3 || res < 2 {
        return Err(JsError::new("invalid-input: need a 3-vector b and res >= 2"));
    }
    let curve = builtin_curve(name, nodes).map_err(js_err)?;
    let chart = adapted_frame(&curve).map_err(js_err)?;
    let b = Vec3::new(b[0], b[1], b[2]);
    let quad = QuadratureSpec::default();
    let step = 2.0 * extent / (res - 1) as f64;
    let mut out = Vec::with_capacity(res * res);
    for j in 0..res {
        for i in 0..res {
            let x = Vec3::new(-extent + i as f64 * step, -extent + j as f64 * step, height);
            out.push(singular_strain(&chart, &b, &x, &quad).map_or(f64::NAN, |e| e.value.norm()));
        }
    }
    Ok(out)
}

/// Per node: position, Peach–Koehler force and its curvature limit, nine numbers each.
#[wasm_bindgen]
pub fn force_arrows(name: &str, nodes: usize, b: &[f64], eps: f64) -> Result<Vec<f64>, JsError> {
    if b.len() != 3 {
        return Err(JsError::new("invalid-input: b must have three components"));
    }
    let curve = builtin_curve(name, nodes).map_err(js_err)?;
    let chart = adapted_frame(&curve).map_err(js_err)?;
    let opts = ForceOptions { n_theta: 32, ..ForceOptions::default() };
    let f = pk_force(&chart, &Vec3::new(b[0], b[1], b[2]), eps, &ZeroCorrection, &opts).map_err(js_err)?;
    let mut out = Vec::with_capacity(9 * curve.len());
    for i in 0..curve.len() {
        for v in [&curve.nodes()[i], &f.nodes[i], &f.leading[i]] {
            out.extend([v.x, v.y, v.z]);
        }
    }
    Ok(out)
}

/// A flow advanced a few steps per animation frame.
#[wasm_bindgen]
pub struct FlowSession {
    curve: ClosedCurve,
    config: FlowConfig,
    time: f64,
}

#[wasm_bindgen]
impl FlowSession {
    /// `law` is one of csf, h1_csf, l2_pk, h1_pk.
    #[wasm_bindgen(constructor)]
    pub fn new(name: &str, nodes: usize, law: &str, b: &[f64], eps: f64, delta: f64, dt: f64) -> Result<FlowSession, JsError> {
        let law = match law {
            "csf" => FlowLaw::Csf,
            "h1_csf" => FlowLaw::H1Csf,
            "l2_pk" => FlowLaw::L2Pk,
            "h1_pk" => FlowLaw::H1Pk,
            other => return Err(JsError::new(&format!("invalid-input: unknown law '{other}'"))),
        };
        if b.len() != 3 {
            return Err(JsError::new("invalid-input: b must have three components"));
        }
        let config = FlowConfig {
            law,
            burgers: Vec3::new(b[0], b[1], b[2]),
            eps,
            delta,
            dt,
            force: ForceOptions { n_theta: 32, ..ForceOptions::default() },
            ..FlowConfig::default()
        };
        config.validate().map_err(js_err)?;
        let curve = builtin_curve(name, nodes).map_err(js_err)?;
        Ok(FlowSession { curve, config, time: 0.0 })
    }

    /// Takes `count` guarded steps and returns the new node coordinates.
    pub fn advance(&mut self, count: usize) -> Result<Vec<f64>, JsError> {
        for _ in 0..count {
            let r = step_with(&self.curve, &self.config, &ZeroCorrection).map_err(js_err)?;
            self.curve = ClosedCurve::from_nodes(r.nodes).map_err(js_err)?;
            self.time += r.dt;
        }
        Ok(flatten(self.curve.nodes()))
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn length(&self) -> f64 {
        self.curve.length()
    }
}
