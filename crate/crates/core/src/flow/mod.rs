//! Time integration of curve shortening flow, the L² and H¹ Peach–Koehler
//! flows and the crystallographic mobility flow.

mod mobility;
mod nodes;

pub use mobility::{fcc_slip_directions, BlendKind, MobilityLaw, MobilitySpec};

use crate::banded::CyclicTridiagonal;
use crate::energy::{effective_energy, CorrectionField, EnergyOptions, ZeroCorrection};
use crate::error::{Error, Result};
use crate::force::{pk_force, ForceOptions};
use crate::geometry::{adapted_frame, embeddedness_radius, nearest_param, resample_arclength, ClosedCurve, Vec3};
use nodes::{reach_estimate, NodeGeometry};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const MAX_HALVINGS: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowLaw {
    Csf,
    L2Pk,
    H1Pk,
    MobilityPk,
    H1Csf,
}

impl FlowLaw {
    pub fn uses_force(self) -> bool {
        matches!(self, FlowLaw::L2Pk | FlowLaw::H1Pk | FlowLaw::MobilityPk)
    }

    pub fn is_h1(self) -> bool {
        matches!(self, FlowLaw::H1Pk | FlowLaw::H1Csf)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Euler,
    Rk4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub law: FlowLaw,
    pub burgers: Vec3,
    pub eps: f64,
    pub delta: f64,
    pub dt: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    /// Arclength resampling after every accepted step.
    pub redistribution: bool,
    /// Mobility for `mobility_pk`; the default law when absent.
    pub mobility: Option<MobilitySpec>,
    pub force: ForceOptions,
    /// Snapshot every this many accepted steps (the initial and final curves are always kept).
    pub snapshot_every: usize,
    /// Evaluate the effective energy after every step.
    pub track_energy: bool,
    pub energy: EnergyOptions,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            law: FlowLaw::Csf,
            burgers: Vec3::z(),
            eps: 1e-3,
            delta: 1e-2,
            dt: 1e-3,
            t_end: 0.1,
            integrator: Integrator::Rk4,
            redistribution: false,
            mobility: None,
            force: ForceOptions::default(),
            snapshot_every: 100,
            track_energy: false,
            energy: EnergyOptions::default(),
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::invalid(format!("core radius must be positive, got {}", self.eps)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::invalid(format!("final time must be non-negative, got {}", self.t_end)));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::invalid(format!("delta must be non-negative, got {}", self.delta)));
        }
        if self.law.is_h1() && self.delta == 0.0 {
            return Err(Error::invalid("the h1 laws need delta > 0"));
        }
        if !self.burgers.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("Burgers vector must be finite"));
        }
        if self.snapshot_every == 0 {
            return Err(Error::invalid("snapshot_every must be at least 1"));
        }
        if let Some(spec) = &self.mobility {
            MobilityLaw::from_spec(spec)?;
        }
        Ok(())
    }

    fn mobility_law(&self) -> Result<MobilityLaw> {
        match &self.mobility {
            Some(spec) => MobilityLaw::from_spec(spec),
            None => Ok(MobilityLaw::default()),
        }
    }

    fn line_tension(&self) -> f64 {
        self.burgers.norm_squared() / (4.0 * PI)
    }
}

/// Solves `(1 − δ ∂²_s) v = f` componentwise for a periodic field given by
/// node values with arclength gaps `h[i] = s_{i+1} − s_i`.
///
/// The second difference is the three-point formula on the nonuniform grid,
/// so the matrix is an M-matrix with unit row sums.
pub(crate) fn laplacian_resolvent(h: &[f64], f: &[Vec3], delta: f64) -> Result<Vec<Vec3>> {
    let n = h.len();
    if f.len() != n {
        return Err(Error::invalid("field and grid sizes differ"));
    }
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 0..n {
        let hm = h[(i + n - 1) % n];
        let hp = h[i];
        let c = 2.0 * delta / (hm + hp);
        lower[i] = -c / hm;
        upper[i] = -c / hp;
        diag[i] = 1.0 + c / hm + c / hp;
    }
    let a = CyclicTridiagonal::new(lower, diag, upper)?;
    let cols: Vec<Vec<f64>> = (0..3).map(|c| a.solve(&f.iter().map(|v| v[c]).collect::<Vec<_>>())).collect();
    Ok((0..n).map(|i| Vec3::new(cols[0][i], cols[1][i], cols[2][i])).collect())
}

/// `(1 − δ Δ_γ)⁻¹ f` on the nodes of `curve`.
pub fn curve_laplacian_solve(curve: &ClosedCurve, f: &[Vec3], delta: f64) -> Result<Vec<Vec3>> {
    if f.len() != curve.len() {
        return Err(Error::invalid("field must have one value per node"));
    }
    let n = curve.len();
    let s: Vec<f64> = (0..n).map(|i| curve.arclength_at(curve.node_param(i))).collect();
    let h: Vec<f64> = (0..n).map(|i| if i + 1 < n { s[i + 1] - s[i] } else { curve.length() - s[i] }).collect();
    laplacian_resolvent(&h, f, delta)
}

/// `∫ |v|² + δ |v_s|² ds` with the trapezoid weights of the resolvent grid.
fn h1_dissipation(h: &[f64], v: &[Vec3], delta: f64) -> f64 {
    let n = h.len();
    (0..n)
        .map(|i| {
            let w = 0.5 * (h[(i + n - 1) % n] + h[i]);
            w * v[i].norm_squared() + delta * (v[(i + 1) % n] - v[i]).norm_squared() / h[i]
        })
        .sum()
}

struct Evaluator<'a> {
    config: &'a FlowConfig,
    mobility: MobilityLaw,
    correction: &'a dyn CorrectionField,
}

impl Evaluator<'_> {
    fn velocity(&self, nodes: &[Vec3]) -> Result<Vec<Vec3>> {
        let cfg = self.config;
        let geo = NodeGeometry::new(nodes);
        let raw: Vec<Vec3> = if cfg.law.uses_force() {
            let curve = ClosedCurve::from_nodes(nodes.to_vec())?;
            let chart = adapted_frame(&curve)?;
            let radius = chart.embeddedness_radius();
            if cfg.eps >= radius {
                return Err(Error::NotEmbedded { radius });
            }
            pk_force(&chart, &cfg.burgers, cfg.eps, self.correction, &cfg.force)?.nodes
        } else {
            let c = cfg.line_tension();
            geo.curvature.iter().map(|h| c * h).collect()
        };
        match cfg.law {
            FlowLaw::Csf | FlowLaw::L2Pk => Ok(raw),
            FlowLaw::H1Csf | FlowLaw::H1Pk => laplacian_resolvent(&geo.spacing(), &raw, cfg.delta),
            FlowLaw::MobilityPk => {
                let f = if cfg.delta > 0.0 { laplacian_resolvent(&geo.spacing(), &raw, cfg.delta)? } else { raw };
                Ok(f.iter().zip(&geo.tangent).map(|(fi, t)| self.mobility.apply(t, &cfg.burgers, fi)).collect())
            }
        }
    }
}

/// Velocity field of the selected law at the nodes of `curve`.
pub fn velocity(curve: &ClosedCurve, config: &FlowConfig, correction: &dyn CorrectionField) -> Result<Vec<Vec3>> {
    config.validate()?;
    let ev = Evaluator { config, mobility: config.mobility_law()?, correction };
    ev.velocity(curve.nodes())
}

fn axpy(x: &[Vec3], a: f64, v: &[Vec3]) -> Vec<Vec3> {
    x.iter().zip(v).map(|(p, q)| p + a * q).collect()
}

/// Failures that reject a step instead of aborting the run.
fn is_rejection(e: &Error) -> bool {
    matches!(e, Error::NotEmbedded { .. } | Error::DegenerateCurve(_) | Error::NoAdmissibleDirection { .. })
}

/// Outcome of one accepted step.
#[derive(Clone, Debug)]
pub struct StepResult {
    pub nodes: Vec<Vec3>,
    pub dt: f64,
    pub halvings: u32,
    /// Velocity at the start of the step.
    pub velocity: Vec<Vec3>,
    pub reach: f64,
}

fn advance(ev: &Evaluator, nodes: &[Vec3], v0: &[Vec3], dt: f64) -> Result<Vec<Vec3>> {
    match ev.config.integrator {
        Integrator::Euler => Ok(axpy(nodes, dt, v0)),
        Integrator::Rk4 => {
            let k2 = ev.velocity(&axpy(nodes, 0.5 * dt, v0))?;
            let k3 = ev.velocity(&axpy(nodes, 0.5 * dt, &k2))?;
            let k4 = ev.velocity(&axpy(nodes, dt, &k3))?;
            Ok((0..nodes.len()).map(|i| nodes[i] + dt / 6.0 * (v0[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect())
        }
    }
}

fn guarded_step(ev: &Evaluator, nodes: &[Vec3], dt: f64, time: f64) -> Result<StepResult> {
    let v0 = ev.velocity(nodes)?;
    let floor = 2.0 * ev.config.eps;
    let mut h = dt;
    for halvings in 0..=MAX_HALVINGS {
        let attempt = advance(ev, nodes, &v0, h).and_then(|mut next| {
            if ev.config.redistribution {
                let curve = ClosedCurve::from_nodes(next)?;
                next = resample_arclength(&curve, nodes.len())?.nodes().to_vec();
            }
            let reach = reach_estimate(&next);
            if !(reach >= floor) {
                return Err(Error::NotEmbedded { radius: reach });
            }
            Ok((next, reach))
        });
        match attempt {
            Ok((next, reach)) => return Ok(StepResult { nodes: next, dt: h, halvings, velocity: v0, reach }),
            Err(e) if is_rejection(&e) => h *= 0.5,
            Err(e) => return Err(e),
        }
    }
    Err(Error::StepUnderflow { time, halvings: MAX_HALVINGS })
}

/// One guarded step of size `config.dt` with the whole-space correction.
pub fn step(curve: &ClosedCurve, config: &FlowConfig) -> Result<ClosedCurve> {
    step_with(curve, config, &ZeroCorrection).and_then(|r| ClosedCurve::from_nodes(r.nodes))
}

pub fn step_with(curve: &ClosedCurve, config: &FlowConfig, correction: &dyn CorrectionField) -> Result<StepResult> {
    config.validate()?;
    let ev = Evaluator { config, mobility: config.mobility_law()?, correction };
    guarded_step(&ev, curve.nodes(), config.dt, 0.0)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    pub nodes: Vec<Vec3>,
}

impl Snapshot {
    pub fn curve(&self) -> Result<ClosedCurve> {
        ClosedCurve::from_nodes(self.nodes.clone())
    }
}

/// Per-step record; `max_speed` and `dissipation` refer to the velocity at
/// the start of the step, the rest to the state after it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub time: f64,
    pub dt: f64,
    pub halvings: u32,
    pub length: f64,
    pub max_speed: f64,
    pub min_reach: f64,
    pub energy: Option<f64>,
    /// `⟨v, v⟩_{L² + δH¹}` for the h1 laws.
    pub dissipation: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub initial_energy: Option<f64>,
}

impl Trajectory {
    pub fn final_snapshot(&self) -> &Snapshot {
        self.snapshots.last().expect("a trajectory holds at least the initial curve")
    }

    pub fn final_time(&self) -> f64 {
        self.final_snapshot().time
    }
}

/// A running flow: owns its state and advances one accepted step at a time.
pub struct Flow<'a> {
    ev: Evaluator<'a>,
    nodes: Vec<Vec3>,
    time: f64,
    steps: usize,
    trajectory: Trajectory,
}

impl<'a> Flow<'a> {
    pub fn new(initial: &ClosedCurve, config: &'a FlowConfig, correction: &'a dyn CorrectionField) -> Result<Self> {
        config.validate()?;
        let radius = embeddedness_radius(initial)?;
        if radius <= 2.0 * config.eps {
            return Err(Error::invalid(format!(
                "initial embeddedness radius {radius:e} must exceed twice the core radius {:e}",
                config.eps
            )));
        }
        let ev = Evaluator { config, mobility: config.mobility_law()?, correction };
        let initial_energy = if config.track_energy {
            Some(effective_energy(initial, &config.burgers, config.eps, correction, &config.energy)?)
        } else {
            None
        };
        let nodes = initial.nodes().to_vec();
        let trajectory =
            Trajectory { snapshots: vec![Snapshot { time: 0.0, nodes: nodes.clone() }], diagnostics: Vec::new(), initial_energy };
        Ok(Flow { ev, nodes, time: 0.0, steps: 0, trajectory })
    }

    pub fn with_mobility(mut self, law: MobilityLaw) -> Self {
        self.ev.mobility = law;
        self
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn is_done(&self) -> bool {
        self.ev.config.t_end - self.time <= 1e-12 * self.ev.config.dt
    }

    /// Advances one accepted step; returns `None` once `t_end` is reached.
    pub fn advance(&mut self) -> Result<Option<&StepDiagnostics>> {
        if self.is_done() {
            return Ok(None);
        }
        let cfg = self.ev.config;
        let dt = cfg.dt.min(cfg.t_end - self.time);
        let r = guarded_step(&self.ev, &self.nodes, dt, self.time)?;
        self.time = if r.dt == dt && dt < cfg.dt { cfg.t_end } else { self.time + r.dt };
        self.steps += 1;
        let geo = NodeGeometry::new(&r.nodes);
        let energy = if cfg.track_energy {
            let curve = ClosedCurve::from_nodes(r.nodes.clone())?;
            Some(effective_energy(&curve, &cfg.burgers, cfg.eps, self.ev.correction, &cfg.energy)?)
        } else {
            None
        };
        let dissipation = if cfg.law.is_h1() {
            Some(h1_dissipation(&NodeGeometry::new(&self.nodes).spacing(), &r.velocity, cfg.delta))
        } else {
            None
        };
        self.nodes = r.nodes;
        self.trajectory.diagnostics.push(StepDiagnostics {
            time: self.time,
            dt: r.dt,
            halvings: r.halvings,
            length: geo.length,
            max_speed: r.velocity.iter().map(|v| v.norm()).fold(0.0, f64::max),
            min_reach: r.reach,
            energy,
            dissipation,
        });
        if self.steps.is_multiple_of(cfg.snapshot_every) || self.is_done() {
            self.trajectory.snapshots.push(Snapshot { time: self.time, nodes: self.nodes.clone() });
        }
        Ok(self.trajectory.diagnostics.last())
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn into_trajectory(self) -> Trajectory {
        self.trajectory
    }
}

/// Runs the flow to `t_end` with the whole-space correction.
pub fn run_flow(initial: &ClosedCurve, config: &FlowConfig) -> Result<Trajectory> {
    run_flow_with(initial, config, &ZeroCorrection)
}

pub fn run_flow_with(initial: &ClosedCurve, config: &FlowConfig, correction: &dyn CorrectionField) -> Result<Trajectory> {
    let mut flow = Flow::new(initial, config, correction)?;
    while flow.advance()?.is_some() {}
    Ok(flow.into_trajectory())
}

/// Hausdorff distance between the traces of two curves, from `4n` samples on
/// each side projected onto the other curve.
pub fn curve_distance(a: &ClosedCurve, b: &ClosedCurve) -> f64 {
    let one_sided = |p: &ClosedCurve, q: &ClosedCurve| {
        let m = 4 * p.len();
        (0..m).map(|i| nearest_param(q, &p.point(i as f64 / m as f64)).1).fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}
