use crate::energy::EnergyOptions;
use crate::error::{Error, Result};
use crate::flow::{FlowConfig, FlowLaw, Integrator, MobilitySpec};
use crate::force::ForceOptions;
use crate::geometry::{builtin_curve, read_curve, ClosedCurve, Vec3, BUILTIN_CURVES};
use crate::quadrature::QuadratureSpec;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Field,
    Energy,
    Force,
    Flow,
    Converge,
    Spectral,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Field => "field",
            Command::Energy => "energy",
            Command::Force => "force",
            Command::Flow => "flow",
            Command::Converge => "converge",
            Command::Spectral => "spectral",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergeMode {
    Energy,
    Force,
    Flow,
}

/// Axis of a sampling grid: `n` points from `lo` to `hi` inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        (0..self.n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSection {
    pub x: Axis,
    pub y: Axis,
    pub z: Axis,
}

impl Default for FieldSection {
    fn default() -> Self {
        FieldSection {
            x: Axis { lo: -1.5, hi: 1.5, n: 31 },
            y: Axis { lo: -1.5, hi: 1.5, n: 31 },
            z: Axis { lo: 0.1, hi: 0.1, n: 1 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSection {
    pub law: FlowLaw,
    pub dt: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    pub redistribution: bool,
    pub mobility: Option<MobilitySpec>,
    pub snapshot_every: usize,
    pub track_energy: bool,
    /// Per-step diagnostics CSV; next to the trajectory when absent.
    pub diagnostics: Option<PathBuf>,
}

impl Default for FlowSection {
    fn default() -> Self {
        let f = FlowConfig::default();
        FlowSection {
            law: f.law,
            dt: f.dt,
            t_end: f.t_end,
            integrator: f.integrator,
            redistribution: f.redistribution,
            mobility: None,
            snapshot_every: f.snapshot_every,
            track_energy: false,
            diagnostics: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralSection {
    pub alpha: f64,
    pub deltas: Vec<f64>,
    /// Fourier mode cutoff `M`; the grid has `2M` samples.
    pub modes: usize,
    /// Seeded random Hölder inputs for the bound checks.
    pub samples: usize,
}

impl Default for SpectralSection {
    fn default() -> Self {
        SpectralSection { alpha: 0.5, deltas: vec![1e-1, 1e-2, 1e-3, 1e-4], modes: 512, samples: 100 }
    }
}

/// Fully resolved run configuration; every artifact embeds it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    /// Built-in curve name or path to a curve JSON file.
    pub curve: String,
    /// Node count for built-in curves.
    pub nodes: usize,
    pub burgers: [f64; 3],
    pub eps: f64,
    pub eps_list: Vec<f64>,
    pub delta: f64,
    /// Regularization sweep for flow convergence tables; `[delta]` when empty.
    pub delta_list: Vec<f64>,
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// Line quadrature shared by the energy and force options.
    pub quadrature: QuadratureSpec,
    pub energy: EnergyOptions,
    pub force: ForceOptions,
    pub field: FieldSection,
    pub flow: FlowSection,
    pub converge_mode: ConvergeMode,
    pub spectral: SpectralSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            curve: "circle".into(),
            nodes: 64,
            burgers: [0.0, 0.0, 1.0],
            eps: 1e-3,
            eps_list: vec![1e-2, 1e-3, 1e-4],
            delta: 1e-2,
            delta_list: Vec::new(),
            seed: 0,
            output: None,
            quadrature: QuadratureSpec::default(),
            energy: EnergyOptions::default(),
            force: ForceOptions::default(),
            field: FieldSection::default(),
            flow: FlowSection::default(),
            converge_mode: ConvergeMode::Energy,
            spectral: SpectralSection::default(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        toml::from_str(&text).map_err(|e| Error::invalid(format!("config {}: {e}", path.display())))
    }

    pub fn burgers_vec(&self) -> Vec3 {
        Vec3::from(self.burgers)
    }

    pub fn energy_options(&self) -> EnergyOptions {
        EnergyOptions { quad: self.quadrature, ..self.energy }
    }

    pub fn force_options(&self) -> ForceOptions {
        ForceOptions { quad: self.quadrature, ..self.force }
    }

    pub fn flow_config(&self) -> FlowConfig {
        FlowConfig {
            law: self.flow.law,
            burgers: self.burgers_vec(),
            eps: self.eps,
            delta: self.delta,
            dt: self.flow.dt,
            t_end: self.flow.t_end,
            integrator: self.flow.integrator,
            redistribution: self.flow.redistribution,
            mobility: self.flow.mobility.clone(),
            force: self.force_options(),
            snapshot_every: self.flow.snapshot_every,
            track_energy: self.flow.track_energy,
            energy: self.energy_options(),
        }
    }

    /// Range checks that need no curve.
    pub fn validate(&self) -> Result<()> {
        positive("eps", self.eps)?;
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::invalid(format!("delta must be non-negative, got {}", self.delta)));
        }
        if !self.burgers.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("Burgers vector must be finite"));
        }
        if self.nodes < 8 {
            return Err(Error::invalid(format!("at least 8 nodes are required, got {}", self.nodes)));
        }
        for &e in &self.eps_list {
            positive("eps_list entries", e)?;
        }
        for &d in &self.delta_list {
            positive("delta_list entries", d)?;
        }
        let q = &self.quadrature;
        if q.order == 0 || q.base_panels == 0 || !(q.ratio > 0.0) {
            return Err(Error::invalid("quadrature order, panels and ratio must be positive"));
        }
        if self.energy.n_theta < 4 || self.energy.n_r < 2 {
            return Err(Error::invalid("energy resolution too small"));
        }
        if self.force.n_theta < 32 {
            return Err(Error::invalid(format!("force needs at least 32 angular points, got {}", self.force.n_theta)));
        }
        positive("holder alpha", self.force.holder_alpha)?;
        for axis in [&self.field.x, &self.field.y, &self.field.z] {
            if axis.n == 0 || !axis.lo.is_finite() || !axis.hi.is_finite() {
                return Err(Error::invalid("grid axes need finite bounds and at least one point"));
            }
        }
        self.flow_config().validate()?;
        let s = &self.spectral;
        if !(s.alpha > 0.0 && s.alpha < 1.0) {
            return Err(Error::invalid(format!("spectral alpha must lie in (0, 1), got {}", s.alpha)));
        }
        for &d in &s.deltas {
            positive("spectral deltas", d)?;
        }
        if s.modes < 2 {
            return Err(Error::invalid("spectral modes must be at least 2"));
        }
        Ok(())
    }

    /// The curve named by `curve`: a built-in name or a JSON file.
    pub fn load_curve(&self) -> Result<ClosedCurve> {
        if BUILTIN_CURVES.contains(&self.curve.as_str()) {
            builtin_curve(&self.curve, self.nodes)
        } else {
            let path = Path::new(&self.curve);
            if !path.exists() {
                return Err(Error::invalid(format!(
                    "curve '{}' is neither a built-in ({}) nor an existing file",
                    self.curve,
                    BUILTIN_CURVES.join(", ")
                )));
            }
            read_curve(path)
        }
    }
}
