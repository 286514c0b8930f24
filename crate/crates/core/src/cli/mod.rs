//! Command line front end: layered configuration (built-in defaults, then a
//! TOML file, then flags), experiment dispatch and artifact output.

mod commands;
mod config;
mod output;

pub use commands::{execute, Report};
pub use config::{Axis, Command, ConvergeMode, FieldSection, FlowSection, RunConfig, SpectralSection};
pub use output::{num, to_json};

use crate::error::{Error, Result};
use crate::flow::{FlowLaw, Integrator, MobilitySpec};
use clap::{Args, Parser, Subcommand};
use std::ffi::OsString;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "loopdyn", version, about = "Strain, energy, force and flows of core-regularized dislocation loops")]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Debug)]
struct Common {
    /// Built-in curve (circle, ellipse, stadium, torus-knot) or a curve JSON file.
    #[arg(long, global = true)]
    curve: Option<String>,
    /// Node count for built-in curves.
    #[arg(long, global = true)]
    nodes: Option<usize>,
    /// Burgers vector as x,y,z.
    #[arg(long = "b", global = true, value_delimiter = ',', allow_negative_numbers = true)]
    burgers: Option<Vec<f64>>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',')]
    eps_list: Option<Vec<f64>>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Regularization sweep for `converge --mode flow`.
    #[arg(long, global = true, value_delimiter = ',')]
    delta_list: Option<Vec<f64>>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Gauss points per quadrature panel.
    #[arg(long, global = true)]
    quad_order: Option<usize>,
    /// Angular points on the tube surface (energy and force).
    #[arg(long, global = true)]
    n_theta: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Sample the singular strain on a grid.
    Field {
        /// x0:x1:nx,y0:y1:ny,z0:z1:nz
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
    },
    /// Core energy over eps_list.
    Energy,
    /// Peach–Koehler force at every node.
    Force {
        /// Exponent of the reported Hölder seminorm of the remainder.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Integrate a flow and write the trajectory.
    Flow {
        /// csf, l2, h1, mobility or h1_csf.
        #[arg(long)]
        law: Option<String>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        /// euler or rk4.
        #[arg(long)]
        integrator: Option<String>,
        /// Resample by arclength after every step.
        #[arg(long)]
        redistribute: bool,
        #[arg(long)]
        snapshot_every: Option<usize>,
        /// Evaluate the effective energy after every step.
        #[arg(long)]
        track_energy: bool,
        /// Per-step diagnostics CSV.
        #[arg(long)]
        diagnostics: Option<PathBuf>,
        /// Mobility exponent p.
        #[arg(long)]
        p: Option<f64>,
    },
    /// Convergence tables across eps_list.
    Converge {
        /// energy, force or flow.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        law: Option<String>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Resolvent rate fit and bound checks.
    Spectral {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        deltas: Option<Vec<f64>>,
        #[arg(long)]
        modes: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
    },
}

fn parse_law(s: &str) -> Result<FlowLaw> {
    match s {
        "csf" => Ok(FlowLaw::Csf),
        "l2" | "l2_pk" => Ok(FlowLaw::L2Pk),
        "h1" | "h1_pk" => Ok(FlowLaw::H1Pk),
        "mobility" | "mobility_pk" => Ok(FlowLaw::MobilityPk),
        "h1_csf" => Ok(FlowLaw::H1Csf),
        other => Err(Error::invalid(format!("unknown flow law '{other}'"))),
    }
}

fn parse_axis(s: &str) -> Result<Axis> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::invalid(format!("grid axis '{s}' must read lo:hi:n"));
    if parts.len() != 3 {
        return Err(bad());
    }
    Ok(Axis {
        lo: parts[0].trim().parse().map_err(|_| bad())?,
        hi: parts[1].trim().parse().map_err(|_| bad())?,
        n: parts[2].trim().parse().map_err(|_| bad())?,
    })
}

fn apply_flow_overrides(cfg: &mut RunConfig, law: &Option<String>, dt: Option<f64>, t_end: Option<f64>) -> Result<()> {
    if let Some(l) = law {
        cfg.flow.law = parse_law(l)?;
    }
    if let Some(v) = dt {
        cfg.flow.dt = v;
    }
    if let Some(v) = t_end {
        cfg.flow.t_end = v;
    }
    Ok(())
}

fn resolve(cli: Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_toml_file(path)?,
        None => RunConfig::default(),
    };
    let c = cli.common;
    if let Some(v) = c.curve {
        cfg.curve = v;
    }
    if let Some(v) = c.nodes {
        cfg.nodes = v;
    }
    if let Some(v) = c.burgers {
        if v.len() != 3 {
            return Err(Error::invalid(format!("--b needs three components, got {}", v.len())));
        }
        cfg.burgers = [v[0], v[1], v[2]];
    }
    if let Some(v) = c.eps {
        cfg.eps = v;
    }
    if let Some(v) = c.eps_list {
        cfg.eps_list = v;
    }
    if let Some(v) = c.delta {
        cfg.delta = v;
    }
    if let Some(v) = c.delta_list {
        cfg.delta_list = v;
    }
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = c.out {
        cfg.output = Some(v);
    }
    if let Some(v) = c.quad_order {
        cfg.quadrature.order = v;
    }
    if let Some(v) = c.n_theta {
        cfg.energy.n_theta = v;
        cfg.force.n_theta = v;
    }
    cfg.command = Some(match cli.command {
        Sub::Field { grid } => {
            if let Some(g) = grid {
                let axes: Vec<&str> = g.split(',').collect();
                if axes.len() != 3 {
                    return Err(Error::invalid("--grid needs three axes x0:x1:nx,y0:y1:ny,z0:z1:nz"));
                }
                cfg.field.x = parse_axis(axes[0])?;
                cfg.field.y = parse_axis(axes[1])?;
                cfg.field.z = parse_axis(axes[2])?;
            }
            Command::Field
        }
        Sub::Energy => Command::Energy,
        Sub::Force { alpha } => {
            if let Some(a) = alpha {
                cfg.force.holder_alpha = a;
            }
            Command::Force
        }
        Sub::Flow { law, dt, t_end, integrator, redistribute, snapshot_every, track_energy, diagnostics, p } => {
            apply_flow_overrides(&mut cfg, &law, dt, t_end)?;
            if let Some(i) = integrator {
                cfg.flow.integrator = match i.as_str() {
                    "euler" => Integrator::Euler,
                    "rk4" => Integrator::Rk4,
                    other => return Err(Error::invalid(format!("unknown integrator '{other}'"))),
                };
            }
            cfg.flow.redistribution |= redistribute;
            cfg.flow.track_energy |= track_energy;
            if let Some(v) = snapshot_every {
                cfg.flow.snapshot_every = v;
            }
            if let Some(v) = diagnostics {
                cfg.flow.diagnostics = Some(v);
            }
            if let Some(v) = p {
                cfg.flow.mobility.get_or_insert_with(MobilitySpec::default).p = v;
            }
            Command::Flow
        }
        Sub::Converge { mode, law, dt, t_end } => {
            if let Some(m) = mode {
                cfg.converge_mode = match m.as_str() {
                    "energy" => ConvergeMode::Energy,
                    "force" => ConvergeMode::Force,
                    "flow" => ConvergeMode::Flow,
                    other => return Err(Error::invalid(format!("unknown convergence mode '{other}'"))),
                };
            }
            apply_flow_overrides(&mut cfg, &law, dt, t_end)?;
            Command::Converge
        }
        Sub::Spectral { alpha, deltas, modes, samples } => {
            let s = &mut cfg.spectral;
            if let Some(v) = alpha {
                s.alpha = v;
            }
            if let Some(v) = deltas {
                s.deltas = v;
            }
            if let Some(v) = modes {
                s.modes = v;
            }
            if let Some(v) = samples {
                s.samples = v;
            }
            Command::Spectral
        }
    });
    Ok(cfg)
}

/// Process exit status for an error code.
pub fn exit_status(code: &str) -> i32 {
    match code {
        "invalid-input" => 2,
        "degenerate-curve" => 3,
        "not-embedded" => 4,
        "no-admissible-direction" => 5,
        "singular-point" => 6,
        "outside-tube" => 7,
        "non-positive-area" => 8,
        "quadrature-failure" => 9,
        "step-underflow" => 10,
        "ellipticity" => 11,
        "io-failure" => 12,
        _ => 1,
    }
}

/// Resolves the configuration, runs the experiment and writes its artifacts.
pub fn run(cfg: &RunConfig) -> Result<Report> {
    let report = execute(cfg)?;
    report.artifacts.write()?;
    Ok(report)
}

/// Entry point shared by the binary and the tests; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return if code == 0 { 0 } else { exit_status("invalid-input") };
        }
    };
    match resolve(cli).and_then(|cfg| run(&cfg)) {
        Ok(report) => {
            println!("{}", report.summary);
            0
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            exit_status(e.code())
        }
    }
}
