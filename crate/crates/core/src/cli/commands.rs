use super::config::{Command, ConvergeMode, RunConfig};
use super::output::{num, opt_num, to_json, Artifacts, Csv};
use crate::energy::{core_energy_with_chart, log_abs, EnergyBreakdown, ZeroCorrection};
use crate::error::{Error, Result};
use crate::flow::{curve_distance, run_flow, FlowConfig, FlowLaw, Trajectory};
use crate::force::pk_force;
use crate::geometry::{adapted_frame, ClosedCurve, Vec3};
use crate::spectral::{holder_rate_study, holder_seminorm, random_holder_function, resolvent_solve, sup_norm, Operator};
use crate::strain::singular_strain;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::path::PathBuf;

/// Outcome of a run: the one-line summary and the files to write.
pub struct Report {
    pub summary: String,
    pub artifacts: Artifacts,
}

fn output_path(cfg: &RunConfig, default: &str) -> PathBuf {
    cfg.output.clone().unwrap_or_else(|| PathBuf::from(default))
}

pub fn execute(cfg: &RunConfig) -> Result<Report> {
    let command = cfg.command.ok_or_else(|| Error::invalid("no command selected"))?;
    cfg.validate()?;
    match command {
        Command::Field => field(cfg),
        Command::Energy => energy(cfg, false),
        Command::Force => force(cfg),
        Command::Flow => flow(cfg),
        Command::Converge => match cfg.converge_mode {
            ConvergeMode::Energy => energy(cfg, true),
            ConvergeMode::Force => converge_force(cfg),
            ConvergeMode::Flow => converge_flow(cfg),
        },
        Command::Spectral => spectral(cfg),
    }
}

fn vec_fields(v: &Vec3) -> [String; 3] {
    [num(v.x), num(v.y), num(v.z)]
}

fn field(cfg: &RunConfig) -> Result<Report> {
    let curve = cfg.load_curve()?;
    let chart = adapted_frame(&curve)?;
    let b = cfg.burgers_vec();
    let g = &cfg.field;
    let mut points = Vec::new();
    for z in g.z.points() {
        for y in g.y.points() {
            for x in g.x.points() {
                points.push(Vec3::new(x, y, z));
            }
        }
    }
    let evals: Vec<_> = points
        .par_iter()
        .map(|p| match singular_strain(&chart, &b, p, &cfg.quadrature) {
            Ok(e) => Ok(Some(e)),
            Err(Error::Singular { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut header = vec!["x", "y", "z", "distance"];
    let comps = ["s_xx", "s_xy", "s_xz", "s_yx", "s_yy", "s_yz", "s_zx", "s_zy", "s_zz"];
    header.extend(comps);
    header.extend(["hat_x", "hat_y", "hat_z", "error"]);
    let mut csv = Csv::new("field", cfg, &header);
    let mut peak: f64 = 0.0;
    let mut skipped = 0;
    for (p, e) in points.iter().zip(&evals) {
        let mut row: Vec<String> = vec_fields(p).to_vec();
        match e {
            Some(e) => {
                row.push(num(e.dist));
                for i in 0..3 {
                    for j in 0..3 {
                        row.push(num(e.value[(i, j)]));
                    }
                }
                row.extend(vec_fields(&e.hat));
                row.push(num(e.error));
                peak = peak.max(e.value.norm());
            }
            None => {
                skipped += 1;
                row.extend(std::iter::repeat_n("NaN".to_string(), 14));
            }
        }
        csv.row(&row);
    }
    let path = output_path(cfg, "field.csv");
    let mut artifacts = Artifacts::default();
    artifacts.add(path.clone(), csv.into_string());
    Ok(Report {
        summary: format!(
            "field: {} points ({skipped} on the curve), max |S| = {}, written to {}",
            points.len(),
            num(peak),
            path.display()
        ),
        artifacts,
    })
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
}

fn energy(cfg: &RunConfig, with_slope: bool) -> Result<Report> {
    if cfg.eps_list.is_empty() {
        return Err(Error::invalid("eps_list is empty"));
    }
    if with_slope && cfg.eps_list.len() < 2 {
        return Err(Error::invalid("a slope needs at least two values of eps"));
    }
    let curve = cfg.load_curve()?;
    let chart = adapted_frame(&curve)?;
    let b = cfg.burgers_vec();
    let opts = cfg.energy_options();
    let runs: Vec<EnergyBreakdown> =
        cfg.eps_list.iter().map(|&e| core_energy_with_chart(&chart, &b, e, &opts)).collect::<Result<_>>()?;
    let xs: Vec<f64> = cfg.eps_list.iter().map(|&e| log_abs(e)).collect();
    let ys: Vec<f64> = runs.iter().map(|r| r.total).collect();
    let expected = b.norm_squared() * curve.length() / (4.0 * PI);
    let slope = if xs.len() >= 2 { Some(fit_slope(&xs, &ys)) } else { None };
    let mut header =
        vec!["eps", "abs_log_eps", "total", "tube_part", "far_part", "asymptote", "renormalized", "split_radius", "tail_bound"];
    if with_slope {
        header.extend(["slope", "expected_slope"]);
    }
    let name = if with_slope { "converge" } else { "energy" };
    let mut csv = Csv::new(name, cfg, &header);
    for (r, x) in runs.iter().zip(&xs) {
        let mut row = vec![
            num(r.eps),
            num(*x),
            num(r.total),
            num(r.tube_part),
            num(r.far_part),
            num(r.asymptote),
            num(r.renormalized),
            num(r.split_radius),
            num(r.tail_bound),
        ];
        if with_slope {
            row.push(opt_num(slope));
            row.push(num(expected));
        }
        csv.row(&row);
    }
    let path = output_path(cfg, &format!("{name}.csv"));
    let mut artifacts = Artifacts::default();
    artifacts.add(path.clone(), csv.into_string());
    let slope_text = match slope {
        Some(s) => {
            format!("slope {} vs |b|²L/(4π) = {} (rel. diff {})", num(s), num(expected), num((s - expected).abs() / expected))
        }
        None => format!("energy {}", num(ys[0])),
    };
    Ok(Report {
        summary: format!("{name} energy: {} values of eps, {slope_text}, written to {}", xs.len(), path.display()),
        artifacts,
    })
}

fn force(cfg: &RunConfig) -> Result<Report> {
    let curve = cfg.load_curve()?;
    let chart = adapted_frame(&curve)?;
    let f = pk_force(&chart, &cfg.burgers_vec(), cfg.eps, &ZeroCorrection, &cfg.force_options())?;
    let header = [
        "s", "f_x", "f_y", "f_z", "lead_x", "lead_y", "lead_z", "rem_x", "rem_y", "rem_z", "t1_x", "t1_y", "t1_z", "t2_x",
        "t2_y", "t2_z", "t3_x", "t3_y", "t3_z",
    ];
    let mut csv = Csv::new("force", cfg, &header);
    csv.comment(&format!(
        "relative_remainder {} remainder_sup {} remainder_holder {} alpha {}",
        num(f.relative_remainder()),
        num(f.remainder_sup),
        num(f.remainder_holder),
        num(f.holder_alpha)
    ));
    for i in 0..curve.len() {
        let mut row = vec![num(f.arclength[i])];
        for v in [&f.nodes[i], &f.leading[i], &f.remainder[i], &f.term1[i], &f.term2[i], &f.term3[i]] {
            row.extend(vec_fields(v));
        }
        csv.row(&row);
    }
    let path = output_path(cfg, "force.csv");
    let mut artifacts = Artifacts::default();
    artifacts.add(path.clone(), csv.into_string());
    Ok(Report {
        summary: format!(
            "force: eps {}, relative remainder {}, Hölder seminorm {}, written to {}",
            num(cfg.eps),
            num(f.relative_remainder()),
            num(f.remainder_holder),
            path.display()
        ),
        artifacts,
    })
}

#[derive(Serialize)]
struct TrajectoryDoc<'a> {
    config: &'a RunConfig,
    trajectory: &'a Trajectory,
}

fn diagnostics_csv(cfg: &RunConfig, traj: &Trajectory) -> String {
    let header = ["time", "dt", "halvings", "length", "max_speed", "min_reach", "energy", "dissipation"];
    let mut csv = Csv::new("flow", cfg, &header);
    for d in &traj.diagnostics {
        csv.row(&[
            num(d.time),
            num(d.dt),
            d.halvings.to_string(),
            num(d.length),
            num(d.max_speed),
            num(d.min_reach),
            opt_num(d.energy),
            opt_num(d.dissipation),
        ]);
    }
    csv.into_string()
}

fn flow(cfg: &RunConfig) -> Result<Report> {
    let curve = cfg.load_curve()?;
    let traj = run_flow(&curve, &cfg.flow_config())?;
    let path = output_path(cfg, "flow.json");
    let diag = cfg.flow.diagnostics.clone().unwrap_or_else(|| path.with_extension("diagnostics.csv"));
    let mut artifacts = Artifacts::default();
    artifacts.add(path.clone(), to_json(&TrajectoryDoc { config: cfg, trajectory: &traj }));
    artifacts.add(diag.clone(), diagnostics_csv(cfg, &traj));
    let last = traj.diagnostics.last();
    Ok(Report {
        summary: format!(
            "flow {:?}: t = {}, {} steps, length {}, min reach {}, written to {} and {}",
            cfg.flow.law,
            num(traj.final_time()),
            traj.diagnostics.len(),
            num(last.map_or(curve.length(), |d| d.length)),
            num(traj.diagnostics.iter().map(|d| d.min_reach).fold(f64::INFINITY, f64::min)),
            path.display(),
            diag.display()
        ),
        artifacts,
    })
}

fn converge_force(cfg: &RunConfig) -> Result<Report> {
    let curve = cfg.load_curve()?;
    let chart = adapted_frame(&curve)?;
    let b = cfg.burgers_vec();
    let opts = cfg.force_options();
    let mut csv = Csv::new("converge", cfg, &["eps", "abs_log_eps", "relative_remainder", "remainder_sup", "remainder_holder"]);
    let mut rel = Vec::new();
    for &eps in &cfg.eps_list {
        let f = pk_force(&chart, &b, eps, &ZeroCorrection, &opts)?;
        rel.push(f.relative_remainder());
        csv.row(&[num(eps), num(log_abs(eps)), num(f.relative_remainder()), num(f.remainder_sup), num(f.remainder_holder)]);
    }
    let monotone = rel.windows(2).all(|w| w[1] < w[0]);
    let path = output_path(cfg, "converge.csv");
    let mut artifacts = Artifacts::default();
    artifacts.add(path.clone(), csv.into_string());
    Ok(Report {
        summary: format!(
            "converge force: relative remainder {} ({}), written to {}",
            rel.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" -> "),
            if monotone { "decreasing" } else { "not decreasing" },
            path.display()
        ),
        artifacts,
    })
}

fn limit_law(law: FlowLaw) -> Result<FlowLaw> {
    match law {
        FlowLaw::L2Pk => Ok(FlowLaw::Csf),
        FlowLaw::H1Pk => Ok(FlowLaw::H1Csf),
        other => Err(Error::invalid(format!("flow convergence needs law l2_pk or h1_pk, got {other:?}"))),
    }
}

fn final_curve(initial: &ClosedCurve, config: &FlowConfig) -> Result<ClosedCurve> {
    run_flow(initial, config)?.final_snapshot().curve()
}

fn converge_flow(cfg: &RunConfig) -> Result<Report> {
    if cfg.eps_list.is_empty() {
        return Err(Error::invalid("eps_list is empty"));
    }
    let curve = cfg.load_curve()?;
    let base = cfg.flow_config();
    let limit_law = limit_law(base.law)?;
    let deltas = if cfg.delta_list.is_empty() { vec![cfg.delta] } else { cfg.delta_list.clone() };
    let regularized = base.law == FlowLaw::H1Pk;
    let csf = if regularized { Some(final_curve(&curve, &FlowConfig { law: FlowLaw::Csf, ..base.clone() })?) } else { None };
    let points: Vec<(f64, f64)> = deltas.iter().flat_map(|&d| cfg.eps_list.iter().map(move |&e| (d, e))).collect();
    let limits: Vec<ClosedCurve> = deltas
        .par_iter()
        .map(|&delta| final_curve(&curve, &FlowConfig { law: limit_law, delta, ..base.clone() }))
        .collect::<Result<_>>()?;
    let finals: Vec<ClosedCurve> = points
        .par_iter()
        .map(|&(delta, eps)| final_curve(&curve, &FlowConfig { eps, delta, ..base.clone() }))
        .collect::<Result<_>>()?;
    let mut csv = Csv::new("converge", cfg, &["delta", "eps", "abs_log_eps", "distance", "limit_to_csf", "distance_to_csf"]);
    let mut dist = Vec::new();
    for (k, (&(delta, eps), fin)) in points.iter().zip(&finals).enumerate() {
        let limit = &limits[k / cfg.eps_list.len()];
        let d = curve_distance(fin, limit);
        dist.push(d);
        let to_csf = csf.as_ref().map(|c| (curve_distance(limit, c), curve_distance(fin, c)));
        csv.row(&[num(delta), num(eps), num(log_abs(eps)), num(d), opt_num(to_csf.map(|t| t.0)), opt_num(to_csf.map(|t| t.1))]);
    }
    let monotone = dist.chunks(cfg.eps_list.len()).all(|c| c.windows(2).all(|w| w[1] < w[0]));
    let path = output_path(cfg, "converge.csv");
    let mut artifacts = Artifacts::default();
    artifacts.add(path.clone(), csv.into_string());
    Ok(Report {
        summary: format!(
            "converge flow {:?}: distance to the {:?} limit at t = {} over {} values of delta: {} ({}), written to {}",
            base.law,
            limit_law,
            num(base.t_end),
            deltas.len(),
            dist.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" -> "),
            if monotone { "decreasing in eps" } else { "not decreasing in eps" },
            path.display()
        ),
        artifacts,
    })
}

fn spectral(cfg: &RunConfig) -> Result<Report> {
    let s = &cfg.spectral;
    let op = Operator::laplacian();
    let study = holder_rate_study(s.alpha, &s.deltas, s.modes, &op)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let len = 2 * s.modes;
    let (mut sup_violations, mut holder_violations) = (0usize, 0usize);
    for _ in 0..s.samples {
        let (f, alpha) = random_holder_function(&mut rng, len, s.modes);
        let delta = 10f64.powf(rng.random_range(-4.0..0.0));
        let u = resolvent_solve(&f, delta, &op)?;
        if sup_norm(&u) > sup_norm(&f) + 1e-10 {
            sup_violations += 1;
        }
        if holder_seminorm(&u, alpha) > holder_seminorm(&f, alpha) + 1e-10 {
            holder_violations += 1;
        }
    }
    let mut csv = Csv::new("spectral", cfg, &["delta", "sup_error", "constant", "fitted_exponent"]);
    csv.comment(&format!(
        "holder_f {} bound_samples {} sup_violations {sup_violations} holder_violations {holder_violations}",
        num(study.holder_f),
        s.samples
    ));
    for r in &study.rows {
        csv.row(&[num(r.delta), num(r.sup_error), num(r.constant), num(study.exponent)]);
    }
    let path = output_path(cfg, "spectral.csv");
    let mut artifacts = Artifacts::default();
    artifacts.add(path.clone(), csv.into_string());
    Ok(Report {
        summary: format!(
            "spectral: fitted exponent {} (alpha/2 = {}), bound violations sup {sup_violations} Hölder {holder_violations} over {} inputs, written to {}",
            num(study.exponent),
            num(0.5 * s.alpha),
            s.samples,
            path.display()
        ),
        artifacts,
    })
}
