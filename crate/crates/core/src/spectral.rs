//! The model problem `(1 − δΔ) u_t = Δu` on the circle and the resolvent
//! estimates for `(δL + 1) u = f`.

use crate::banded::CyclicTridiagonal;
use crate::error::{Error, Result};
use crate::geometry::{resample_spectrum, spectrum};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Exact solution of the model problem, stored as initial Fourier data plus
/// elapsed time so that evolution composes exactly.
///
/// `u(t, x) = Σ aₙ(t) sin(nx) + bₙ(t) cos(nx)` with `aₙ(t) = aₙ(0) e^{−n²t/(1+δn²)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierState {
    sine: Vec<f64>,
    cosine: Vec<f64>,
    delta: f64,
    time: f64,
}

/// `exp(−n²t/(1+δn²))`.
pub fn decay_factor(n: usize, delta: f64, t: f64) -> f64 {
    let n2 = (n * n) as f64;
    (-n2 * t / (1.0 + delta * n2)).exp()
}

impl FourierState {
    /// Coefficients for modes `0..=M`; the sine coefficient of mode 0 is ignored.
    pub fn new(sine: Vec<f64>, cosine: Vec<f64>, delta: f64) -> Result<Self> {
        if sine.len() != cosine.len() || sine.is_empty() {
            return Err(Error::invalid("sine and cosine coefficients must have the same nonzero length"));
        }
        if !sine.iter().chain(&cosine).all(|v| v.is_finite()) {
            return Err(Error::invalid("coefficients must be finite"));
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::invalid(format!("delta must be non-negative, got {delta}")));
        }
        let mut sine = sine;
        sine[0] = 0.0;
        Ok(FourierState { sine, cosine, delta, time: 0.0 })
    }

    /// Single sine mode `sin(nx)` with cutoff `m`.
    pub fn sine_mode(n: usize, m: usize, delta: f64) -> Result<Self> {
        if n == 0 || n > m {
            return Err(Error::invalid(format!("mode {n} outside 1..={m}")));
        }
        let mut a = vec![0.0; m + 1];
        a[n] = 1.0;
        Self::new(a, vec![0.0; m + 1], delta)
    }

    /// Random state with `|cₙ| ≤ n^{−(k + 1)}` times a uniform factor, so it
    /// lies in `H^k` with room to spare.
    pub fn random(rng: &mut impl Rng, m: usize, k: f64, delta: f64) -> Result<Self> {
        let mut a = vec![0.0; m + 1];
        let mut b = vec![0.0; m + 1];
        for n in 0..=m {
            let w = (n.max(1) as f64).powf(-(k + 1.0));
            a[n] = w * rng.random_range(-1.0..1.0);
            b[n] = w * rng.random_range(-1.0..1.0);
        }
        Self::new(a, b, delta)
    }

    pub fn cutoff(&self) -> usize {
        self.sine.len() - 1
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Same data and time with a different `δ`.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        let mut s = Self::new(self.sine.clone(), self.cosine.clone(), delta)?;
        s.time = self.time;
        Ok(s)
    }

    /// Initial data as a state at time 0.
    pub fn initial(&self) -> Self {
        FourierState { time: 0.0, ..self.clone() }
    }

    /// Current sine coefficient `aₙ(t)`.
    pub fn sine(&self, n: usize) -> f64 {
        self.sine[n] * decay_factor(n, self.delta, self.time)
    }

    /// Current cosine coefficient `bₙ(t)`.
    pub fn cosine(&self, n: usize) -> f64 {
        self.cosine[n] * decay_factor(n, self.delta, self.time)
    }

    /// `u(t, ·)` on `len` equispaced points of `[0, 2π)`.
    pub fn samples(&self, len: usize) -> Vec<f64> {
        (0..len)
            .map(|j| {
                let x = 2.0 * PI * j as f64 / len as f64;
                (0..=self.cutoff()).map(|n| self.sine(n) * (n as f64 * x).sin() + self.cosine(n) * (n as f64 * x).cos()).sum()
            })
            .collect()
    }
}

/// Advances the exact solution by `t ≥ 0`.
pub fn evolve_model(state: &FourierState, t: f64) -> Result<FourierState> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("evolution time must be non-negative, got {t}")));
    }
    Ok(FourierState { time: state.time + t, ..state.clone() })
}

/// `(Σ n^{2k} (Δaₙ² + Δbₙ²))^{1/2}` between the current coefficients of two
/// states on the same cutoff (`0⁰ = 1`).
pub fn hk_distance(a: &FourierState, b: &FourierState, k: u32) -> f64 {
    let m = a.cutoff().min(b.cutoff());
    (0..=m)
        .map(|n| {
            let w = (n as f64).powi(2 * k as i32);
            w * ((a.sine(n) - b.sine(n)).powi(2) + (a.cosine(n) - b.cosine(n)).powi(2))
        })
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HkRow {
    pub delta: f64,
    pub distance: f64,
}

/// `H^k` distance at time `t` between the `δ`-evolution and the heat
/// evolution (`δ = 0`) of the current data of `state0`, for each `δ`.
pub fn hk_convergence(state0: &FourierState, deltas: &[f64], t: f64, k: u32) -> Result<Vec<HkRow>> {
    let m = state0.cutoff();
    let data = FourierState::new((0..=m).map(|n| state0.sine(n)).collect(), (0..=m).map(|n| state0.cosine(n)).collect(), 0.0)?;
    let heat = evolve_model(&data, t)?;
    deltas
        .iter()
        .map(|&d| {
            let s = evolve_model(&data.with_delta(d)?, t)?;
            Ok(HkRow { delta: d, distance: hk_distance(&s, &heat, k) })
        })
        .collect()
}

/// Symbol used for a constant-coefficient operator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symbol {
    /// Three-point second difference, `(2 − 2cos nh)/h²`: keeps the discrete
    /// maximum principle.
    #[default]
    FiniteDifference,
    /// `n²`.
    Exact,
}

/// The operator `L u = −a u'' + b u'` on the circle `[0, 2π)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Operator {
    Constant {
        a: f64,
        symbol: Symbol,
    },
    /// Samples of `a` and optionally of the drift `b`; the drift is
    /// discretized upwind.
    Variable {
        a: Vec<f64>,
        b: Option<Vec<f64>>,
    },
}

impl Operator {
    pub fn laplacian() -> Self {
        Operator::Constant { a: 1.0, symbol: Symbol::FiniteDifference }
    }
}

fn banded(n: usize, delta: f64, a: &[f64], b: Option<&[f64]>) -> Result<CyclicTridiagonal> {
    if a.len() != n || b.is_some_and(|b| b.len() != n) {
        return Err(Error::invalid("coefficient samples must match the data length"));
    }
    for (i, &ai) in a.iter().enumerate() {
        if !(ai > 0.0) || !ai.is_finite() {
            return Err(Error::Ellipticity { index: i, value: ai });
        }
    }
    if let Some(b) = b {
        if !b.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("drift samples must be finite"));
        }
    }
    let h = 2.0 * PI / n as f64;
    let mut lower = vec![0.0; n];
    let mut diag = vec![1.0; n];
    let mut upper = vec![0.0; n];
    for i in 0..n {
        let c = delta * a[i] / (h * h);
        lower[i] -= c;
        upper[i] -= c;
        diag[i] += 2.0 * c;
        let bi = b.map_or(0.0, |b| b[i]);
        let d = delta * bi.abs() / h;
        if bi > 0.0 {
            lower[i] -= d;
        } else {
            upper[i] -= d;
        }
        diag[i] += d;
    }
    CyclicTridiagonal::new(lower, diag, upper)
}

/// Solves `(δL + 1) u = f` for periodic samples `f` on `[0, 2π)`.
pub fn resolvent_solve(f: &[f64], delta: f64, op: &Operator) -> Result<Vec<f64>> {
    let n = f.len();
    if n < 3 {
        return Err(Error::invalid("need at least 3 samples"));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    if !f.iter().all(|v| v.is_finite()) {
        return Err(Error::invalid("data must be finite"));
    }
    match op {
        Operator::Constant { a, symbol } => {
            if !(*a > 0.0) || !a.is_finite() {
                return Err(Error::Ellipticity { index: 0, value: *a });
            }
            let h = 2.0 * PI / n as f64;
            let mut coeffs = spectrum(f, 1).remove(0);
            for (k, c) in coeffs.iter_mut().enumerate() {
                let freq = k.min(n - k) as f64;
                let lambda = match symbol {
                    Symbol::FiniteDifference => (2.0 - 2.0 * (freq * h).cos()) / (h * h),
                    Symbol::Exact => freq * freq,
                };
                *c /= 1.0 + delta * a * lambda;
            }
            Ok(resample_spectrum(&coeffs, 0, n))
        }
        Operator::Variable { a, b } => Ok(banded(n, delta, a, b.as_deref())?.solve(f)),
    }
}

/// Max-norm residual of the discrete system solved by [`resolvent_solve`].
pub fn resolvent_residual(f: &[f64], u: &[f64], delta: f64, op: &Operator) -> Result<f64> {
    let n = f.len();
    let applied = match op {
        Operator::Constant { a, symbol: Symbol::FiniteDifference } => banded(n, delta, &vec![*a; n], None)?.apply(u),
        Operator::Constant { a, symbol: Symbol::Exact } => {
            let mut coeffs = spectrum(u, 1).remove(0);
            for (k, c) in coeffs.iter_mut().enumerate() {
                let freq = k.min(n - k) as f64;
                *c *= 1.0 + delta * a * freq * freq;
            }
            resample_spectrum(&coeffs, 0, n)
        }
        Operator::Variable { a, b } => banded(n, delta, a, b.as_deref())?.apply(u),
    };
    Ok(applied.iter().zip(f).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Discrete `C^{0,α}` seminorm over all sample pairs of a periodic function
/// on `[0, 2π)`, with circular distance.
pub fn holder_seminorm(v: &[f64], alpha: f64) -> f64 {
    let n = v.len();
    let h = 2.0 * PI / n as f64;
    // Distances depend only on the index gap.
    let inv: Vec<f64> = (0..=n / 2).map(|g| if g == 0 { 0.0 } else { (g as f64 * h).powf(-alpha) }).collect();
    let mut best: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let g = (j - i).min(n - (j - i));
            best = best.max((v[i] - v[j]).abs() * inv[g]);
        }
    }
    best
}

/// Lacunary sum `Σ_{k<levels} 2^{−kα} cos(2^k x + φ_k)`, a `C^{0,α}`
/// function that is no smoother, on `len` points.
pub fn weierstrass(len: usize, alpha: f64, levels: u32, phases: &[f64]) -> Vec<f64> {
    (0..len)
        .map(|j| {
            let x = 2.0 * PI * j as f64 / len as f64;
            (0..levels)
                .map(|k| {
                    let f = (1u64 << k) as f64;
                    f.powf(-alpha) * (f * x + phases.get(k as usize).copied().unwrap_or(0.0)).cos()
                })
                .sum()
        })
        .collect()
}

/// Number of lacunary levels whose top frequency stays below `modes`.
pub fn lacunary_levels(modes: usize) -> u32 {
    (usize::BITS - modes.max(1).leading_zeros()).saturating_sub(1).max(1)
}

/// Random Hölder test function: a Weierstrass sum with random phases and
/// exponent, scaled and shifted by random constants.
pub fn random_holder_function(rng: &mut impl Rng, len: usize, modes: usize) -> (Vec<f64>, f64) {
    let alpha = rng.random_range(0.2..0.9);
    let levels = lacunary_levels(modes);
    let phases: Vec<f64> = (0..levels).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let scale = rng.random_range(0.1..10.0);
    let shift = rng.random_range(-1.0..1.0);
    let f = weierstrass(len, alpha, levels, &phases).into_iter().map(|v| scale * v + shift).collect();
    (f, alpha)
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_exponent(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / lx.iter().map(|a| (a - mx).powi(2)).sum::<f64>()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub delta: f64,
    pub sup_error: f64,
    /// `sup_error / ([f]_α δ^{α/2})`, the empirical constant.
    pub constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateStudy {
    pub alpha: f64,
    pub samples: usize,
    pub levels: u32,
    pub holder_f: f64,
    pub rows: Vec<RateRow>,
    pub exponent: f64,
}

/// Fits the exponent of `‖u_δ − f‖_∞` against `δ` for the Weierstrass input
/// of exponent `alpha` resolved with `modes` Fourier modes.
pub fn holder_rate_study(alpha: f64, deltas: &[f64], modes: usize, op: &Operator) -> Result<RateStudy> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("Hölder exponent must lie in (0, 1), got {alpha}")));
    }
    if deltas.len() < 2 {
        return Err(Error::invalid("a rate fit needs at least two values of delta"));
    }
    if modes < 2 {
        return Err(Error::invalid("need at least two modes"));
    }
    let samples = 2 * modes;
    let levels = lacunary_levels(modes);
    let f = weierstrass(samples, alpha, levels, &[]);
    let holder_f = holder_seminorm(&f, alpha);
    let rows = deltas
        .iter()
        .map(|&d| {
            let u = resolvent_solve(&f, d, op)?;
            let err = sup_norm(&u.iter().zip(&f).map(|(a, b)| a - b).collect::<Vec<_>>());
            Ok(RateRow { delta: d, sup_error: err, constant: err / (holder_f * d.powf(0.5 * alpha)) })
        })
        .collect::<Result<Vec<_>>>()?;
    let exponent = fit_exponent(deltas, &rows.iter().map(|r| r.sup_error).collect::<Vec<_>>());
    Ok(RateStudy { alpha, samples, levels, holder_f, rows, exponent })
}
