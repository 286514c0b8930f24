use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn forward_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

pub(crate) fn inverse_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Dense table of a trigonometric interpolant and its derivatives on a fine
/// periodic grid, read back at arbitrary parameters by quintic Hermite
/// interpolation.
///
/// The parameter domain is `[0, 1)`. Derivatives are taken with respect to
/// that parameter.
#[derive(Clone, Debug)]
pub struct PeriodicTable {
    dim: usize,
    orders: usize,
    len: usize,
    data: Vec<f64>,
}

/// Fourier coefficients (FFT ordering, normalized by the sample count) of each
/// component of `samples`, laid out as `samples[i * dim + c]`.
pub fn spectrum(samples: &[f64], dim: usize) -> Vec<Vec<Complex64>> {
    let n = samples.len() / dim;
    let fft = forward_plan(n);
    (0..dim)
        .map(|c| {
            let mut buf: Vec<Complex64> = (0..n).map(|i| Complex64::new(samples[i * dim + c], 0.0)).collect();
            fft.process(&mut buf);
            let inv = 1.0 / n as f64;
            buf.iter_mut().for_each(|z| *z *= inv);
            // Exact Hermitian symmetry, as for any real signal.
            buf[0].im = 0.0;
            if n.is_multiple_of(2) {
                buf[n / 2].im = 0.0;
            }
            for k in 1..n.div_ceil(2) {
                let z = 0.5 * (buf[k] + buf[n - k].conj());
                buf[k] = z;
                buf[n - k] = z.conj();
            }
            buf
        })
        .collect()
}

fn derivative_factor(freq: f64, order: i32) -> Complex64 {
    if order == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if freq == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::new(0.0, 2.0 * PI * freq).powi(order)
}

/// Adds `scale ×` the `order`-th derivative spectrum of `coeffs` into a
/// length-`len` FFT buffer (Nyquist split evenly between `±n/2`).
fn accumulate_spectrum(buf: &mut [Complex64], coeffs: &[Complex64], order: i32, scale: Complex64) {
    let n = coeffs.len();
    let len = buf.len();
    for (k, &c) in coeffs.iter().enumerate() {
        let c = c * scale;
        if n.is_multiple_of(2) && k == n / 2 {
            let f = (n / 2) as f64;
            buf[n / 2] += 0.5 * c * derivative_factor(f, order);
            buf[len - n / 2] += 0.5 * c * derivative_factor(-f, order);
        } else if k < n.div_ceil(2) {
            buf[k] += c * derivative_factor(k as f64, order);
        } else {
            let f = k as f64 - n as f64;
            buf[len - (n - k)] += c * derivative_factor(f, order);
        }
    }
}

/// Samples of the `order`-th derivative (or zero-mean antiderivative for
/// `order == -1`) of the interpolant with coefficients `coeffs`, on `len`
/// equispaced points.
pub fn resample_spectrum(coeffs: &[Complex64], order: i32, len: usize) -> Vec<f64> {
    assert!(len >= coeffs.len(), "target grid must not be coarser than the spectrum");
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    accumulate_spectrum(&mut buf, coeffs, order, Complex64::new(1.0, 0.0));
    inverse_plan(len).process(&mut buf);
    buf.iter().map(|z| z.re).collect()
}

impl PeriodicTable {
    /// Builds a table holding derivative orders `0..=max_order` of the
    /// interpolant through `samples` (`n` points of dimension `dim`).
    pub fn new(samples: &[f64], dim: usize, max_order: usize, len: usize) -> Self {
        let coeffs = spectrum(samples, dim);
        Self::from_spectrum(&coeffs, 0, max_order, len)
    }

    /// Builds a table from per-component spectra; stored order `p` holds the
    /// derivative of order `p + shift` (so `shift = -1` tabulates the
    /// antiderivative first).
    pub fn from_spectrum(coeffs: &[Vec<Complex64>], shift: i32, max_order: usize, len: usize) -> Self {
        let dim = coeffs.len();
        let orders = max_order + 1;
        let mut data = vec![0.0; len * orders * dim];
        // Two real signals share one complex transform: the first in the real
        // part, the second in the imaginary part.
        let signals: Vec<(usize, usize)> = (0..dim).flat_map(|c| (0..orders).map(move |p| (c, p))).collect();
        let fft = inverse_plan(len);
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for pair in signals.chunks(2) {
            assert!(len >= coeffs[pair[0].0].len(), "target grid must not be coarser than the spectrum");
            buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            // Each signal is normalized to unit RMS so neither drowns the other.
            let mut rms = [1.0; 2];
            for (slot, &(c, p)) in pair.iter().enumerate() {
                let order = p as i32 + shift;
                let n = coeffs[c].len() as f64;
                let energy: f64 = coeffs[c]
                    .iter()
                    .enumerate()
                    .map(|(k, z)| {
                        let f = if (k as f64) < n / 2.0 { k as f64 } else { k as f64 - n };
                        (z * derivative_factor(f, order)).norm_sqr()
                    })
                    .sum();
                if energy > 0.0 {
                    rms[slot] = energy.sqrt();
                }
                let unit = if slot == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 1.0) };
                accumulate_spectrum(&mut buf, &coeffs[c], order, unit / rms[slot]);
            }
            fft.process(&mut buf);
            for (slot, &(c, p)) in pair.iter().enumerate() {
                for (i, z) in buf.iter().enumerate() {
                    data[(i * orders + p) * dim + c] = rms[slot] * if slot == 0 { z.re } else { z.im };
                }
            }
        }
        PeriodicTable { dim, orders, len, data }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_order(&self) -> usize {
        self.orders - 1
    }

    /// Stored value at grid index `i`, derivative order `p`, component `c`.
    #[inline]
    pub fn at(&self, i: usize, p: usize, c: usize) -> f64 {
        self.data[(i * self.orders + p) * self.dim + c]
    }

    /// Evaluates derivative order `p` at parameter `u` into `out`
    /// (requires `p + 2 <= max_order`).
    #[inline]
    pub fn eval(&self, u: f64, p: usize, out: &mut [f64]) {
        debug_assert!(p + 2 < self.orders);
        let x = u.rem_euclid(1.0) * self.len as f64;
        let mut i = x.floor() as usize;
        let mut t = x - i as f64;
        if i >= self.len {
            i = 0;
            t = 0.0;
        }
        let j = if i + 1 == self.len { 0 } else { i + 1 };
        let h = 1.0 / self.len as f64;
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h1 = (t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5) * h;
        let h2 = (0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5) * h * h;
        let h3 = (0.5 * t3 - t4 + 0.5 * t5) * h * h;
        let h4 = (-4.0 * t3 + 7.0 * t4 - 3.0 * t5) * h;
        let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        let d = self.dim;
        let bi = i * self.orders * d;
        let bj = j * self.orders * d;
        for (c, o) in out.iter_mut().enumerate().take(d) {
            let a0 = self.data[bi + p * d + c];
            let a1 = self.data[bi + (p + 1) * d + c];
            let a2 = self.data[bi + (p + 2) * d + c];
            let b0 = self.data[bj + p * d + c];
            let b1 = self.data[bj + (p + 1) * d + c];
            let b2 = self.data[bj + (p + 2) * d + c];
            *o = h0 * a0 + h1 * a1 + h2 * a2 + h3 * b2 + h4 * b1 + h5 * b0;
        }
    }
}
