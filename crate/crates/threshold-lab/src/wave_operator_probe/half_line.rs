//! The projection `P = ℱℛℱ*` onto `e^{-ixt}`, `t > 0`, for profiles supported on `s ≥ 0`.
//!
//! `P` has the kernel `(-i/2π)/(x - y - i0)`. Sampled profiles jump at `s = 0`, so
//! a reference `Σ_{k≤5} c_k s^k e^{-s}` is removed first: `c₀..c₃` match the Taylor
//! coefficients at 0, `c₄, c₅` cancel the mass and first moment of the remainder so
//! that the periodic images of the FFT see a fast-decaying tail. The reference is
//! projected in closed form.

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::quadrature::reference_projections;
use crate::error::{Error, Result};

const REF_TERMS: usize = 6;

/// `P N` as a function on `s > 0`.
#[derive(Clone, Debug)]
pub struct HalfLineProfile {
    h: f64,
    smooth: Vec<Complex64>,
    coeffs: [Complex64; REF_TERMS],
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `values[i] = N(i h)`; `taylor` are the coefficients of `N` at 0 up to `s³`;
/// `extent` is the largest `s` at which `P N` will be evaluated.
pub fn project_half_line(
    values: &[Complex64],
    h: f64,
    taylor: [Complex64; 4],
    extent: f64,
) -> Result<HalfLineProfile> {
    if !(h > 0.0) || values.len() < 8 {
        return Err(Error::Precondition("half-line grid needs h > 0 and 8 samples".into()));
    }
    let zero = Complex64::new(0.0, 0.0);
    // Taylor of N(s) e^{s}
    let mut coeffs = [zero; REF_TERMS];
    for k in 0..4 {
        for j in 0..=k {
            coeffs[k] += taylor[j] / factorial(k - j);
        }
    }
    let trap = |f: &dyn Fn(usize, f64) -> Complex64| -> Complex64 {
        let n = values.len();
        let mut s = zero;
        for i in 0..n {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            s += f(i, i as f64 * h) * w;
        }
        s * h
    };
    let mu0 = trap(&|i, _| values[i]);
    let mu1 = trap(&|i, s| values[i] * s);
    let r0 = mu0 - (0..4).map(|k| coeffs[k] * factorial(k)).sum::<Complex64>();
    let r1 = mu1 - (0..4).map(|k| coeffs[k] * factorial(k + 1)).sum::<Complex64>();
    // [4! 5!; 5! 6!] (c4, c5) = (r0, r1)
    let (a, b, d) = (24.0, 120.0, 720.0);
    let det = a * d - b * b;
    coeffs[4] = (r0 * d - r1 * b) / det;
    coeffs[5] = (r1 * a - r0 * b) / det;

    let n_eval = ((extent / h).ceil() as usize + 4).max(values.len());
    let m = (2 * n_eval).next_power_of_two();
    let mut buf = vec![zero; m];
    for (i, v) in values.iter().enumerate() {
        let s = i as f64 * h;
        let poly: Complex64 = (0..REF_TERMS).rev().fold(zero, |acc, k| acc * s + coeffs[k]);
        buf[i] = *v - poly * (-s).exp();
    }
    for (i, b) in buf.iter_mut().enumerate().take(n_eval).skip(values.len()) {
        let s = i as f64 * h;
        let poly: Complex64 = (0..REF_TERMS).rev().fold(zero, |acc, k| acc * s + coeffs[k]);
        *b = -poly * (-s).exp();
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(m).process(&mut buf);
    // bins k > m/2 carry e^{-ixt}, t > 0 once inverted
    buf[0] *= 0.5;
    buf[m / 2] *= 0.5;
    for b in buf.iter_mut().take(m / 2).skip(1) {
        *b = zero;
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    let scale = 1.0 / m as f64;
    buf.truncate(n_eval);
    for b in buf.iter_mut() {
        *b *= scale;
    }
    Ok(HalfLineProfile { h, smooth: buf, coeffs })
}

impl HalfLineProfile {
    /// `(P N)(s)` for `0 < s ≤ extent`; the value at `s = 0` is finite only when `N(0) = 0`.
    pub fn eval(&self, s: f64) -> Result<Complex64> {
        let n = self.smooth.len();
        if !(s >= 0.0) || s > (n - 2) as f64 * self.h {
            return Err(Error::Domain(format!("s = {s} outside the projected range")));
        }
        let t = s / self.h;
        let i0 = (t.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let mut smooth = Complex64::new(0.0, 0.0);
        for a in 0..4 {
            let mut w = 1.0;
            for b in 0..4 {
                if a != b {
                    w *= (t - (i0 + b) as f64) / (a as f64 - b as f64);
                }
            }
            smooth += self.smooth[i0 + a] * w;
        }
        let reference: Complex64 = if s == 0.0 {
            if self.coeffs[0].norm() > 0.0 {
                return Err(Error::Singularity("P N diverges logarithmically at s = 0".into()));
            }
            // s → 0 limit with c₀ = 0: c_k P[s^k e^{-s}](0) = c_k (i/2π)(k-1)!
            let c = Complex64::new(0.0, 1.0 / (2.0 * std::f64::consts::PI));
            (1..REF_TERMS).map(|k| self.coeffs[k] * c * factorial(k - 1)).sum()
        } else {
            let p = reference_projections::<REF_TERMS>(s);
            (0..REF_TERMS).map(|k| self.coeffs[k] * p[k]).sum()
        };
        Ok(smooth + reference)
    }

    pub fn step(&self) -> f64 {
        self.h
    }
}
