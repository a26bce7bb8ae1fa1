//! Free Green function of `-Δ - z²` in the plane and the pieces of its low-energy
//! splitting `𝒢_λ(x) = g(λ) + G₀(x) + R₀(λ, x)`.
//!
//! Small arguments use the logarithmic power series, large ones the Laguerre
//! quadrature of the integral representation
//!
//! ```text
//! 𝒢_z(r) = e^{izr} / (2^{3/2} π) ∫₀^∞ e^{-t} t^{-1/2} (t/2 - izr)^{-1/2} dt.
//! ```

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Euler–Mascheroni constant, 20 significant digits.
#[allow(clippy::excessive_precision)]
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

/// |z| at which the Hankel evaluation switches from series to quadrature.
pub const REGIME_SWITCH: f64 = 4.0;

const TWO_PI: f64 = 2.0 * PI;
const LAGUERRE_NODES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Real,
    Imaginary,
    UpperHalfPlane,
}

/// A spectral parameter in the closed upper half plane minus the origin.
///
/// The axis tag selects exact branch arithmetic: on `iκ` the logarithm is
/// `log(κ/2) + iπ/2` with no rounding in the imaginary part, and on the
/// negative real axis the argument is exactly `π`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralParameter {
    value: Complex64,
    axis: Axis,
}

impl SpectralParameter {
    pub fn new(z: Complex64) -> Result<Self> {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::Domain(format!("non-finite spectral parameter {z}")));
        }
        if z.im < 0.0 {
            return Err(Error::Domain(format!(
                "spectral parameter {z} lies in the lower half plane"
            )));
        }
        if z.re == 0.0 && z.im == 0.0 {
            return Err(Error::Singularity("spectral parameter at the origin".into()));
        }
        let axis = if z.im == 0.0 {
            Axis::Real
        } else if z.re == 0.0 {
            Axis::Imaginary
        } else {
            Axis::UpperHalfPlane
        };
        Ok(Self { value: z, axis })
    }

    /// Real λ ≠ 0; negative values sit on the branch `arg = π`.
    pub fn real(lambda: f64) -> Result<Self> {
        Self::new(Complex64::new(lambda, 0.0))
    }

    /// `iκ` with `κ > 0`.
    pub fn imaginary(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::Domain(format!("imaginary-axis parameter needs κ > 0, got {kappa}")));
        }
        Self::new(Complex64::new(0.0, kappa))
    }

    pub fn value(&self) -> Complex64 {
        self.value
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn norm(&self) -> f64 {
        self.value.norm()
    }

    /// `λ·r` for a length `r > 0`, keeping the axis tag.
    pub fn scaled(&self, r: f64) -> Self {
        Self { value: self.value * r, axis: self.axis }
    }

    /// Principal `log(λ/2)`.
    pub fn ln_half(&self) -> Complex64 {
        match self.axis {
            Axis::Imaginary => Complex64::new((self.value.im / 2.0).ln(), PI / 2.0),
            Axis::Real if self.value.re > 0.0 => Complex64::new((self.value.re / 2.0).ln(), 0.0),
            Axis::Real => Complex64::new((-self.value.re / 2.0).ln(), PI),
            Axis::UpperHalfPlane => (self.value / 2.0).ln(),
        }
    }
}

/// `g(λ) = -(1/2π) log(λ/2) + i/4 - γ/2π`. Real on the imaginary axis.
pub fn g_scale(lambda: &SpectralParameter) -> Complex64 {
    if lambda.axis == Axis::Imaginary {
        let k = lambda.value.im;
        return Complex64::new(-((k / 2.0).ln() + EULER_GAMMA) / TWO_PI, 0.0);
    }
    -lambda.ln_half() / TWO_PI + Complex64::new(-EULER_GAMMA / TWO_PI, 0.25)
}

/// Bessel function `J₀` of complex argument.
pub fn bessel_j0(z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain(format!("bessel_j0 of non-finite argument {z}")));
    }
    let a = z.norm();
    Ok(if a <= 8.0 {
        j0_series(z)
    } else if a <= 25.0 {
        j0_trapezoid(z)
    } else {
        j0_asymptotic(z)
    })
}

/// Real-argument `J₀`, same regimes as [`bessel_j0`].
pub fn bessel_j0_real(x: f64) -> f64 {
    let a = x.abs();
    if a <= 8.0 {
        let w = -0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..80 {
            term *= w / (k * k) as f64;
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        sum
    } else if a <= 25.0 {
        let m = (1.5 * a) as usize + 40;
        let mut s = 0.0;
        for j in 0..m {
            let th = PI * (j as f64 + 0.5) / m as f64;
            s += (a * th.sin()).cos();
        }
        s / m as f64
    } else {
        let (p, q) = hankel_pq_real(a);
        let ph = a - PI / 4.0;
        (2.0 / (PI * a)).sqrt() * (p * ph.cos() - q * ph.sin())
    }
}

fn j0_series(z: Complex64) -> Complex64 {
    let w = -0.25 * z * z;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 1..80 {
        term = term * w / (k * k) as f64;
        sum += term;
        if term.norm() < 1e-18 * sum.norm().max(1e-300) {
            break;
        }
    }
    sum
}

// (1/2π)∫ e^{iz sinθ} dθ; the midpoint rule is spectrally accurate on the circle.
fn j0_trapezoid(z: Complex64) -> Complex64 {
    let m = (1.5 * z.norm()) as usize + 40;
    let mut s = Complex64::new(0.0, 0.0);
    for j in 0..m {
        let th = TWO_PI * (j as f64 + 0.5) / m as f64;
        s += (Complex64::i() * z * th.sin()).exp();
    }
    s / m as f64
}

fn j0_asymptotic(z: Complex64) -> Complex64 {
    // J₀ is even; keep the argument in the right half-plane
    let z = if z.re < 0.0 { -z } else { z };
    let inv8 = 1.0 / (8.0 * z);
    let mut p = Complex64::new(1.0, 0.0);
    let mut q = Complex64::new(0.0, 0.0);
    let mut a = Complex64::new(1.0, 0.0);
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let c = ((2 * k - 1) * (2 * k - 1)) as f64 / k as f64;
        a = a * inv8 * c;
        let n = a.norm();
        if n > last || n < 1e-18 {
            break;
        }
        last = n;
        match k % 4 {
            1 => q -= a,
            2 => p -= a,
            3 => q += a,
            _ => p += a,
        }
    }
    let ph = z - PI / 4.0;
    (2.0 / (PI * z)).sqrt() * (p * ph.cos() - q * ph.sin())
}

fn hankel_pq_real(x: f64) -> (f64, f64) {
    let inv8 = 1.0 / (8.0 * x);
    let (mut p, mut q, mut a) = (1.0, 0.0, 1.0);
    let mut last = f64::INFINITY;
    for k in 1..60 {
        a *= inv8 * ((2 * k - 1) * (2 * k - 1)) as f64 / k as f64;
        if a > last || a < 1e-18 {
            break;
        }
        last = a;
        match k % 4 {
            1 => q -= a,
            2 => p -= a,
            3 => q += a,
            _ => p += a,
        }
    }
    (p, q)
}

/// Nodes and weights of the 64-point rule for `∫₀^∞ e^{-t} t^{-1/2} f(t) dt`.
fn laguerre_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = LAGUERRE_NODES;
        let alpha = -0.5;
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            jac[(k, k)] = 2.0 * k as f64 + alpha + 1.0;
            if k > 0 {
                let b = (k as f64 * (k as f64 + alpha)).sqrt();
                jac[(k, k - 1)] = b;
                jac[(k - 1, k)] = b;
            }
        }
        let eig = SymmetricEigen::new(jac);
        let mu0 = PI.sqrt();
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|k| (eig.eigenvalues[k], mu0 * eig.eigenvectors[(0, k)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.into_iter().unzip()
    })
}

// ∫ e^{-t} t^{-1/2} (t/2 - iz)^{-1/2} dt / (2^{3/2} π), i.e. e^{-iz}·(i/4)H₀(z).
fn hankel_envelope_quadrature(z: Complex64) -> Complex64 {
    let (t, w) = laguerre_rule();
    let iz = Complex64::i() * z;
    let mut s = Complex64::new(0.0, 0.0);
    for (tk, wk) in t.iter().zip(w) {
        s += (Complex64::new(0.5 * tk, 0.0) - iz).sqrt().inv() * *wk;
    }
    s / (2.0f64.powf(1.5) * PI)
}

// Series sums shared by 𝒢 and R₀: returns (J₀ - 1, Σ_{k≥1} H_k (-z²/4)^k/(k!)²).
fn log_series(z: Complex64) -> (Complex64, Complex64) {
    let w = -0.25 * z * z;
    let mut p = Complex64::new(1.0, 0.0);
    let mut harmonic = 0.0;
    let mut j_minus_one = Complex64::new(0.0, 0.0);
    let mut h_sum = Complex64::new(0.0, 0.0);
    for k in 1..60 {
        let kf = k as f64;
        p = p * w / (kf * kf);
        harmonic += 1.0 / kf;
        j_minus_one += p;
        h_sum += p * harmonic;
        if p.norm() * (1.0 + harmonic) <= 1e-18 * j_minus_one.norm().min(h_sum.norm()) {
            break;
        }
    }
    (j_minus_one, h_sum)
}

/// `(i/4) H₀⁽¹⁾(z)`.
pub fn hankel1_0_scaled(z: &SpectralParameter) -> Result<Complex64> {
    let v = z.value();
    if v.norm() <= REGIME_SWITCH {
        let (jm1, hs) = log_series(v);
        let g = g_scale(z);
        Ok(g * (jm1 + 1.0) + hs / TWO_PI)
    } else {
        Ok((Complex64::i() * v).exp() * hankel_envelope_quadrature(v))
    }
}

/// Both regimes of [`hankel1_0_scaled`] evaluated at the same point, for stitching checks.
pub fn hankel_regimes(z: &SpectralParameter) -> (Complex64, Complex64) {
    let v = z.value();
    let (jm1, hs) = log_series(v);
    let series = g_scale(z) * (jm1 + 1.0) + hs / TWO_PI;
    let quad = (Complex64::i() * v).exp() * hankel_envelope_quadrature(v);
    (series, quad)
}

fn radius(x: [f64; 2]) -> f64 {
    x[0].hypot(x[1])
}

/// `𝒢_λ(x)`.
pub fn green_free(lambda: &SpectralParameter, x: [f64; 2]) -> Result<Complex64> {
    green_free_r(lambda, radius(x))
}

/// `𝒢_λ` at distance `r` from the source.
pub fn green_free_r(lambda: &SpectralParameter, r: f64) -> Result<Complex64> {
    if !(r > 0.0) {
        return Err(Error::Singularity(format!("free Green function at distance {r}")));
    }
    hankel1_0_scaled(&lambda.scaled(r))
}

/// `G₀(x) = -(1/2π) log|x|`.
pub fn green_log(x: [f64; 2]) -> Result<f64> {
    green_log_r(radius(x))
}

pub fn green_log_r(r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Singularity(format!("log potential at distance {r}")));
    }
    Ok(-r.ln() / TWO_PI)
}

/// `Σ_j c_j G₀(x - y_j)`.
///
/// When `Σc_j = 0` and `|x|` is large the `log|x|` parts cancel analytically and
/// the sum is formed from `ln(1 + (|y|² - 2x·y)/|x|²)`, which keeps relative
/// accuracy in the decaying tail.
pub fn log_potential(coefficients: &[f64], centres: &[[f64; 2]], x: [f64; 2]) -> Result<f64> {
    let total: f64 = coefficients.iter().sum();
    let cmax = coefficients.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let ymax = centres.iter().fold(0.0f64, |m, y| m.max(radius(*y)));
    let r2 = x[0] * x[0] + x[1] * x[1];
    let balanced = total.abs() <= 1e-14 * cmax * coefficients.len() as f64;
    if balanced && r2.sqrt() > 4.0 * ymax.max(1e-300) {
        let mut s = 0.0;
        for (c, y) in coefficients.iter().zip(centres) {
            let t = (y[0] * y[0] + y[1] * y[1] - 2.0 * (x[0] * y[0] + x[1] * y[1])) / r2;
            s += c * t.ln_1p();
        }
        // residual Σc_j times the common log|x|
        return Ok(-(s + total * r2.ln()) / (2.0 * TWO_PI));
    }
    let mut s = 0.0;
    for (c, y) in coefficients.iter().zip(centres) {
        s += c * green_log([x[0] - y[0], x[1] - y[1]])?;
    }
    Ok(s)
}

/// `R₀(λ, r) = 𝒢_λ(r) - g(λ) - G₀(r) = 𝒢_λ(r) - g(λr)`.
///
/// On the series side this is summed directly as `g(λr)(J₀ - 1) + Σ/2π`, so small
/// values keep full relative accuracy.
pub fn green_remainder(lambda: &SpectralParameter, r: f64) -> Result<Complex64> {
    if !(r > 0.0) {
        return Err(Error::Singularity(format!("remainder at distance {r}")));
    }
    let z = lambda.scaled(r);
    if z.norm() <= REGIME_SWITCH {
        let (jm1, hs) = log_series(z.value());
        Ok(g_scale(&z) * jm1 + hs / TWO_PI)
    } else {
        Ok(hankel1_0_scaled(&z)? - g_scale(&z))
    }
}

/// Remainder evaluation with the small-argument bound `|R₀| ≤ C_δ (|λ| r)^δ` checked.
#[derive(Clone, Copy, Debug)]
pub struct RemainderValue {
    pub value: Complex64,
    pub delta: f64,
    pub c_delta: f64,
    pub within_bound: bool,
}

/// Empirical `C_δ = sup |R₀(λ, 1)| / λ^δ` over a real λ grid in `[1e-8, REGIME_SWITCH]`.
pub fn calibrate_remainder_constant(delta: f64) -> f64 {
    let mut c: f64 = 0.0;
    let n = 400;
    for i in 0..=n {
        let t = -8.0 + (REGIME_SWITCH.log10() + 8.0) * i as f64 / n as f64;
        let lam = 10f64.powf(t);
        let l = SpectralParameter::real(lam).expect("positive");
        let r0 = green_remainder(&l, 1.0).expect("r > 0").norm();
        c = c.max(r0 / lam.powf(delta));
    }
    c
}

pub fn green_remainder_checked(
    lambda: &SpectralParameter,
    r: f64,
    delta: f64,
    c_delta: f64,
) -> Result<RemainderValue> {
    let value = green_remainder(lambda, r)?;
    let z = lambda.norm() * r;
    let within_bound = z > REGIME_SWITCH || value.norm() <= c_delta * z.powf(delta) * (1.0 + 1e-12);
    Ok(RemainderValue { value, delta, c_delta, within_bound })
}

/// Symbol `ω(λ) = e^{-iλr} 𝒢_λ(r)` for real `λ > 0`.
pub fn hankel_envelope(lambda: f64, r: f64) -> Result<Complex64> {
    let z = lambda * r;
    if !(z > 0.0) {
        return Err(Error::Singularity(format!("envelope at λr = {z}")));
    }
    if z > REGIME_SWITCH {
        Ok(hankel_envelope_quadrature(Complex64::new(z, 0.0)))
    } else {
        let l = SpectralParameter::real(lambda)?;
        Ok(green_free_r(&l, r)? * Complex64::from_polar(1.0, -z))
    }
}
