//! Numerical checks of the `λ → 0` behaviour of `Γ(λ)⁻¹` in each threshold case, of
//! the derivative bounds in the regular case and of the positivity behind the
//! zero-eigenvalue expansion.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gamma_core::extended::{gamma_inverse_extended, zero_case_expansion, MIN_LAMBDA};
use crate::gamma_core::{build_gamma, invert_gamma, Configuration};
use crate::green_functions::{g_scale, SpectralParameter};
use crate::linalg::{spectral_norm_c, symmetrize, to_complex, CMatrix, RMatrix};
use crate::threshold_classifier::{CaseData, ThresholdClassification, ThresholdTag};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub predicted: f64,
    pub computed: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

/// Least-squares model `log err = c + p log λ + q log|log λ|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    pub power: f64,
    pub log_power: f64,
    pub fit_quality: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Name of the remainder scale the errors were compared against.
    pub scale: &'static str,
    /// Joint fit; `fit_quality` below is its coefficient of determination.
    pub fitted_rate: RateFit,
    /// Pure power fit `err ~ λ^p`.
    pub power_fit: RateFit,
    /// Pure logarithmic fit `err ~ |log λ|^q`.
    pub log_fit: RateFit,
    pub fit_quality: f64,
    /// `max err/scale` over the smaller-λ half divided by the same over the larger half.
    pub scaled_growth: f64,
    /// `scaled_growth ≤ 3` and the relative error decreases along the grid.
    pub consistent: bool,
    pub warnings: Vec<String>,
}

/// Largest admissible growth of `err/scale` between the two halves of a sweep.
pub const SCALE_GROWTH_LIMIT: f64 = 3.0;

/// Relative spread below which error data count as constant.
const FLAT_SPREAD: f64 = 1e-3;

/// Geometric grid from `hi` down to `lo` with `per_decade` points per decade.
pub fn geometric_grid(hi: f64, lo: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && per_decade > 0) {
        return Err(Error::Precondition(format!("bad grid [{lo:e}, {hi:e}] x {per_decade}")));
    }
    let steps = ((hi / lo).log10() * per_decade as f64).round() as usize;
    Ok((0..=steps)
        .map(|i| hi * (lo / hi).powf(i as f64 / steps.max(1) as f64))
        .collect())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 4 {
        return Err(Error::Precondition("sweep needs at least 4 grid points".into()));
    }
    if grid.windows(2).any(|w| !(w[1] < w[0])) || grid.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::Precondition("λ grid must be positive and strictly decreasing".into()));
    }
    Ok(())
}

fn ols(design: &DMatrix<f64>, y: &DVector<f64>) -> (DVector<f64>, f64) {
    let mean = y.mean();
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let coef = design
        .clone()
        .svd(true, true)
        .solve(y, 1e-12)
        .unwrap_or_else(|_| DVector::zeros(design.ncols()));
    let res = y - design * &coef;
    let r2 = if sst > 0.0 { (1.0 - res.norm_squared() / sst).clamp(0.0, 1.0) } else { 1.0 };
    (coef, r2)
}

/// Fit `log err` jointly and separately against `log λ` and `log|log λ|`.
pub fn fit_rates(lambdas: &[f64], errors: &[f64]) -> (RateFit, RateFit, RateFit) {
    let pts: Vec<(f64, f64)> = lambdas
        .iter()
        .zip(errors)
        .filter(|(_, e)| **e > 0.0 && e.is_finite())
        .map(|(l, e)| (*l, *e))
        .collect();
    let n = pts.len();
    let nan = RateFit { power: f64::NAN, log_power: f64::NAN, fit_quality: 0.0 };
    if n < 3 {
        return (nan, nan, nan);
    }
    let y = DVector::from_iterator(n, pts.iter().map(|p| p.1.ln()));
    let mean = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let spread = (pts.iter().map(|p| (p.1 - mean).powi(2)).sum::<f64>() / n as f64).sqrt() / mean;
    let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let llx: Vec<f64> = pts.iter().map(|p| p.0.ln().abs().ln()).collect();
    let joint = DMatrix::from_fn(n, 3, |i, j| [1.0, lx[i], llx[i]][j]);
    let pow = DMatrix::from_fn(n, 2, |i, j| [1.0, lx[i]][j]);
    let lg = DMatrix::from_fn(n, 2, |i, j| [1.0, llx[i]][j]);
    let flat = spread < FLAT_SPREAD;
    let q = |r2: f64| if flat { 1.0 } else { r2 };
    let (cj, rj) = ols(&joint, &y);
    let (cp, rp) = ols(&pow, &y);
    let (cl, rl) = ols(&lg, &y);
    (
        RateFit { power: cj[1], log_power: cj[2], fit_quality: q(rj) },
        RateFit { power: cp[1], log_power: 0.0, fit_quality: q(rp) },
        RateFit { power: 0.0, log_power: cl[1], fit_quality: q(rl) },
    )
}

/// Assemble a report; `scale(λ)` is the stated remainder order.
pub fn build_report(rows: Vec<SweepRow>, scale_name: &'static str, scale: impl Fn(f64) -> f64) -> SweepReport {
    let lambdas: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.abs_err).collect();
    let (joint, power_fit, log_fit) = fit_rates(&lambdas, &errs);
    let rho: Vec<f64> = rows.iter().map(|r| r.abs_err / scale(r.lambda)).collect();
    let half = rho.len() / 2;
    let big = rho[..half].iter().copied().fold(0.0, f64::max);
    let small = rho[half..].iter().copied().fold(0.0, f64::max);
    let scaled_growth = if big > 0.0 { small / big } else if small > 0.0 { f64::INFINITY } else { 1.0 };
    let rel_first = rows.first().map(|r| r.rel_err).unwrap_or(0.0);
    let rel_last = rows.last().map(|r| r.rel_err).unwrap_or(0.0);
    let consistent = scaled_growth <= SCALE_GROWTH_LIMIT && rel_last <= rel_first;
    let mut warnings = Vec::new();
    if joint.fit_quality < 0.9 {
        warnings.push(format!(
            "fit quality {:.3} below 0.9: grid may leave the asymptotic regime",
            joint.fit_quality
        ));
    }
    SweepReport {
        rows,
        scale: scale_name,
        fitted_rate: joint,
        power_fit,
        log_fit,
        fit_quality: joint.fit_quality,
        scaled_growth,
        consistent,
        warnings,
    }
}

/// Leading matrix of `Γ(λ)⁻¹` as `λ → 0` for the classified case.
///
/// Regular `[SD̃S]⁻¹`; s-wave `N g γ₀² ffᵗ`; p-wave `-N⁻¹g⁻¹λ⁻² Σ a_j f_j f_jᵗ`;
/// zero eigenvalue `-N⁻¹λ⁻² T₁[T₁𝒢̃₂T₁]⁻¹T₁`.
pub fn leading_term(
    classification: &ThresholdClassification,
    config: &Configuration,
    lambda: &SpectralParameter,
) -> Result<CMatrix> {
    let n = config.n();
    if classification.t_basis.nrows() != n {
        return Err(Error::Precondition(format!(
            "classification is for {} centres, configuration has {n}",
            classification.t_basis.nrows()
        )));
    }
    let g = g_scale(lambda);
    let nf = n as f64;
    let l2 = lambda.value() * lambda.value();
    Ok(match &classification.case {
        CaseData::Regular { inverse_block } => to_complex(inverse_block),
        CaseData::SWave { f, gamma0, .. } => to_complex(&(f * f.transpose())) * (g * nf * gamma0 * gamma0),
        CaseData::PWave { vectors, weights } => {
            let mut m = RMatrix::zeros(n, n);
            for (f, a) in vectors.iter().zip(weights) {
                m += f * f.transpose() * *a;
            }
            to_complex(&m) * (-1.0 / (nf * g * l2))
        }
        CaseData::ZeroEigenvalue { basis, t1_g2tilde_t1, .. } => {
            let q = RMatrix::from_columns(basis);
            let inv = t1_g2tilde_t1
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::Internal("T1 G2~ T1 not invertible".into()))?;
            to_complex(&symmetrize(&(&q * inv * q.transpose()))) * (-1.0 / (nf * l2))
        }
    })
}

/// Stated remainder order of `Γ(λ)⁻¹ - leading` for each case.
pub fn remainder_scale(tag: ThresholdTag, lambda: f64) -> f64 {
    let g = g_scale(&SpectralParameter::real(lambda).expect("λ > 0")).norm();
    match tag {
        ThresholdTag::Regular => 1.0 / g,
        ThresholdTag::SWave => 1.0,
        ThresholdTag::PWave => lambda.powi(-2),
        ThresholdTag::ZeroEigenvalue => lambda.powi(-2) / g,
    }
}

fn scale_name(tag: ThresholdTag) -> &'static str {
    match tag {
        ThresholdTag::Regular => "1/|g|",
        ThresholdTag::SWave => "1",
        ThresholdTag::PWave => "lambda^-2",
        ThresholdTag::ZeroEigenvalue => "lambda^-2/|g|",
    }
}

/// `‖Γ(λ)⁻¹ - leading(λ)‖₂` along a decreasing grid, with `Γ⁻¹` from the
/// double-double solver. The zero-eigenvalue case goes through the structured
/// solver, since a plain inversion loses the remainder below λ ≈ 1e-8.
pub fn expansion_sweep(
    classification: &ThresholdClassification,
    config: &Configuration,
    lambda_grid: &[f64],
) -> Result<SweepReport> {
    check_grid(lambda_grid)?;
    if lambda_grid.iter().any(|l| *l < MIN_LAMBDA) {
        return Err(Error::Domain(
            "sweeps below λ = 1e-12 are not supported (extended precision limit)".into(),
        ));
    }
    let tag = classification.tag();
    let mut rows = Vec::with_capacity(lambda_grid.len());
    if let CaseData::ZeroEigenvalue { basis, .. } = &classification.case {
        let t: Vec<DVector<f64>> = classification.t_basis.column_iter().map(|c| c.into_owned()).collect();
        for &lambda in lambda_grid {
            let s = zero_case_expansion(config, &t, basis, lambda)?;
            let rel_err = if s.predicted > 0.0 { s.abs_err / s.predicted } else { f64::INFINITY };
            rows.push(SweepRow { lambda, predicted: s.predicted, computed: s.computed, abs_err: s.abs_err, rel_err });
        }
        return Ok(build_report(rows, scale_name(tag), |l| remainder_scale(tag, l)));
    }
    for &lambda in lambda_grid {
        let l = SpectralParameter::real(lambda)?;
        let lead = leading_term(classification, config, &l)?;
        let inv = gamma_inverse_extended(config, lambda)?;
        let predicted = spectral_norm_c(&lead);
        let computed = spectral_norm_c(&inv);
        let abs_err = spectral_norm_c(&(&inv - &lead));
        let rel_err = if predicted > 0.0 { abs_err / predicted } else { f64::INFINITY };
        rows.push(SweepRow { lambda, predicted, computed, abs_err, rel_err });
    }
    Ok(build_report(rows, scale_name(tag), |l| remainder_scale(tag, l)))
}

/// Sampled sup of `λ^ℓ |∂^ℓ m_{jk}(λ)|`, `ℓ = 0..=ℓ_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeProbe {
    /// `constants[ℓ][(j, k)]` at the base step.
    pub constants: Vec<RMatrix>,
    /// Same with the step halved.
    pub constants_refined: Vec<RMatrix>,
    /// `max_{j,k} |c(h) - c(h/2)| / c(h/2)` per ℓ.
    pub refinement_change: Vec<f64>,
    /// Relative step `η` in `h = η·min(λ, 1/d_max)`.
    pub eta: f64,
}

/// Finite-difference sup probe for a matrix symbol `m(λ)`, `λ > 0`.
///
/// The step `h = η·min(λ, length)` keeps both `λ ± 2h > 0` and the oscillation
/// scale `length` resolved.
pub fn derivative_sup_probe(
    m: impl Fn(f64) -> Result<CMatrix>,
    grid: &[f64],
    l_max: usize,
    eta: f64,
    length: f64,
) -> Result<DerivativeProbe> {
    if l_max > 3 {
        return Err(Error::Precondition(format!("ℓ_max = {l_max} exceeds 3")));
    }
    if !(eta > 0.0 && eta < 0.25) {
        return Err(Error::Precondition(format!("relative step {eta} outside (0, 1/4)")));
    }
    let run = |eta: f64| -> Result<Vec<RMatrix>> {
        let mut sup: Vec<RMatrix> = Vec::new();
        for &lam in grid {
            let h = eta * lam.min(length);
            let f: Vec<CMatrix> = (-2..=2).map(|s| m(lam + s as f64 * h)).collect::<Result<_>>()?;
            let n = f[2].nrows();
            if sup.is_empty() {
                sup = vec![RMatrix::zeros(n, n); l_max + 1];
            }
            let d: [CMatrix; 4] = [
                f[2].clone(),
                (&f[3] - &f[1]) / Complex64::new(2.0 * h, 0.0),
                (&f[3] - &f[2] * Complex64::new(2.0, 0.0) + &f[1]) / Complex64::new(h * h, 0.0),
                (&f[4] - &f[3] * Complex64::new(2.0, 0.0) + &f[1] * Complex64::new(2.0, 0.0) - &f[0])
                    / Complex64::new(2.0 * h * h * h, 0.0),
            ];
            for (l, s) in sup.iter_mut().enumerate() {
                let w = lam.powi(l as i32);
                for j in 0..n {
                    for k in 0..n {
                        s[(j, k)] = s[(j, k)].max(w * d[l][(j, k)].norm());
                    }
                }
            }
        }
        Ok(sup)
    };
    let constants = run(eta)?;
    let constants_refined = run(eta / 2.0)?;
    let refinement_change = constants
        .iter()
        .zip(&constants_refined)
        .map(|(a, b)| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| if *y > 0.0 { (x - y).abs() / y } else { 0.0 })
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(DerivativeProbe { constants, constants_refined, refinement_change, eta })
}

/// Derivative bounds of `Γ(λ)⁻¹` in the regular case.
pub fn derivative_bounds_probe(
    classification: &ThresholdClassification,
    config: &Configuration,
    lambda_grid: &[f64],
    l_max: usize,
) -> Result<DerivativeProbe> {
    if classification.tag() != ThresholdTag::Regular {
        return Err(Error::WrongCase(format!(
            "derivative bounds hold in the regular case, configuration is {}",
            classification.tag()
        )));
    }
    let length = 1.0 / config.max_distance().max(1.0);
    derivative_sup_probe(
        |l| Ok(invert_gamma(&build_gamma(config, &SpectralParameter::real(l)?)?)?.inverse),
        lambda_grid,
        l_max,
        1e-2,
        length,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct PositivityReport {
    /// Eigenvalues of `T₁MT₁` on `range(T₁)`, ascending.
    pub eigenvalues: Vec<f64>,
    pub definite: bool,
    /// `F(0)` for each sampled `f`.
    pub f_zero: Vec<f64>,
    /// `max F'(λ)` over samples and `λ ∈ {0.1, 1, 10}`.
    pub max_derivative: f64,
    /// `max |F(λ_max)| / F(0)` towards infinity.
    pub tail_ratio: f64,
    /// `max |∫₀^∞ F' + F(0)| / F(0)`.
    pub integral_mismatch: f64,
    pub passed: bool,
}

/// Sample points of `F'`.
pub const DERIVATIVE_SAMPLES: [f64; 3] = [0.1, 1.0, 10.0];

/// `M = (δ̂_{jk} |y_j - y_k|² log|y_j - y_k|²)` restricted to `range(T₁)`, and
/// `F(λ) = Σ_{j≠k} f_j f_k d²_{jk} log(d²_{jk} + λ)`.
pub fn positivity_check(centres: &[[f64; 2]], t1_basis: &RMatrix) -> Result<PositivityReport> {
    let n = centres.len();
    if t1_basis.ncols() == 0 {
        return Err(Error::Precondition("T1 = 0: positivity statement is vacuous".into()));
    }
    if t1_basis.nrows() != n {
        return Err(Error::Precondition("T1 basis and centres differ in size".into()));
    }
    let d2 = |j: usize, k: usize| (centres[j][0] - centres[k][0]).powi(2) + (centres[j][1] - centres[k][1]).powi(2);
    let m = RMatrix::from_fn(n, n, |j, k| if j == k { 0.0 } else { d2(j, k) * d2(j, k).ln() });
    let (eigenvalues, _) = crate::linalg::restricted_eigen(&m, t1_basis);
    let scale = crate::linalg::spectral_norm(&m).max(1e-300);
    let definite = eigenvalues.iter().all(|v| *v > 1e-12 * scale);

    let big_f = |f: &DVector<f64>, lam: f64| -> f64 {
        let mut s = 0.0;
        for j in 0..n {
            for k in (0..n).filter(|&k| k != j) {
                s += f[j] * f[k] * d2(j, k) * (d2(j, k) + lam).ln();
            }
        }
        s
    };
    let big_fp = |f: &DVector<f64>, lam: f64| -> f64 {
        let mut s = 0.0;
        for j in 0..n {
            for k in (0..n).filter(|&k| k != j) {
                s += f[j] * f[k] * d2(j, k) / (d2(j, k) + lam);
            }
        }
        s
    };
    let mut samples: Vec<DVector<f64>> = t1_basis.column_iter().map(|c| c.into_owned()).collect();
    if t1_basis.ncols() > 1 {
        let c = DVector::from_fn(t1_basis.ncols(), |i, _| 1.0 + 0.37 * i as f64);
        samples.push(t1_basis * c.normalize());
    }
    let (mut f_zero, mut max_derivative, mut tail_ratio, mut integral_mismatch) =
        (Vec::new(), f64::NEG_INFINITY, 0.0f64, 0.0f64);
    for f in &samples {
        let f0 = big_f(f, 0.0);
        f_zero.push(f0);
        for lam in DERIVATIVE_SAMPLES {
            max_derivative = max_derivative.max(big_fp(f, lam));
        }
        tail_ratio = tail_ratio.max(big_f(f, 1e12).abs() / f0.abs());
        // ∫₀^∞ F'(λ) dλ with λ = e^t, trapezoid on t ∈ [-40, 40]
        let (a, b, steps) = (-40.0f64, 40.0f64, 8000);
        let h = (b - a) / steps as f64;
        let mut integral = 0.0;
        for i in 0..=steps {
            let t = a + h * i as f64;
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            integral += w * h * big_fp(f, t.exp()) * t.exp();
        }
        integral_mismatch = integral_mismatch.max((integral + f0).abs() / f0.abs());
    }
    let passed = definite && f_zero.iter().all(|v| *v > 0.0) && max_derivative < 0.0;
    Ok(PositivityReport { eigenvalues, definite, f_zero, max_derivative, tail_ratio, integral_mismatch, passed })
}
