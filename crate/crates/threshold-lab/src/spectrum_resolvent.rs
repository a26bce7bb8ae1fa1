//! Negative eigenvalues `-κ²` from the zeros of `Γ(iκ)` and the Krein resolvent kernel.

use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::asymptotics_validator::{build_report, SweepReport, SweepRow};
use crate::error::{Error, Result};
use crate::gamma_core::{build_gamma, build_structure, gamma_entries, invert_gamma, Configuration};
use crate::green_functions::{g_scale, green_free, green_log, SpectralParameter};
use crate::linalg::RMatrix;
use crate::threshold_classifier::{classify, CaseData};

/// Default grid: 64 points per decade over `[1e-6, 1e6]`.
pub const DEFAULT_KAPPA_RANGE: [f64; 2] = [1e-6, 1e6];
pub const DEFAULT_POINTS_PER_DECADE: usize = 64;

/// Relative tolerance for the kernel dimension at a refined root.
pub const MULTIPLICITY_TOL: f64 = 1e-8;

/// Relative width at which bisection stops.
const ROOT_TOL: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq)]
pub struct BoundState {
    pub kappa: f64,
    /// Orthonormal real basis of `ker Γ(iκ)`.
    pub vectors: Vec<DVector<f64>>,
    pub multiplicity: usize,
    /// `‖Γ(iκ)c‖ / (‖Γ(iκ)‖ + ‖κ∂_κΓ(iκ)‖)`, worst over the basis.
    pub residual: f64,
}

impl BoundState {
    pub fn energy(&self) -> f64 {
        -self.kappa * self.kappa
    }

    /// `u(x) = Σ c_j 𝒢_{iκ}(x - y_j)` for the first kernel vector.
    pub fn eigenfunction(&self, config: &Configuration, x: [f64; 2]) -> Result<f64> {
        let l = SpectralParameter::imaginary(self.kappa)?;
        let c = &self.vectors[0];
        let mut s = 0.0;
        for (j, y) in config.centres().iter().enumerate() {
            s += c[j] * green_free(&l, [x[0] - y[0], x[1] - y[1]])?.re;
        }
        Ok(s)
    }
}

/// Real part of `Γ(iκ)`; the imaginary part vanishes on the axis by construction.
fn gamma_on_axis(config: &Configuration, kappa: f64) -> Result<RMatrix> {
    let l = SpectralParameter::imaginary(kappa)?;
    let m = gamma_entries(config, &l)?;
    let re = m.map(|z| z.re);
    let im = m.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let scale = re.amax().max(1e-300);
    if im > 1e-12 * scale {
        return Err(Error::Internal(format!("Γ(iκ) has imaginary residue {im:e} at κ = {kappa}")));
    }
    Ok(re)
}

/// `det Γ(iκ)`, real.
pub fn det_gamma_on_axis(config: &Configuration, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!("κ = {kappa} must be positive")));
    }
    Ok(gamma_on_axis(config, kappa)?.determinant())
}

fn sorted_eigenvalues(m: RMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Bound states with `κ` in the given range, default grid density.
pub fn negative_eigenvalues(config: &Configuration, kappa_range: [f64; 2]) -> Result<Vec<BoundState>> {
    negative_eigenvalues_with_density(config, kappa_range, DEFAULT_POINTS_PER_DECADE)
}

/// `Γ(iκ)` is real symmetric and strictly increasing in `κ`, so each sorted
/// eigenvalue curve crosses zero at most once. Crossings are bracketed by changes
/// of inertia on a geometric grid and refined by bisection of that curve.
pub fn negative_eigenvalues_with_density(
    config: &Configuration,
    kappa_range: [f64; 2],
    points_per_decade: usize,
) -> Result<Vec<BoundState>> {
    let [lo, hi] = kappa_range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::Precondition(format!("κ range [{lo:e}, {hi:e}] must satisfy 0 < min < max")));
    }
    if points_per_decade == 0 {
        return Err(Error::Precondition("grid density must be positive".into()));
    }
    let n = config.n();
    let steps = (((hi / lo).log10() * points_per_decade as f64).ceil() as usize).max(1);
    let grid: Vec<f64> = (0..=steps).map(|i| lo * (hi / lo).powf(i as f64 / steps as f64)).collect();
    let mut prev = sorted_eigenvalues(gamma_on_axis(config, grid[0])?);
    let mut roots: Vec<f64> = Vec::new();
    for w in grid.windows(2) {
        let next = sorted_eigenvalues(gamma_on_axis(config, w[1])?);
        for i in 0..n {
            if prev[i] < 0.0 && next[i] >= 0.0 {
                roots.push(bisect_curve(config, i, w[0], w[1])?);
            }
        }
        prev = next;
    }
    roots.sort_by(f64::total_cmp);
    // merge crossings that coincide within refinement noise
    let mut merged: Vec<(f64, usize)> = Vec::new();
    for r in roots {
        match merged.last_mut() {
            Some((k, c)) if (r - *k).abs() <= 1e-10 * r => *c += 1,
            _ => merged.push((r, 1)),
        }
    }
    let mut out = Vec::new();
    let mut total = 0;
    for (kappa, crossings) in merged {
        let m = gamma_on_axis(config, kappa)?;
        let norm = root_scale(config, kappa, &m)?;
        let eig = SymmetricEigen::new(m.clone());
        let mut vectors: Vec<DVector<f64>> = (0..n)
            .filter(|&i| eig.eigenvalues[i].abs() < MULTIPLICITY_TOL * norm)
            .map(|i| crate::linalg::normalize_sign(&eig.eigenvectors.column(i).into_owned()))
            .collect();
        if vectors.len() < crossings {
            // fall back to the eigenvectors closest to zero
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| eig.eigenvalues[a].abs().total_cmp(&eig.eigenvalues[b].abs()));
            vectors = idx[..crossings]
                .iter()
                .map(|&i| crate::linalg::normalize_sign(&eig.eigenvectors.column(i).into_owned()))
                .collect();
        }
        if vectors.len() > crossings {
            log::warn!("κ = {kappa}: kernel dimension {} exceeds {crossings} crossings", vectors.len());
        }
        let residual = vectors.iter().map(|c| (&m * c).norm() / norm).fold(0.0, f64::max);
        total += vectors.len();
        let multiplicity = vectors.len();
        out.push(BoundState { kappa, vectors, multiplicity, residual });
    }
    if total > n {
        return Err(Error::Internal(format!("{total} eigenvalues for N = {n}")));
    }
    Ok(out)
}

/// `‖Γ(iκ)‖ + ‖κ∂_κΓ(iκ)‖`. The first term alone vanishes at an N = 1 root.
fn root_scale(config: &Configuration, kappa: f64, m: &RMatrix) -> Result<f64> {
    let h: f64 = 1e-4;
    let d = (gamma_on_axis(config, kappa * h.exp())? - gamma_on_axis(config, kappa * (-h).exp())?) / (2.0 * h);
    Ok(crate::linalg::spectral_norm(m) + crate::linalg::spectral_norm(&d))
}

fn bisect_curve(config: &Configuration, i: usize, mut a: f64, mut b: f64) -> Result<f64> {
    for _ in 0..200 {
        if b - a <= ROOT_TOL * b {
            break;
        }
        let m = (a * b).sqrt();
        let v = sorted_eigenvalues(gamma_on_axis(config, m)?)[i];
        if v < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok((a * b).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolventSample {
    pub z: SpectralParameter,
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub value: Complex64,
    pub free: Complex64,
    pub correction: Complex64,
}

/// `𝒢_z(x-y) + Σ [Γ(z)⁻¹]_{jk} 𝒢_z(x-y_j) 𝒢_z(y-y_k)`.
pub fn resolvent_kernel(
    config: &Configuration,
    z: &SpectralParameter,
    x: [f64; 2],
    y: [f64; 2],
) -> Result<ResolventSample> {
    if x == y {
        return Err(Error::Singularity("resolvent kernel on the diagonal x = y".into()));
    }
    let gamma = build_gamma(config, z)?;
    let inv = invert_gamma(&gamma).map_err(|e| match e {
        Error::NearSingular { sigma_min, .. } => Error::NearSingular {
            what: format!("Γ(z) at z = {} (z² is close to an eigenvalue)", z.value()),
            sigma_min,
        },
        other => other,
    })?;
    let hat = |p: [f64; 2]| -> Result<DVector<Complex64>> {
        let v: Vec<Complex64> = config
            .centres()
            .iter()
            .map(|c| green_free(z, [p[0] - c[0], p[1] - c[1]]))
            .collect::<Result<_>>()?;
        Ok(DVector::from_vec(v))
    };
    let (gx, gy) = (hat(x)?, hat(y)?);
    let free = green_free(z, [x[0] - y[0], x[1] - y[1]])?;
    let correction = (gx.transpose() * &inv.inverse * gy)[(0, 0)];
    Ok(ResolventSample { z: *z, x, y, value: free + correction, free, correction })
}

/// Closed-form `λ → 0` limit in the regular case:
/// `G₀(x-y) - N⁻¹(⟨Ĝ₀(x),1̂⟩ + ⟨1̂,Ĝ₀(y)⟩) - N⁻²⟨1̂,D̃1̂⟩ + ⟨[SD̃S]⁻¹u(x), u(y)⟩`
/// with `u(p) = S(Ĝ₀(p) + N⁻¹D̃1̂)`.
pub fn regular_limit(config: &Configuration, x: [f64; 2], y: [f64; 2]) -> Result<f64> {
    let cls = classify(config, crate::DEFAULT_TOL)?;
    let CaseData::Regular { inverse_block } = &cls.case else {
        return Err(Error::WrongCase(format!(
            "zero-energy limit exists only in the regular case (configuration is {}); \
             use the expansion validator instead",
            cls.tag()
        )));
    };
    regular_limit_with(config, inverse_block, x, y)
}

fn regular_limit_with(config: &Configuration, block: &RMatrix, x: [f64; 2], y: [f64; 2]) -> Result<f64> {
    let n = config.n();
    let nf = n as f64;
    let st = build_structure(config);
    let ones = DVector::from_element(n, 1.0);
    let d1 = &st.dtilde * &ones;
    let hat = |p: [f64; 2]| -> Result<DVector<f64>> {
        let v: Vec<f64> =
            config.centres().iter().map(|c| green_log([p[0] - c[0], p[1] - c[1]])).collect::<Result<_>>()?;
        Ok(DVector::from_vec(v))
    };
    let (gx, gy) = (hat(x)?, hat(y)?);
    let ux = &gx + &d1 / nf;
    let uy = &gy + &d1 / nf;
    Ok(green_log([x[0] - y[0], x[1] - y[1]])? - (gx.sum() + gy.sum()) / nf - d1.sum() / (nf * nf)
        + (ux.transpose() * block * uy)[(0, 0)])
}

/// Resolvent along real `λ → 0⁺` against the closed-form limit; the error is
/// compared to `1/|g(λ)|`.
pub fn resolvent_zero_limit(
    config: &Configuration,
    x: [f64; 2],
    y: [f64; 2],
    lambda_grid: &[f64],
) -> Result<SweepReport> {
    let cls = classify(config, crate::DEFAULT_TOL)?;
    let CaseData::Regular { inverse_block } = &cls.case else {
        return Err(Error::WrongCase(format!(
            "zero-energy limit exists only in the regular case (configuration is {}); \
             use the expansion validator instead",
            cls.tag()
        )));
    };
    if lambda_grid.len() < 4 || lambda_grid.windows(2).any(|w| !(w[1] < w[0])) || lambda_grid[0] <= 0.0 {
        return Err(Error::Precondition("λ grid must be positive, strictly decreasing, ≥ 4 points".into()));
    }
    let limit = regular_limit_with(config, inverse_block, x, y)?;
    let mut rows = Vec::new();
    for &lambda in lambda_grid {
        if !(lambda > 0.0) {
            return Err(Error::Precondition(format!("λ = {lambda} must be positive")));
        }
        let s = resolvent_kernel(config, &SpectralParameter::real(lambda)?, x, y)?;
        let abs_err = (s.value - limit).norm();
        rows.push(SweepRow {
            lambda,
            predicted: limit.abs(),
            computed: s.value.norm(),
            abs_err,
            rel_err: abs_err / limit.abs().max(1e-300),
        });
    }
    Ok(build_report(rows, "1/|g|", |l| 1.0 / g_scale(&SpectralParameter::real(l).expect("λ > 0")).norm()))
}
