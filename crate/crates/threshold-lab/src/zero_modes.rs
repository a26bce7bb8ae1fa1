//! Zero-energy eigenfunctions `ψ(x) = -Σ (a_j/2π) log|x - y_j|` and the inverse
//! problem of choosing strengths that produce one.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gamma_core::{build_gamma, build_structure, log_entry, Configuration};
use crate::green_functions::{g_scale, green_free_r, log_potential, Axis, SpectralParameter};
use crate::linalg::{normalize_sign, null_space, RMatrix};
use crate::threshold_classifier::{far_field_fit, FarFieldFit};

/// Absolute tolerance on the three defining constraints, for unit `a`.
pub const CONSTRAINT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroMode {
    a: DVector<f64>,
    config: Configuration,
}

/// Moments of `a` about the centroid of the centres.
fn moments(config: &Configuration, a: &DVector<f64>) -> [f64; 3] {
    let c = centroid(config);
    let mut m = [0.0; 3];
    for (j, y) in config.centres().iter().enumerate() {
        m[0] += a[j];
        m[1] += a[j] * (y[0] - c[0]);
        m[2] += a[j] * (y[1] - c[1]);
    }
    m
}

fn centroid(config: &Configuration) -> [f64; 2] {
    let n = config.n() as f64;
    let mut c = [0.0; 2];
    for y in config.centres() {
        c[0] += y[0] / n;
        c[1] += y[1] / n;
    }
    c
}

impl ZeroMode {
    /// Normalizes `a` and checks `Σa = 0`, `Σa y = 0`, `D̃a = 0`.
    pub fn new(a: DVector<f64>, config: Configuration) -> Result<Self> {
        if a.len() != config.n() {
            return Err(Error::Precondition(format!("{} coefficients for {} centres", a.len(), config.n())));
        }
        if !(a.norm() > 0.0) {
            return Err(Error::Precondition("zero mode coefficients vanish".into()));
        }
        let a = normalize_sign(&a);
        let scale = config.max_distance().max(1.0);
        let m = moments(&config, &a);
        let st = build_structure(&config);
        let da = (&st.dtilde * &a).amax();
        if m[0].abs() > CONSTRAINT_TOL
            || m[1].abs().max(m[2].abs()) > CONSTRAINT_TOL * scale
            || da > CONSTRAINT_TOL * st.dtilde.amax().max(1.0)
        {
            return Err(Error::Precondition(format!(
                "not a zero mode: |Σa| = {:e}, |Σay| = {:e}, |D~a| = {da:e}",
                m[0].abs(),
                m[1].hypot(m[2])
            )));
        }
        Ok(Self { a, config })
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.a
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    /// Same coefficients against different strengths, without re-checking `D̃a = 0`.
    /// Used to probe how [`verify_zero_mode`] reacts to a broken mode.
    pub fn with_alphas_unchecked(&self, alphas: Vec<f64>) -> Result<Self> {
        Ok(Self { a: self.a.clone(), config: self.config.with_alphas(alphas)? })
    }

    pub fn far_field(&self) -> Result<FarFieldFit> {
        far_field_fit(|x| eval_psi(self, x), 0.0)
    }
}

/// Rows `1ᵗ`, `(y - ȳ)ᵗ` components and optionally `D̃`, each scaled to unit norm.
fn constraint_matrix(config: &Configuration, with_dtilde: bool) -> RMatrix {
    let n = config.n();
    let c = centroid(config);
    let mut rows: Vec<Vec<f64>> = vec![
        vec![1.0; n],
        config.centres().iter().map(|y| y[0] - c[0]).collect(),
        config.centres().iter().map(|y| y[1] - c[1]).collect(),
    ];
    if with_dtilde {
        let st = build_structure(config);
        rows.extend(st.dtilde.row_iter().map(|r| r.iter().copied().collect()));
    }
    let rows: Vec<Vec<f64>> = rows
        .into_iter()
        .filter_map(|r| {
            let nr = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            (nr > 0.0).then(|| r.iter().map(|v| v / nr).collect())
        })
        .collect();
    RMatrix::from_fn(rows.len(), n, |i, j| rows[i][j])
}

/// Orthonormal basis of `{a : Σa = 0, Σa y = 0, D̃a = 0}`.
pub fn zero_mode_space(config: &Configuration, tol: f64) -> Result<Vec<ZeroMode>> {
    let (basis, _) = null_space(&constraint_matrix(config, true), tol);
    // columns are orthonormal; `new` only fixes each sign
    basis.column_iter().map(|c| ZeroMode::new(c.into_owned(), config.clone())).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Design {
    pub alphas: Vec<f64>,
    pub mode: ZeroMode,
}

/// Smallest admissible `min_j |a_j|` for a unit design vector.
const DESIGN_MIN_COMPONENT: f64 = 1e-8;

/// Strengths `α_j = -(1/(2π a_j)) Σ_{k≠j} a_k log|y_j - y_k|` that make `D̃a = 0`.
///
/// Returns `Ok(None)` when the moment constraints admit only `a = 0`.
pub fn design_alpha(centres: &[[f64; 2]]) -> Result<Option<Design>> {
    let n = centres.len();
    if n < 3 {
        return Err(Error::Precondition(format!("design needs at least 3 centres, got {n}")));
    }
    let probe = Configuration::new(centres.to_vec(), vec![0.0; n])?;
    let (basis, _) = null_space(&constraint_matrix(&probe, false), crate::DEFAULT_TOL);
    if basis.ncols() == 0 {
        return Ok(None);
    }
    let a = pick_nonvanishing(&basis)?;
    let alphas: Vec<f64> = (0..n)
        .map(|j| {
            let s: f64 = (0..n).filter(|&k| k != j).map(|k| a[k] * log_entry(probe.distance(j, k))).sum();
            -s / a[j]
        })
        .collect();
    let config = probe.with_alphas(alphas.clone())?;
    let mode = ZeroMode::new(a, config)?;
    Ok(Some(Design { alphas, mode }))
}

/// Unit vector in `range(basis)` maximizing `min_j |a_j|` over a coarse sphere search.
fn pick_nonvanishing(basis: &RMatrix) -> Result<DVector<f64>> {
    let k = basis.ncols();
    let score = |v: &DVector<f64>| v.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
    let mut best = normalize_sign(&basis.column(0).into_owned());
    if k > 1 {
        // Kronecker sequence on the cube, mapped to directions
        let gen: Vec<f64> = (0..k).map(|i| ((i + 2) as f64).sqrt().fract()).collect();
        for t in 1..=512 {
            let c = DVector::from_iterator(k, gen.iter().map(|g| 2.0 * (g * t as f64).fract() - 1.0));
            if c.norm() == 0.0 {
                continue;
            }
            let v = normalize_sign(&(basis * c));
            if score(&v) > score(&best) {
                best = v;
            }
        }
    }
    if score(&best) < DESIGN_MIN_COMPONENT {
        let index = best.iamin();
        return Err(Error::DesignObstructed { index });
    }
    Ok(best)
}

/// `ψ(x) = -Σ (a_j/2π) log|x - y_j|`.
pub fn eval_psi(mode: &ZeroMode, x: [f64; 2]) -> Result<f64> {
    log_potential(mode.a.as_slice(), mode.config.centres(), x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroModeReport {
    /// `max_k |v_μ(y_k) - (Γ(μ)a)_k|`.
    pub residual: f64,
    /// `max |ψ(x)|·|x|²` over `|x| ∈ {10², 10³, 10⁴}` on 8 rays.
    pub decay_proxy: f64,
    pub condition: f64,
}

/// Compare the boundary values of `ψ` against `Γ(μ)a`.
///
/// `v_μ(y_k) = Σ_j a_j (G₀ - 𝒢_μ)(y_k - y_j)` with the diagonal limit `-g(μ)`.
/// Refuses when `cond Γ(μ) > 1/DEFAULT_TOL`.
pub fn verify_zero_mode(mode: &ZeroMode, mu: &SpectralParameter) -> Result<ZeroModeReport> {
    let config = &mode.config;
    let gamma = build_gamma(config, mu)?;
    if gamma.condition_estimate > 1.0 / crate::DEFAULT_TOL {
        let what = match mu.axis() {
            Axis::Imaginary => format!(
                "Γ(μ) is singular at μ = {}: eigenvalue E = {:e} is nearby",
                mu.value(),
                -mu.value().im.powi(2)
            ),
            _ => format!("Γ(μ) is singular at μ = {}", mu.value()),
        };
        return Err(Error::Precondition(what));
    }
    let n = config.n();
    let a: DVector<Complex64> = mode.a.map(|v| Complex64::new(v, 0.0));
    let ga = &gamma.entries * &a;
    let g = g_scale(mu);
    let mut residual: f64 = 0.0;
    for k in 0..n {
        let mut v = -g * a[k];
        for j in (0..n).filter(|&j| j != k) {
            let d = config.distance(j, k);
            v += a[j] * (Complex64::new(-log_entry(d), 0.0) - green_free_r(mu, d)?);
        }
        residual = residual.max((v - ga[k]).norm());
    }
    let mut decay_proxy: f64 = 0.0;
    for r in [1e2, 1e3, 1e4] {
        for i in 0..8 {
            let th = std::f64::consts::PI * (i as f64 + 0.3) / 4.0;
            decay_proxy = decay_proxy.max(eval_psi(mode, [r * th.cos(), r * th.sin()])?.abs() * r * r);
        }
    }
    Ok(ZeroModeReport { residual, decay_proxy, condition: gamma.condition_estimate })
}

/// Number of independent zero modes; `m ≤ 1` is enforced for `N ≤ 4`.
pub fn degeneracy_check(config: &Configuration) -> Result<usize> {
    let m = zero_mode_space(config, crate::DEFAULT_TOL)?.len();
    if m > 1 {
        if config.n() <= 4 {
            return Err(Error::Internal(format!("{m} zero modes for N = {}", config.n())));
        }
        log::warn!("degenerate zero eigenvalue: m = {m} for N = {}", config.n());
    }
    Ok(m)
}
