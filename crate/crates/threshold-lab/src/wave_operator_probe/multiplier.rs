//! The multiplier `Γ̃(λ) = [conj Γ(|λ|)]⁻¹`, its high-energy split and derivative probes.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::asymptotics_validator::{derivative_sup_probe, geometric_grid, DerivativeProbe};
use crate::error::{Error, Result};
use crate::gamma_core::{build_gamma, invert_gamma, Configuration};
use crate::green_functions::{g_scale, hankel_envelope, SpectralParameter};
use crate::linalg::{linear_fit, spectral_norm_c, CMatrix, RMatrix};
use crate::threshold_classifier::{ThresholdClassification, ThresholdTag};

/// `Γ̃(λ)`, even in `λ`.
pub fn multiplier_matrix(config: &Configuration, lambda: f64) -> Result<CMatrix> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::Singularity(format!("multiplier at λ = {lambda}")));
    }
    let gamma = build_gamma(config, &SpectralParameter::real(lambda.abs())?)?;
    Ok(invert_gamma(&gamma)?.inverse.map(|z| z.conj()))
}

/// Entry `(j, k)` of [`multiplier_matrix`].
pub fn multiplier(config: &Configuration, lambda: f64, j: usize, k: usize) -> Result<Complex64> {
    if j >= config.n() || k >= config.n() {
        return Err(Error::Precondition(format!("entry ({j}, {k}) out of range")));
    }
    Ok(multiplier_matrix(config, lambda)?[(j, k)])
}

/// Smooth cutoff: `χ = 1` on `λ ≤ λ₀/2`, `χ = 0` on `λ ≥ λ₀`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cutoff {
    pub lambda0: f64,
}

impl Cutoff {
    pub fn chi(&self, lambda: f64) -> f64 {
        let t = (2.0 * lambda.abs() / self.lambda0 - 1.0).clamp(0.0, 1.0);
        let f = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
        let (a, b) = (f(t), f(1.0 - t));
        b / (a + b)
    }
}

/// One oscillatory term `e^{-iaλ} b(λ)` of an entry of `Φ`, collecting every path
/// `j → … → k` through at most three off-diagonal factors whose distances sum to `a`.
/// The conjugation in `Γ̃` turns the outgoing phases of `𝒢_λ` into `e^{-iaλ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseTerm {
    pub j: usize,
    pub k: usize,
    pub phase: f64,
    pub paths: usize,
    /// `b` on the grid.
    pub symbol: Vec<Complex64>,
    /// Slope of `log|b|` against `log λ`.
    pub order: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiplierDecomposition {
    pub lambdas: Vec<f64>,
    pub phi: Vec<CMatrix>,
    pub l: Vec<CMatrix>,
    pub terms: Vec<PhaseTerm>,
    /// Sorted distinct phases.
    pub phase_lattice: Vec<f64>,
    /// `max ‖Φ + L - (1-χ)Γ̃‖ / ‖Γ̃‖` over the grid.
    pub reconstruction_error: f64,
    /// Largest `order` among terms with `a > 0`.
    pub symbol_order: f64,
    /// `-slope` of `log max|∂^ℓ L|` against `log λ`, `ℓ = 0, 1, 2`.
    pub l_decay: [f64; 3],
    pub notices: Vec<String>,
}

struct Split {
    a_inv: Vec<Complex64>,
    // conj 𝒢_λ(d_jk) e^{iλ d_jk}
    env: CMatrix,
    jbar: CMatrix,
    gamma_t: CMatrix,
}

fn split_at(config: &Configuration, lambda: f64) -> Result<Split> {
    let n = config.n();
    let g = g_scale(&SpectralParameter::real(lambda)?).conj();
    let a_inv: Vec<Complex64> = config.alphas().iter().map(|a| (Complex64::new(*a, 0.0) - g).inv()).collect();
    let mut env = CMatrix::zeros(n, n);
    let mut jbar = CMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            if j != k {
                let d = config.distance(j, k);
                let e = hankel_envelope(lambda, d)?.conj();
                env[(j, k)] = e;
                jbar[(j, k)] = e * Complex64::from_polar(1.0, -lambda * d);
            }
        }
    }
    Ok(Split { a_inv, env, jbar, gamma_t: multiplier_matrix(config, lambda)? })
}

fn phi_and_l(s: &Split, one_minus_chi: f64) -> (CMatrix, CMatrix) {
    let a = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(s.a_inv.clone()));
    let x = &s.jbar * &a;
    let mut term = a.clone();
    let mut phi = a.clone();
    for _ in 1..4 {
        term = &term * &x;
        phi += &term;
    }
    let x2 = &x * &x;
    let l = &s.gamma_t * (&x2 * &x2);
    let w = Complex64::new(one_minus_chi, 0.0);
    (phi * w, l * w)
}

/// `Φ` and `L` on the given `λ` values.
pub fn split_parts(config: &Configuration, cutoff: &Cutoff, lambda: f64) -> Result<(CMatrix, CMatrix)> {
    let s = split_at(config, lambda)?;
    Ok(phi_and_l(&s, 1.0 - cutoff.chi(lambda)))
}

fn paths(n: usize, j: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut stack = vec![vec![j]];
    while let Some(p) = stack.pop() {
        let last = *p.last().unwrap();
        if last == k && (p.len() > 1 || j == k) {
            out.push(p.clone());
        }
        if p.len() < 4 {
            for i in 0..n {
                if i != last {
                    let mut q = p.clone();
                    q.push(i);
                    stack.push(q);
                }
            }
        }
    }
    out.sort();
    out
}

fn fit_order(lambdas: &[f64], values: &[Complex64]) -> f64 {
    let (x, y): (Vec<f64>, Vec<f64>) = lambdas
        .iter()
        .zip(values)
        .filter(|(_, v)| v.norm() > 0.0)
        .map(|(l, v)| (l.ln(), v.norm().ln()))
        .unzip();
    if x.len() < 2 {
        return f64::NEG_INFINITY;
    }
    linear_fit(&x, &y).0
}

/// `Φ + L` decomposition of `(1-χ)Γ̃` on a high-energy grid.
pub fn high_energy_split(
    config: &Configuration,
    lambdas: &[f64],
    cutoff: &Cutoff,
) -> Result<MultiplierDecomposition> {
    if lambdas.len() < 4 {
        return Err(Error::Precondition("split needs at least 4 grid points".into()));
    }
    if let Some(l) = lambdas.iter().find(|l| !(**l >= cutoff.lambda0)) {
        return Err(Error::Precondition(format!(
            "λ = {l} lies below the cutoff scale λ₀ = {}",
            cutoff.lambda0
        )));
    }
    let n = config.n();
    let mut notices = Vec::new();
    if n == 1 {
        notices.push("single centre: J = 0, so Φ = (α - conj g)^-1 and L = 0".to_string());
    }
    let mut phi = Vec::with_capacity(lambdas.len());
    let mut l = Vec::with_capacity(lambdas.len());
    let mut reconstruction_error: f64 = 0.0;
    // (j, k, phase) -> (paths, samples)
    let mut groups: Vec<(usize, usize, f64, usize, Vec<Complex64>)> = Vec::new();
    let all_paths: Vec<Vec<Vec<usize>>> =
        (0..n * n).map(|jk| paths(n, jk / n, jk % n)).collect();
    for jk in 0..n * n {
        for p in &all_paths[jk] {
            let a: f64 = p.windows(2).map(|w| config.distance(w[0], w[1])).sum::<f64>() + 0.0;
            match groups.iter_mut().find(|g| g.0 == jk / n && g.1 == jk % n && (g.2 - a).abs() <= 1e-9 * (1.0 + a)) {
                Some(g) => g.3 += 1,
                None => groups.push((jk / n, jk % n, a, 1, Vec::with_capacity(lambdas.len()))),
            }
        }
    }
    for &lam in lambdas {
        let s = split_at(config, lam)?;
        let w = 1.0 - cutoff.chi(lam);
        let (p, r) = phi_and_l(&s, w);
        let target = &s.gamma_t * Complex64::new(w, 0.0);
        let err = spectral_norm_c(&(&p + &r - &target)) / spectral_norm_c(&s.gamma_t);
        reconstruction_error = reconstruction_error.max(err);
        for g in groups.iter_mut() {
            g.4.push(Complex64::new(0.0, 0.0));
        }
        for jk in 0..n * n {
            for path in &all_paths[jk] {
                let a: f64 = path.windows(2).map(|q| config.distance(q[0], q[1])).sum::<f64>() + 0.0;
                let mut b = s.a_inv[path[0]] * w;
                for q in path.windows(2) {
                    b *= s.env[(q[0], q[1])] * s.a_inv[q[1]];
                }
                let g = groups
                    .iter_mut()
                    .find(|g| g.0 == jk / n && g.1 == jk % n && (g.2 - a).abs() <= 1e-9 * (1.0 + a))
                    .expect("path group registered");
                *g.4.last_mut().unwrap() += b;
            }
        }
        phi.push(p);
        l.push(r);
    }
    let terms: Vec<PhaseTerm> = groups
        .into_iter()
        .map(|(j, k, phase, paths, symbol)| {
            let order = fit_order(lambdas, &symbol);
            PhaseTerm { j, k, phase, paths, symbol, order }
        })
        .collect();
    let mut phase_lattice: Vec<f64> = Vec::new();
    for t in &terms {
        if !phase_lattice.iter().any(|a| (a - t.phase).abs() <= 1e-9 * (1.0 + a)) {
            phase_lattice.push(t.phase);
        }
    }
    phase_lattice.sort_by(f64::total_cmp);
    let symbol_order = terms
        .iter()
        .filter(|t| t.phase > 0.0)
        .map(|t| t.order)
        .fold(f64::NEG_INFINITY, f64::max);
    let l_decay = if n == 1 { [f64::INFINITY; 3] } else { l_decay_fit(config, cutoff, lambdas)? };
    Ok(MultiplierDecomposition {
        lambdas: lambdas.to_vec(),
        phi,
        l,
        terms,
        phase_lattice,
        reconstruction_error,
        symbol_order,
        l_decay,
        notices,
    })
}

fn l_decay_fit(config: &Configuration, cutoff: &Cutoff, lambdas: &[f64]) -> Result<[f64; 3]> {
    let h = 1e-2 / config.max_distance().max(1.0);
    let mut sup = [Vec::new(), Vec::new(), Vec::new()];
    for &lam in lambdas {
        let f: Vec<CMatrix> = [-1.0, 0.0, 1.0]
            .iter()
            .map(|s| Ok(split_parts(config, cutoff, lam + s * h)?.1))
            .collect::<Result<_>>()?;
        let d = [
            f[1].clone(),
            (&f[2] - &f[0]) / Complex64::new(2.0 * h, 0.0),
            (&f[2] - &f[1] * Complex64::new(2.0, 0.0) + &f[0]) / Complex64::new(h * h, 0.0),
        ];
        for (s, m) in sup.iter_mut().zip(&d) {
            s.push(Complex64::new(m.iter().map(|z| z.norm()).fold(0.0, f64::max), 0.0));
        }
    }
    let mut out = [0.0; 3];
    for (o, s) in out.iter_mut().zip(&sup) {
        *o = -fit_order(lambdas, s);
    }
    Ok(out)
}

/// Dominant `a` in `Φ_{jk}(λ) ≈ Σ e^{-iaλ} b(λ)` by windowed FFT over a uniform grid on `[lo, hi]`.
pub fn dominant_phase(
    config: &Configuration,
    j: usize,
    k: usize,
    lo: f64,
    hi: f64,
    samples: usize,
) -> Result<f64> {
    if !(hi > lo && lo > 0.0) || samples < 16 {
        return Err(Error::Precondition("dominant phase needs 0 < lo < hi and 16 samples".into()));
    }
    if j >= config.n() || k >= config.n() {
        return Err(Error::Precondition(format!("entry ({j}, {k}) out of range")));
    }
    let cutoff = Cutoff { lambda0: lo };
    let step = (hi - lo) / samples as f64;
    let m = (8 * samples).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (i, b) in buf.iter_mut().enumerate().take(samples) {
        let lam = lo + i as f64 * step;
        let hann = 0.5 - 0.5 * (2.0 * PI * i as f64 / samples as f64).cos();
        *b = split_parts(config, &cutoff, lam)?.0[(j, k)] * (lam.sqrt() * hann);
    }
    FftPlanner::<f64>::new().plan_fft_forward(m).process(&mut buf);
    let best = (0..m).max_by(|a, b| buf[*a].norm().total_cmp(&buf[*b].norm())).unwrap_or(0);
    // refine the peak by a parabola through log magnitudes
    let at = |i: isize| buf[i.rem_euclid(m as isize) as usize].norm().ln();
    let (y0, y1, y2) = (at(best as isize - 1), at(best as isize), at(best as isize + 1));
    let shift = 0.5 * (y0 - y2) / (y0 - 2.0 * y1 + y2);
    let mut bin = best as f64 + if shift.is_finite() { shift } else { 0.0 };
    if bin > m as f64 / 2.0 {
        bin -= m as f64;
    }
    // bin b ↔ e^{+2πi b n/m}; e^{-iaλ} sits at negative bins
    Ok(-2.0 * PI * bin / (m as f64 * step))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MikhlinReport {
    pub coarse: DerivativeProbe,
    pub fine: DerivativeProbe,
    /// Per `ℓ`, `max_{jk}` relative change of the sampled sup between the two grids.
    pub grid_change: Vec<f64>,
    pub stable: bool,
}

/// Largest admissible change of a sampled sup under refinement.
pub const MIKHLIN_STABILITY: f64 = 0.05;

/// Sampled `sup λ^ℓ |∂^ℓ Γ̃_{jk}|` on `[lo, hi]` at `per_decade` and `2·per_decade`.
pub fn mikhlin_probe(
    classification: &ThresholdClassification,
    config: &Configuration,
    lo: f64,
    hi: f64,
    per_decade: usize,
    l_max: usize,
) -> Result<MikhlinReport> {
    if classification.tag() != ThresholdTag::Regular {
        return Err(Error::WrongCase(format!(
            "the multiplier is probed in the regular case, configuration is {}",
            classification.tag()
        )));
    }
    let length = 1.0 / config.max_distance().max(1.0);
    let m = |l: f64| multiplier_matrix(config, l);
    let coarse = derivative_sup_probe(m, &geometric_grid(hi, lo, per_decade)?, l_max, 1e-2, length)?;
    let fine = derivative_sup_probe(m, &geometric_grid(hi, lo, 2 * per_decade)?, l_max, 1e-2, length)?;
    let change = |a: &RMatrix, b: &RMatrix| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| if *y > 0.0 { (x - y).abs() / y } else { 0.0 })
            .fold(0.0, f64::max)
    };
    let grid_change: Vec<f64> = coarse
        .constants
        .iter()
        .zip(&fine.constants)
        .map(|(a, b)| change(a, b))
        .collect();
    let stable = grid_change
        .iter()
        .chain(&fine.refinement_change)
        .all(|c| *c <= MIKHLIN_STABILITY);
    Ok(MikhlinReport { coarse, fine, grid_change, stable })
}
