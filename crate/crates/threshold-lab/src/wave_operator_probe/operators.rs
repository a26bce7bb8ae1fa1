//! The operator `K`, its pairing oracle, `Ω_{jk} = K ∘ Γ̃_{jk}(|D|)` and the `L^p` sweep.
//!
//! `Ku(x) = -(P N_u)(|x|²)` with `N_u(s) = M_u(√s)`, which is the defining formula
//! `Ku(x) = (1/πi)∫₀^∞ 𝒢_{-λ}(x) λ ∫_{S¹} û(λω) dω dλ` evaluated through the
//! spherical mean.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::half_line::{project_half_line, HalfLineProfile};
use super::multiplier::multiplier_matrix;
use super::quadrature::{panel_rule, uniform_panels};
use super::test_functions::{spherical_mean, Descriptor, PolarGrid, RadialTestFunction};
use crate::error::{Error, Result};
use crate::gamma_core::Configuration;
use crate::green_functions::{bessel_j0_real, green_free_r, SpectralParameter};
use crate::threshold_classifier::{ThresholdClassification, ThresholdTag};

const ORDER: usize = 16;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn profile_extent(u: &RadialTestFunction) -> f64 {
    u.descriptor.support_radius().min(u.grid.r_max).powi(2)
}

// Coefficients of N up to s³ from a degree-5 interpolant at s = jδ.
fn taylor_fit(n: &dyn Fn(f64) -> Result<Complex64>, delta: f64) -> Result<[Complex64; 4]> {
    let k = 6;
    let v = DMatrix::from_fn(k, k, |i, j| (i as f64).powi(j as i32));
    let lu = v.lu();
    let mut re = nalgebra::DVector::zeros(k);
    let mut im = nalgebra::DVector::zeros(k);
    for i in 0..k {
        let y = n(i as f64 * delta)?;
        re[i] = y.re;
        im[i] = y.im;
    }
    let err = || Error::Internal("Vandermonde solve failed".into());
    let a = lu.solve(&re).ok_or_else(err)?;
    let b = lu.solve(&im).ok_or_else(err)?;
    let mut out = [c(0.0); 4];
    for (j, o) in out.iter_mut().enumerate() {
        *o = Complex64::new(a[j], b[j]) / delta.powi(j as i32);
    }
    Ok(out)
}

/// `P N_u` with `N_u(s) = M_u(√s)`, valid up to `s = R_max²`.
///
/// Non-radial `u` have `M_u` tabulated on a uniform radial grid and interpolated.
pub fn k_profile(u: &RadialTestFunction) -> Result<HalfLineProfile> {
    u.check_extent()?;
    let h = u.grid.s_step();
    let s_n = profile_extent(u);
    let n = ((s_n / h).ceil() as usize + 1).max(8);
    let values: Vec<Complex64> = if u.descriptor.is_radial() {
        (0..n)
            .map(|i| spherical_mean(u, (i as f64 * h).sqrt().min(u.grid.r_max)))
            .collect::<Result<_>>()?
    } else {
        let dr = u.grid.dr() / 4.0;
        let n_r = (s_n.sqrt() / dr).ceil() as usize + 3;
        let table: Vec<Complex64> = (0..n_r)
            .map(|i| spherical_mean(u, (i as f64 * dr).min(u.grid.r_max)))
            .collect::<Result<_>>()?;
        (0..n).map(|i| even_interpolate(&table, dr, (i as f64 * h).sqrt())).collect()
    };
    let nfun = |s: f64| spherical_mean(u, s.sqrt());
    let taylor = taylor_fit(&nfun, 0.05 * u.descriptor.scale.powi(2))?;
    project_half_line(&values, h, taylor, u.grid.r_max.powi(2))
}

// Cubic interpolation of an even function tabulated at r = i·dr, i ≥ 0.
fn even_interpolate(table: &[Complex64], dr: f64, r: f64) -> Complex64 {
    let n = table.len();
    let t = r / dr;
    let base = (t.floor() as isize - 1).min(n as isize - 4);
    let mut out = c(0.0);
    for q in 0..4 {
        let mut wgt = 1.0;
        for b in 0..4 {
            if b != q {
                wgt *= (t - (base + b) as f64) / (q - b) as f64;
            }
        }
        out += table[((base + q).unsigned_abs()).min(n - 1)] * wgt;
    }
    out
}

/// `Ku` at the given radii (`K u` is radial).
pub fn apply_k(u: &RadialTestFunction, radii: &[f64]) -> Result<Vec<Complex64>> {
    let p = k_profile(u)?;
    radii.iter().map(|r| Ok(-p.eval(r * r)?)).collect()
}

// Panels on [0, s_max], graded geometrically towards 0.
fn s_panels(s_max: f64) -> (Vec<f64>, Vec<f64>) {
    let mut breaks = vec![0.0];
    let mut b = 1e-8 * s_max;
    while b < 0.05 * s_max.min(20.0) {
        breaks.push(b);
        b *= 4.0;
    }
    let start = *breaks.last().unwrap();
    let n = ((s_max - start) / 0.5).ceil().max(1.0) as usize;
    breaks.extend((1..=n).map(|i| start + (s_max - start) * i as f64 / n as f64));
    panel_rule(&breaks, ORDER)
}

/// `⟨v, Ku⟩ = -π ∫ conj(N_v) P N_u ds`.
pub fn pair_k(u: &RadialTestFunction, v: &RadialTestFunction) -> Result<Complex64> {
    let p = k_profile(u)?;
    let s_max = profile_extent(v).min(u.grid.r_max.powi(2));
    let (nodes, weights) = s_panels(s_max);
    let mut acc = c(0.0);
    for (s, w) in nodes.iter().zip(&weights) {
        acc += spherical_mean(v, s.sqrt())?.conj() * p.eval(*s)? * *w;
    }
    Ok(-acc * PI)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleValue {
    pub value: Complex64,
    pub epsilons: Vec<f64>,
    /// Regularized pairings before extrapolation.
    pub raw: Vec<Complex64>,
}

/// `⟨v, Ku⟩ = (i/2)∬ conj N_v(s) N_u(t) / (s - t - iε) ds dt`, extrapolated to `ε = 0`
/// by Richardson steps on `ε₀, ε₀/2, …`.
///
/// The inner integral uses `∫N(t)/(s-t-iε) = ∫(N(t)-N(s))/(s-t-iε) + N(s) log((s-iε)/(s-T-iε))`.
pub fn pair_k_oracle(
    u: &RadialTestFunction,
    v: &RadialTestFunction,
    eps0: f64,
    levels: usize,
) -> Result<OracleValue> {
    if !(eps0 > 0.0) || levels == 0 {
        return Err(Error::Precondition("oracle needs ε₀ > 0 and at least one level".into()));
    }
    u.check_extent()?;
    v.check_extent()?;
    let t_max = profile_extent(u).max(profile_extent(v));
    let nu = |s: f64| spherical_mean(u, s.sqrt().min(u.grid.r_max));
    let nv = |s: f64| spherical_mean(v, s.sqrt().min(v.grid.r_max));
    let (outer, wo) = uniform_panels(0.0, t_max, (t_max / 3.0).ceil() as usize, 20);
    let nv_outer: Vec<Complex64> = outer.iter().map(|s| nv(*s)).collect::<Result<_>>()?;
    let nu_outer: Vec<Complex64> = outer.iter().map(|s| nu(*s)).collect::<Result<_>>()?;
    let epsilons: Vec<f64> = (0..levels).map(|l| eps0 / 2f64.powi(l as i32)).collect();
    let mut raw = Vec::with_capacity(levels);
    for &eps in &epsilons {
        let ie = Complex64::new(0.0, eps);
        let mut tot = c(0.0);
        for (i, &s) in outer.iter().enumerate() {
            let mut breaks = vec![0.0, s, t_max];
            let mut d = eps / 4.0;
            while d < t_max {
                for q in [s - d, s + d] {
                    if q > 0.0 && q < t_max {
                        breaks.push(q);
                    }
                }
                d *= 2.0;
            }
            breaks.sort_by(f64::total_cmp);
            breaks.dedup();
            let (t, wt) = panel_rule(&breaks, 20);
            let ns = nu_outer[i];
            let mut inner = (c(s) - ie).ln() - (c(s - t_max) - ie).ln();
            inner *= ns;
            for (tk, wk) in t.iter().zip(&wt) {
                inner += (nu(*tk)? - ns) / (c(s - tk) - ie) * *wk;
            }
            tot += nv_outer[i].conj() * inner * wo[i];
        }
        raw.push(tot * Complex64::new(0.0, 0.5));
    }
    let mut table = raw.clone();
    for k in 1..levels {
        let f = 2f64.powi(k as i32);
        table = table.windows(2).map(|w| (w[1] * f - w[0]) / (f - 1.0)).collect();
    }
    Ok(OracleValue { value: table[0], epsilons, raw })
}

/// `𝒢_{-λ}` as the boundary value at `-λ + i0`, i.e. `conj 𝒢_λ`.
fn green_minus(lambda: f64, r: f64) -> Result<Complex64> {
    Ok(green_free_r(&SpectralParameter::real(lambda)?, r)?.conj())
}

/// Both sides of `∫(𝒢_λ - 𝒢_{-λ}) u dy = (i/2)∫_{S¹} û(λω) dω`.
pub fn poisson_identity(u: &RadialTestFunction, lambda: f64) -> Result<(Complex64, Complex64)> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("λ = {lambda} must be positive")));
    }
    let r_max = u.descriptor.support_radius().min(u.grid.r_max);
    let (nodes, weights) = uniform_panels(0.0, r_max, (r_max * (lambda + 1.0)).ceil() as usize, ORDER);
    let mut lhs = c(0.0);
    let l = SpectralParameter::real(lambda)?;
    for (r, w) in nodes.iter().zip(&weights) {
        let d = green_free_r(&l, *r)? - green_minus(lambda, *r)?;
        lhs += d * spherical_mean(u, *r)? * (r * w);
    }
    lhs *= 2.0 * PI;
    let rhs = Complex64::new(0.0, PI) * u.descriptor.spectral_mean(lambda, u.grid.n_theta)?;
    Ok((lhs, rhs))
}

fn check_indices(config: &Configuration, j: usize, k: usize) -> Result<()> {
    if j >= config.n() || k >= config.n() {
        return Err(Error::Precondition(format!(
            "entry ({j}, {k}) outside a {}-centre configuration",
            config.n()
        )));
    }
    Ok(())
}

fn require_regular(classification: &ThresholdClassification) -> Result<()> {
    if classification.tag() != ThresholdTag::Regular {
        return Err(Error::WrongCase(format!(
            "Ω is only represented for regular configurations, this one is {}; \
             use validate-asymptotics to study the threshold",
            classification.tag()
        )));
    }
    Ok(())
}

/// `(1/πi)∫_band λ Γ̃_{jk}(λ) 𝒢_{-λ}(r) ∫_{S¹}û(λω)dω dλ` at `|x| = r`.
pub fn omega_direct(
    config: &Configuration,
    j: usize,
    k: usize,
    u: &Descriptor,
    r: f64,
    band: (f64, f64),
) -> Result<Complex64> {
    check_indices(config, j, k)?;
    if !(r > 0.0) {
        return Err(Error::Singularity(format!("direct route at r = {r}")));
    }
    let (lo, hi) = band;
    if !(hi > lo && lo >= 0.0) {
        return Err(Error::Precondition(format!("band [{lo}, {hi}] is empty")));
    }
    let n_theta = 256;
    let panels = ((hi - lo) * (r + config.max_distance() + 1.0) / (2.0 * PI)).ceil() as usize + 8;
    let (nodes, weights) = uniform_panels(lo, hi, panels, ORDER);
    let mut acc = c(0.0);
    for (l, w) in nodes.iter().zip(&weights) {
        let m = u.spectral_mean(*l, n_theta)?;
        if m == c(0.0) {
            continue;
        }
        let gt = multiplier_matrix(config, *l)?[(j, k)];
        acc += gt * green_minus(*l, r)? * m * (l * w);
    }
    // (1/πi)·2π
    Ok(acc * Complex64::new(0.0, -2.0))
}

/// `P N_w` for `w = Γ̃_{jk}(|D|) u`.
pub fn omega_profile(
    config: &Configuration,
    j: usize,
    k: usize,
    u: &RadialTestFunction,
) -> Result<HalfLineProfile> {
    check_indices(config, j, k)?;
    let (lo, hi) = u.descriptor.band();
    let r_max = u.grid.r_max;
    let panels = ((hi - lo) * r_max / (2.0 * PI)).ceil() as usize + 4;
    let (rho, w) = uniform_panels(lo, hi, panels, ORDER);
    let mut a = Vec::with_capacity(rho.len());
    for (p, wq) in rho.iter().zip(&w) {
        let m = u.descriptor.spectral_mean(*p, u.grid.n_theta)?;
        a.push(multiplier_matrix(config, *p)?[(j, k)] * m * (p * wq));
    }
    // M_w on a uniform r grid, then N_w(s) = M_w(√s)
    let dr = u.grid.dr() / 2.0;
    let n_r = (r_max / dr).ceil() as usize + 3;
    let m_w: Vec<Complex64> = (0..n_r)
        .map(|i| {
            let r = i as f64 * dr;
            rho.iter().zip(&a).map(|(p, ai)| *ai * bessel_j0_real(p * r)).sum()
        })
        .collect();
    let h = u.grid.s_step();
    let n_s = (r_max * r_max / h).floor() as usize;
    let values: Vec<Complex64> = (0..n_s).map(|i| even_interpolate(&m_w, dr, (i as f64 * h).sqrt())).collect();
    let mut taylor = [c(0.0); 4];
    let mut f = 1.0;
    for (n, t) in taylor.iter_mut().enumerate() {
        if n > 0 {
            f *= -4.0 * (n * n) as f64;
        }
        *t = rho.iter().zip(&a).map(|(p, ai)| *ai * p.powi(2 * n as i32)).sum::<Complex64>() / f;
    }
    project_half_line(&values, h, taylor, r_max * r_max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmegaSamples {
    pub radii: Vec<f64>,
    /// `K ∘ Γ̃_{jk}(|D|)`.
    pub multiplier_route: Vec<Complex64>,
    /// λ-quadrature of the stationary formula.
    pub direct_route: Vec<Complex64>,
    /// `max |A - B| / max |B|`.
    pub max_rel_diff: f64,
}

/// `Ω_{jk} u` at the given radii by both routes.
pub fn apply_omega(
    classification: &ThresholdClassification,
    config: &Configuration,
    j: usize,
    k: usize,
    u: &RadialTestFunction,
    radii: &[f64],
) -> Result<OmegaSamples> {
    require_regular(classification)?;
    let p = omega_profile(config, j, k, u)?;
    let multiplier_route: Vec<Complex64> =
        radii.iter().map(|r| Ok(-p.eval(r * r)?)).collect::<Result<_>>()?;
    let band = u.descriptor.band();
    let direct_route: Vec<Complex64> = radii
        .iter()
        .map(|r| omega_direct(config, j, k, &u.descriptor, *r, band))
        .collect::<Result<_>>()?;
    let diff = multiplier_route
        .iter()
        .zip(&direct_route)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let scale = direct_route.iter().map(|b| b.norm()).fold(0.0, f64::max);
    let max_rel_diff = if scale > 0.0 { diff / scale } else { diff };
    Ok(OmegaSamples { radii: radii.to_vec(), multiplier_route, direct_route, max_rel_diff })
}

/// Largest admissible change of an `L^p` ratio under grid doubling.
pub const LP_STABILITY: f64 = 0.05;

#[derive(Clone, Copy, Debug)]
pub enum ProbeOperator<'a> {
    K,
    Omega { classification: &'a ThresholdClassification, config: &'a Configuration, j: usize, k: usize },
}

impl ProbeOperator<'_> {
    fn apply(&self, u: &RadialTestFunction, radii: &[f64]) -> Result<Vec<Complex64>> {
        match *self {
            ProbeOperator::K => apply_k(u, radii),
            ProbeOperator::Omega { classification, config, j, k } => {
                require_regular(classification)?;
                let p = omega_profile(config, j, k, u)?;
                radii.iter().map(|r| Ok(-p.eval(r * r)?)).collect()
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            ProbeOperator::K => "K".into(),
            ProbeOperator::Omega { j, k, .. } => format!("Omega_{}{}", j + 1, k + 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpRow {
    pub p: f64,
    pub ratio: f64,
    pub ratio_refined: f64,
    pub change: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpReport {
    pub operator: String,
    pub rows: Vec<LpRow>,
    /// `ratios[i][q]` for corpus element `i` and exponent `p_list[q]`, base grid.
    pub ratios: Vec<Vec<f64>>,
    pub stable: bool,
}

fn radial_lp(values: &[Complex64], grid: &PolarGrid, ps: &[f64]) -> Vec<f64> {
    let radii = grid.radii();
    ps.iter()
        .map(|p| {
            let s: f64 = values.iter().zip(&radii).map(|(v, r)| v.norm().powf(*p) * r).sum();
            (2.0 * PI * s * grid.dr()).powf(1.0 / p)
        })
        .collect()
}

fn ratios_on(op: &ProbeOperator, d: &Descriptor, grid: PolarGrid, ps: &[f64]) -> Result<Vec<f64>> {
    let u = RadialTestFunction::new(d.clone(), grid)?;
    let out = op.apply(&u, &grid.radii())?;
    let num = radial_lp(&out, &grid, ps);
    let den = u.lp_norms(ps);
    Ok(num.iter().zip(&den).map(|(a, b)| a / b).collect())
}

/// `max_u ‖Tu‖_p/‖u‖_p` over the corpus on `grid` and on its refinement.
pub fn lp_ratio_sweep(
    op: ProbeOperator,
    corpus: &[Descriptor],
    grid: PolarGrid,
    p_list: &[f64],
) -> Result<LpReport> {
    if corpus.is_empty() {
        return Err(Error::Precondition("empty corpus".into()));
    }
    if let Some(p) = p_list.iter().find(|p| !(**p > 1.0 && p.is_finite())) {
        return Err(Error::Domain(format!("exponent p = {p} outside (1, ∞)")));
    }
    let mut ratios = Vec::with_capacity(corpus.len());
    let mut refined = Vec::with_capacity(corpus.len());
    for d in corpus {
        ratios.push(ratios_on(&op, d, grid, p_list)?);
        refined.push(ratios_on(&op, d, grid.refined(), p_list)?);
    }
    let rows: Vec<LpRow> = p_list
        .iter()
        .enumerate()
        .map(|(q, &p)| {
            let ratio = ratios.iter().map(|r| r[q]).fold(0.0, f64::max);
            let ratio_refined = refined.iter().map(|r| r[q]).fold(0.0, f64::max);
            let change = ratios
                .iter()
                .zip(&refined)
                .map(|(a, b)| (b[q] / a[q] - 1.0).abs())
                .fold(0.0, f64::max);
            LpRow { p, ratio, ratio_refined, change }
        })
        .collect();
    let stable = rows.iter().all(|r| r.change <= LP_STABILITY);
    Ok(LpReport { operator: op.name(), rows, ratios, stable })
}
