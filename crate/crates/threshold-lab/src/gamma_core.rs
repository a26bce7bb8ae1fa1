//! The matrix `Γ_{α,Y}(λ)`, the real structure matrices of its low-energy expansion and
//! the Jensen–Nenciu inversion.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::green_functions::{g_scale, green_free_r, SpectralParameter};
use crate::linalg::{invert_complex, range_basis, to_complex, CMatrix, RMatrix};

pub mod extended;

const TWO_PI: f64 = 2.0 * PI;

/// Centres `Y` and strengths `α`.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    centres: Vec<[f64; 2]>,
    alphas: Vec<f64>,
}

impl Configuration {
    pub fn new(centres: Vec<[f64; 2]>, alphas: Vec<f64>) -> Result<Self> {
        if centres.is_empty() {
            return Err(Error::Configuration("at least one centre is required".into()));
        }
        if centres.len() != alphas.len() {
            return Err(Error::Configuration(format!(
                "{} centres but {} strengths",
                centres.len(),
                alphas.len()
            )));
        }
        if centres.iter().flatten().chain(&alphas).any(|v| !v.is_finite()) {
            return Err(Error::Configuration("non-finite coordinate or strength".into()));
        }
        let cfg = Self { centres, alphas };
        for j in 0..cfg.n() {
            for k in 0..j {
                if !(cfg.distance(j, k) > 0.0) {
                    return Err(Error::Configuration(format!("centres {k} and {j} coincide")));
                }
            }
        }
        Ok(cfg)
    }

    pub fn n(&self) -> usize {
        self.centres.len()
    }

    pub fn centres(&self) -> &[[f64; 2]] {
        &self.centres
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn distance(&self, j: usize, k: usize) -> f64 {
        let (a, b) = (self.centres[j], self.centres[k]);
        (a[0] - b[0]).hypot(a[1] - b[1])
    }

    pub fn max_distance(&self) -> f64 {
        let mut d: f64 = 0.0;
        for j in 0..self.n() {
            for k in 0..j {
                d = d.max(self.distance(j, k));
            }
        }
        d
    }

    pub fn with_alphas(&self, alphas: Vec<f64>) -> Result<Self> {
        Self::new(self.centres.clone(), alphas)
    }

    /// Rotate all centres by `angle` about the origin, then translate by `shift`.
    pub fn moved(&self, shift: [f64; 2], angle: f64) -> Result<Self> {
        let (s, c) = angle.sin_cos();
        let centres = self
            .centres
            .iter()
            .map(|y| [c * y[0] - s * y[1] + shift[0], s * y[0] + c * y[1] + shift[1]])
            .collect();
        Self::new(centres, self.alphas.clone())
    }
}

/// `(1/2π) log d`, the off-diagonal entry of `D̃`; every caller uses this one rounding.
pub(crate) fn log_entry(d: f64) -> f64 {
    d.ln() / TWO_PI
}

#[derive(Clone, Debug)]
pub struct GammaMatrix {
    pub entries: CMatrix,
    pub lambda: SpectralParameter,
    pub condition_estimate: f64,
}

/// `Γ_jj = α_j - g(λ)`, `Γ_jk = -𝒢_λ(y_j - y_k)`.
pub fn build_gamma(config: &Configuration, lambda: &SpectralParameter) -> Result<GammaMatrix> {
    let entries = gamma_entries(config, lambda)?;
    let sv = entries.clone().singular_values();
    let smin = sv.min();
    let condition_estimate = if smin > 0.0 { sv.max() / smin } else { f64::INFINITY };
    Ok(GammaMatrix { entries, lambda: *lambda, condition_estimate })
}

pub(crate) fn gamma_entries(config: &Configuration, lambda: &SpectralParameter) -> Result<CMatrix> {
    let n = config.n();
    let g = g_scale(lambda);
    let mut m = CMatrix::zeros(n, n);
    for j in 0..n {
        m[(j, j)] = Complex64::new(config.alphas[j], 0.0) - g;
        for k in 0..j {
            let v = -green_free_r(lambda, config.distance(j, k))?;
            m[(j, k)] = v;
            m[(k, j)] = v;
        }
    }
    Ok(m)
}

/// Real symmetric matrices of the expansion `A(λ) = P + F + λ²𝒢₁ + λ²g⁻¹𝒢₂ + O(λ⁴)`.
#[derive(Clone, Debug)]
pub struct StructureMatrices {
    pub dtilde: RMatrix,
    pub g1: RMatrix,
    pub g2: RMatrix,
    pub g2tilde: RMatrix,
    pub proj_p: RMatrix,
    pub proj_s: RMatrix,
}

pub fn build_structure(config: &Configuration) -> StructureMatrices {
    let n = config.n();
    let nf = n as f64;
    let mut dtilde = RMatrix::zeros(n, n);
    let mut g1 = RMatrix::zeros(n, n);
    let mut g2 = RMatrix::zeros(n, n);
    let mut g2tilde = RMatrix::zeros(n, n);
    for j in 0..n {
        dtilde[(j, j)] = config.alphas[j];
        for k in 0..j {
            let d = config.distance(j, k);
            let d2 = d * d;
            let ld = d.ln();
            let entries = [
                (&mut dtilde, log_entry(d)),
                (&mut g1, -d2 / (4.0 * nf)),
                (&mut g2, d2 * (ld - 1.0) / (8.0 * PI * nf)),
                (&mut g2tilde, d2 * ld / (8.0 * PI * nf)),
            ];
            for (m, v) in entries {
                m[(j, k)] = v;
                m[(k, j)] = v;
            }
        }
    }
    let proj_p = RMatrix::from_element(n, n, 1.0 / nf);
    let proj_s = RMatrix::identity(n, n) - &proj_p;
    StructureMatrices { dtilde, g1, g2, g2tilde, proj_p, proj_s }
}

#[derive(Clone, Debug)]
pub struct GammaInverse {
    pub inverse: CMatrix,
    pub condition: f64,
}

pub const MAX_CONDITION: f64 = 1e14;

/// Direct inverse, symmetrized; refuses condition numbers beyond `1e14`.
pub fn invert_gamma(gamma: &GammaMatrix) -> Result<GammaInverse> {
    let (inv, cond) = invert_complex(&gamma.entries, "Γ(λ)")?;
    if cond > MAX_CONDITION {
        let sigma_min = gamma.entries.clone().singular_values().min();
        return Err(Error::NearSingular { what: "Γ(λ)".into(), sigma_min });
    }
    let inverse = (&inv + inv.transpose()) * Complex64::new(0.5, 0.0);
    Ok(GammaInverse { inverse, condition: cond })
}

#[derive(Clone, Debug)]
pub struct JnInverse {
    pub inverse: CMatrix,
    /// `B` in the orthonormal basis `basis` of `range(S)`.
    pub b: CMatrix,
    pub basis: RMatrix,
}

/// Invert `A` through `B = S - S(A+S)⁻¹S` on `range(S)`.
pub fn jn_invert(a: &CMatrix, s: &RMatrix, tol: f64) -> Result<JnInverse> {
    let n = a.nrows();
    if a.ncols() != n || s.shape() != (n, n) {
        return Err(Error::Precondition("jn_invert needs square A and S of equal size".into()));
    }
    let q = range_basis(s);
    let m = a + to_complex(s);
    let (minv, cond) = invert_complex(&m, "A + S")?;
    if cond > MAX_CONDITION {
        let sigma_min = m.singular_values().min();
        return Err(Error::NearSingular { what: "A + S".into(), sigma_min });
    }
    let r = q.ncols();
    if r == 0 {
        return Ok(JnInverse { inverse: minv, b: CMatrix::zeros(0, 0), basis: q });
    }
    let qc = to_complex(&q);
    let b = CMatrix::identity(r, r) - qc.transpose() * &minv * &qc;
    let svd = b.clone().svd(false, true);
    let smax = svd.singular_values.max();
    let (kmin, smin) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
    if smin < tol * smax.max(1.0) {
        let vt = svd.v_t.expect("requested V^t");
        let v: DVector<Complex64> = vt.row(kmin).adjoint();
        let dir = &qc * v;
        return Err(Error::SingularDirection {
            what: "A (Jensen–Nenciu complement B)".into(),
            direction: dir.iter().copied().collect(),
        });
    }
    let binv = b
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::NearSingular { what: "B".into(), sigma_min: smin })?;
    let inverse = &minv + &minv * &qc * binv * qc.transpose() * &minv;
    Ok(JnInverse { inverse, b, basis: q })
}

/// `A(λ) = -Γ(λ)/(N g(λ))`.
pub fn scaled_gamma(config: &Configuration, lambda: &SpectralParameter) -> Result<CMatrix> {
    let g = g_scale(lambda);
    let n = config.n() as f64;
    Ok(gamma_entries(config, lambda)? * (-1.0 / (n * g)))
}

/// `F(λ) = -(1/N) g(λ)⁻¹ D̃`.
pub fn f_matrix(structure: &StructureMatrices, lambda: &SpectralParameter) -> CMatrix {
    let n = structure.dtilde.nrows() as f64;
    to_complex(&structure.dtilde) * (-1.0 / (n * g_scale(lambda)))
}

/// `P + F + λ²𝒢₁ + λ²g⁻¹𝒢₂`.
pub fn scaled_gamma_expansion(structure: &StructureMatrices, lambda: &SpectralParameter) -> CMatrix {
    let l2 = lambda.value() * lambda.value();
    let g = g_scale(lambda);
    to_complex(&structure.proj_p)
        + f_matrix(structure, lambda)
        + to_complex(&structure.g1) * l2
        + to_complex(&structure.g2) * (l2 / g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn configuration_rejects_coincident_centres() {
        let r = Configuration::new(vec![[0.0, 0.0], [0.0, 0.0]], vec![0.0, 0.0]);
        assert!(matches!(r, Err(Error::Configuration(_))));
    }

    #[test]
    fn gamma_is_exactly_symmetric() {
        let c = Configuration::new(vec![[0.0, 0.0], [1.0, 0.3], [-0.4, 2.0]], vec![0.1, 0.2, -0.3])
            .unwrap();
        let l = SpectralParameter::new(Complex64::new(0.7, 0.2)).unwrap();
        let g = build_gamma(&c, &l).unwrap();
        assert_eq!(g.entries, g.entries.transpose());
    }
}
