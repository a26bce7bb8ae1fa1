//! Threshold behaviour of `H_{α,Y}` at energy zero.
//!
//! The decision tree works on orthonormal bases: `Q_S` spans `range(S)`, `Q_T` the
//! kernel of `SD̃S` inside it and `Q₁` the kernel of `T𝒢₁T` inside `range(T)`. Every
//! kernel test compares eigenvalues of a restricted matrix `QᵗMQ` against
//! `tol·‖M‖₂` of the unrestricted matrix (or `tol` when `M = 0`).

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::gamma_core::{build_structure, Configuration, StructureMatrices};
use crate::green_functions::log_potential;
use crate::linalg::{normalize_sign, restricted_eigen, spectral_norm, sum_zero_basis, RMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ThresholdTag {
    Regular,
    SWave,
    PWave,
    ZeroEigenvalue,
}

impl ThresholdTag {
    pub fn label(self) -> &'static str {
        match self {
            ThresholdTag::Regular => "regular",
            ThresholdTag::SWave => "s-wave",
            ThresholdTag::PWave => "p-wave",
            ThresholdTag::ZeroEigenvalue => "zero-eigenvalue",
        }
    }
}

impl std::fmt::Display for ThresholdTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Margins of one kernel decision, relative to the scale of the tested matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionMargin {
    pub stage: &'static str,
    /// Dimension of the space the matrix was restricted to.
    pub dimension: usize,
    pub kernel_rank: usize,
    /// Largest relative eigenvalue (or singular value) classified as zero.
    pub largest_kernel: Option<f64>,
    /// Smallest relative eigenvalue (or singular value) classified as nonzero.
    pub smallest_retained: Option<f64>,
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    pub tolerance: f64,
    pub decisions: Vec<DecisionMargin>,
    /// Some retained value was within `10·tol` of the cut.
    pub ill_conditioned: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CaseData {
    /// `[SD̃S]⁻¹` on `range(S)`, embedded as an N×N matrix vanishing on `1̂`.
    Regular { inverse_block: RMatrix },
    /// `f` spans `range(T)`, `⟨f, D̃²f⟩ = γ₀⁻²` and `D̃f = b·1̂`.
    SWave { f: DVector<f64>, gamma0: f64, b: f64 },
    /// `T[T𝒢₁T]⁻¹T = Σ a_j f_j f_jᵗ`.
    PWave { vectors: Vec<DVector<f64>>, weights: Vec<f64> },
    /// Basis of `range(T₁)` and both restrictions, in that basis.
    ZeroEigenvalue { basis: Vec<DVector<f64>>, t1_g2tilde_t1: RMatrix, t1_g2_t1: RMatrix },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdClassification {
    pub case: CaseData,
    /// Orthonormal basis of `range(T)`, N×rank T.
    pub t_basis: RMatrix,
    pub diagnostics: Diagnostics,
}

impl ThresholdClassification {
    pub fn tag(&self) -> ThresholdTag {
        match self.case {
            CaseData::Regular { .. } => ThresholdTag::Regular,
            CaseData::SWave { .. } => ThresholdTag::SWave,
            CaseData::PWave { .. } => ThresholdTag::PWave,
            CaseData::ZeroEigenvalue { .. } => ThresholdTag::ZeroEigenvalue,
        }
    }

    pub fn t_projection(&self) -> RMatrix {
        &self.t_basis * self.t_basis.transpose()
    }

    /// Number of zero modes (only nonzero in the zero-eigenvalue case).
    pub fn zero_mode_count(&self) -> usize {
        match &self.case {
            CaseData::ZeroEigenvalue { basis, .. } => basis.len(),
            _ => 0,
        }
    }

    /// Smallest retained relative value across all decisions.
    pub fn margin(&self) -> Option<f64> {
        self.diagnostics
            .decisions
            .iter()
            .filter_map(|d| d.smallest_retained)
            .min_by(f64::total_cmp)
    }
}

fn scale_of(m: &RMatrix) -> f64 {
    let s = spectral_norm(m);
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

struct Split {
    kernel: RMatrix,
    retained_vals: Vec<f64>,
    retained_vecs: RMatrix,
    margin: DecisionMargin,
}

fn columns(m: &RMatrix, idx: &[usize]) -> RMatrix {
    if idx.is_empty() {
        RMatrix::zeros(m.nrows(), 0)
    } else {
        RMatrix::from_columns(&idx.iter().map(|&i| m.column(i).into_owned()).collect::<Vec<_>>())
    }
}

fn split_symmetric(m: &RMatrix, q: &RMatrix, tol: f64, stage: &'static str) -> Split {
    let scale = scale_of(m);
    let (vals, vecs) = restricted_eigen(m, q);
    let (mut ker, mut ret) = (Vec::new(), Vec::new());
    for (i, v) in vals.iter().enumerate() {
        if v.abs() < tol * scale {
            ker.push(i);
        } else {
            ret.push(i);
        }
    }
    let rel = |idx: &[usize]| idx.iter().map(|&i| vals[i].abs() / scale).collect::<Vec<_>>();
    let margin = DecisionMargin {
        stage,
        dimension: q.ncols(),
        kernel_rank: ker.len(),
        largest_kernel: rel(&ker).into_iter().max_by(f64::total_cmp),
        smallest_retained: rel(&ret).into_iter().min_by(f64::total_cmp),
        scale,
    };
    Split {
        kernel: columns(&vecs, &ker),
        retained_vals: ret.iter().map(|&i| vals[i]).collect(),
        retained_vecs: columns(&vecs, &ret),
        margin,
    }
}

/// Orthogonal projection onto the numerical kernel of `within·M·within` in `range(within)`.
///
/// Eigenvalues count as zero below `tol·‖M‖₂` (`tol` when `M = 0`).
pub fn projection_kernel(m: &RMatrix, within: &RMatrix, tol: f64) -> RMatrix {
    let q = crate::linalg::range_basis(within);
    let k = split_symmetric(m, &q, tol, "kernel").kernel;
    &k * k.transpose()
}

/// Run the threshold decision tree with relative tolerance `tol`.
pub fn classify(config: &Configuration, tol: f64) -> Result<ThresholdClassification> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Precondition(format!("tolerance {tol} outside (0, 1)")));
    }
    let n = config.n();
    let st = build_structure(config);
    let mut diag = Diagnostics { tolerance: tol, decisions: Vec::new(), ill_conditioned: false };
    let push = |diag: &mut Diagnostics, m: DecisionMargin| {
        if m.smallest_retained.is_some_and(|v| v < 10.0 * tol) {
            diag.ill_conditioned = true;
        }
        diag.decisions.push(m);
    };

    if n == 1 {
        return Ok(ThresholdClassification {
            case: CaseData::Regular { inverse_block: RMatrix::zeros(1, 1) },
            t_basis: RMatrix::zeros(1, 0),
            diagnostics: diag,
        });
    }

    let qs = sum_zero_basis(n);
    let sds = split_symmetric(&st.dtilde, &qs, tol, "S D~ S");
    push(&mut diag, sds.margin.clone());
    let qt = sds.kernel;
    if qt.ncols() == 0 {
        let v = &sds.retained_vecs;
        let inv = RMatrix::from_diagonal(&DVector::from_iterator(
            v.ncols(),
            sds.retained_vals.iter().map(|x| 1.0 / x),
        ));
        return Ok(ThresholdClassification {
            case: CaseData::Regular { inverse_block: v * inv * v.transpose() },
            t_basis: qt,
            diagnostics: diag,
        });
    }

    // T D~² T = (D~Q_T)ᵗ(D~Q_T): decide on the singular values of D~Q_T.
    let dscale = scale_of(&st.dtilde);
    let dq = &st.dtilde * &qt;
    let sv = dq.clone().singular_values();
    let rel: Vec<f64> = sv.iter().map(|s| s / dscale).collect();
    let rank_td2t = rel.iter().filter(|&&s| s >= tol).count();
    push(
        &mut diag,
        DecisionMargin {
            stage: "T D~^2 T",
            dimension: qt.ncols(),
            kernel_rank: qt.ncols() - rank_td2t,
            largest_kernel: rel.iter().copied().filter(|&s| s < tol).max_by(f64::total_cmp),
            smallest_retained: rel.iter().copied().filter(|&s| s >= tol).min_by(f64::total_cmp),
            scale: dscale,
        },
    );
    if rank_td2t > 1 {
        return Err(Error::Internal(format!(
            "T D~^2 T has numerical rank {rank_td2t}; D~T must map into span(1)"
        )));
    }
    if rank_td2t == 1 {
        if qt.ncols() > 1 {
            return Err(Error::MixedThreshold { rank_t: qt.ncols(), rank_td2t });
        }
        let f = normalize_sign(&qt.column(0).into_owned());
        let df = &st.dtilde * &f;
        let gamma0 = 1.0 / df.norm();
        let b = df.sum() / n as f64;
        if !(b.abs() > tol * dscale) {
            return Err(Error::Internal(format!("s-wave offset b = {b:e} vanishes")));
        }
        return Ok(ThresholdClassification {
            case: CaseData::SWave { f: f.clone(), gamma0, b },
            t_basis: RMatrix::from_columns(&[f]),
            diagnostics: diag,
        });
    }

    let g1 = split_symmetric(&st.g1, &qt, tol, "T G1 T");
    push(&mut diag, g1.margin.clone());
    if g1.kernel.ncols() == 0 {
        if let Some(mu) = g1.retained_vals.iter().find(|&&v| v <= 0.0) {
            return Err(Error::Internal(format!("T G1 T has non-positive eigenvalue {mu:e}")));
        }
        let vectors = g1.retained_vecs.column_iter().map(|c| normalize_sign(&c.into_owned())).collect();
        let weights = g1.retained_vals.iter().map(|v| 1.0 / v).collect();
        return Ok(ThresholdClassification {
            case: CaseData::PWave { vectors, weights },
            t_basis: qt,
            diagnostics: diag,
        });
    }

    zero_case(&st, qt, g1, tol, diag)
}

fn zero_case(
    st: &StructureMatrices,
    qt: RMatrix,
    g1: Split,
    tol: f64,
    mut diag: Diagnostics,
) -> Result<ThresholdClassification> {
    let q1 = g1.kernel;
    let m2t = crate::linalg::symmetrize(&(q1.transpose() * &st.g2tilde * &q1));
    let m2 = crate::linalg::symmetrize(&(q1.transpose() * &st.g2 * &q1));
    // G2 - G2~ = G1/2π, so the two restrictions differ by Q₁ᵗG1Q₁/2π
    let g1scale = scale_of(&st.g1);
    let gap = spectral_norm(&(&m2 - &m2t));
    if gap > tol * g1scale {
        return Err(Error::Internal(format!(
            "T1 G2 T1 and T1 G2~ T1 differ by {gap:e} on range(T1)"
        )));
    }
    let s2scale = scale_of(&st.g2tilde);
    let rel = m2t.symmetric_eigenvalues().iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min) / s2scale;
    if rel < 10.0 * tol {
        diag.ill_conditioned = true;
    }
    diag.decisions.push(DecisionMargin {
        stage: "T1 G2~ T1",
        dimension: q1.ncols(),
        kernel_rank: usize::from(rel < tol),
        largest_kernel: None,
        smallest_retained: Some(rel),
        scale: s2scale,
    });
    if rel < tol {
        return Err(Error::Internal(format!(
            "T1 G2~ T1 is singular on range(T1) (relative eigenvalue {rel:e})"
        )));
    }
    let basis = if q1.ncols() == 1 {
        vec![normalize_sign(&q1.column(0).into_owned())]
    } else {
        q1.column_iter().map(|c| c.into_owned()).collect()
    };
    let qb = RMatrix::from_columns(&basis);
    let t1_g2tilde_t1 = crate::linalg::symmetrize(&(qb.transpose() * &st.g2tilde * &qb));
    let t1_g2_t1 = crate::linalg::symmetrize(&(qb.transpose() * &st.g2 * &qb));
    Ok(ThresholdClassification {
        case: CaseData::ZeroEigenvalue { basis, t1_g2tilde_t1, t1_g2_t1 },
        t_basis: qt,
        diagnostics: diag,
    })
}

/// Closed-form two-centre classification at the default tolerance.
pub fn classify_two_centres(alpha1: f64, alpha2: f64, d: f64) -> Result<ThresholdTag> {
    classify_two_centres_with_tol(alpha1, alpha2, d, crate::DEFAULT_TOL)
}

/// Regular iff `α₁+α₂ ≠ π⁻¹log d`, p-wave iff `α₁ = α₂ = (2π)⁻¹log d`, s-wave otherwise.
///
/// "≠" and "=" are decided with the same relative scales as [`classify`]: the
/// restricted value `(α₁+α₂)/2 − c` and `‖D̃f‖` are compared to `tol·‖D̃‖₂`.
pub fn classify_two_centres_with_tol(alpha1: f64, alpha2: f64, d: f64, tol: f64) -> Result<ThresholdTag> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Configuration(format!("distance {d} must be positive")));
    }
    let c = crate::gamma_core::log_entry(d);
    let mean = 0.5 * (alpha1 + alpha2);
    let half = 0.5 * (alpha1 - alpha2);
    let norm = mean.abs() + half.hypot(c);
    let scale = if norm > 0.0 { norm } else { 1.0 };
    if (mean - c).abs() >= tol * scale {
        return Ok(ThresholdTag::Regular);
    }
    let df = (alpha1 - c).hypot(c - alpha2) / std::f64::consts::SQRT_2;
    Ok(if df >= tol * scale { ThresholdTag::SWave } else { ThresholdTag::PWave })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FarFieldFit {
    /// Limit at infinity subtracted before fitting.
    pub limit: f64,
    /// Least-squares slope of `log max_ω |φ(rω) − limit|` against `log r`.
    pub exponent: f64,
    pub fit_quality: f64,
}

/// `x ↦ offset + Σ c_j G₀(x − y_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceFunction {
    pub tag: ThresholdTag,
    pub coefficients: DVector<f64>,
    pub offset: f64,
    centres: Vec<[f64; 2]>,
}

impl ResonanceFunction {
    pub fn eval(&self, x: [f64; 2]) -> Result<f64> {
        Ok(self.offset + log_potential(self.coefficients.as_slice(), &self.centres, x)?)
    }

    /// Fit over `|x| ∈ [10², 10⁴]`, 8 rays, 21 radii.
    pub fn far_field(&self) -> Result<FarFieldFit> {
        far_field_fit(|x| log_potential(self.coefficients.as_slice(), &self.centres, x), self.offset)
            .map(|mut f| {
                f.limit = self.offset;
                f
            })
    }
}

/// Slope of the 8-ray envelope of `|h(x)|` against `|x|` on `[10², 10⁴]`.
pub fn far_field_fit(h: impl Fn([f64; 2]) -> Result<f64>, limit: f64) -> Result<FarFieldFit> {
    let radii: Vec<f64> = (0..=20).map(|i| 10f64.powf(2.0 + 0.1 * i as f64)).collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in radii {
        let mut env: f64 = 0.0;
        for k in 0..8 {
            // offset angle so no ray is aligned with a symmetry axis of typical configs
            let th = std::f64::consts::PI * (k as f64 + 0.3) / 4.0;
            env = env.max(h([r * th.cos(), r * th.sin()])?.abs());
        }
        if env > 0.0 {
            xs.push(r.ln());
            ys.push(env.ln());
        }
    }
    if xs.len() < 3 {
        return Err(Error::Domain("far field vanishes identically".into()));
    }
    let (slope, r2) = crate::linalg::linear_fit(&xs, &ys);
    Ok(FarFieldFit { limit, exponent: slope, fit_quality: r2 })
}

/// Zero-energy solutions of the non-regular cases.
///
/// s-wave: `⟨f, Ĝ₀(x)⟩ + b`; p-wave: `⟨f_j, Ĝ₀(x)⟩`; zero modes: `⟨a_j, Ĝ₀(x)⟩`.
pub fn resonance_functions(
    classification: &ThresholdClassification,
    config: &Configuration,
) -> Result<Vec<ResonanceFunction>> {
    let centres = config.centres().to_vec();
    let make = |tag, c: &DVector<f64>, offset| ResonanceFunction {
        tag,
        coefficients: c.clone(),
        offset,
        centres: centres.clone(),
    };
    match &classification.case {
        CaseData::Regular { .. } => {
            Err(Error::WrongCase("regular threshold has no resonance functions".into()))
        }
        CaseData::SWave { f, b, .. } => Ok(vec![make(ThresholdTag::SWave, f, *b)]),
        CaseData::PWave { vectors, .. } => {
            Ok(vectors.iter().map(|f| make(ThresholdTag::PWave, f, 0.0)).collect())
        }
        CaseData::ZeroEigenvalue { basis, .. } => {
            Ok(basis.iter().map(|a| make(ThresholdTag::ZeroEigenvalue, a, 0.0)).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_of_identity_is_zero() {
        let s = RMatrix::identity(3, 3) - RMatrix::from_element(3, 3, 1.0 / 3.0);
        let p = projection_kernel(&RMatrix::identity(3, 3), &s, 1e-10);
        assert_eq!(p.norm(), 0.0);
    }

    #[test]
    fn single_centre_is_regular() {
        let c = Configuration::new(vec![[0.0, 0.0]], vec![3.0]).unwrap();
        assert_eq!(classify(&c, 1e-10).unwrap().tag(), ThresholdTag::Regular);
    }
}
