//! Small dense helpers shared by the classifier, the sweeps and the zero-mode solver.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

/// Orthonormal columns spanning the range of an orthogonal projection.
pub fn range_basis(p: &RMatrix) -> RMatrix {
    let n = p.nrows();
    let eig = SymmetricEigen::new(symmetrize(p));
    let cols: Vec<DVector<f64>> = (0..n)
        .filter(|&k| eig.eigenvalues[k] > 0.5)
        .map(|k| eig.eigenvectors.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        RMatrix::zeros(n, 0)
    } else {
        RMatrix::from_columns(&cols)
    }
}

pub fn projector(basis: &RMatrix) -> RMatrix {
    basis * basis.transpose()
}

pub fn symmetrize(m: &RMatrix) -> RMatrix {
    (m + m.transpose()) * 0.5
}

/// Eigen-decomposition of `QᵗMQ`, eigenvalues ascending, eigenvectors mapped back
/// into the ambient space as columns of `Q·V`.
pub fn restricted_eigen(m: &RMatrix, q: &RMatrix) -> (Vec<f64>, RMatrix) {
    let r = q.ncols();
    if r == 0 {
        return (Vec::new(), RMatrix::zeros(m.nrows(), 0));
    }
    let k = symmetrize(&(q.transpose() * m * q));
    let eig = SymmetricEigen::new(k);
    let mut idx: Vec<usize> = (0..r).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = RMatrix::from_columns(
        &idx.iter().map(|&i| q * eig.eigenvectors.column(i)).collect::<Vec<_>>(),
    );
    (vals, vecs)
}

pub fn spectral_norm(m: &RMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

pub fn spectral_norm_c(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// LU inverse with a 2-norm condition estimate from the singular values.
pub fn invert_complex(m: &CMatrix, what: &str) -> Result<(CMatrix, f64)> {
    let sv = m.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if !(smin > 0.0) || !smin.is_finite() {
        return Err(Error::NearSingular { what: what.into(), sigma_min: smin });
    }
    let inv = m
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::NearSingular { what: what.into(), sigma_min: smin })?;
    Ok((inv, smax / smin))
}

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Flip the sign so that the first component above `1e-12·‖v‖` is positive.
pub fn normalize_sign(v: &DVector<f64>) -> DVector<f64> {
    let n = v.norm();
    let mut out = if n > 0.0 { v / n } else { v.clone() };
    if let Some(x) = out.iter().find(|x| x.abs() > 1e-12) {
        if *x < 0.0 {
            out = -out;
        }
    }
    out
}

/// Orthonormal basis of `{v : Σv = 0}`.
pub fn sum_zero_basis(n: usize) -> RMatrix {
    let p = RMatrix::from_element(n, n, 1.0 / n as f64);
    range_basis(&(RMatrix::identity(n, n) - p))
}

/// Right null space of `a` with relative singular-value tolerance; `a` is padded with
/// zero rows so that the full right singular basis is available.
pub fn null_space(a: &RMatrix, tol: f64) -> (RMatrix, Vec<f64>) {
    let (m, n) = a.shape();
    let padded = if m < n {
        let mut p = RMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V^t");
    let smax = svd.singular_values.max();
    let scale = if smax > 0.0 { smax } else { 1.0 };
    let mut cols = Vec::new();
    let mut sv = Vec::new();
    for (k, s) in svd.singular_values.iter().enumerate() {
        sv.push(*s);
        if *s < tol * scale {
            cols.push(vt.row(k).transpose());
        }
    }
    let basis = if cols.is_empty() { RMatrix::zeros(n, 0) } else { RMatrix::from_columns(&cols) };
    (basis, sv)
}

/// Ordinary least squares `y ≈ a + b x`; returns `(b, R²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let b = sxy / sxx;
    let r2 = if syy > 0.0 { (sxy * sxy / (sxx * syy)).min(1.0) } else { 1.0 };
    (b, r2)
}
