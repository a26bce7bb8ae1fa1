//! Double-double assembly and inversion of `Γ(λ)` for real `λ > 0`.
//!
//! For small λ the Γ entries are `O(|g|)` while the structure that decides the
//! p-wave and zero-eigenvalue expansions sits at `O(λ²)`. The matrix is assembled
//! as `-g 11ᵗ + D̃ - R̂` with each piece a double, so the sum is exact in
//! double-double, and the factorization is carried out in the same arithmetic.
//! `R̂` itself is summed in double-double from exact squared distances.
//!
//! [`zero_case_expansion`] goes further for the zero-eigenvalue case, where the
//! remainder sits some 25 orders below the leading term at λ = 1e-12.

use nalgebra::{DMatrix, DVector};
use num_complex::{Complex, Complex64};
use twofloat::{consts, TwoFloat};

use super::{log_entry, Configuration};
use crate::error::{Error, Result};
use crate::green_functions::{g_scale, green_remainder, SpectralParameter, REGIME_SWITCH};
use crate::linalg::CMatrix;

type Dd = Complex<TwoFloat>;

/// Smallest λ accepted by the extended-precision path.
pub const MIN_LAMBDA: f64 = 1e-12 * (1.0 - 1e-9);

fn dd(z: Complex64) -> Dd {
    Complex::new(TwoFloat::from(z.re), TwoFloat::from(z.im))
}

fn zero() -> Dd {
    Complex::new(0.0.into(), 0.0.into())
}

fn real(x: TwoFloat) -> Dd {
    Complex::new(x, 0.0.into())
}

fn back(z: Dd) -> Complex64 {
    Complex64::new(f64::from(z.re), f64::from(z.im))
}

fn magnitude(z: &Dd) -> f64 {
    z.re.hi().hypot(z.im.hi())
}

/// `Γ(λ)⁻¹` rounded to double after an extended-precision solve.
pub fn gamma_inverse_extended(config: &Configuration, lambda: f64) -> Result<CMatrix> {
    if !(lambda >= MIN_LAMBDA) || !lambda.is_finite() {
        return Err(Error::Domain(format!(
            "extended-precision path supports λ ≥ 1e-12, got {lambda:e}"
        )));
    }
    let n = config.n();
    let l = SpectralParameter::real(lambda)?;
    let g = dd(g_scale(&l));
    let r = remainder_matrix(config, lambda)?;
    let mut a: Vec<Vec<Dd>> = vec![vec![zero(); n]; n];
    for j in 0..n {
        a[j][j] = Dd::new(TwoFloat::from(config.alphas()[j]), 0.0.into()) - g;
        for k in 0..j {
            let v = Dd::new(TwoFloat::from(log_entry(config.distance(j, k))), 0.0.into()) - g - r[j][k];
            a[j][k] = v;
            a[k][j] = v;
        }
    }
    let inv = gauss_jordan(a)?;
    let mut out = CMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            out[(j, k)] = back((inv[j][k] + inv[k][j]) * TwoFloat::from(0.5));
        }
    }
    Ok(out)
}

/// `a / b` to double-double accuracy. The crate's own division is only good to
/// about 1e-17 relative, so the quotient is corrected twice from the residual.
fn dd_div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let mut q = TwoFloat::from(a.hi() / b.hi());
    for _ in 0..2 {
        let r = a - q * b;
        q += TwoFloat::from(r.hi() / b.hi());
    }
    q
}

fn dd_sqrt(x: TwoFloat) -> TwoFloat {
    let mut s = TwoFloat::from(x.hi().sqrt());
    for _ in 0..2 {
        s += dd_div(x - s * s, s * 2.0);
    }
    s
}

/// `eˣ` by reduction modulo ln 2, a Taylor sum on `r/16` and four squarings.
fn dd_exp(x: TwoFloat) -> TwoFloat {
    let k = (x.hi() / std::f64::consts::LN_2).round();
    let r = (x - consts::LN_2 * k) * (1.0 / 16.0);
    let mut term = TwoFloat::from(1.0);
    let mut sum = TwoFloat::from(1.0);
    for i in 1..=20 {
        term = dd_div(term * r, TwoFloat::from(i as f64));
        sum += term;
    }
    for _ in 0..4 {
        sum = sum * sum;
    }
    sum * 2f64.powi(k as i32)
}

/// Natural log by Newton steps on `eʸ = x` from the double value.
fn dd_ln(x: TwoFloat) -> TwoFloat {
    let mut y = TwoFloat::from(x.hi().ln());
    for _ in 0..2 {
        y += x * dd_exp(-y) - 1.0;
    }
    y
}

/// Exact `|y_j - y_k|²` from the coordinates.
fn squared_distance(config: &Configuration, j: usize, k: usize) -> TwoFloat {
    let (a, b) = (config.centres()[j], config.centres()[k]);
    let dx = TwoFloat::from(a[0]) - b[0];
    let dy = TwoFloat::from(a[1]) - b[1];
    dx * dx + dy * dy
}

/// `R₀(λ, d) = (g(λ) - ln d/2π)(J₀(λd) - 1) + Σ_k H_k p_k / 2π`, `p_k = (-λ²d²/4)ᵏ/(k!)²`.
fn remainder_dd(g: Dd, lambda: f64, d2: TwoFloat) -> Dd {
    let w = -(d2 * lambda * lambda) * 0.25;
    let mut p = TwoFloat::from(1.0);
    let mut harmonic = TwoFloat::from(0.0);
    let mut jm1 = TwoFloat::from(0.0);
    let mut hs = TwoFloat::from(0.0);
    for k in 1..80 {
        let kf = k as f64;
        p = dd_div(p * w, TwoFloat::from(kf * kf));
        harmonic += dd_div(TwoFloat::from(1.0), TwoFloat::from(kf));
        jm1 += p;
        hs += p * harmonic;
        if p.hi().abs() * (1.0 + harmonic.hi()) <= 1e-34 * jm1.hi().abs() {
            break;
        }
    }
    let log_d = dd_div(dd_ln(d2) * 0.5, consts::TAU);
    Complex::new(g.re - log_d, g.im) * jm1 + real(dd_div(hs, consts::TAU))
}

/// Off-diagonal `R̂_jk`, double-double on the series side.
fn remainder_matrix(config: &Configuration, lambda: f64) -> Result<Vec<Vec<Dd>>> {
    let n = config.n();
    let l = SpectralParameter::real(lambda)?;
    let g = dd(g_scale(&l));
    let mut r = vec![vec![zero(); n]; n];
    for j in 0..n {
        for k in 0..j {
            let d = config.distance(j, k);
            let v = if lambda * d <= REGIME_SWITCH {
                remainder_dd(g, lambda, squared_distance(config, j, k))
            } else {
                dd(green_remainder(&l, d)?)
            };
            r[j][k] = v;
            r[k][j] = v;
        }
    }
    Ok(r)
}

fn reciprocal(z: Dd) -> Dd {
    let n2 = z.re * z.re + z.im * z.im;
    Complex::new(dd_div(z.re, n2), dd_div(-z.im, n2))
}

fn gauss_jordan(mut a: Vec<Vec<Dd>>) -> Result<Vec<Vec<Dd>>> {
    let n = a.len();
    let zero = Dd::new(0.0.into(), 0.0.into());
    let one = Dd::new(1.0.into(), 0.0.into());
    let mut inv: Vec<Vec<Dd>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { one } else { zero }).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| magnitude(&a[x][col]).total_cmp(&magnitude(&a[y][col])))
            .expect("non-empty range");
        if magnitude(&a[piv][col]) == 0.0 {
            return Err(Error::NearSingular { what: "Γ(λ) (extended)".into(), sigma_min: 0.0 });
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = reciprocal(a[col][col]);
        for j in 0..n {
            a[col][j] = a[col][j] * p;
            inv[col][j] = inv[col][j] * p;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row][col];
            if magnitude(&f) == 0.0 {
                continue;
            }
            for j in 0..n {
                let t = a[col][j];
                a[row][j] = a[row][j] - f * t;
                let u = inv[col][j];
                inv[row][j] = inv[row][j] - f * u;
            }
        }
    }
    Ok(inv)
}

/// `‖Γ(λ)⁻¹‖`, `‖L(λ)‖` and `‖Γ(λ)⁻¹ - L(λ)‖` for the zero-eigenvalue case,
/// `L = -N⁻¹λ⁻² T₁[T₁𝒢̃₂T₁]⁻¹T₁`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroCaseSample {
    pub computed: f64,
    pub predicted: f64,
    pub abs_err: f64,
}

fn dd_vec(v: &DVector<f64>) -> Vec<TwoFloat> {
    v.iter().map(|x| TwoFloat::from(*x)).collect()
}

fn dot(a: &[TwoFloat], b: &[TwoFloat]) -> TwoFloat {
    a.iter().zip(b).fold(TwoFloat::from(0.0), |s, (x, y)| s + *x * *y)
}

/// Push `v` onto the constraint kernel `{c·v = 0}` to double-double accuracy.
/// `pinv` is the double pseudo-inverse of the constraint rows, which are exact doubles.
fn refine(v: &mut [TwoFloat], rows: &[Vec<f64>], pinv: &DMatrix<f64>) {
    for _ in 0..3 {
        let res: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().zip(v.iter()).fold(TwoFloat::from(0.0), |s, (c, x)| s + *x * *c).hi())
            .collect();
        let delta = pinv * DVector::from_vec(res);
        for (x, d) in v.iter_mut().zip(delta.iter()) {
            *x -= *d;
        }
    }
}

/// Adds `v` to the orthonormal set if it is not already (nearly) in its span.
fn gram_schmidt_push(basis: &mut Vec<Vec<TwoFloat>>, mut v: Vec<TwoFloat>) -> bool {
    let start = dd_sqrt(dot(&v, &v)).hi();
    for _ in 0..2 {
        for q in basis.iter() {
            let c = dot(q, &v);
            for (x, y) in v.iter_mut().zip(q) {
                *x -= c * *y;
            }
        }
    }
    let nv = dd_sqrt(dot(&v, &v));
    if nv.hi() <= 1e-6 * start {
        return false;
    }
    basis.push(v.iter().map(|x| dd_div(*x, nv)).collect());
    true
}

fn constraint_rows(config: &Configuration, moments: bool) -> (Vec<Vec<f64>>, DMatrix<f64>) {
    let n = config.n();
    let mut rows = vec![vec![1.0; n]];
    if moments {
        rows.push(config.centres().iter().map(|y| y[0]).collect());
        rows.push(config.centres().iter().map(|y| y[1]).collect());
    }
    for j in 0..n {
        rows.push(
            (0..n)
                .map(|k| if j == k { config.alphas()[j] } else { log_entry(config.distance(j, k)) })
                .collect(),
        );
    }
    let c = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    let tol = 1e-12 * c.norm();
    let pinv = c.pseudo_inverse(tol).expect("tolerance is non-negative");
    (rows, pinv)
}

/// Zero-case expansion error with the defining identities used exactly.
///
/// `t_basis` spans `T = ker SD̃S`, `t1` spans `T₁ ⊂ T`. Both are refined so that
/// `1ᵗt = 0` and `D̃t = 0` hold in double-double, after which every entry of
/// `UᵗΓU` touching `T` is taken as `-uᵗR̂v`. `U = [T₁, T, 1, e_i]` orthonormalized.
/// The inverse is formed with power-of-two diagonal scaling, which removes the
/// `λ²` against `|g|` spread of the blocks.
pub fn zero_case_expansion(
    config: &Configuration,
    t_basis: &[DVector<f64>],
    t1: &[DVector<f64>],
    lambda: f64,
) -> Result<ZeroCaseSample> {
    if !(lambda >= MIN_LAMBDA) || !lambda.is_finite() {
        return Err(Error::Domain(format!(
            "extended-precision path supports λ ≥ 1e-12, got {lambda:e}"
        )));
    }
    let n = config.n();
    let m = t1.len();
    if m == 0 || t_basis.len() < m {
        return Err(Error::Precondition("zero case needs a non-empty T1 inside T".into()));
    }
    let (rows1, pinv1) = constraint_rows(config, true);
    let (rows_t, pinv_t) = constraint_rows(config, false);
    let mut basis: Vec<Vec<TwoFloat>> = Vec::with_capacity(n);
    for v in t1 {
        let mut w = dd_vec(v);
        refine(&mut w, &rows1, &pinv1);
        if !gram_schmidt_push(&mut basis, w) {
            return Err(Error::Precondition("T1 basis is rank deficient".into()));
        }
    }
    for v in t_basis {
        let mut w = dd_vec(v);
        refine(&mut w, &rows_t, &pinv_t);
        gram_schmidt_push(&mut basis, w);
    }
    let in_t = basis.len();
    gram_schmidt_push(&mut basis, vec![TwoFloat::from(1.0); n]);
    for i in 0..n {
        if basis.len() == n {
            break;
        }
        let mut e = vec![TwoFloat::from(0.0); n];
        e[i] = TwoFloat::from(1.0);
        gram_schmidt_push(&mut basis, e);
    }
    if basis.len() != n {
        return Err(Error::Internal("could not complete an orthonormal basis".into()));
    }

    let l = SpectralParameter::real(lambda)?;
    let g = dd(g_scale(&l));
    let r = remainder_matrix(config, lambda)?;
    let mut full = vec![vec![zero(); n]; n];
    for j in 0..n {
        full[j][j] = real(TwoFloat::from(config.alphas()[j])) - g;
        for k in 0..j {
            let v = real(TwoFloat::from(log_entry(config.distance(j, k)))) - g - r[j][k];
            full[j][k] = v;
            full[k][j] = v;
        }
    }
    let quad = |a: &[Vec<Dd>], u: &[TwoFloat], v: &[TwoFloat]| {
        let mut s = zero();
        for j in 0..n {
            for k in 0..n {
                s += a[j][k] * (u[j] * v[k]);
            }
        }
        s
    };
    let mut gp = vec![vec![zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let v = if i < in_t || j < in_t {
                -quad(&r, &basis[i], &basis[j])
            } else {
                quad(&full, &basis[i], &basis[j])
            };
            gp[i][j] = v;
            gp[j][i] = v;
        }
    }
    let scale: Vec<f64> = (0..n)
        .map(|i| {
            let s = magnitude(&gp[i][i]).sqrt();
            if s > 0.0 { 2f64.powi(-(s.log2().round() as i32)) } else { 1.0 }
        })
        .collect();
    for i in 0..n {
        for j in 0..n {
            gp[i][j] = gp[i][j] * TwoFloat::from(scale[i] * scale[j]);
        }
    }
    let mut inv = gauss_jordan(gp)?;
    for i in 0..n {
        for j in 0..n {
            inv[i][j] = inv[i][j] * TwoFloat::from(scale[i] * scale[j]);
        }
    }

    // -N⁻¹λ⁻² [T₁𝒢̃₂T₁]⁻¹ in the first m coordinates
    let mut g2 = vec![vec![zero(); n]; n];
    let denom = consts::PI * (8.0 * n as f64);
    for j in 0..n {
        for k in 0..j {
            let d2 = squared_distance(config, j, k);
            let v = real(dd_div(d2 * dd_ln(d2) * 0.5, denom));
            g2[j][k] = v;
            g2[k][j] = v;
        }
    }
    let mut mt = vec![vec![zero(); m]; m];
    for i in 0..m {
        for j in 0..m {
            mt[i][j] = quad(&g2, &basis[i], &basis[j]);
        }
    }
    let mut lead = gauss_jordan(mt)?;
    let c = -dd_div(TwoFloat::from(1.0), TwoFloat::from(n as f64) * lambda * lambda);
    for row in lead.iter_mut() {
        for v in row.iter_mut() {
            *v = *v * c;
        }
    }
    let to_matrix = |f: &dyn Fn(usize, usize) -> Dd| CMatrix::from_fn(n, n, |i, j| back(f(i, j)));
    let lead_at = |i: usize, j: usize| if i < m && j < m { lead[i][j] } else { zero() };
    let computed = to_matrix(&|i, j| inv[i][j]);
    let predicted = to_matrix(&lead_at);
    let diff = to_matrix(&|i, j| inv[i][j] - lead_at(i, j));
    Ok(ZeroCaseSample {
        computed: crate::linalg::spectral_norm_c(&computed),
        predicted: crate::linalg::spectral_norm_c(&predicted),
        abs_err: crate::linalg::spectral_norm_c(&diff),
    })
}
