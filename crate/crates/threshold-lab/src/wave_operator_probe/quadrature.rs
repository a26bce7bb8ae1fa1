//! Gauss-Legendre panels, Laguerre polynomials and the exponential integral.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::green_functions::EULER_GAMMA;

/// Nodes and weights on `[-1, 1]` (Golub-Welsch).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&n) {
        return r.clone();
    }
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        jac[(k, k - 1)] = b;
        jac[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> =
        (0..n).map(|k| (eig.eigenvalues[k], 2.0 * eig.eigenvectors[(0, k)].powi(2))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let rule: (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    cache.lock().unwrap().insert(n, rule.clone());
    rule
}

/// Composite rule over consecutive breakpoints.
pub fn panel_rule(breaks: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let mut nodes = Vec::with_capacity(order * breaks.len());
    let mut weights = Vec::with_capacity(order * breaks.len());
    for p in breaks.windows(2) {
        let (half, mid) = ((p[1] - p[0]) / 2.0, (p[1] + p[0]) / 2.0);
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + half * xi);
            weights.push(half * wi);
        }
    }
    (nodes, weights)
}

/// `n` equal panels on `[a, b]`.
pub fn uniform_panels(a: f64, b: f64, n: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let breaks: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    panel_rule(&breaks, order)
}

/// `L_m(x)` by the three-term recurrence.
pub fn laguerre(m: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 1.0 - x);
    if m == 0 {
        return prev;
    }
    for k in 1..m {
        let next = ((2 * k + 1) as f64 - x) * cur - k as f64 * prev;
        prev = cur;
        cur = next / (k + 1) as f64;
    }
    cur
}

const SERIES_LIMIT: f64 = 40.0;

/// `e^{-x} Ei(x)` for `x > 0`.
pub fn exp_ei(x: f64) -> f64 {
    assert!(x > 0.0, "exp_ei needs x > 0");
    if x <= SERIES_LIMIT {
        let (mut p, mut s) = (1.0, 0.0);
        for k in 1..500 {
            p *= x / k as f64;
            let t = p / k as f64;
            s += t;
            if t < 1e-17 * s {
                break;
            }
        }
        (-x).exp() * (EULER_GAMMA + x.ln() + s)
    } else {
        asymptotic_moment_sum(x, 0)
    }
}

// Σ_n (n+k)!/x^{n+1}, cut at the smallest term.
fn asymptotic_moment_sum(x: f64, k: usize) -> f64 {
    let mut t = (1..=k).map(|i| i as f64).product::<f64>() / x;
    let mut s = 0.0;
    for n in 0..400 {
        s += t;
        let next = t * (n + k + 1) as f64 / x;
        if next >= t || next < 1e-17 * s.abs() {
            break;
        }
        t = next;
    }
    s
}

/// `P[s^k e^{-s} 1_{s>0}](x)` for `x > 0` and `k = 0..=K`, where `P` has the kernel
/// `(-i/2π)/(x - y - i0)`.
pub fn reference_projections<const K: usize>(x: f64) -> [Complex64; K] {
    let c = Complex64::new(0.0, 1.0 / (2.0 * PI));
    let mut out = [Complex64::new(0.0, 0.0); K];
    let e = (-x).exp();
    if x <= SERIES_LIMIT {
        out[0] = Complex64::new(e / 2.0, 0.0) - c * exp_ei(x);
        let mut fact = 1.0;
        for k in 1..K {
            out[k] = out[k - 1] * x + c * fact;
            fact *= k as f64;
        }
    } else {
        for (k, o) in out.iter_mut().enumerate() {
            *o = Complex64::new(x.powi(k as i32) * e / 2.0, 0.0) - c * asymptotic_moment_sum(x, k);
        }
    }
    out
}
