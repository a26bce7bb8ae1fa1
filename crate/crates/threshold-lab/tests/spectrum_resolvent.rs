use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use threshold_lab::error::Error;
use threshold_lab::gamma_core::Configuration;
use threshold_lab::green_functions::{g_scale, SpectralParameter, EULER_GAMMA};
use threshold_lab::spectrum_resolvent::*;

fn single(alpha: f64) -> Configuration {
    Configuration::new(vec![[0.3, -0.7]], vec![alpha]).unwrap()
}

fn asymmetric() -> Configuration {
    Configuration::new(vec![[0.0, 0.0], [1.3, 0.2], [0.4, 1.1]], vec![0.3, -0.2, 0.5]).unwrap()
}

/// K₀(x) = ∫₀^∞ exp(-x cosh t) dt, trapezoid in t.
fn k0(x: f64) -> f64 {
    let (h, mut s) = (1e-3, 0.0);
    let mut t: f64 = 0.0;
    loop {
        let v = (-x * t.cosh()).exp();
        s += if t == 0.0 { 0.5 * v } else { v };
        if v < 1e-20 {
            break;
        }
        t += h;
    }
    s * h
}

fn log_distance(p: [f64; 2]) -> f64 {
    -(p[0].hypot(p[1])).ln() / (2.0 * PI)
}

#[test]
fn single_centre_root_is_closed_form() {
    let k = 2.0 * (-EULER_GAMMA).exp();
    assert!((k - 1.122_918_967_133_770_4).abs() < 1e-15);
    assert!(det_gamma_on_axis(&single(0.0), k).unwrap().abs() < 1e-15);
    let b = negative_eigenvalues(&single(0.0), DEFAULT_KAPPA_RANGE).unwrap();
    assert_eq!(b.len(), 1);
    assert!((b[0].kappa - k).abs() <= 1e-12 * k);
    assert!((b[0].energy() + 4.0 * (-2.0 * EULER_GAMMA).exp()).abs() < 1e-11);
    assert!((b[0].energy() + 1.260_95).abs() < 1e-5);

    let b = negative_eigenvalues(&single(1.0), DEFAULT_KAPPA_RANGE).unwrap();
    let k1 = 2.0 * (-2.0 * PI - EULER_GAMMA).exp();
    assert!((b[0].kappa - k1).abs() <= 1e-10 * k1);
}

#[test]
fn single_centre_matches_closed_form_across_strengths() {
    for i in 0..=16 {
        let a = -2.0 + 0.25 * i as f64;
        let b = negative_eigenvalues(&single(a), DEFAULT_KAPPA_RANGE).unwrap();
        let k = 2.0 * (-2.0 * PI * a - EULER_GAMMA).exp();
        assert_eq!(b.len(), 1, "α = {a}");
        assert!((b[0].kappa - k).abs() <= 1e-10 * k, "α = {a}: {} vs {k}", b[0].kappa);
    }
}

#[test]
fn single_centre_det_is_increasing() {
    let c = single(0.0);
    let mut prev = f64::NEG_INFINITY;
    for i in 0..200 {
        let k = 1e-4 * 10f64.powf(i as f64 * 0.04);
        let d = det_gamma_on_axis(&c, k).unwrap();
        assert!(d > prev);
        prev = d;
    }
    assert!(det_gamma_on_axis(&c, 1e6).unwrap() > 2.0);
    assert!(matches!(det_gamma_on_axis(&c, 0.0), Err(Error::Domain(_))));
}

#[test]
fn two_centre_channels() {
    // Γ₁₁ = (ln(κ/2) + γ)/2π, Γ₁₂ = -K₀(2κ)/2π; channels Γ₁₁ ± Γ₁₂ on (1, ±1)
    let c = Configuration::new(vec![[0.0, 0.0], [2.0, 0.0]], vec![0.0, 0.0]).unwrap();
    let b = negative_eigenvalues(&c, DEFAULT_KAPPA_RANGE).unwrap();
    assert_eq!(b.len(), 2);
    let diag = |k: f64| ((k / 2.0).ln() + EULER_GAMMA) / (2.0 * PI);
    let off = |k: f64| -k0(2.0 * k) / (2.0 * PI);
    // lower root is the antisymmetric channel
    let (lo, hi) = (&b[0], &b[1]);
    assert!(lo.kappa < hi.kappa);
    let v = &lo.vectors[0];
    assert!((v[0] + v[1]).abs() < 1e-8, "{v}");
    assert!((diag(lo.kappa) - off(lo.kappa)).abs() < 1e-9);
    let v = &hi.vectors[0];
    assert!((v[0] - v[1]).abs() < 1e-8, "{v}");
    assert!((diag(hi.kappa) + off(hi.kappa)).abs() < 1e-9);
    for s in &b {
        assert!(det_gamma_on_axis(&c, s.kappa).unwrap().abs() < 1e-10);
    }
}

#[test]
fn random_configurations_respect_count_and_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let n = rng.gen_range(1..=4);
        let centres: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]).collect();
        let alphas: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let Ok(c) = Configuration::new(centres, alphas) else { continue };
        let b = negative_eigenvalues(&c, DEFAULT_KAPPA_RANGE).unwrap();
        let total: usize = b.iter().map(|s| s.multiplicity).sum();
        assert!(total <= n);
        for s in &b {
            assert!(s.residual <= 1e-10, "{s:?}");
            assert!(s.kappa >= DEFAULT_KAPPA_RANGE[0] && s.kappa <= DEFAULT_KAPPA_RANGE[1]);
        }
    }
}

#[test]
fn bad_range_is_rejected() {
    let c = single(0.0);
    assert!(matches!(negative_eigenvalues(&c, [1.0, 0.5]), Err(Error::Precondition(_))));
    assert!(matches!(negative_eigenvalues(&c, [0.0, 1.0]), Err(Error::Precondition(_))));
    assert!(matches!(negative_eigenvalues_with_density(&c, [1e-3, 1.0], 0), Err(Error::Precondition(_))));
}

#[test]
fn eigenfunction_is_real_and_decays() {
    let c = asymmetric();
    let b = negative_eigenvalues(&c, DEFAULT_KAPPA_RANGE).unwrap();
    assert!(!b.is_empty());
    let s = &b[0];
    let near = s.eigenfunction(&c, [0.5, 0.5]).unwrap().abs();
    let far = s.eigenfunction(&c, [30.0, 0.5]).unwrap().abs();
    assert!(far < near * (-10.0 * s.kappa).exp());
}

#[test]
fn resolvent_symmetry_and_reality() {
    let c = asymmetric();
    let (x, y) = ([0.3, 1.7], [-1.1, 0.4]);
    for z in [
        SpectralParameter::real(0.7).unwrap(),
        SpectralParameter::new(num_complex::Complex64::new(1.1, 0.4)).unwrap(),
        SpectralParameter::imaginary(2.5).unwrap(),
    ] {
        let a = resolvent_kernel(&c, &z, x, y).unwrap();
        let b = resolvent_kernel(&c, &z, y, x).unwrap();
        assert!((a.value - b.value).norm() <= 1e-13 * a.value.norm());
        assert!((a.correction - b.correction).norm() <= 1e-13 * a.correction.norm().max(1e-300));
        assert!((a.value - a.free - a.correction).norm() <= 1e-15 * a.value.norm());
    }
    let s = resolvent_kernel(&c, &SpectralParameter::imaginary(2.5).unwrap(), x, y).unwrap();
    assert!(s.value.im.abs() <= 1e-14 * s.value.norm());
    assert!(matches!(
        resolvent_kernel(&c, &SpectralParameter::real(1.0).unwrap(), x, x),
        Err(Error::Singularity(_))
    ));
}

#[test]
fn resolvent_pole_at_bound_state_has_order_one() {
    let c = asymmetric();
    let b = negative_eigenvalues(&c, DEFAULT_KAPPA_RANGE).unwrap();
    let k0 = b[0].kappa;
    let (x, y) = ([0.3, 1.7], [-1.1, 0.4]);
    let steps = [1e-3, 1e-4, 1e-5, 1e-6];
    let logs: Vec<(f64, f64)> = steps
        .iter()
        .map(|d| {
            let s = resolvent_kernel(&c, &SpectralParameter::imaginary(k0 * (1.0 + d)).unwrap(), x, y).unwrap();
            (d.ln(), s.correction.norm().ln())
        })
        .collect();
    for w in logs.windows(2) {
        let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
        assert!((slope + 1.0).abs() < 0.01, "slope {slope}");
    }
    assert!(matches!(
        resolvent_kernel(&c, &SpectralParameter::imaginary(k0).unwrap(), x, y),
        Err(Error::NearSingular { .. })
    ));
}

#[test]
fn single_centre_zero_energy_limit() {
    let alpha = 0.4;
    let c = single(alpha);
    let y1 = c.centres()[0];
    let (x, y) = ([1.0, 2.0], [-0.5, 0.25]);
    let expected = log_distance([x[0] - y[0], x[1] - y[1]])
        - log_distance([x[0] - y1[0], x[1] - y1[1]])
        - log_distance([y[0] - y1[0], y[1] - y1[1]])
        - alpha;
    let got = regular_limit(&c, x, y).unwrap();
    assert!((got - expected).abs() < 1e-14, "{got} vs {expected}");
    assert!((regular_limit(&c, y, x).unwrap() - got).abs() < 1e-14);
}

#[test]
fn zero_energy_limit_error_tracks_inverse_g() {
    let c = asymmetric();
    let grid: Vec<f64> = (0..=28).map(|i| 1e-3 * 10f64.powf(-0.25 * i as f64)).collect();
    let r = resolvent_zero_limit(&c, [0.3, 1.7], [-1.1, 0.4], &grid).unwrap();
    let scaled: Vec<f64> = r
        .rows
        .iter()
        .map(|row| row.abs_err * g_scale(&SpectralParameter::real(row.lambda).unwrap()).norm())
        .collect();
    let hi = scaled.iter().cloned().fold(0.0, f64::max);
    let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(lo > 0.1 && hi / lo < 3.0, "{lo} {hi}");
    assert!(r.consistent);
    assert!(r.rows.last().unwrap().abs_err < 0.2);
    let sym = resolvent_zero_limit(&c, [-1.1, 0.4], [0.3, 1.7], &grid).unwrap();
    assert!((sym.rows[0].abs_err - r.rows[0].abs_err).abs() < 1e-12);
}

#[test]
fn zero_energy_limit_requires_regular_case() {
    let p = Configuration::new(vec![[0.0, 0.0], [1.0, 0.0]], vec![0.0, 0.0]).unwrap();
    let grid = [1e-3, 1e-4, 1e-5, 1e-6];
    assert!(matches!(resolvent_zero_limit(&p, [0.3, 1.7], [-1.1, 0.4], &grid), Err(Error::WrongCase(_))));
    assert!(matches!(regular_limit(&p, [0.3, 1.7], [-1.1, 0.4]), Err(Error::WrongCase(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn eigenvalues_are_euclidean_invariant(
        a in -0.5f64..0.5, b in -0.5f64..0.5, sx in -5.0f64..5.0, th in 0.0f64..6.28
    ) {
        let c = Configuration::new(vec![[0.0, 0.0], [1.5, 0.3]], vec![a, b]).unwrap();
        let m = c.moved([sx, -sx], th).unwrap();
        let k1 = negative_eigenvalues(&c, DEFAULT_KAPPA_RANGE).unwrap();
        let k2 = negative_eigenvalues(&m, DEFAULT_KAPPA_RANGE).unwrap();
        prop_assert_eq!(k1.len(), k2.len());
        for (p, q) in k1.iter().zip(&k2) {
            prop_assert!((p.kappa - q.kappa).abs() <= 1e-9 * p.kappa);
        }
    }
}
