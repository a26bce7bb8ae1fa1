use std::f64::consts::PI;

use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;
use threshold_lab::green_functions::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn sp(z: Complex64) -> SpectralParameter {
    SpectralParameter::new(z).unwrap()
}

// Reference values below come from 30-digit mpmath evaluations.

#[test]
fn j0_at_origin_and_first_zero() {
    assert_eq!(bessel_j0(c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
    assert!(bessel_j0(c(2.404825557695773, 0.0)).unwrap().norm() < 1e-12);
}

#[test]
fn j0_against_brute_force_series() {
    // 40-term series in the same form as the definition
    let z = 2.0f64;
    let mut s = 0.0;
    let mut f = 1.0;
    for k in 0..40 {
        if k > 0 {
            f *= k as f64;
        }
        s += (-1.0f64).powi(k) * (z * z / 4.0).powi(k) / (f * f);
    }
    let v = bessel_j0(c(z, 0.0)).unwrap();
    assert!((v.re - s).abs() < 1e-15);
    assert!((v.re - 0.223_890_779_141_235_67).abs() < 1e-15);
}

#[test]
fn j0_reference_values_across_regimes() {
    let cases = [
        (c(3.0, 2.0), c(-1.249_234_879_607_422_2, -0.947_983_792_057_734_8)),
        (c(12.0, 0.0), c(0.047_689_310_796_833_537, 0.0)),
        (c(30.0, 0.0), c(-0.086_367_983_581_040_211, 0.0)),
        (c(60.0, 1.0), c(-0.141_601_154_534_770_89, -0.054_476_993_028_056_122)),
    ];
    for (z, want) in cases {
        let got = bessel_j0(z).unwrap();
        assert!((got - want).norm() < 1e-13 * want.norm().max(1.0), "{z}: {got} vs {want}");
        if z.im == 0.0 {
            assert!((bessel_j0_real(z.re) - want.re).abs() < 1e-13);
        }
    }
}

#[test]
fn j0_rejects_non_finite() {
    assert!(bessel_j0(c(f64::NAN, 0.0)).is_err());
}

#[test]
fn hankel_reference_values() {
    let cases = [
        (c(1.0, 0.0), c(-0.022_064_241_053_919_239, 0.191_299_421_639_491_64)),
        (c(5.0, 0.0), c(0.077_129_406_312_258_445, -0.044_399_192_828_584_576)),
        (c(2.0, 3.0), c(-0.003_308_389_705_405_775_9, 0.003_869_480_586_444_965)),
        (c(0.3, 0.1), c(0.197_439_657_560_272_59, 0.189_477_963_629_814_45)),
        (c(10.0, 0.0), c(-0.013_917_791_820_899_848, -0.061_483_941_112_837_084)),
        (c(3.9, 0.0), c(-0.005_843_977_049_679_741, -0.100_456_503_721_909_98)),
        (c(4.1, 0.0), c(0.014_023_656_651_586_121, -0.097_167_419_958_963_43)),
        (c(0.0, 1.0), c(0.067_008_120_508_497_137, 0.0)),
        (c(0.0, 6.0), c(0.000_197_987_846_481_569_18, 0.0)),
    ];
    for (z, want) in cases {
        let got = hankel1_0_scaled(&sp(z)).unwrap();
        assert!((got - want).norm() < 1e-13 * want.norm(), "{z}: {got} vs {want}");
    }
}

#[test]
fn hankel_regimes_stitch_at_switch() {
    for k in 0..24 {
        let th = PI * k as f64 / 23.0;
        for r in [3.6, 4.0, 4.4] {
            let (s, q) = hankel_regimes(&sp(Complex64::from_polar(r, th)));
            assert!((s - q).norm() <= 1e-10 * q.norm(), "r={r} th={th}: {s} {q}");
        }
    }
}

#[test]
fn hankel_small_argument_tends_to_g() {
    let z = sp(c(1e-8, 0.0));
    let d = hankel1_0_scaled(&z).unwrap() - g_scale(&z);
    assert!(d.norm() < 1e-14);
}

#[test]
fn hankel_large_argument_decay() {
    let mut worst: f64 = 0.0;
    for i in 0..=80 {
        let z = 10f64.powf(4.0 * i as f64 / 80.0);
        let v = hankel1_0_scaled(&sp(c(z, 0.0))).unwrap();
        worst = worst.max(v.norm() * z.sqrt());
    }
    // |(i/4)H₀(z)| √z → 1/(2√(2π)) from below
    assert!(worst <= 1.0 / (2.0 * (2.0 * PI).sqrt()) * 1.001, "{worst}");
}

#[test]
fn hankel_singular_at_zero() {
    assert!(SpectralParameter::new(c(0.0, 0.0)).is_err());
    assert!(green_free_r(&sp(c(1.0, 0.0)), 0.0).is_err());
}

#[test]
fn g_scale_examples() {
    let g = g_scale(&sp(c(2.0, 0.0)));
    assert_relative_eq!(g.re, -EULER_GAMMA / (2.0 * PI), max_relative = 1e-15);
    assert_eq!(g.im, 0.25);
    let h = g_scale(&SpectralParameter::imaginary(2.0).unwrap());
    assert_eq!(h.im, 0.0);
    assert_relative_eq!(h.re, -EULER_GAMMA / (2.0 * PI), max_relative = 1e-15);
}

#[test]
fn green_log_examples() {
    assert_eq!(green_log([1.0, 0.0]).unwrap(), 0.0);
    assert_relative_eq!(green_log([std::f64::consts::E, 0.0]).unwrap(), -1.0 / (2.0 * PI));
    assert_relative_eq!(green_log([0.0, 2.0]).unwrap(), -0.110_318, epsilon = 1e-6);
    assert!(green_log([0.0, 0.0]).is_err());
}

#[test]
fn green_free_imaginary_axis_is_real_positive() {
    let l = SpectralParameter::imaginary(1.0).unwrap();
    let v = green_free(&l, [0.6, 0.8]).unwrap();
    assert_eq!(v.im, 0.0);
    assert!(v.re > 0.0);
    let x = green_free(&l, [-0.6, -0.8]).unwrap();
    assert_eq!(v, x);
}

#[test]
fn imaginary_axis_reality_on_grid() {
    for i in 0..=30 {
        let kappa = 10f64.powf(-3.0 + 6.0 * i as f64 / 30.0);
        let l = SpectralParameter::imaginary(kappa).unwrap();
        for j in 0..=30 {
            let r = 10f64.powf(-3.0 + 6.0 * j as f64 / 30.0);
            let v = green_free_r(&l, r).unwrap();
            assert!(v.im.abs() <= 1e-12 * v.re.abs().max(1e-300));
            assert!(v.re >= 0.0);
        }
    }
}

#[test]
fn negative_real_axis_is_conjugate() {
    let p = green_free_r(&sp(c(1.7, 0.0)), 2.3).unwrap();
    let m = green_free_r(&sp(c(-1.7, 0.0)), 2.3).unwrap();
    assert!((p.conj() - m).norm() < 1e-15);
    let p = green_free_r(&sp(c(0.2, 0.0)), 1.1).unwrap();
    let m = green_free_r(&sp(c(-0.2, 0.0)), 1.1).unwrap();
    assert!((p.conj() - m).norm() < 1e-15);
}

#[test]
fn remainder_leading_behaviour() {
    // R₀ ≈ -(1/4) g(λ) λ² r² - λ² r² / 8π with r = 1
    for lam in [1e-3, 1e-4, 1e-6] {
        let l = sp(c(lam, 0.0));
        let r0 = green_remainder(&l, 1.0).unwrap();
        let lead = -0.25 * g_scale(&l) * lam * lam - lam * lam / (8.0 * PI);
        assert!((r0 - lead).norm() <= 10.0 * lam.powi(4), "{lam}: {r0} {lead}");
    }
}

#[test]
fn remainder_small_argument_bound() {
    let c09 = calibrate_remainder_constant(0.9);
    let l = sp(c(1e-6, 0.0));
    let v = green_remainder_checked(&l, 1.0, 0.9, c09).unwrap();
    assert!(v.within_bound);
    assert!(v.value.norm() < 1e-5);
}

#[test]
fn remainder_real_on_imaginary_axis() {
    let l = SpectralParameter::imaginary(1e-3).unwrap();
    for r in [0.1, 1.0, 10.0, 1e4] {
        assert_eq!(green_remainder(&l, r).unwrap().im, 0.0);
    }
}

#[test]
fn remainder_matches_definition_at_moderate_argument() {
    let l = sp(c(0.9, 0.1));
    for r in [0.5, 2.0, 7.0] {
        let direct = green_free_r(&l, r).unwrap() - g_scale(&l) + r.ln() / (2.0 * PI);
        let r0 = green_remainder(&l, r).unwrap();
        assert!((direct - r0).norm() < 1e-14);
    }
}

fn omega_derivatives(lam: f64, r: f64, h: f64) -> [f64; 3] {
    let w = |l: f64| hankel_envelope(l, r).unwrap();
    let f0 = w(lam);
    let d1 = (w(lam + h) - w(lam - h)) / (2.0 * h);
    let d2 = (w(lam + h) - 2.0 * f0 + w(lam - h)) / (h * h);
    [f0.norm(), d1.norm(), d2.norm()]
}

#[test]
fn envelope_symbol_decay() {
    let r = 1.0;
    let mut consts = [0.0f64; 3];
    for i in 0..=40 {
        let lam = 10f64.powf(4.0 * i as f64 / 40.0).max(1.0);
        let d = omega_derivatives(lam, r, 1e-3 * lam);
        for (l, v) in d.iter().enumerate() {
            consts[l] = consts[l].max(v * lam.powf(0.5 + l as f64));
        }
    }
    for v in consts {
        assert!(v.is_finite() && v < 1.0, "{consts:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn green_depends_on_distance_only(x in -5.0f64..5.0, y in -5.0f64..5.0, lr in -2.0f64..2.0, t in 0.0f64..3.1) {
        prop_assume!(x.hypot(y) > 1e-3);
        let l = sp(Complex64::from_polar(10f64.powf(lr), t));
        let a = green_free(&l, [x, y]).unwrap();
        let b = green_free(&l, [-x, -y]).unwrap();
        let r = green_free(&l, [x.hypot(y), 0.0]).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!((a - r).norm() <= 1e-14 * a.norm().max(1e-300));
    }

    #[test]
    fn j0_even_and_conjugate_symmetric(re in -40.0f64..40.0, im in -3.0f64..3.0) {
        let z = c(re, im);
        let a = bessel_j0(z).unwrap();
        let b = bessel_j0(-z).unwrap();
        let d = bessel_j0(z.conj()).unwrap();
        prop_assert!((a - b).norm() <= 1e-13 * a.norm().max(1.0));
        prop_assert!((a.conj() - d).norm() <= 1e-13 * a.norm().max(1.0));
    }
}
