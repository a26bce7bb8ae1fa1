use std::f64::consts::{E, PI};

use num_complex::Complex64;
use proptest::prelude::*;
use threshold_lab::asymptotics_validator::geometric_grid;
use threshold_lab::error::Error;
use threshold_lab::gamma_core::Configuration;
use threshold_lab::green_functions::{bessel_j0_real, EULER_GAMMA};
use threshold_lab::threshold_classifier::classify;
use threshold_lab::wave_operator_probe::*;

fn two(alphas: [f64; 2], d: f64) -> Configuration {
    Configuration::new(vec![[0.0, 0.0], [d, 0.0]], alphas.to_vec()).unwrap()
}

fn func(d: Descriptor) -> RadialTestFunction {
    RadialTestFunction::new(d, PolarGrid::default()).unwrap()
}

fn ascending(hi: f64, lo: f64, per_decade: usize) -> Vec<f64> {
    let mut g = geometric_grid(hi, lo, per_decade).unwrap();
    g.reverse();
    g
}

#[test]
fn single_centre_multiplier_closed_form() {
    let c = Configuration::new(vec![[0.0, 0.0]], vec![0.0]).unwrap();
    let expected = Complex64::new(EULER_GAMMA / (2.0 * PI), 0.25).inv();
    let v = multiplier(&c, 2.0, 0, 0).unwrap();
    assert!((v - expected).norm() < 1e-14 * expected.norm(), "{v} {expected}");
    assert_eq!(multiplier(&c, -2.0, 0, 0).unwrap(), v);
    assert!(matches!(multiplier(&c, 0.0, 0, 0), Err(Error::Singularity(_))));
}

#[test]
fn single_centre_multiplier_is_bounded_by_four() {
    for alpha in [-3.0, -0.5, 0.0, 0.7, 2.0] {
        let c = Configuration::new(vec![[1.0, -2.0]], vec![alpha]).unwrap();
        for l in geometric_grid(1e6, 1e-8, 4).unwrap() {
            let v = multiplier(&c, l, 0, 0).unwrap();
            assert!(v.norm() <= 4.0 * (1.0 + 1e-12), "α={alpha} λ={l}: {}", v.norm());
        }
    }
}

#[test]
fn laguerre_profiles_are_hankel_pairs() {
    for d in [
        Descriptor::radial(Profile::monomial(2)),
        Descriptor::radial(Profile::second_difference(1)),
        Descriptor::radial(Profile::Laguerre { terms: vec![(0, 1.0), (3, -0.2)] }),
    ] {
        let p = &d.profile;
        for rho in [0.5, 1.3, 2.7] {
            let (x, w) = gauss_legendre(24);
            let mut q = 0.0;
            for panel in 0..120 {
                let a = 0.25 * panel as f64;
                for (xi, wi) in x.iter().zip(&w) {
                    let r = a + 0.125 * (xi + 1.0);
                    q += 0.125 * wi * p.value(r) * bessel_j0_real(rho * r) * r;
                }
            }
            assert!((q - p.transform(rho)).abs() < 1e-12, "{p:?} at {rho}: {q} {}", p.transform(rho));
        }
    }
}

#[test]
fn spherical_mean_cases() {
    let g = func(Descriptor::radial(Profile::monomial(0)));
    for r in [0.0, 0.3, 2.0, 5.0] {
        let m = spherical_mean(&g, r).unwrap();
        assert!((m.re - (-r * r / 2.0).exp()).abs() < 1e-15 && m.im == 0.0);
    }
    let mut odd = Descriptor::radial(Profile::monomial(1));
    odd.angular_order = 1;
    let odd = func(odd);
    for r in [0.5, 1.0, 3.0] {
        assert!(spherical_mean(&odd, r).unwrap().norm() < 1e-15);
    }
    let shifted = func(Descriptor::radial(Profile::monomial(2)).translated([1.2, -0.7]).modulated([0.3, 0.1]));
    let finer = shifted.with_grid(PolarGrid { n_theta: 512, ..PolarGrid::default() });
    for r in [0.4, 1.7, 3.5] {
        let a = spherical_mean(&shifted, r).unwrap();
        let b = spherical_mean(&finer, r).unwrap();
        assert!((a - b).norm() < 1e-10, "{r}: {a} {b}");
    }
    assert!(matches!(spherical_mean(&shifted, 41.0), Err(Error::Domain(_))));
}

#[test]
fn poisson_identity_holds() {
    let u = func(Descriptor::radial(Profile::monomial(2)));
    for lambda in [1.0, 2.0, 4.0] {
        let (lhs, rhs) = poisson_identity(&u, lambda).unwrap();
        assert!((lhs - rhs).norm() < 1e-10 * rhs.norm(), "{lambda}: {lhs} {rhs}");
        // radial u: (i/2)∫_{S¹} û = iπ û(λ)
        let direct = Complex64::new(0.0, PI * u.descriptor.profile.transform(lambda));
        assert!((rhs - direct).norm() < 1e-14 * direct.norm());
    }
}

fn pairing_functions() -> Vec<Descriptor> {
    vec![
        Descriptor::radial(Profile::second_difference(1)),
        Descriptor::radial(Profile::second_difference(2)),
        Descriptor::radial(Profile::second_difference(3)),
        Descriptor::radial(Profile::second_difference(1)).dilated(1.3),
        Descriptor::radial(Profile::second_difference(2)).dilated(0.8),
    ]
}

#[test]
fn k_pairing_routes_agree() {
    let fs: Vec<RadialTestFunction> = pairing_functions().into_iter().map(func).collect();
    for i in 0..fs.len() {
        let (u, v) = (&fs[i], &fs[(i + 1) % fs.len()]);
        let a = pair_k(u, v).unwrap();
        let b = pair_k_oracle(u, v, 0.2, 5).unwrap();
        assert!((a - b.value).norm() < 1e-6 * a.norm(), "{i}: {a} {}", b.value);
    }
}

#[test]
fn k_is_linear() {
    let u = Descriptor::radial(Profile::monomial(2));
    let v = Descriptor::radial(Profile::monomial(3));
    let sum = Descriptor::radial(Profile::Laguerre { terms: vec![(2, 2.0), (3, -0.5)] });
    let radii = [0.3, 1.0, 2.5, 7.0];
    let ku = apply_k(&func(u), &radii).unwrap();
    let kv = apply_k(&func(v), &radii).unwrap();
    let ks = apply_k(&func(sum), &radii).unwrap();
    for i in 0..radii.len() {
        let lin = ku[i] * 2.0 - kv[i] * 0.5;
        assert!((lin - ks[i]).norm() < 1e-9 * ks[i].norm().max(1e-3), "{i}: {lin} {}", ks[i]);
    }
}

#[test]
fn k_only_sees_spherical_means() {
    let base = Descriptor::radial(Profile::monomial(2));
    let radii = [0.5, 2.0, 6.0];
    let a = apply_k(&func(base.clone().translated([1.5, 0.0])), &radii).unwrap();
    let b = apply_k(&func(base.translated([0.0, -1.5])), &radii).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).norm() < 1e-10 * x.norm(), "{x} {y}");
    }
}

#[test]
fn k_reports_truncation() {
    let wide = func(Descriptor::radial(Profile::monomial(1)).dilated(8.0));
    assert!(matches!(apply_k(&wide, &[1.0]), Err(Error::Truncation(_))));
}

#[test]
fn k_at_the_origin_needs_vanishing_mean() {
    let u = func(Descriptor::radial(Profile::monomial(2)));
    assert!(matches!(apply_k(&u, &[0.0]), Err(Error::Singularity(_))));
    let v = func(Descriptor::radial(Profile::second_difference(2)));
    let near = apply_k(&v, &[0.0, 1e-4]).unwrap();
    assert!((near[0] - near[1]).norm() < 1e-6 * near[0].norm().max(1e-6));
}

#[test]
fn omega_routes_agree() {
    let c = two([0.0, 0.0], E);
    let cls = classify(&c, 1e-10).unwrap();
    let u = func(Descriptor::radial(Profile::monomial(2)));
    let radii = [0.5, 1.0, 2.0, 4.0, 8.0];
    for (j, k) in [(0, 0), (0, 1)] {
        let s = apply_omega(&cls, &c, j, k, &u, &radii).unwrap();
        assert!(s.max_rel_diff < 1e-4, "({j},{k}): {}", s.max_rel_diff);
    }
    let shifted = func(Descriptor::radial(Profile::monomial(2)).translated([0.5, 0.0]).modulated([0.2, 0.0]));
    let s = apply_omega(&cls, &c, 1, 0, &shifted, &radii[..3]).unwrap();
    assert!(s.max_rel_diff < 1e-4, "{}", s.max_rel_diff);
}

#[test]
fn omega_requires_regular_configuration() {
    let c = two([0.0, 0.0], 1.0);
    let cls = classify(&c, 1e-10).unwrap();
    let u = func(Descriptor::radial(Profile::monomial(2)));
    assert!(matches!(apply_omega(&cls, &c, 0, 1, &u, &[1.0]), Err(Error::WrongCase(_))));
}

#[test]
fn omega_is_translation_covariant() {
    let u = func(Descriptor::radial(Profile::monomial(2)));
    let radii = [0.7, 3.0];
    let a = Configuration::new(vec![[0.0, 0.0]], vec![0.4]).unwrap();
    let b = Configuration::new(vec![[3.0, 1.0]], vec![0.4]).unwrap();
    let sa = apply_omega(&classify(&a, 1e-10).unwrap(), &a, 0, 0, &u, &radii).unwrap();
    let sb = apply_omega(&classify(&b, 1e-10).unwrap(), &b, 0, 0, &u, &radii).unwrap();
    assert_eq!(sa.multiplier_route, sb.multiplier_route);
    assert_eq!(sa.direct_route, sb.direct_route);
    let c = two([0.0, 0.0], E);
    let moved = c.moved([2.0, -1.0], 0.6).unwrap();
    let ta = apply_omega(&classify(&c, 1e-10).unwrap(), &c, 0, 1, &u, &radii).unwrap();
    let tb = apply_omega(&classify(&moved, 1e-10).unwrap(), &moved, 0, 1, &u, &radii).unwrap();
    for (x, y) in ta.direct_route.iter().zip(&tb.direct_route) {
        assert!((x - y).norm() < 1e-12 * x.norm());
    }
}

#[test]
fn direct_route_sees_only_the_spectral_band() {
    let c = two([0.0, 0.0], E);
    let bump = Descriptor::radial(Profile::Bump { lo: 1.0, hi: 2.0 });
    for r in [0.5, 3.0] {
        assert_eq!(omega_direct(&c, 0, 1, &bump, r, (0.0, 1.0)).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(omega_direct(&c, 0, 1, &bump, r, (2.0, 5.0)).unwrap(), Complex64::new(0.0, 0.0));
        let band = omega_direct(&c, 0, 1, &bump, r, (1.0, 2.0)).unwrap();
        let wide = omega_direct(&c, 0, 1, &bump, r, (0.5, 2.5)).unwrap();
        assert!((band - wide).norm() < 1e-8 * band.norm(), "{band} {wide}");
    }
}

#[test]
fn split_reconstructs_the_multiplier() {
    let c = two([0.0, 0.0], E);
    let grid = ascending(1e3, 10.0, 16);
    let d = high_energy_split(&c, &grid, &Cutoff { lambda0: 10.0 }).unwrap();
    assert!(d.reconstruction_error < 1e-12, "{}", d.reconstruction_error);
    assert_eq!(d.phi.len(), grid.len());
    let expected = [0.0, E, 2.0 * E, 3.0 * E];
    assert_eq!(d.phase_lattice.len(), 4);
    for (a, b) in d.phase_lattice.iter().zip(expected) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn split_phases_for_three_centres() {
    let c = Configuration::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]], vec![0.1, -0.2, 0.3]).unwrap();
    let grid = ascending(1e3, 20.0, 8);
    let d = high_energy_split(&c, &grid, &Cutoff { lambda0: 20.0 }).unwrap();
    assert!(d.reconstruction_error < 1e-12);
    let s5 = 5f64.sqrt();
    for a in [1.0, 2.0, s5, 1.0 + 2.0, 1.0 + s5, 2.0 + s5, 1.0 + 2.0 + s5, 3.0] {
        assert!(d.phase_lattice.iter().any(|p| (p - a).abs() < 1e-12), "{a} missing");
    }
    let entry01: Vec<&PhaseTerm> = d.terms.iter().filter(|t| t.j == 0 && t.k == 1).collect();
    assert!(entry01.iter().all(|t| t.phase > 0.0));
}

#[test]
fn dominant_oscillation_has_unit_phase() {
    let c = two([0.0, 0.0], 1.0);
    let a = dominant_phase(&c, 0, 1, 10.0, 1e3, 4096).unwrap();
    assert!((a - 1.0).abs() < 0.01, "{a}");
}

#[test]
fn split_decay_and_symbol_order() {
    let c = two([0.0, 0.0], E);
    let grid = ascending(1e4, 10.0, 16);
    let d = high_energy_split(&c, &grid, &Cutoff { lambda0: 10.0 }).unwrap();
    for (l, e) in d.l_decay.iter().enumerate() {
        assert!(*e >= 1.9, "ℓ={l}: {e}");
    }
    assert!(d.symbol_order <= -0.45, "{}", d.symbol_order);
}

#[test]
fn single_centre_split_is_trivial() {
    let c = Configuration::new(vec![[0.0, 0.0]], vec![0.5]).unwrap();
    let grid = ascending(1e3, 10.0, 4);
    let d = high_energy_split(&c, &grid, &Cutoff { lambda0: 10.0 }).unwrap();
    assert_eq!(d.notices.len(), 1);
    assert_eq!(d.phase_lattice, vec![0.0]);
    assert!(d.l.iter().all(|m| m.iter().all(|z| z.norm() == 0.0)));
}

#[test]
fn split_refuses_low_energies() {
    let c = two([0.0, 0.0], E);
    let grid = ascending(100.0, 1.0, 4);
    assert!(matches!(
        high_energy_split(&c, &grid, &Cutoff { lambda0: 10.0 }),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn cutoff_shape() {
    let chi = Cutoff { lambda0: 4.0 };
    assert_eq!(chi.chi(0.0), 1.0);
    assert_eq!(chi.chi(2.0), 1.0);
    assert_eq!(chi.chi(-1.0), 1.0);
    assert_eq!(chi.chi(4.0), 0.0);
    assert_eq!(chi.chi(9.0), 0.0);
    let vals: Vec<f64> = (0..=100).map(|i| chi.chi(2.0 + 0.02 * i as f64)).collect();
    assert!(vals.windows(2).all(|w| w[1] <= w[0]));
    assert!((chi.chi(3.0) - 0.5).abs() < 1e-15);
}

#[test]
fn mikhlin_probe_is_stable_in_the_regular_case() {
    let c = two([0.0, 0.0], E);
    let cls = classify(&c, 1e-10).unwrap();
    let m = mikhlin_probe(&cls, &c, 1e-6, 1.0, 16, 2).unwrap();
    assert!(m.stable, "{:?} {:?}", m.grid_change, m.fine.refinement_change);
    let p = two([0.0, 0.0], 1.0);
    let cp = classify(&p, 1e-10).unwrap();
    assert!(matches!(mikhlin_probe(&cp, &p, 1e-6, 1.0, 16, 2), Err(Error::WrongCase(_))));
}

#[test]
fn lp_ratios_are_stable_and_bounded() {
    let corpus: Vec<Descriptor> = annular_corpus().into_iter().step_by(4).collect();
    let r = lp_ratio_sweep(ProbeOperator::K, &corpus, PolarGrid::default(), &[1.5, 2.0, 3.0, 4.0]).unwrap();
    assert!(r.stable, "{:?}", r.rows);
    for row in &r.rows {
        assert!(row.ratio.is_finite() && row.ratio > 0.0 && row.ratio < 10.0, "{row:?}");
    }
    assert!(matches!(
        lp_ratio_sweep(ProbeOperator::K, &corpus, PolarGrid::default(), &[1.0]),
        Err(Error::Domain(_))
    ));
}

#[test]
fn omega_l2_ratio_is_finite() {
    let c = two([0.0, 0.0], E);
    let cls = classify(&c, 1e-10).unwrap();
    let op = ProbeOperator::Omega { classification: &cls, config: &c, j: 0, k: 1 };
    let corpus = vec![Descriptor::radial(Profile::monomial(2))];
    let r = lp_ratio_sweep(op, &corpus, PolarGrid::default(), &[2.0]).unwrap();
    assert!(r.stable);
    assert!(r.rows[0].ratio.is_finite() && r.rows[0].ratio > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn multiplier_is_even_and_reconstructs(
        a in prop::collection::vec(-1.0f64..1.0, 2..5),
        pts in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 4),
        lam in 10.0f64..500.0,
    ) {
        let n = a.len();
        let centres: Vec<[f64; 2]> = pts[..n].iter().map(|p| [p.0, p.1]).collect();
        prop_assume!((0..n).all(|j| (0..j).all(|k| {
            (centres[j][0] - centres[k][0]).hypot(centres[j][1] - centres[k][1]) > 0.2
        })));
        let c = Configuration::new(centres, a).unwrap();
        let m = multiplier_matrix(&c, lam).unwrap();
        prop_assert_eq!(&m, &multiplier_matrix(&c, -lam).unwrap());
        let (phi, l) = split_parts(&c, &Cutoff { lambda0: 5.0 }, lam).unwrap();
        let err = (&phi + &l - &m).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12 * m.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
}
