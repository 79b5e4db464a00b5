use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;
use qbound::closed_forms;
use qbound::gaussian::GaussianState;
use qbound::holevo::{objective, DualCoefficients};
use qbound::measurement::{build_scheme, SchemeSpec};
use qbound::region::{lower_convex_hull, lower_left_boundary, Envelope, RegionSample, Source};
use qbound::{build_probe, solve, ChannelParams, ProbeConfig, SymplecticTransform, Weights};

fn two_mode_probe() -> impl Strategy<Value = ProbeConfig> {
    (0.0..1.2f64, 0.0..1.2f64, -PI..PI, -PI..PI, 0.02..0.98f64)
        .prop_map(|(a, b, p1, p2, t)| ProbeConfig::two_mode(a.min(b), a.max(b), p1, p2, t).unwrap())
}

fn ordered_pair() -> impl Strategy<Value = (f64, f64)> {
    (0.0..1.5f64, 0.0..1.5f64).prop_map(|(a, b)| (a.min(b), a.max(b)))
}

fn weights() -> impl Strategy<Value = Weights> {
    (0.05..1.0f64, 0.05..1.0f64).prop_map(|(x, y)| Weights::new(x, y).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn probe_mixers_are_symplectic(probe in two_mode_probe()) {
        prop_assert!(probe.mixer().unwrap().symplectic_defect() < 1e-12);
        let s = SymplecticTransform::rotation(probe.phi1, 2, 0).unwrap();
        prop_assert!(s.after(&probe.mixer().unwrap()).unwrap().symplectic_defect() < 1e-12);
    }

    #[test]
    fn prepared_probes_are_pure(probe in two_mode_probe()) {
        let d = build_probe(&probe).unwrap().validate();
        prop_assert!(d.physical && d.pure, "{d:?}");
    }

    #[test]
    fn displacement_commutes_with_ancilla_operations(
        probe in two_mode_probe(),
        phi in -PI..PI,
        tx in -2.0..2.0f64,
        ty in -2.0..2.0f64,
    ) {
        let state = build_probe(&probe).unwrap();
        let rot = SymplecticTransform::rotation(phi, 2, 1).unwrap();
        let theta = ChannelParams::new(tx, ty);
        let a = state.displace(theta).apply(&rot).unwrap();
        let b = state.apply(&rot).unwrap().displace(theta);
        prop_assert!((a.mean() - b.mean()).abs().max() < 1e-12);
        prop_assert!((a.cov() - b.cov()).abs().max() < 1e-12);
    }

    #[test]
    fn bound_scales_linearly_with_weights(probe in two_mode_probe(), w in weights(), c in 0.1..10.0f64) {
        let cov = build_probe(&probe).unwrap().cov().clone();
        let f = solve(&cov, &w).unwrap().f_hcr;
        let fc = solve(&cov, &w.scaled(c).unwrap()).unwrap().f_hcr;
        prop_assert!((fc - c * f).abs() <= 1e-12 * c * f, "{fc} vs {}", c * f);
    }

    #[test]
    fn bound_is_below_every_feasible_dual(probe in two_mode_probe(), w in weights(), free in prop::array::uniform4(-3.0..3.0f64)) {
        let cov = build_probe(&probe).unwrap().cov().clone();
        let f = solve(&cov, &w).unwrap().f_hcr;
        let h = objective(&cov, &w, &DualCoefficients::two_mode(free).unwrap()).unwrap();
        prop_assert!(h >= f * (1.0 - 1e-12));
    }

    #[test]
    fn swapping_weights_mirrors_the_squeezing_angle(r in 0.0..1.5f64, phi in 0.0..FRAC_PI_2, w in weights()) {
        let a = build_probe(&ProbeConfig::single_mode(r, phi).unwrap()).unwrap();
        let b = build_probe(&ProbeConfig::single_mode(r, FRAC_PI_2 - phi).unwrap()).unwrap();
        let fa = solve(a.cov(), &w).unwrap().f_hcr;
        let fb = solve(b.cov(), &w.swapped()).unwrap().f_hcr;
        prop_assert!((fa - fb).abs() <= 1e-12 * fa);
    }

    #[test]
    fn two_mode_bound_is_swap_symmetric(probe in two_mode_probe(), w in weights()) {
        let mirrored = ProbeConfig::two_mode(probe.r1, probe.r2, FRAC_PI_2 - probe.phi1, FRAC_PI_2 - probe.phi2, probe.t).unwrap();
        let fa = solve(build_probe(&probe).unwrap().cov(), &w).unwrap().f_hcr;
        let fb = solve(build_probe(&mirrored).unwrap().cov(), &w.swapped()).unwrap().f_hcr;
        prop_assert!((fa - fb).abs() <= 1e-9 * fa, "{fa} vs {fb}");
    }

    #[test]
    fn envelope_is_continuous_and_symmetric((r1, r2) in ordered_pair(), u in -2.0..2.0f64) {
        let (v_c, v_d) = closed_forms::envelope_breakpoints(r1, r2).unwrap();
        for v in [v_c, v_d] {
            let left = closed_forms::two_mode_envelope(v * (1.0 - 1e-13), r1, r2).unwrap().v_y;
            let at = closed_forms::two_mode_envelope(v, r1, r2).unwrap().v_y;
            prop_assert!((left - at).abs() < 1e-9);
        }
        let v_x = (-2.0 * r2).exp() * (1.0 + 10f64.powf(u));
        let v_y = closed_forms::two_mode_envelope(v_x, r1, r2).unwrap().v_y;
        let back = closed_forms::two_mode_envelope(v_y, r1, r2).unwrap().v_y;
        prop_assert!((back - v_x).abs() <= 1e-9 * v_x);
    }

    #[test]
    fn envelope_respects_product_floor((r1, r2) in ordered_pair(), u in -2.0..2.0f64) {
        let v_x = (-2.0 * r2).exp() * (1.0 + 10f64.powf(u));
        let v_y = closed_forms::two_mode_envelope(v_x, r1, r2).unwrap().v_y;
        prop_assert!(v_x * v_y >= 4.0 * (-2.0 * r1 - 2.0 * r2).exp() * (1.0 - 1e-12));
    }

    #[test]
    fn single_mode_boundary_dominates_two_mode_envelope(r in 0.0..1.5f64, phi in 0.0..FRAC_PI_2, u in -2.0..2.0f64) {
        // a single squeezed state is the two-mode resource with r1 = 0 and no mixing
        let (va, _) = closed_forms::projected_variances(r, phi).unwrap();
        let v_x = va + 10f64.powf(u);
        let single = closed_forms::single_mode_tradeoff(v_x, r, phi).unwrap();
        let two = closed_forms::two_mode_envelope(v_x, 0.0, r).unwrap().v_y;
        prop_assert!(single >= two * (1.0 - 1e-12));
    }

    #[test]
    fn optimal_configuration_lies_on_envelope((r1, r2) in ordered_pair(), w in weights()) {
        let cfg = closed_forms::optimal_config(&w, r1, r2, 0.0).unwrap();
        let p = closed_forms::two_mode_envelope(cfg.v_x, r1, r2).unwrap();
        prop_assert!((p.v_y - cfg.v_y).abs() <= 1e-9 * cfg.v_y);
    }

    #[test]
    fn quartic_has_one_positive_root(ratio_exp in -3.0..3.0f64, r in 0.01..2.0f64) {
        let roots = closed_forms::quartic_positive_roots(10f64.powf(ratio_exp), r).unwrap();
        prop_assert_eq!(roots.len(), 1);
    }

    #[test]
    fn balanced_estimators_are_unbiased(r in 0.0..1.5f64, t in 0.02..0.98f64) {
        let scheme = build_scheme(&SchemeSpec::Balanced { r, t }).unwrap();
        prop_assert!(scheme.is_unbiased(1e-12));
    }

    #[test]
    fn example1_estimators_are_unbiased(r2 in 0.0..1.5f64, phi2 in -PI..PI, t in 0.02..0.98f64) {
        let scheme = build_scheme(&SchemeSpec::Example1 { r2, phi2, t }).unwrap();
        prop_assert!(scheme.is_unbiased(1e-12));
    }

    #[test]
    fn refining_the_sample_set_never_raises_the_hull(
        pts in prop::collection::vec((0.1..10.0f64, 0.1..10.0f64), 3..40),
        extra in prop::collection::vec((0.1..10.0f64, 0.1..10.0f64), 1..20),
        q in 0.0..1.0f64,
    ) {
        let sample = |(v_x, v_y): (f64, f64)| RegionSample {
            v_x, v_y, segment: None, source: Source::NumericSolver, t: 0.5, phi1: 0.0, w_ratio: 1.0, converged: true,
        };
        let hull = |p: &[(f64, f64)]| Envelope {
            samples: lower_convex_hull(lower_left_boundary(p.iter().copied().map(sample).collect())),
            swept: p.len(),
            unconverged: 0,
            bin_range: (0.0, f64::INFINITY),
        };
        let coarse = hull(&pts);
        let fine = hull(&[pts.clone(), extra].concat());
        let (lo, hi) = coarse.span().unwrap();
        let v_x = lo + q * (hi - lo);
        if let (Some(a), Some(b)) = (coarse.value_at(v_x), fine.value_at(v_x)) {
            prop_assert!(b <= a + 1e-12);
        }
    }
}

#[test]
fn vacuum_is_its_own_displaced_covariance() {
    let v = GaussianState::vacuum(2).unwrap();
    let d = v.displace(ChannelParams::new(0.7, -0.2));
    assert_eq!(v.cov(), d.cov());
}
