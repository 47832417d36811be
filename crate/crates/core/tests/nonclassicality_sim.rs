mod common;

use std::f64::consts::PI;

use common::small_config;
use hccm_core::detector::{summarize_phase_scan, SignalParams};
use hccm_core::fock::{fock_squeezed_coherent, oracle_moments};
use hccm_core::gaussian::{normal_ordered_signal_moments, GaussianState};
use hccm_core::model::BeamSplitter;
use hccm_core::nonclassicality::{
    analytic_det_l, build_l, classify_phase_range, det_scan, det_with_error, quantum_condition_analytic, Verdict,
};
use hccm_core::pipeline::analyze_phase_scan;
use hccm_core::HccmError;
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn classical_states_never_give_a_significantly_negative_determinant() {
    let states = [
        SignalParams::coherent(Complex64::new(10.0, 0.0)),
        SignalParams::thermal(0.25, Complex64::new(10.0, 0.0)),
        SignalParams::thermal(1.0, Complex64::new(3.0, -4.0)),
    ];
    for (s, signal) in states.into_iter().enumerate() {
        for seed in 0..4 {
            let mut cfg = small_config(12, 20_000);
            cfg.signal = signal;
            cfg.seed = seed;
            let a = analyze_phase_scan(&summarize_phase_scan(&cfg).unwrap()).unwrap();
            let k = cfg.splitter.coefficients().unwrap();
            for r in det_scan(&a.separation, &k, &cfg.phases, 3.0).unwrap() {
                assert!(r.det >= -3.0 * r.sigma, "state {s} seed {seed}: {r:?}");
            }
        }
    }
}

#[test]
fn coherent_light_gives_vanishing_l_entries() {
    let mut cfg = small_config(12, 50_000);
    cfg.signal = SignalParams::coherent(Complex64::new(10.0, 0.0));
    let a = analyze_phase_scan(&summarize_phase_scan(&cfg).unwrap()).unwrap();
    let k = cfg.splitter.coefficients().unwrap();
    for &phi in &cfg.phases {
        let l = build_l(&a.separation, &k, phi).unwrap();
        let c = &l.contribution_cov;
        let sd = [c[(0, 0)].sqrt() / k.t0.abs(), c[(1, 1)].sqrt() / k.t1.abs(), c[(2, 2)].sqrt() / k.t2.abs()];
        let e = &l.entries;
        for (v, s) in [(e[(0, 0)], sd[0]), (e[(0, 1)], sd[1]), (e[(1, 1)], sd[2])] {
            assert!(v.abs() < 4.5 * s, "phase {phi}: {v} ± {s}");
        }
    }
}

#[test]
fn verdicts_do_not_depend_on_detector_gains() {
    let base = small_config(16, 20_000);
    let k = base.splitter.coefficients().unwrap();
    let reference = {
        let a = analyze_phase_scan(&summarize_phase_scan(&base).unwrap()).unwrap();
        det_scan(&a.separation, &k, &base.phases, 3.0).unwrap()
    };
    for (g1, g2) in [(3.0, 0.2), (0.05, 40.0)] {
        let mut cfg = base.clone();
        cfg.detector.g1 = g1;
        cfg.detector.g2 = g2;
        let a = analyze_phase_scan(&summarize_phase_scan(&cfg).unwrap()).unwrap();
        let scaled = det_scan(&a.separation, &k, &cfg.phases, 3.0).unwrap();
        for (r, s) in reference.iter().zip(&scaled) {
            assert_eq!(r.verdict, s.verdict, "gains {g1}, {g2} at {}", r.phi);
            assert!((r.significance - s.significance).abs() <= 1e-9 * r.significance.max(1.0));
            let gg = (g1 * g2) * (g1 * g2);
            assert!((s.det / gg - r.det).abs() <= 1e-9 * r.det.abs().max(1e-12));
        }
    }
}

#[test]
fn blocked_lo_level_is_positive_for_the_displaced_squeezed_state() {
    for seed in 0..5 {
        let mut cfg = small_config(8, 1000);
        cfg.seed = seed;
        let a = analyze_phase_scan(&summarize_phase_scan(&cfg).unwrap()).unwrap();
        assert!(a.c_block.value > 3.0 * a.c_block.stderr, "{:?}", a.c_block);
    }
}

#[test]
fn squeezed_state_is_certified_at_three_quarters_pi() {
    let mut cfg = small_config(24, 100_000);
    cfg.blocked_lo_samples = 20_000_000;
    cfg.calibration_samples = 2_000_000;
    let state = cfg.signal.state().unwrap();
    let phi = 3.0 * PI / 4.0;
    assert!(quantum_condition_analytic(&state, phi).unwrap().violated);
    let a = analyze_phase_scan(&summarize_phase_scan(&cfg).unwrap()).unwrap();
    let k = cfg.splitter.coefficients().unwrap();
    let r = det_with_error(&build_l(&a.separation, &k, phi).unwrap());
    assert_eq!(r.verdict, Verdict::Nonclassical, "{r:?}");
    let results = det_scan(&a.separation, &k, &cfg.phases, 3.0).unwrap();
    let half: Vec<_> = results.into_iter().filter(|r| r.phi < PI - 1e-9).collect();
    let summary = classify_phase_range(&half, &state).unwrap();
    assert!(summary.state_is_squeezed);
    assert!(summary.nonclassical_fraction > 0.5, "{summary:?}");
}

#[test]
fn balanced_splitter_cannot_test() {
    let mut cfg = small_config(8, 1000);
    cfg.splitter = BeamSplitter::symmetric(0.5).unwrap();
    let a = analyze_phase_scan(&summarize_phase_scan(&cfg).unwrap()).unwrap();
    let err = build_l(&a.separation, &cfg.splitter.coefficients().unwrap(), 1.0).unwrap_err();
    assert!(matches!(err, HccmError::AnomalousTermInaccessible(_)));
    assert!(err.to_string().contains("unbalanced"));
}

#[test]
fn gaussian_moments_agree_with_fock_oracle_for_the_determinant() {
    let alpha = Complex64::new(1.2, 0.7);
    let (r, theta) = (0.4, 0.9);
    let fock = fock_squeezed_coherent(r, theta, alpha, 60).unwrap();
    let gauss = GaussianState::squeezed_coherent(r, theta, alpha).unwrap();
    for phi in [0.0, 0.7, 2.4, 4.0] {
        let a = normal_ordered_signal_moments(&gauss, phi).unwrap();
        let b = oracle_moments(&fock, phi);
        assert!((a.det() - b.det()).abs() < 1e-8 * (1.0 + a.det().abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn det_l_factorizes(
        v_min in 0.2f64..1.0,
        stretch in 1.0f64..6.0,
        angle in 0.0f64..PI,
        re in -5.0f64..5.0,
        im in -5.0f64..5.0,
        phi in 0.0f64..(2.0 * PI),
        e_l in 0.1f64..20.0,
        r2 in 0.05f64..0.45,
        z1 in 0.1f64..3.0,
        z2 in 0.1f64..3.0,
    ) {
        let v_max = stretch / v_min;
        let state = GaussianState::from_quadrature_variances(v_min, v_max, angle, Complex64::new(re, im)).unwrap();
        let bs = BeamSplitter::symmetric(r2).unwrap();
        let k = bs.coefficients().unwrap();
        let det_m = normal_ordered_signal_moments(&state, phi).unwrap().det();
        let det_l = analytic_det_l(&state, phi, e_l, &bs, z1, z2).unwrap();
        let factor = (z1 * z2 * k.tt * e_l).powi(2);
        let scale = factor * {
            let m = normal_ordered_signal_moments(&state, phi).unwrap();
            (m.var_i * m.var_e).abs() + m.anom * m.anom
        };
        prop_assert!((det_l - factor * det_m).abs() <= 1e-10 * scale.max(f64::MIN_POSITIVE));
        let q = quantum_condition_analytic(&state, phi).unwrap();
        prop_assert_eq!(q.violated, q.lhs > q.rhs);
    }

    #[test]
    fn classical_states_have_nonnegative_det_m(
        n_th in 0.0f64..3.0,
        re in -6.0f64..6.0,
        im in -6.0f64..6.0,
        phi in 0.0f64..(2.0 * PI),
    ) {
        let state = GaussianState::thermal(n_th, Complex64::new(re, im)).unwrap();
        let m = normal_ordered_signal_moments(&state, phi).unwrap();
        let scale = (m.var_i * m.var_e).abs() + m.anom * m.anom;
        prop_assert!(m.det() >= -1e-10 * scale.max(1.0));
        let q = quantum_condition_analytic(&state, phi).unwrap();
        prop_assert!(q.lhs - q.rhs <= 1e-10 * scale.max(1.0));
    }
}
