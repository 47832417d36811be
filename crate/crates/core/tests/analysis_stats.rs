mod common;

use std::f64::consts::{PI, TAU};

use common::{model_correlation, pull, small_config};
use hccm_core::analysis::{
    drift_error, estimate_correlation, fit_trig_poly, lo_offset_correction, separate_by_phase, CorrelationEstimate,
};
use hccm_core::config::RunConfig;
use hccm_core::detector::{
    simulate_segment, summarize_phase_scan, summarize_segment, ScanKind, SegmentKind, SegmentSpec, SignalParams,
};
use hccm_core::pipeline::{analyze_lo_scan, analyze_phase_scan};
use num_complex::Complex64;

fn spec(index: usize, kind: SegmentKind, phase: f64, lo: f64, samples: u64) -> SegmentSpec {
    SegmentSpec { index, kind, phase, lo_amplitude: lo, samples }
}

#[test]
fn vacuum_signal_correlation_is_null() {
    let mut cfg = small_config(4, 2);
    cfg.signal = SignalParams::coherent(Complex64::new(0.0, 0.0));
    for seed in 0..5 {
        cfg.seed = seed;
        let seg = simulate_segment(&cfg, &ScanKind::Phase, &spec(0, SegmentKind::Scan, 0.4, 10.0, 100_000)).unwrap();
        let c = estimate_correlation(&seg.samples).unwrap();
        assert!(c.value.abs() < 4.0 * c.stderr, "seed {seed}: {c:?}");
    }
}

#[test]
fn stderr_scales_as_inverse_sqrt_n() {
    let cfg = small_config(4, 2);
    let seg = simulate_segment(&cfg, &ScanKind::Phase, &spec(0, SegmentKind::Scan, 2.0, 10.0, 400_000)).unwrap();
    let full = estimate_correlation(&seg.samples).unwrap();
    let (a, b) = seg.samples.split_at(200_000);
    for half in [a, b] {
        let h = estimate_correlation(half).unwrap();
        let ratio = h.stderr / full.stderr;
        assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.05, "ratio {ratio}");
    }
}

#[test]
fn lo_excess_noise_is_removed_by_blocked_signal_offset() {
    let clean = small_config(4, 2);
    let mut noisy = clean.clone();
    noisy.detector.lo_excess = 5e-3;
    let n = 300_000;
    for (i, phi) in [0.3, 2.0, 3.0 * PI / 4.0].into_iter().enumerate() {
        let scan = spec(10 + i, SegmentKind::Scan, phi, 10.0, n);
        let blocked = spec(2, SegmentKind::BlockedSignal, 0.0, 10.0, n);
        let est = |cfg, s: &SegmentSpec| summarize_segment(cfg, &ScanKind::Phase, s).unwrap().stats.estimate().unwrap();
        let corrected = lo_offset_correction(&est(&noisy, &scan), &est(&noisy, &blocked));
        let expected = model_correlation(&clean, phi, 10.0, 1.0);
        assert!(
            pull(corrected.value, expected, corrected.stderr).abs() < 3.0,
            "phase {phi}: {corrected:?} vs {expected}"
        );
        let uncorrected = est(&noisy, &scan);
        assert!(pull(uncorrected.value, expected, uncorrected.stderr) > 3.0);
    }
}

#[test]
fn paper_scale_scan_has_unit_reduced_chi2() {
    let mut cfg = RunConfig::preset("paper").unwrap().experiment;
    cfg.blocked_lo_samples = 100_000;
    cfg.calibration_samples = 100_000;
    let a = analyze_phase_scan(&summarize_phase_scan(&cfg).unwrap()).unwrap();
    let r = a.fit.reduced_chi2();
    assert!((0.7..=1.3).contains(&r), "chi2/dof = {r}");
    assert_eq!(a.fit.dof, 115);
}

#[test]
fn noisy_round_trip_recovers_contributions_within_errors() {
    let mut cfg = small_config(24, 100_000);
    cfg.blocked_lo_samples = 1_000_000;
    let a = analyze_phase_scan(&summarize_phase_scan(&cfg).unwrap()).unwrap();
    let e = cfg.lo_amplitude;
    let c0 = model_correlation(&cfg, 0.0, 0.0, 1.0);
    for phi in [0.0, 1.0, 3.0 * PI / 4.0, 4.0] {
        let at = a.separation.at(phi).unwrap();
        let plus = model_correlation(&cfg, phi, e, 1.0);
        let minus = model_correlation(&cfg, phi + PI, e, 1.0);
        let c1 = (plus - minus) / 2.0;
        let c2 = (plus + minus) / 2.0 - c0;
        assert!(pull(at.c0, c0, at.cov[(0, 0)].sqrt()).abs() < 4.0);
        assert!(pull(at.c1, c1, at.cov[(1, 1)].sqrt()).abs() < 4.0, "C1 at {phi}");
        assert!(pull(at.c2, c2, at.cov[(2, 2)].sqrt()).abs() < 4.0, "C2 at {phi}");
        // The three contributions rebuild the offset-corrected fit.
        assert!((at.c0 + at.c1 + at.c2 - a.fit.eval(phi)).abs() < 1e-9 * a.fit.eval(phi).abs().max(1.0));
    }
}

#[test]
fn fitted_a0_is_blocked_level_plus_constant_second_harmonic() {
    let cfg = small_config(12, 20_000);
    let a = analyze_phase_scan(&summarize_phase_scan(&cfg).unwrap()).unwrap();
    let p = a.separation.params;
    assert!((a.fit.a0 - (p[0] + p[5])).abs() < 1e-12);
    let direct = separate_by_phase(&a.fit, &a.c_block, a.drift);
    assert_eq!(direct, a.separation);
}

#[test]
fn drift_error_without_drift_is_sampling_noise() {
    let mut ratios = Vec::new();
    for seed in 0..60 {
        let mut cfg = small_config(6, 2000);
        cfg.blocked_lo_samples = 20_000;
        cfg.seed = seed;
        let summary = summarize_phase_scan(&cfg).unwrap();
        let runs: Vec<CorrelationEstimate> =
            summary.segments_of(SegmentKind::BlockedLo).map(|s| s.stats.estimate().unwrap()).collect();
        let d = drift_error(&runs[0], &runs[1]);
        ratios.push(d * d / (runs[0].stderr.powi(2) + runs[1].stderr.powi(2)));
    }
    // d²/σ² is chi-square with one degree of freedom: mean 1, sd of the mean √(2/60).
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!((mean - 1.0).abs() < 4.0 * (2.0 / 60.0f64).sqrt(), "mean ratio {mean}");
}

#[test]
fn drift_error_grows_with_drift_rate() {
    let mut previous = -1.0;
    for rate in [0.0, 1e-3, 4e-3] {
        let mut total = 0.0;
        for seed in 0..10 {
            let mut cfg = small_config(24, 2000);
            cfg.blocked_lo_samples = 100_000;
            cfg.drift_rate = rate;
            cfg.seed = seed;
            total += analyze_phase_scan(&summarize_phase_scan(&cfg).unwrap()).unwrap().drift;
        }
        assert!(total > previous, "rate {rate}");
        previous = total;
    }
}

#[test]
fn lo_and_phase_separation_agree() {
    let run = RunConfig::preset("default").unwrap();
    let mut cfg = run.experiment.clone();
    cfg.samples_per_phase = 100_000;
    let phase = analyze_phase_scan(&summarize_phase_scan(&cfg).unwrap()).unwrap();
    let phi = 3.0 * PI / 4.0;
    let grid: Vec<f64> =
        [0.0, 117.0, 166.0, 216.0, 275.0].iter().map(|p: &f64| cfg.lo_amplitude * (p / 275.0).sqrt()).collect();
    let summary = hccm_core::detector::summarize_lo_scan(&cfg, phi, &grid).unwrap();
    let lo = analyze_lo_scan(&summary, cfg.lo_amplitude).unwrap();
    let (a, b) = (phase.separation.at(phi).unwrap(), lo.separation.at(phi).unwrap());
    for k in 0..3 {
        let va = [a.c0, a.c1, a.c2][k];
        let vb = [b.c0, b.c1, b.c2][k];
        let sigma = (a.cov[(k, k)] + b.cov[(k, k)]).sqrt();
        assert!(((va - vb) / sigma).abs() < 3.0, "component {k}: {va} vs {vb} ± {sigma}");
    }
}

#[test]
fn fit_on_irregular_phases_matches_model_within_errors() {
    let cfg = small_config(2, 2);
    let phases: Vec<f64> = (0..15).map(|i| (i as f64 * 0.83).rem_euclid(TAU)).collect();
    let points: Vec<_> = phases
        .iter()
        .enumerate()
        .map(|(i, &phi)| {
            let s = spec(100 + i, SegmentKind::Scan, phi, 10.0, 50_000);
            (phi, summarize_segment(&cfg, &ScanKind::Phase, &s).unwrap().stats.estimate().unwrap())
        })
        .collect();
    let fit = fit_trig_poly(&points).unwrap();
    for phi in [0.1, 1.7, 5.5] {
        let expected = model_correlation(&cfg, phi, 10.0, 1.0);
        assert!(pull(fit.eval(phi), expected, fit.eval_stderr(phi)).abs() < 4.0);
    }
}
