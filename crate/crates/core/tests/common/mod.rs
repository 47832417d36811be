#![allow(dead_code)]

use hccm_core::config::RunConfig;
use hccm_core::detector::{equidistant_phases, ExperimentConfig};
use hccm_core::gaussian::normal_ordered_signal_moments;
use hccm_core::model::{delta_g_contributions, predicted_correlation};

/// Default preset shrunk for quick Monte Carlo loops.
pub fn small_config(phases: usize, samples: u64) -> ExperimentConfig {
    let mut cfg = RunConfig::preset("default").unwrap().experiment;
    cfg.phases = equidistant_phases(phases);
    cfg.samples_per_phase = samples;
    cfg.blocked_lo_samples = samples;
    cfg.calibration_samples = samples;
    cfg
}

/// Expected correlation of the light alone, from the three-term model with
/// `ζ_k = η_k g_k`, for a signal displacement scaled by `drift_factor`.
pub fn model_correlation(cfg: &ExperimentConfig, phi: f64, lo: f64, drift_factor: f64) -> f64 {
    let state = cfg.signal.state().unwrap().scale_displacement(drift_factor);
    let m = normal_ordered_signal_moments(&state, phi).unwrap();
    let g = delta_g_contributions(&m, lo, &cfg.splitter).unwrap();
    let (z1, z2) = cfg.detector.zeta();
    predicted_correlation(&g, z1, z2, cfg.visibility).unwrap()
}

/// `(value - expected) / stderr`.
pub fn pull(value: f64, expected: f64, stderr: f64) -> f64 {
    (value - expected) / stderr
}
