//! Flat `key = value` run configuration and the built-in presets.
//!
//! Lines starting with `#` are comments. A `preset` key (if present) selects
//! the base configuration; every other key overrides one field of it. Lists
//! are comma separated.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::detector::{equidistant_phases, BlockSchedule, DetectorConfig, ExperimentConfig, SignalParams};
use crate::error::{HccmError, Result};
use crate::model::BeamSplitter;

/// LO-strength scan at `phase` and `phase + π`; amplitudes are
/// `amplitude_per_sqrt_uw · √P` for the listed LO powers.
#[derive(Debug, Clone, PartialEq)]
pub struct LoScanConfig {
    pub phase: f64,
    pub powers_uw: Vec<f64>,
    pub amplitude_per_sqrt_uw: f64,
}

impl LoScanConfig {
    pub fn grid(&self) -> Vec<f64> {
        self.powers_uw.iter().map(|p| self.amplitude_per_sqrt_uw * p.sqrt()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: String,
    pub experiment: ExperimentConfig,
    pub lo_scan: Option<LoScanConfig>,
    pub significance_threshold: f64,
}

pub const PRESETS: [&str; 4] = ["default", "paper", "coherent", "thermal"];

/// LO powers of the LO-strength scan, in µW.
pub const PAPER_LO_POWERS_UW: [f64; 5] = [0.0, 117.0, 166.0, 216.0, 275.0];

fn splitter_14_86() -> BeamSplitter {
    BeamSplitter::symmetric(0.14).expect("valid splitter")
}

fn paper_detector() -> DetectorConfig {
    DetectorConfig { eta1: 0.94, eta2: 0.94, ..DetectorConfig::default() }
}

/// Signal amplitude and phase-scan LO amplitude of the presets.
const SIGNAL_AMPLITUDE: f64 = 10.0;
const LO_AMPLITUDE: f64 = 10.0;

fn paper_signal() -> SignalParams {
    // Phase-squeezed: the squeezed quadrature is orthogonal to the displacement.
    SignalParams::from_db(-2.7, 5.5, PI / 2.0, Complex64::new(SIGNAL_AMPLITUDE, 0.0))
}

fn paper_lo_scan() -> LoScanConfig {
    LoScanConfig {
        phase: 3.0 * PI / 4.0,
        powers_uw: PAPER_LO_POWERS_UW.to_vec(),
        // The largest power reproduces the phase-scan LO amplitude.
        amplitude_per_sqrt_uw: LO_AMPLITUDE / 275f64.sqrt(),
    }
}

impl RunConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let quick = ExperimentConfig {
            signal: paper_signal(),
            lo_amplitude: LO_AMPLITUDE,
            phases: equidistant_phases(24),
            samples_per_phase: 20_000,
            blocked_lo_samples: 400_000,
            calibration_samples: 200_000,
            seed: 1,
            drift_rate: 0.0,
            schedule: BlockSchedule::Bracket,
            detector: paper_detector(),
            splitter: splitter_14_86(),
            visibility: 0.96,
        };
        let (experiment, lo_scan) = match name {
            "default" => (quick, None),
            "paper" => (
                ExperimentConfig {
                    phases: equidistant_phases(120),
                    samples_per_phase: 458_000,
                    blocked_lo_samples: 150_000_000,
                    calibration_samples: 20_000_000,
                    ..quick
                },
                Some(paper_lo_scan()),
            ),
            "coherent" => (
                ExperimentConfig { signal: SignalParams::coherent(Complex64::new(SIGNAL_AMPLITUDE, 0.0)), ..quick },
                None,
            ),
            "thermal" => (
                ExperimentConfig {
                    signal: SignalParams::thermal(0.25, Complex64::new(SIGNAL_AMPLITUDE, 0.0)),
                    ..quick
                },
                None,
            ),
            other => {
                return Err(HccmError::InvalidArgument(format!(
                    "unknown preset '{other}' (available: {})",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(Self { preset: name.to_string(), experiment, lo_scan, significance_threshold: 3.0 })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_entries(parse_entries(text)?)
    }

    pub fn from_entries(mut entries: BTreeMap<String, String>) -> Result<Self> {
        let preset = entries.remove("preset").unwrap_or_else(|| "default".to_string());
        let mut cfg = Self::preset(&preset)?;
        let mut kv = Entries(entries);
        let e = &mut cfg.experiment;

        if let Some(seed) = kv.take("seed") {
            e.seed = seed.parse().map_err(|_| bad("seed", &seed, "a 64-bit unsigned integer"))?;
        }
        let mut v_min = e.signal.v_min;
        let mut v_max = e.signal.v_max;
        kv.db("squeezing_db", &mut v_min)?;
        kv.db("antisqueezing_db", &mut v_max)?;
        e.signal.v_min = v_min;
        e.signal.v_max = v_max;
        kv.f64("squeeze_angle_rad", &mut e.signal.squeeze_angle)?;
        let (mut amp, mut arg) = (e.signal.alpha.norm(), e.signal.alpha.arg());
        kv.f64("signal_amplitude", &mut amp)?;
        kv.f64("signal_phase_rad", &mut arg)?;
        e.signal.alpha = Complex64::from_polar(amp, arg);
        kv.f64("lo_amplitude", &mut e.lo_amplitude)?;

        match (kv.take("phase_count"), kv.take("phases_rad")) {
            (Some(_), Some(_)) => {
                return Err(HccmError::InvalidArgument("give either phase_count or phases_rad, not both".into()))
            }
            (Some(n), None) => {
                let n: usize = n.parse().map_err(|_| bad("phase_count", &n, "a positive integer"))?;
                e.phases = equidistant_phases(n);
            }
            (None, Some(list)) => e.phases = parse_list("phases_rad", &list)?,
            (None, None) => {}
        }
        kv.u64("samples_per_phase", &mut e.samples_per_phase)?;
        kv.u64("blocked_lo_samples", &mut e.blocked_lo_samples)?;
        kv.u64("calibration_samples", &mut e.calibration_samples)?;
        kv.f64("drift_rate", &mut e.drift_rate)?;
        if let Some(s) = kv.take("block_schedule") {
            e.schedule = BlockSchedule::parse(&s)?;
        }

        let d = &mut e.detector;
        kv.f64("detector_eta1", &mut d.eta1)?;
        kv.f64("detector_eta2", &mut d.eta2)?;
        kv.f64("gain1", &mut d.g1)?;
        kv.f64("gain2", &mut d.g2)?;
        kv.f64("dark_uncorr1", &mut d.dark_uncorr1)?;
        kv.f64("dark_uncorr2", &mut d.dark_uncorr2)?;
        kv.f64("dark_corr", &mut d.dark_corr)?;
        kv.f64("lo_excess", &mut d.lo_excess)?;

        let (mut ts2, mut tl2, mut rs2, mut rl2) =
            (e.splitter.ts2(), e.splitter.tl2(), e.splitter.rs2(), e.splitter.rl2());
        kv.f64("splitter_ts2", &mut ts2)?;
        kv.f64("splitter_tl2", &mut tl2)?;
        kv.f64("splitter_rs2", &mut rs2)?;
        kv.f64("splitter_rl2", &mut rl2)?;
        e.splitter = BeamSplitter::new(ts2, tl2, rs2, rl2)?;
        kv.f64("visibility", &mut e.visibility)?;

        let scan_keys = ["lo_scan_phase_rad", "lo_scan_power_uw", "lo_amplitude_per_sqrt_uw"];
        if scan_keys.iter().any(|k| kv.0.contains_key(*k)) {
            let mut scan = cfg.lo_scan.take().unwrap_or_else(paper_lo_scan);
            kv.f64("lo_scan_phase_rad", &mut scan.phase)?;
            if let Some(list) = kv.take("lo_scan_power_uw") {
                scan.powers_uw = parse_list("lo_scan_power_uw", &list)?;
            }
            kv.f64("lo_amplitude_per_sqrt_uw", &mut scan.amplitude_per_sqrt_uw)?;
            cfg.lo_scan = Some(scan);
        }
        if let Some(v) = kv.take("lo_scan") {
            match v.as_str() {
                "off" => cfg.lo_scan = None,
                "on" => {
                    cfg.lo_scan.get_or_insert_with(paper_lo_scan);
                }
                other => return Err(bad("lo_scan", other, "'on' or 'off'")),
            }
        }
        kv.f64("significance_threshold", &mut cfg.significance_threshold)?;

        if let Some(key) = kv.0.keys().next() {
            return Err(HccmError::InvalidArgument(format!("unknown config key '{key}'")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.experiment.validate()?;
        if let Some(scan) = &self.lo_scan {
            if !(scan.amplitude_per_sqrt_uw > 0.0 && scan.amplitude_per_sqrt_uw.is_finite()) {
                return Err(HccmError::InvalidArgument(format!(
                    "lo_amplitude_per_sqrt_uw must be positive, got {}",
                    scan.amplitude_per_sqrt_uw
                )));
            }
            if scan.powers_uw.first() != Some(&0.0) {
                return Err(HccmError::InvalidArgument("lo_scan_power_uw must start with 0 (blocked LO)".into()));
            }
            if scan.powers_uw.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(HccmError::InvalidArgument("LO powers must be nonnegative".into()));
            }
        }
        if !(self.significance_threshold > 0.0 && self.significance_threshold.is_finite()) {
            return Err(HccmError::InvalidArgument(format!(
                "significance_threshold must be positive, got {}",
                self.significance_threshold
            )));
        }
        Ok(())
    }

    /// Complete key-value echo; parsing it gives back an equivalent configuration.
    pub fn to_entries(&self) -> Vec<(String, String)> {
        let e = &self.experiment;
        let d = &e.detector;
        let mut out: Vec<(&str, String)> = vec![
            ("preset", self.preset.clone()),
            ("seed", e.seed.to_string()),
            ("squeezing_db", fmt(10.0 * e.signal.v_min.log10())),
            ("antisqueezing_db", fmt(10.0 * e.signal.v_max.log10())),
            ("squeeze_angle_rad", fmt(e.signal.squeeze_angle)),
            ("signal_amplitude", fmt(e.signal.alpha.norm())),
            ("signal_phase_rad", fmt(e.signal.alpha.arg())),
            ("lo_amplitude", fmt(e.lo_amplitude)),
        ];
        if e.phases == equidistant_phases(e.phases.len()) {
            out.push(("phase_count", e.phases.len().to_string()));
        } else {
            out.push(("phases_rad", fmt_list(&e.phases)));
        }
        out.extend([
            ("samples_per_phase", e.samples_per_phase.to_string()),
            ("blocked_lo_samples", e.blocked_lo_samples.to_string()),
            ("calibration_samples", e.calibration_samples.to_string()),
            ("drift_rate", fmt(e.drift_rate)),
            ("block_schedule", e.schedule.as_str().to_string()),
            ("detector_eta1", fmt(d.eta1)),
            ("detector_eta2", fmt(d.eta2)),
            ("gain1", fmt(d.g1)),
            ("gain2", fmt(d.g2)),
            ("dark_uncorr1", fmt(d.dark_uncorr1)),
            ("dark_uncorr2", fmt(d.dark_uncorr2)),
            ("dark_corr", fmt(d.dark_corr)),
            ("lo_excess", fmt(d.lo_excess)),
            ("splitter_ts2", fmt(e.splitter.ts2())),
            ("splitter_tl2", fmt(e.splitter.tl2())),
            ("splitter_rs2", fmt(e.splitter.rs2())),
            ("splitter_rl2", fmt(e.splitter.rl2())),
            ("visibility", fmt(e.visibility)),
        ]);
        match &self.lo_scan {
            Some(scan) => out.extend([
                ("lo_scan", "on".to_string()),
                ("lo_scan_phase_rad", fmt(scan.phase)),
                ("lo_scan_power_uw", fmt_list(&scan.powers_uw)),
                ("lo_amplitude_per_sqrt_uw", fmt(scan.amplitude_per_sqrt_uw)),
            ]),
            None => out.push(("lo_scan", "off".to_string())),
        }
        out.push(("significance_threshold", fmt(self.significance_threshold)));
        out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn to_text(&self) -> String {
        self.to_entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Reads `key = value` lines; blank lines and `#` comments are skipped, duplicate keys rejected.
pub fn parse_entries(text: &str) -> Result<BTreeMap<String, String>> {
    let mut entries = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(HccmError::InvalidArgument(format!(
                "line {}: expected 'key = value', got '{line}'",
                lineno + 1
            )));
        };
        let key = key.trim().to_string();
        if entries.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(HccmError::InvalidArgument(format!("line {}: duplicate key '{key}'", lineno + 1)));
        }
    }
    Ok(entries)
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| fmt(*x)).collect::<Vec<_>>().join(",")
}

fn bad(key: &str, value: &str, expected: &str) -> HccmError {
    HccmError::InvalidArgument(format!("{key}: expected {expected}, got '{value}'"))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad(key, value, "a comma-separated list of numbers")))
        .collect()
}

struct Entries(BTreeMap<String, String>);

impl Entries {
    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn f64(&mut self, key: &str, slot: &mut f64) -> Result<()> {
        if let Some(v) = self.take(key) {
            *slot = v.parse().map_err(|_| bad(key, &v, "a number"))?;
        }
        Ok(())
    }

    fn u64(&mut self, key: &str, slot: &mut u64) -> Result<()> {
        if let Some(v) = self.take(key) {
            *slot = v.parse().map_err(|_| bad(key, &v, "a nonnegative integer"))?;
        }
        Ok(())
    }

    fn db(&mut self, key: &str, variance: &mut f64) -> Result<()> {
        if let Some(v) = self.take(key) {
            let db: f64 = v.parse().map_err(|_| bad(key, &v, "a number of dB"))?;
            *variance = crate::gaussian::db_to_variance(db);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip_through_text() {
        for name in PRESETS {
            let cfg = RunConfig::preset(name).unwrap();
            let again = RunConfig::parse(&cfg.to_text()).unwrap();
            assert_eq!(again.to_text(), cfg.to_text(), "{name}");
            assert_eq!(again.experiment.phases, cfg.experiment.phases);
            let s = &again.experiment.signal;
            assert!((s.v_min - cfg.experiment.signal.v_min).abs() < 1e-14);
        }
    }

    #[test]
    fn paper_preset_values() {
        let cfg = RunConfig::preset("paper").unwrap();
        let e = &cfg.experiment;
        assert_eq!(e.phases.len(), 120);
        assert_eq!(e.samples_per_phase, 458_000);
        assert_eq!(2 * e.blocked_lo_samples, 300_000_000);
        assert!((e.signal.v_min - 0.537).abs() < 1e-3);
        assert!((e.signal.v_max - 3.548).abs() < 1e-3);
        assert_eq!((e.splitter.rs2(), e.visibility, e.detector.eta1), (0.14, 0.96, 0.94));
        let grid = cfg.lo_scan.unwrap().grid();
        assert_eq!(grid.len(), 5);
        assert_eq!(grid[0], 0.0);
        assert!((grid[4] - e.lo_amplitude).abs() < 1e-12);
    }

    #[test]
    fn overrides_and_errors() {
        let cfg = RunConfig::parse("preset = coherent\nseed = 7\nphase_count = 12\n# note\n").unwrap();
        assert_eq!(cfg.experiment.seed, 7);
        assert_eq!(cfg.experiment.phases.len(), 12);
        let err = RunConfig::parse("squeezing_db = -3\nantisqueezing_db = 1\n").unwrap_err();
        assert!(matches!(err, HccmError::UnphysicalState(_)), "{err}");
        assert!(err.to_string().contains("v_min * v_max"));
        assert!(RunConfig::parse("bogus = 1").unwrap_err().to_string().contains("bogus"));
        assert!(RunConfig::parse("seed = 1\nseed = 2").is_err());
        assert!(RunConfig::parse("preset = nope").is_err());
        assert!(RunConfig::parse("lo_scan_power_uw = 10, 20, 30").is_err());
    }
}
