//! Photocurrent record simulation for phase scans and LO-strength scans.
//!
//! Each acquisition block (segment) draws zero-mean pairs `(c₁, c₂)` from a
//! bivariate normal with the exact photocurrent covariance of the detected
//! two-mode state, scaled by the detector gains, plus additive dark noise and
//! classical LO intensity noise. Every noise source has its own random stream,
//! so switching one source on or off leaves the others' draws untouched.

use std::f64::consts::{PI, TAU};

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::analysis::PairAccumulator;
use crate::error::{ensure_finite, HccmError, Result};
use crate::gaussian::{photocurrent_covariance, two_mode_output, GaussianState, LocalOscillator};
use crate::model::BeamSplitter;

/// Samples generated per random substream; also the merge granularity of
/// streaming summaries.
pub const CHUNK_SAMPLES: usize = 1 << 16;

const CH_PHYSICAL: u64 = 0;
const CH_DARK1: u64 = 1;
const CH_DARK2: u64 = 2;
const CH_DARK_COMMON: u64 = 3;
const CH_LO_NOISE: u64 = 4;
const CHANNELS: u64 = 8;

const TAG_PHASE_SCAN: u64 = 1 << 48;
const TAG_LO_SCAN: u64 = 2 << 48;

/// Single-mode signal in terms of its principal quadrature variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalParams {
    pub v_min: f64,
    pub v_max: f64,
    /// Direction of the minimum-variance quadrature.
    pub squeeze_angle: f64,
    pub alpha: Complex64,
}

impl SignalParams {
    /// `squeezing_db` is the minimum quadrature variance in dB (negative when squeezed).
    pub fn from_db(squeezing_db: f64, antisqueezing_db: f64, squeeze_angle: f64, alpha: Complex64) -> Self {
        Self {
            v_min: crate::gaussian::db_to_variance(squeezing_db),
            v_max: crate::gaussian::db_to_variance(antisqueezing_db),
            squeeze_angle,
            alpha,
        }
    }

    pub fn coherent(alpha: Complex64) -> Self {
        Self { v_min: 1.0, v_max: 1.0, squeeze_angle: 0.0, alpha }
    }

    pub fn thermal(n_th: f64, alpha: Complex64) -> Self {
        let v = 1.0 + 2.0 * n_th;
        Self { v_min: v, v_max: v, squeeze_angle: 0.0, alpha }
    }

    pub fn state(&self) -> Result<GaussianState> {
        GaussianState::from_quadrature_variances(self.v_min, self.v_max, self.squeeze_angle, self.alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub eta1: f64,
    pub eta2: f64,
    pub g1: f64,
    pub g2: f64,
    pub dark_uncorr1: f64,
    pub dark_uncorr2: f64,
    pub dark_corr: f64,
    /// Relative intensity-noise variance of the LO.
    pub lo_excess: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            eta1: 1.0,
            eta2: 1.0,
            g1: 1.0,
            g2: 1.0,
            dark_uncorr1: 0.0,
            dark_uncorr2: 0.0,
            dark_corr: 0.0,
            lo_excess: 0.0,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, eta) in [("eta1", self.eta1), ("eta2", self.eta2)] {
            ensure_finite(name, eta)?;
            if !(0.0..=1.0).contains(&eta) {
                return Err(HccmError::InvalidArgument(format!("{name} must lie in [0, 1], got {eta}")));
            }
        }
        for (name, g) in [("g1", self.g1), ("g2", self.g2)] {
            ensure_finite(name, g)?;
            if g <= 0.0 {
                return Err(HccmError::InvalidArgument(format!("{name} must be positive, got {g}")));
            }
        }
        for (name, v) in [
            ("dark_uncorr1", self.dark_uncorr1),
            ("dark_uncorr2", self.dark_uncorr2),
            ("dark_corr", self.dark_corr),
            ("lo_excess", self.lo_excess),
        ] {
            ensure_finite(name, v)?;
            if v < 0.0 {
                return Err(HccmError::InvalidArgument(format!("{name} must be nonnegative, got {v}")));
            }
        }
        Ok(())
    }

    /// Aggregate detector factors `ζ_k = η_k g_k`.
    pub fn zeta(&self) -> (f64, f64) {
        (self.eta1 * self.g1, self.eta2 * self.g2)
    }
}

/// Position of the two blocked-LO runs in the acquisition sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlockSchedule {
    /// One run before and one after the phase scan.
    #[default]
    Bracket,
    /// Both runs back to back before the scan.
    Leading,
}

impl BlockSchedule {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Bracket => "bracket",
            Self::Leading => "leading",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "bracket" => Ok(Self::Bracket),
            "leading" => Ok(Self::Leading),
            other => {
                Err(HccmError::InvalidArgument(format!("block schedule must be 'bracket' or 'leading', got '{other}'")))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub signal: SignalParams,
    pub lo_amplitude: f64,
    pub phases: Vec<f64>,
    pub samples_per_phase: u64,
    /// Samples in each of the two blocked-LO runs.
    pub blocked_lo_samples: u64,
    /// Samples in each blocked-signal and dark run.
    pub calibration_samples: u64,
    pub seed: u64,
    pub drift_rate: f64,
    pub schedule: BlockSchedule,
    pub detector: DetectorConfig,
    pub splitter: BeamSplitter,
    pub visibility: f64,
}

/// `n` phases spaced evenly over `[0, 2π)`.
pub fn equidistant_phases(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 * TAU / n as f64).collect()
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.signal.state()?;
        self.detector.validate()?;
        ensure_finite("lo_amplitude", self.lo_amplitude)?;
        if self.lo_amplitude < 0.0 {
            return Err(HccmError::InvalidArgument(format!(
                "lo_amplitude must be nonnegative, got {}",
                self.lo_amplitude
            )));
        }
        if self.phases.is_empty() {
            return Err(HccmError::InvalidArgument("phase list must not be empty".into()));
        }
        for &phi in &self.phases {
            ensure_finite("phase", phi)?;
        }
        for (name, n) in [
            ("samples_per_phase", self.samples_per_phase),
            ("blocked_lo_samples", self.blocked_lo_samples),
            ("calibration_samples", self.calibration_samples),
        ] {
            if n < 2 {
                return Err(HccmError::InvalidArgument(format!("{name} must be at least 2, got {n}")));
            }
        }
        ensure_finite("drift_rate", self.drift_rate)?;
        if self.drift_rate < 0.0 {
            return Err(HccmError::InvalidArgument(format!("drift_rate must be nonnegative, got {}", self.drift_rate)));
        }
        if !(self.visibility > 0.0 && self.visibility <= 1.0) {
            return Err(HccmError::InvalidArgument(format!("visibility must lie in (0, 1], got {}", self.visibility)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SegmentKind {
    Scan,
    BlockedLo,
    BlockedSignal,
    /// Signal and LO blocked: detector dark noise only.
    Dark,
}

impl SegmentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Scan => "scan",
            Self::BlockedLo => "blocked_lo",
            Self::BlockedSignal => "blocked_signal",
            Self::Dark => "dark",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "scan" => Ok(Self::Scan),
            "blocked_lo" => Ok(Self::BlockedLo),
            "blocked_signal" => Ok(Self::BlockedSignal),
            "dark" => Ok(Self::Dark),
            other => Err(HccmError::MalformedRecord(format!("unknown segment kind '{other}'"))),
        }
    }

    fn has_signal(&self) -> bool {
        matches!(self, Self::Scan | Self::BlockedLo)
    }
}

/// One acquisition block. `index` is its position in acquisition order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentSpec {
    pub index: usize,
    pub kind: SegmentKind,
    pub phase: f64,
    pub lo_amplitude: f64,
    pub samples: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScanKind {
    Phase,
    Lo { phase: f64, grid: Vec<f64> },
}

impl ScanKind {
    fn stream_tag(&self) -> u64 {
        match self {
            Self::Phase => TAG_PHASE_SCAN,
            Self::Lo { .. } => TAG_LO_SCAN,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub spec: SegmentSpec,
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSummary {
    pub spec: SegmentSpec,
    pub stats: PairAccumulator,
}

/// Simulated run with every sample pair kept.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScanRecord {
    pub config: ExperimentConfig,
    pub scan: ScanKind,
    pub segments: Vec<Segment>,
}

/// Simulated run reduced to per-segment accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordSummary {
    pub config: ExperimentConfig,
    pub scan: ScanKind,
    pub segments: Vec<SegmentSummary>,
}

impl PhaseScanRecord {
    pub fn segments_of(&self, kind: SegmentKind) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(move |s| s.spec.kind == kind)
    }

    /// Reduces each segment chunk by chunk, exactly as the streaming simulation does.
    pub fn summarize(&self) -> RecordSummary {
        RecordSummary {
            config: self.config.clone(),
            scan: self.scan.clone(),
            segments: self
                .segments
                .iter()
                .map(|s| SegmentSummary { spec: s.spec, stats: summarize_samples(&s.samples) })
                .collect(),
        }
    }
}

impl RecordSummary {
    pub fn segments_of(&self, kind: SegmentKind) -> impl Iterator<Item = &SegmentSummary> {
        self.segments.iter().filter(move |s| s.spec.kind == kind)
    }
}

/// Reduces samples in blocks of [`CHUNK_SAMPLES`], merging block accumulators
/// in order; every summary path goes through this so results agree bitwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct ChunkedAccumulator {
    total: PairAccumulator,
    current: PairAccumulator,
}

impl ChunkedAccumulator {
    pub fn push(&mut self, c1: f64, c2: f64) {
        self.current.push(c1, c2);
        if self.current.count() == CHUNK_SAMPLES as u64 {
            self.total.merge(&self.current);
            self.current = PairAccumulator::default();
        }
    }

    pub fn count(&self) -> u64 {
        self.total.count() + self.current.count()
    }

    pub fn finish(mut self) -> PairAccumulator {
        self.total.merge(&self.current);
        self.total
    }
}

pub fn summarize_samples(samples: &[(f64, f64)]) -> PairAccumulator {
    let mut acc = ChunkedAccumulator::default();
    for &(a, b) in samples {
        acc.push(a, b);
    }
    acc.finish()
}

/// Acquisition plan of a phase scan, including the calibration runs.
pub fn phase_scan_plan(cfg: &ExperimentConfig) -> Result<Vec<SegmentSpec>> {
    cfg.validate()?;
    let mut kinds: Vec<(SegmentKind, f64, f64, u64)> = Vec::new();
    let blocked_lo = (SegmentKind::BlockedLo, 0.0, 0.0, cfg.blocked_lo_samples);
    let calibration = [
        (SegmentKind::Dark, 0.0, 0.0, cfg.calibration_samples),
        (SegmentKind::BlockedSignal, 0.0, cfg.lo_amplitude, cfg.calibration_samples),
    ];
    let scans = cfg.phases.iter().map(|&phi| (SegmentKind::Scan, phi, cfg.lo_amplitude, cfg.samples_per_phase));
    match cfg.schedule {
        BlockSchedule::Bracket => {
            kinds.push(blocked_lo);
            kinds.extend(calibration);
            kinds.extend(scans);
            kinds.push(blocked_lo);
        }
        BlockSchedule::Leading => {
            kinds.extend([blocked_lo, blocked_lo]);
            kinds.extend(calibration);
            kinds.extend(scans);
        }
    }
    Ok(number(kinds))
}

/// Acquisition plan of an LO-strength scan at `phi` and `phi + π`.
///
/// The grid starts with 0 (blocked LO). Every nonzero amplitude gets its own
/// blocked-signal run for the LO noise offset.
pub fn lo_scan_plan(cfg: &ExperimentConfig, phi: f64, grid: &[f64]) -> Result<Vec<SegmentSpec>> {
    cfg.validate()?;
    ensure_finite("LO-scan phase", phi)?;
    if grid.is_empty() {
        return Err(HccmError::InvalidArgument("LO amplitude grid must not be empty".into()));
    }
    if grid[0] != 0.0 {
        return Err(HccmError::InvalidArgument(format!(
            "LO amplitude grid must start with the blocked LO (0), got {}",
            grid[0]
        )));
    }
    if let Some(bad) = grid.iter().find(|e| !e.is_finite() || **e < 0.0) {
        return Err(HccmError::InvalidArgument(format!("LO amplitudes must be nonnegative, got {bad}")));
    }
    let phi_pi = phi + PI;
    let mut kinds = vec![(SegmentKind::Dark, phi, 0.0, cfg.calibration_samples)];
    for &e in grid {
        if e == 0.0 {
            kinds.push((SegmentKind::BlockedLo, phi, 0.0, cfg.blocked_lo_samples));
            kinds.push((SegmentKind::BlockedLo, phi_pi, 0.0, cfg.blocked_lo_samples));
        } else {
            kinds.push((SegmentKind::BlockedSignal, phi, e, cfg.calibration_samples));
            kinds.push((SegmentKind::Scan, phi, e, cfg.samples_per_phase));
            kinds.push((SegmentKind::Scan, phi_pi, e, cfg.samples_per_phase));
        }
    }
    Ok(number(kinds))
}

fn number(kinds: Vec<(SegmentKind, f64, f64, u64)>) -> Vec<SegmentSpec> {
    kinds
        .into_iter()
        .enumerate()
        .map(|(index, (kind, phase, lo_amplitude, samples))| SegmentSpec { index, kind, phase, lo_amplitude, samples })
        .collect()
}

/// Exact second moments of one segment, split by noise source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentModel {
    /// Gain-scaled photocurrent covariance of the detected light (shot noise included).
    pub physical: Matrix2<f64>,
    pub dark_uncorr: (f64, f64),
    /// Gain-scaled amplitudes of the dark noise common to both channels.
    pub dark_common: (f64, f64),
    /// Gain-scaled LO intensity-noise amplitudes; their product is the added cross term.
    pub lo_noise: (f64, f64),
}

impl SegmentModel {
    pub fn new(cfg: &ExperimentConfig, spec: &SegmentSpec) -> Result<Self> {
        let det = &cfg.detector;
        let signal = if spec.kind.has_signal() {
            cfg.signal.state()?.scale_displacement(1.0 + cfg.drift_rate * spec.index as f64)
        } else {
            GaussianState::vacuum(1)
        };
        let e =
            if matches!(spec.kind, SegmentKind::Scan | SegmentKind::BlockedSignal) { spec.lo_amplitude } else { 0.0 };
        // Only the mode-matched fraction of the LO interferes with the signal;
        // the rest adds shot noise.
        let lo = LocalOscillator::new(cfg.visibility * e, spec.phase)?;
        let joint = two_mode_output(&signal, &lo, &cfg.splitter)?.apply_loss_per_mode(&[det.eta1, det.eta2])?;
        let mut n_cov = photocurrent_covariance(&joint)?;
        let mismatched = (1.0 - cfg.visibility * cfg.visibility) * e * e;
        let lo_mean = (det.eta1 * cfg.splitter.rl2() * e * e, det.eta2 * cfg.splitter.tl2() * e * e);
        n_cov[(0, 0)] += det.eta1 * cfg.splitter.rl2() * mismatched;
        n_cov[(1, 1)] += det.eta2 * cfg.splitter.tl2() * mismatched;
        let gains = Matrix2::new(det.g1, 0.0, 0.0, det.g2);
        let rin = det.lo_excess.sqrt();
        let common = det.dark_corr.sqrt();
        Ok(Self {
            physical: gains * n_cov * gains,
            dark_uncorr: (det.g1 * det.g1 * det.dark_uncorr1, det.g2 * det.g2 * det.dark_uncorr2),
            dark_common: (det.g1 * common, det.g2 * common),
            lo_noise: (det.g1 * rin * lo_mean.0, det.g2 * rin * lo_mean.1),
        })
    }

    /// Total covariance of `(c₁, c₂)`.
    pub fn covariance(&self) -> Matrix2<f64> {
        let outer = |(a, b): (f64, f64)| Matrix2::new(a * a, a * b, a * b, b * b);
        self.physical
            + Matrix2::new(self.dark_uncorr.0, 0.0, 0.0, self.dark_uncorr.1)
            + outer(self.dark_common)
            + outer(self.lo_noise)
    }
}

/// Per-sample linear map from independent normals to `(c₁, c₂)`.
#[derive(Debug, Clone, Copy)]
struct Sampler {
    l11: f64,
    l21: f64,
    l22: f64,
    dark: (f64, f64),
    common: (f64, f64),
    lo: (f64, f64),
}

impl Sampler {
    fn new(model: &SegmentModel) -> Self {
        let p = &model.physical;
        let l11 = p[(0, 0)].max(0.0).sqrt();
        let l21 = if l11 > 0.0 { p[(1, 0)] / l11 } else { 0.0 };
        let l22 = (p[(1, 1)] - l21 * l21).max(0.0).sqrt();
        Self {
            l11,
            l21,
            l22,
            dark: (model.dark_uncorr.0.sqrt(), model.dark_uncorr.1.sqrt()),
            common: model.dark_common,
            lo: model.lo_noise,
        }
    }
}

/// Child seed of one segment; substreams are chunk × noise channel.
#[derive(Debug, Clone, Copy)]
struct SegmentSeed([u8; 32]);

impl SegmentSeed {
    fn new(seed: u64, key: u64) -> Self {
        let mut parent = ChaCha8Rng::seed_from_u64(seed);
        parent.set_stream(key);
        Self(parent.random())
    }

    fn channel(&self, chunk: u64, channel: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.0);
        rng.set_stream(chunk * CHANNELS + channel);
        rng
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn add_channel(out: &mut [(f64, f64)], mut rng: ChaCha8Rng, amp: (f64, f64), shared: bool) {
    for s in out.iter_mut() {
        let z = normal(&mut rng);
        s.0 += amp.0 * z;
        if shared {
            s.1 += amp.1 * z;
        }
    }
}

fn chunk_samples(sampler: &Sampler, seed: &SegmentSeed, chunk: u64, len: usize) -> Vec<(f64, f64)> {
    let mut rng = seed.channel(chunk, CH_PHYSICAL);
    let mut out: Vec<(f64, f64)> = (0..len)
        .map(|_| {
            let z1 = normal(&mut rng);
            let z2 = normal(&mut rng);
            (sampler.l11 * z1, sampler.l21 * z1 + sampler.l22 * z2)
        })
        .collect();
    if sampler.dark.0 > 0.0 {
        add_channel(&mut out, seed.channel(chunk, CH_DARK1), (sampler.dark.0, 0.0), false);
    }
    if sampler.dark.1 > 0.0 {
        let mut rng = seed.channel(chunk, CH_DARK2);
        for s in out.iter_mut() {
            s.1 += sampler.dark.1 * normal(&mut rng);
        }
    }
    if sampler.common != (0.0, 0.0) {
        add_channel(&mut out, seed.channel(chunk, CH_DARK_COMMON), sampler.common, true);
    }
    if sampler.lo != (0.0, 0.0) {
        add_channel(&mut out, seed.channel(chunk, CH_LO_NOISE), sampler.lo, true);
    }
    out
}

struct PreparedSegment {
    sampler: Sampler,
    seed: SegmentSeed,
    samples: u64,
}

impl PreparedSegment {
    fn new(cfg: &ExperimentConfig, scan: &ScanKind, spec: &SegmentSpec) -> Result<Self> {
        let model = SegmentModel::new(cfg, spec)?;
        Ok(Self {
            sampler: Sampler::new(&model),
            seed: SegmentSeed::new(cfg.seed, scan.stream_tag() | spec.index as u64),
            samples: spec.samples,
        })
    }

    fn chunks(&self) -> impl IndexedParallelIterator<Item = (u64, usize)> + '_ {
        let n_chunks = self.samples.div_ceil(CHUNK_SAMPLES as u64) as usize;
        (0..n_chunks).into_par_iter().map(move |k| {
            let k = k as u64;
            let len = (self.samples - k * CHUNK_SAMPLES as u64).min(CHUNK_SAMPLES as u64) as usize;
            (k, len)
        })
    }

    fn samples(&self) -> Vec<(f64, f64)> {
        let parts: Vec<Vec<(f64, f64)>> =
            self.chunks().map(|(k, len)| chunk_samples(&self.sampler, &self.seed, k, len)).collect();
        parts.concat()
    }

    fn summary(&self) -> PairAccumulator {
        let parts: Vec<PairAccumulator> = self
            .chunks()
            .map(|(k, len)| {
                let mut acc = PairAccumulator::default();
                for (a, b) in chunk_samples(&self.sampler, &self.seed, k, len) {
                    acc.push(a, b);
                }
                acc
            })
            .collect();
        let mut total = PairAccumulator::default();
        for p in &parts {
            total.merge(p);
        }
        total
    }
}

/// Samples of one segment; depends only on the seed, the scan kind and the spec.
pub fn simulate_segment(cfg: &ExperimentConfig, scan: &ScanKind, spec: &SegmentSpec) -> Result<Segment> {
    let prepared = PreparedSegment::new(cfg, scan, spec)?;
    Ok(Segment { spec: *spec, samples: prepared.samples() })
}

/// Streaming reduction of one segment, bitwise equal to summarizing [`simulate_segment`].
pub fn summarize_segment(cfg: &ExperimentConfig, scan: &ScanKind, spec: &SegmentSpec) -> Result<SegmentSummary> {
    let prepared = PreparedSegment::new(cfg, scan, spec)?;
    Ok(SegmentSummary { spec: *spec, stats: prepared.summary() })
}

pub fn simulate_phase_scan(cfg: &ExperimentConfig) -> Result<PhaseScanRecord> {
    let plan = phase_scan_plan(cfg)?;
    let scan = ScanKind::Phase;
    let segments = plan.iter().map(|s| simulate_segment(cfg, &scan, s)).collect::<Result<_>>()?;
    Ok(PhaseScanRecord { config: cfg.clone(), scan, segments })
}

pub fn simulate_lo_scan(cfg: &ExperimentConfig, phi: f64, grid: &[f64]) -> Result<PhaseScanRecord> {
    let plan = lo_scan_plan(cfg, phi, grid)?;
    let scan = ScanKind::Lo { phase: phi, grid: grid.to_vec() };
    let segments = plan.iter().map(|s| simulate_segment(cfg, &scan, s)).collect::<Result<_>>()?;
    Ok(PhaseScanRecord { config: cfg.clone(), scan, segments })
}

/// Phase scan reduced on the fly; memory use is independent of the sample counts.
pub fn summarize_phase_scan(cfg: &ExperimentConfig) -> Result<RecordSummary> {
    let plan = phase_scan_plan(cfg)?;
    let scan = ScanKind::Phase;
    let segments = plan.iter().map(|s| summarize_segment(cfg, &scan, s)).collect::<Result<_>>()?;
    Ok(RecordSummary { config: cfg.clone(), scan, segments })
}

pub fn summarize_lo_scan(cfg: &ExperimentConfig, phi: f64, grid: &[f64]) -> Result<RecordSummary> {
    let plan = lo_scan_plan(cfg, phi, grid)?;
    let scan = ScanKind::Lo { phase: phi, grid: grid.to_vec() };
    let segments = plan.iter().map(|s| summarize_segment(cfg, &scan, s)).collect::<Result<_>>()?;
    Ok(RecordSummary { config: cfg.clone(), scan, segments })
}
