//! End-to-end analysis of scan summaries.
//!
//! Phase scan: `C(φ)` is fitted raw, then the blocked-signal offset (LO noise
//! and correlated dark noise) is removed from `a₀`; `C_block` is the pooled
//! blocked-LO level minus the dark-run offset; the spread of the blocked-LO
//! runs is the drift error.

use std::collections::BTreeMap;

use crate::analysis::{
    fit_lo_dependence, fit_trig_poly, lo_offset_correction, separate_by_phase, separation_from_lo_fit,
    CorrelationEstimate, LoFit, LoPoint, Matrix6, SeparatedContributions, SeparationMethod, TrigFit, Vector6,
};
use crate::detector::{RecordSummary, ScanKind, SegmentKind, SegmentSummary};
use crate::error::{HccmError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub phase: f64,
    pub raw: CorrelationEstimate,
    /// `raw` minus the blocked-signal offset.
    pub corrected: CorrelationEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScanAnalysis {
    pub points: Vec<PhasePoint>,
    pub raw_fit: TrigFit,
    /// Fit with the blocked-signal offset removed from `a₀`.
    pub fit: TrigFit,
    pub offset: CorrelationEstimate,
    pub dark: CorrelationEstimate,
    pub blocked_runs: Vec<CorrelationEstimate>,
    /// Pooled blocked-LO level with the dark offset removed.
    pub c_block: CorrelationEstimate,
    pub drift: f64,
    pub separation: SeparatedContributions,
}

fn estimates<'a>(segments: impl Iterator<Item = &'a SegmentSummary>) -> Result<Vec<(f64, f64, CorrelationEstimate)>> {
    segments.map(|s| Ok((s.spec.phase, s.spec.lo_amplitude, s.stats.estimate()?))).collect()
}

fn pooled(runs: &[CorrelationEstimate]) -> CorrelationEstimate {
    runs[1..].iter().fold(runs[0], |acc, r| acc.pooled(r))
}

/// Largest change between consecutive blocked-LO runs; 0 with a single run.
fn drift_of(runs: &[CorrelationEstimate]) -> f64 {
    runs.windows(2).map(|w| crate::analysis::drift_error(&w[0], &w[1])).fold(0.0, f64::max)
}

fn single(summary: &RecordSummary, kind: SegmentKind, what: &str) -> Result<CorrelationEstimate> {
    let runs = estimates(summary.segments_of(kind))?;
    match runs.as_slice() {
        [] => Err(HccmError::MissingCalibration(format!("record has no {what} run"))),
        [(_, _, c)] => Ok(*c),
        many => Ok(pooled(&many.iter().map(|r| r.2).collect::<Vec<_>>())),
    }
}

pub fn analyze_phase_scan(summary: &RecordSummary) -> Result<PhaseScanAnalysis> {
    if summary.scan != ScanKind::Phase {
        return Err(HccmError::InvalidArgument("record is not a phase scan".into()));
    }
    let blocked_runs: Vec<_> =
        estimates(summary.segments_of(SegmentKind::BlockedLo))?.into_iter().map(|r| r.2).collect();
    if blocked_runs.is_empty() {
        return Err(HccmError::MissingCalibration(
            "record has no blocked-LO run; separation by phase needs the measurement with blocked LO".into(),
        ));
    }
    let offset = single(summary, SegmentKind::BlockedSignal, "blocked-signal")?;
    let dark = single(summary, SegmentKind::Dark, "dark (signal and LO blocked)")?;
    let points: Vec<PhasePoint> = estimates(summary.segments_of(SegmentKind::Scan))?
        .into_iter()
        .map(|(phase, _, raw)| PhasePoint { phase, raw, corrected: lo_offset_correction(&raw, &offset) })
        .collect();
    let raw_fit = fit_trig_poly(&points.iter().map(|p| (p.phase, p.raw)).collect::<Vec<_>>())?;
    let fit = raw_fit.shift_constant(&offset);
    let c_block = lo_offset_correction(&pooled(&blocked_runs), &dark);
    let drift = drift_of(&blocked_runs);
    let separation = separate_by_phase(&fit, &c_block, drift);
    Ok(PhaseScanAnalysis { points, raw_fit, fit, offset, dark, blocked_runs, c_block, drift, separation })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoScanAnalysis {
    pub phase: f64,
    pub reference_lo: f64,
    pub points: Vec<LoPoint>,
    pub fit: LoFit,
    pub separation: SeparatedContributions,
}

fn same_phase(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

/// LO-strength analysis; `C₁`, `C₂` refer to the LO amplitude `reference_lo`.
pub fn analyze_lo_scan(summary: &RecordSummary, reference_lo: f64) -> Result<LoScanAnalysis> {
    let ScanKind::Lo { phase, grid } = &summary.scan else {
        return Err(HccmError::InvalidArgument("record is not an LO-strength scan".into()));
    };
    let phase = *phase;
    let phase_pi = phase + std::f64::consts::PI;
    let dark = single(summary, SegmentKind::Dark, "dark (signal and LO blocked)")?;
    let blocked = estimates(summary.segments_of(SegmentKind::BlockedLo))?;
    let scans = estimates(summary.segments_of(SegmentKind::Scan))?;
    let offsets = estimates(summary.segments_of(SegmentKind::BlockedSignal))?;
    let find = |set: &[(f64, f64, CorrelationEstimate)], phi: f64, e: f64, what: &str| {
        set.iter()
            .find(|(p, l, _)| same_phase(*p, phi) && *l == e)
            .map(|r| r.2)
            .ok_or_else(|| HccmError::MissingCalibration(format!("no {what} run at E_L = {e}, phase {phi}")))
    };
    let mut points = Vec::with_capacity(grid.len());
    for &e in grid {
        let point = if e == 0.0 {
            LoPoint {
                lo_amplitude: 0.0,
                at_phi: find(&blocked, phase, 0.0, "blocked-LO")?,
                at_phi_pi: find(&blocked, phase_pi, 0.0, "blocked-LO")?,
                offset: Some(dark),
            }
        } else {
            LoPoint {
                lo_amplitude: e,
                at_phi: find(&scans, phase, e, "scan")?,
                at_phi_pi: find(&scans, phase_pi, e, "scan")?,
                offset: Some(find(&offsets, phase, e, "blocked-signal")?),
            }
        };
        points.push(point);
    }
    if !(reference_lo > 0.0 && reference_lo.is_finite()) {
        return Err(HccmError::InvalidArgument(format!("reference LO amplitude must be positive, got {reference_lo}")));
    }
    let fit = fit_lo_dependence(&points)?;
    let separation = separation_from_lo_fit(&fit, phase, reference_lo);
    Ok(LoScanAnalysis { phase, reference_lo, points, fit, separation })
}

/// Key-value form of a separation (full float precision), read back by [`separation_from_entries`].
pub fn separation_to_entries(sep: &SeparatedContributions) -> Vec<(String, String)> {
    let mut out = Vec::new();
    match sep.method {
        SeparationMethod::ByPhase => out.push(("method".to_string(), "by_phase".to_string())),
        SeparationMethod::ByLoStrength { phase, reference_lo } => {
            out.push(("method".to_string(), "by_lo_strength".to_string()));
            out.push(("method_phase_rad".to_string(), phase.to_string()));
            out.push(("method_reference_lo".to_string(), reference_lo.to_string()));
        }
    }
    for (i, name) in PARAM_NAMES.iter().enumerate() {
        out.push((format!("param.{name}"), sep.params[i].to_string()));
    }
    for (i, a) in PARAM_NAMES.iter().enumerate() {
        for (j, b) in PARAM_NAMES.iter().enumerate().skip(i) {
            out.push((format!("cov.{a}.{b}"), sep.stat_cov[(i, j)].to_string()));
        }
    }
    out.push(("drift".to_string(), sep.drift.to_string()));
    out
}

/// Parameter order of [`SeparatedContributions::params`].
pub const PARAM_NAMES: [&str; 6] = ["c0", "c1_cos", "c1_sin", "c2_cos", "c2_sin", "c2_const"];

pub fn separation_from_entries(entries: &BTreeMap<String, String>) -> Result<SeparatedContributions> {
    let get =
        |k: &str| entries.get(k).ok_or_else(|| HccmError::MalformedRecord(format!("separation report lacks '{k}'")));
    let num = |k: &str| -> Result<f64> {
        get(k)?.parse().map_err(|_| HccmError::MalformedRecord(format!("separation report: '{k}' is not a number")))
    };
    let method = match get("method")?.as_str() {
        "by_phase" => SeparationMethod::ByPhase,
        "by_lo_strength" => SeparationMethod::ByLoStrength {
            phase: num("method_phase_rad")?,
            reference_lo: num("method_reference_lo")?,
        },
        other => return Err(HccmError::MalformedRecord(format!("unknown separation method '{other}'"))),
    };
    let mut params = Vector6::zeros();
    let mut cov = Matrix6::zeros();
    for (i, name) in PARAM_NAMES.iter().enumerate() {
        params[i] = num(&format!("param.{name}"))?;
        for j in i..6 {
            let v = num(&format!("cov.{name}.{}", PARAM_NAMES[j]))?;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok(SeparatedContributions { method, params, stat_cov: cov, drift: num("drift")? })
}
