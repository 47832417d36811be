use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use hccm_core::analysis::{SeparatedContributions, SeparationMethod};
use hccm_core::config::{parse_entries, RunConfig};
use hccm_core::detector::{summarize_lo_scan, summarize_phase_scan};
use hccm_core::nonclassicality::{
    build_l, classify_phase_range, det_scan, det_with_threshold, is_squeezed_at, Verdict,
};
use hccm_core::pipeline::{
    analyze_lo_scan, analyze_phase_scan, separation_from_entries, separation_to_entries, LoScanAnalysis,
    PhaseScanAnalysis, PARAM_NAMES,
};
use hccm_core::record::{read_summary_file, simulate_to_file, RecordFormat, RecordHeader};
use hccm_core::HccmError;

use crate::report::{self, Report, ReportFormat, Table};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_PRECONDITION: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

fn config_error(e: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_CONFIG, message: format!("configuration error: {e}") }
}

fn data_error(e: HccmError) -> Failure {
    match e {
        HccmError::AnomalousTermInaccessible(_) => Failure { code: EXIT_PRECONDITION, message: e.to_string() },
        _ => Failure { code: EXIT_DATA, message: e.to_string() },
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Failure {
    Failure { code: EXIT_DATA, message: format!("{}: {e}", path.display()) }
}

#[derive(Debug, Clone, clap::Args)]
pub struct Options {
    /// Key-value configuration file.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in preset used when no configuration file is given (default, paper, coherent, thermal).
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
    /// Directory for records and reports.
    #[arg(long, value_name = "DIR", default_value = "hccm-out")]
    pub out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
}

impl Options {
    fn explicit_config(&self) -> bool {
        self.config.is_some() || self.preset.is_some()
    }

    fn load_config(&self, default_preset: &str) -> Result<RunConfig, Failure> {
        let mut run = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
                RunConfig::parse(&text).map_err(config_error)?
            }
            None => RunConfig::preset(self.preset.as_deref().unwrap_or(default_preset)).map_err(config_error)?,
        };
        if let Some(seed) = self.seed {
            run.experiment.seed = seed;
        }
        run.validate().map_err(config_error)?;
        Ok(run)
    }

    fn prepare_out(&self) -> Result<&Path, Failure> {
        fs::create_dir_all(&self.out).map_err(|e| io_error(&self.out, e))?;
        Ok(&self.out)
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| io_error(path, e))
}

const CONFIG_FILE: &str = "config.txt";
const SEPARATION_FILE: &str = "separation.txt";
const SEPARATION_LO_FILE: &str = "separation_lo.txt";
const PHASE_RECORD: &str = "phase_scan";
const LO_RECORD: &str = "lo_scan";

fn record_path(dir: &Path, stem: &str, format: RecordFormat) -> PathBuf {
    dir.join(format!("{stem}.{}", format.extension()))
}

/// An existing record, binary first.
fn find_record(dir: &Path, stem: &str) -> Option<PathBuf> {
    [RecordFormat::Binary, RecordFormat::Text].into_iter().map(|f| record_path(dir, stem, f)).find(|p| p.exists())
}

fn remove_records(dir: &Path, stem: &str) -> Result<(), Failure> {
    for format in [RecordFormat::Binary, RecordFormat::Text] {
        let p = record_path(dir, stem, format);
        if p.exists() {
            fs::remove_file(&p).map_err(|e| io_error(&p, e))?;
        }
    }
    Ok(())
}

fn run_summary(command: &str, run: &RunConfig) -> Report {
    let e = &run.experiment;
    let mut r = Report::default();
    r.push("command", command);
    r.push("preset", run.preset.as_str());
    r.push("seed", e.seed);
    r.push("phases", e.phases.len());
    r.push("samples_per_phase", e.samples_per_phase);
    r.push("blocked_lo_samples", e.blocked_lo_samples);
    r.push("calibration_samples", e.calibration_samples);
    r
}

pub fn simulate(opts: &Options, record_format: RecordFormat) -> Result<Report, Failure> {
    let run = opts.load_config("default")?;
    let dir = opts.prepare_out()?;
    write(&dir.join(CONFIG_FILE), &run.to_text())?;
    let mut summary = run_summary("simulate", &run);

    let header = RecordHeader::for_phase_scan(&run).map_err(config_error)?;
    remove_records(dir, PHASE_RECORD)?;
    let path = record_path(dir, PHASE_RECORD, record_format);
    simulate_to_file(&path, record_format, &header).map_err(data_error)?;
    summary.push("phase_scan_segments", header.plan.len());
    summary.push("phase_scan_samples", header.total_samples());
    summary.push("phase_scan_record", path.display().to_string());

    remove_records(dir, LO_RECORD)?;
    if run.lo_scan.is_some() {
        let header = RecordHeader::for_lo_scan(&run).map_err(config_error)?;
        let path = record_path(dir, LO_RECORD, record_format);
        simulate_to_file(&path, record_format, &header).map_err(data_error)?;
        summary.push("lo_scan_segments", header.plan.len());
        summary.push("lo_scan_samples", header.total_samples());
        summary.push("lo_scan_record", path.display().to_string());
    }
    Ok(summary)
}

pub fn analyze(opts: &Options) -> Result<Report, Failure> {
    let dir = opts.prepare_out()?;
    let path = find_record(dir, PHASE_RECORD).ok_or_else(|| Failure {
        code: EXIT_DATA,
        message: format!("no {PHASE_RECORD}.bin or {PHASE_RECORD}.txt in {}; run 'simulate' first", dir.display()),
    })?;
    let (header, summary) = read_summary_file(&path).map_err(data_error)?;
    let run = header.config;
    let phase = analyze_phase_scan(&summary).map_err(data_error)?;
    let lo = match find_record(dir, LO_RECORD) {
        Some(p) => {
            let (_, s) = read_summary_file(&p).map_err(data_error)?;
            Some(analyze_lo_scan(&s, run.experiment.lo_amplitude).map_err(data_error)?)
        }
        None => None,
    };
    write(&dir.join(CONFIG_FILE), &run.to_text())?;
    let mut out = run_summary("analyze", &run);
    out.extend(write_analysis(dir, opts.format, &phase, lo.as_ref())?);
    Ok(out)
}

fn push_estimate(r: &mut Report, key: &str, value: f64, stderr: f64) {
    r.push(key, value);
    r.push(format!("{key}_stderr"), stderr);
}

fn separation_text(sep: &SeparatedContributions) -> String {
    separation_to_entries(sep).into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

/// Writes the fit report, the phase table, the LO table and the separation files.
fn write_analysis(
    dir: &Path,
    format: ReportFormat,
    phase: &PhaseScanAnalysis,
    lo: Option<&LoScanAnalysis>,
) -> Result<Report, Failure> {
    let fit = &phase.fit;
    let mut r = Report::default();
    r.push("method", "by_phase");
    let names = ["a0", "a1", "b1", "a2", "b2"];
    let p = fit.params();
    for (k, name) in names.iter().enumerate() {
        push_estimate(&mut r, name, p[k], fit.cov[(k, k)].sqrt());
    }
    r.push("chi2", fit.chi2);
    r.push("dof", fit.dof);
    r.push("reduced_chi2", fit.reduced_chi2());
    push_estimate(&mut r, "lo_noise_offset", phase.offset.value, phase.offset.stderr);
    push_estimate(&mut r, "dark_offset", phase.dark.value, phase.dark.stderr);
    for (i, run) in phase.blocked_runs.iter().enumerate() {
        push_estimate(&mut r, &format!("blocked_lo_run{i}"), run.value, run.stderr);
    }
    push_estimate(&mut r, "c_block", phase.c_block.value, phase.c_block.stderr);
    r.push("drift", phase.drift);
    let cov = phase.separation.cov();
    for (k, name) in PARAM_NAMES.iter().enumerate() {
        push_estimate(&mut r, name, phase.separation.params[k], cov[(k, k)].sqrt());
    }
    write(&report::path(dir, "fit_report", format, false), &r.render(format))?;

    let mut table = Table::new(&["phase_rad", "C", "stderr", "C_fit", "C0", "C1", "C2"]);
    for point in &phase.points {
        let at = phase.separation.at(point.phase).map_err(data_error)?;
        table.row(vec![
            point.phase.into(),
            point.corrected.value.into(),
            point.corrected.stderr.into(),
            fit.eval(point.phase).into(),
            at.c0.into(),
            at.c1.into(),
            at.c2.into(),
        ]);
    }
    write(&report::path(dir, "phase_table", format, true), &table.render(format))?;
    write(&dir.join(SEPARATION_FILE), &separation_text(&phase.separation))?;

    let mut summary = Report::default();
    summary.push("reduced_chi2", fit.reduced_chi2());
    push_estimate(&mut summary, "c_block", phase.c_block.value, phase.c_block.stderr);
    summary.push("drift", phase.drift);

    let lo_table = report::path(dir, "lo_table", format, true);
    let lo_report = report::path(dir, "lo_fit_report", format, false);
    match lo {
        Some(lo) => {
            let f = &lo.fit;
            let mut table = Table::new(&[
                "lo_amplitude",
                "C_phi",
                "stderr_phi",
                "C_phi_pi",
                "stderr_phi_pi",
                "offset",
                "offset_stderr",
                "odd",
                "even",
                "odd_fit",
                "even_fit",
            ]);
            for pt in &lo.points {
                let off = pt.offset.map_or((0.0, 0.0), |o| (o.value, o.stderr));
                let (a, b) = (pt.at_phi.value - off.0, pt.at_phi_pi.value - off.0);
                let e = pt.lo_amplitude;
                table.row(vec![
                    e.into(),
                    a.into(),
                    pt.at_phi.stderr.into(),
                    b.into(),
                    pt.at_phi_pi.stderr.into(),
                    off.0.into(),
                    off.1.into(),
                    ((a - b) / 2.0).into(),
                    ((a + b) / 2.0).into(),
                    (f.gamma * e).into(),
                    (f.alpha + f.beta * e * e).into(),
                ]);
            }
            write(&lo_table, &table.render(format))?;

            let mut r = Report::default();
            r.push("method", "by_lo_strength");
            r.push("phase_rad", lo.phase);
            r.push("reference_lo", lo.reference_lo);
            for (k, name) in ["gamma", "alpha", "beta"].iter().enumerate() {
                let v = [f.gamma, f.alpha, f.beta][k];
                push_estimate(&mut r, name, v, f.cov[(k, k)].sqrt());
            }
            r.push("drift", f.drift);
            let at = lo.separation.at(lo.phase).map_err(data_error)?;
            for (k, name) in ["C0", "C1", "C2"].iter().enumerate() {
                let v = [at.c0, at.c1, at.c2][k];
                push_estimate(&mut r, name, v, at.cov[(k, k)].sqrt());
            }
            write(&lo_report, &r.render(format))?;
            write(&dir.join(SEPARATION_LO_FILE), &separation_text(&lo.separation))?;
            push_estimate(&mut summary, "lo_C1", at.c1, at.cov[(1, 1)].sqrt());
            let by_phase = phase.separation.at(lo.phase).map_err(data_error)?;
            push_estimate(&mut summary, "by_phase_C1", by_phase.c1, by_phase.cov[(1, 1)].sqrt());
        }
        None => {
            for stale in [lo_table, lo_report, dir.join(SEPARATION_LO_FILE)] {
                if stale.exists() {
                    fs::remove_file(&stale).map_err(|e| io_error(&stale, e))?;
                }
            }
        }
    }
    Ok(summary)
}

fn read_separation(path: &Path) -> Result<SeparatedContributions, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure { code: EXIT_DATA, message: format!("{}: {e}; run 'analyze' first", path.display()) })?;
    let entries = parse_entries(&text).map_err(data_error)?;
    separation_from_entries(&entries).map_err(data_error)
}

pub fn test(opts: &Options) -> Result<Report, Failure> {
    let dir = opts.prepare_out()?;
    let run = if opts.explicit_config() {
        opts.load_config("default")?
    } else {
        let path = dir.join(CONFIG_FILE);
        let text = fs::read_to_string(&path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        RunConfig::parse(&text).map_err(config_error)?
    };
    let sep = read_separation(&dir.join(SEPARATION_FILE))?;
    let lo_path = dir.join(SEPARATION_LO_FILE);
    let sep_lo = if lo_path.exists() { Some(read_separation(&lo_path)?) } else { None };
    let mut out = run_summary("test", &run);
    out.extend(run_test(dir, opts.format, &run, &sep, sep_lo.as_ref())?);
    Ok(out)
}

/// Determinant table over the scanned phases, summary over `[0, π)` and the `3π/4` highlight.
fn run_test(
    dir: &Path,
    format: ReportFormat,
    run: &RunConfig,
    sep: &SeparatedContributions,
    sep_lo: Option<&SeparatedContributions>,
) -> Result<Report, Failure> {
    let cfg = &run.experiment;
    let threshold = run.significance_threshold;
    let coeffs = cfg.splitter.coefficients().map_err(config_error)?;
    let state = cfg.signal.state().map_err(config_error)?;
    let results = det_scan(sep, &coeffs, &cfg.phases, threshold).map_err(data_error)?;

    let mut table = Table::new(&["phase_rad", "detL", "sigma", "significance", "verdict", "squeezed"]);
    for r in &results {
        table.row(vec![
            r.phi.into(),
            r.det.into(),
            r.sigma.into(),
            r.significance.into(),
            r.verdict.as_str().into(),
            is_squeezed_at(&state, r.phi).into(),
        ]);
    }
    write(&report::path(dir, "det_table", format, true), &table.render(format))?;

    let half: Vec<_> = results.iter().copied().filter(|r| r.phi >= 0.0 && r.phi < PI - 1e-9).collect();
    let mut rep = Report::default();
    rep.push("threshold_sigma", threshold);
    let overall = results.iter().filter(|r| r.verdict == Verdict::Nonclassical).count();
    rep.push("nonclassical_fraction_all_phases", overall as f64 / results.len() as f64);
    if half.is_empty() {
        rep.push("phases_in_half_range", 0usize);
    } else {
        let s = classify_phase_range(&half, &state).map_err(data_error)?;
        let phases: Vec<f64> = half.iter().map(|r| r.phi).collect();
        rep.push("phases_in_half_range", s.n_phases);
        rep.push("nonclassical_fraction", s.nonclassical_fraction);
        rep.push("nonclassical_intervals", report::intervals(&s.nonclassical_intervals));
        rep.push("squeezed_intervals", report::intervals(&report::runs(&phases, &s.squeezed)));
        rep.push("state_is_squeezed", s.state_is_squeezed);
        rep.push("nonclassical_outside_squeezed", s.nonclassical_outside_squeezed);
    }
    let phi = 3.0 * PI / 4.0;
    let h = det_with_threshold(&build_l(sep, &coeffs, phi).map_err(data_error)?, threshold);
    rep.push("highlight_phase_rad", phi);
    rep.push("highlight_detL", h.det);
    rep.push("highlight_sigma", h.sigma);
    rep.push("highlight_significance", h.significance);
    rep.push("highlight_verdict", h.verdict.as_str());
    rep.push("highlight_squeezed", is_squeezed_at(&state, phi));
    if let Some(lo) = sep_lo {
        if let SeparationMethod::ByLoStrength { phase, .. } = lo.method {
            let r = det_with_threshold(&build_l(lo, &coeffs, phase).map_err(data_error)?, threshold);
            let by_phase = det_with_threshold(&build_l(sep, &coeffs, phase).map_err(data_error)?, threshold);
            rep.push("lo_phase_rad", phase);
            rep.push("lo_detL", r.det);
            rep.push("lo_sigma", r.sigma);
            rep.push("lo_significance", r.significance);
            rep.push("lo_verdict", r.verdict.as_str());
            rep.push("by_phase_significance_at_lo_phase", by_phase.significance);
        }
    }
    write(&report::path(dir, "test_report", format, false), &rep.render(format))?;
    Ok(rep)
}

/// Full pipeline with the paper preset (or the given configuration), without writing raw records.
pub fn reproduce_paper(opts: &Options) -> Result<Report, Failure> {
    let run = opts.load_config("paper")?;
    let dir = opts.prepare_out()?;
    write(&dir.join(CONFIG_FILE), &run.to_text())?;
    let cfg = &run.experiment;
    let phase = analyze_phase_scan(&summarize_phase_scan(cfg).map_err(data_error)?).map_err(data_error)?;
    let lo = match &run.lo_scan {
        Some(scan) => {
            let s = summarize_lo_scan(cfg, scan.phase, &scan.grid()).map_err(data_error)?;
            Some(analyze_lo_scan(&s, cfg.lo_amplitude).map_err(data_error)?)
        }
        None => None,
    };
    let mut out = run_summary("reproduce-paper", &run);
    out.extend(write_analysis(dir, opts.format, &phase, lo.as_ref())?);
    out.extend(run_test(dir, opts.format, &run, &phase.separation, lo.as_ref().map(|l| &l.separation))?);
    Ok(out)
}
