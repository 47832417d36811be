//! Record files: one file per run.
//!
//! Text layout: header lines `# key=value` (format tag, scan description, the
//! complete configuration echo, the segment table), then one data row
//! `phase_index,phase_rad,c1,c2` per sample pair. `phase_index` is the index of
//! the acquisition segment the pair belongs to; the segment table
//! (`# segment.<i>=kind=...;phase_rad=...;lo_amplitude=...;samples=...`) says
//! what each segment is.
//!
//! Binary layout: the magic `HCCM1`, the header text length as `u64` LE, the
//! header text, then rows of `u32` segment index and three `f64` (all LE).

use std::collections::BTreeMap;
use std::io::{BufRead, BufWriter, Read, Write};
use std::path::Path;

use crate::config::RunConfig;
use crate::detector::{
    lo_scan_plan, phase_scan_plan, simulate_segment, ChunkedAccumulator, PhaseScanRecord, RecordSummary, ScanKind,
    Segment, SegmentKind, SegmentSpec, SegmentSummary,
};
use crate::error::{HccmError, Result};

pub const MAGIC: &[u8; 5] = b"HCCM1";
const ROW_BYTES: usize = 4 + 3 * 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    Text,
    Binary,
}

impl RecordFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            Self::Text => "txt",
            Self::Binary => "bin",
        }
    }
}

/// Everything in a record except the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordHeader {
    pub config: RunConfig,
    pub scan: ScanKind,
    pub plan: Vec<SegmentSpec>,
}

impl RecordHeader {
    pub fn for_phase_scan(config: &RunConfig) -> Result<Self> {
        let plan = phase_scan_plan(&config.experiment)?;
        Ok(Self { config: config.clone(), scan: ScanKind::Phase, plan })
    }

    pub fn for_lo_scan(config: &RunConfig) -> Result<Self> {
        let scan_cfg = config
            .lo_scan
            .as_ref()
            .ok_or_else(|| HccmError::InvalidArgument("configuration has no LO-strength scan".into()))?;
        let grid = scan_cfg.grid();
        let plan = lo_scan_plan(&config.experiment, scan_cfg.phase, &grid)?;
        Ok(Self { config: config.clone(), scan: ScanKind::Lo { phase: scan_cfg.phase, grid }, plan })
    }

    pub fn total_samples(&self) -> u64 {
        self.plan.iter().map(|s| s.samples).sum()
    }

    fn to_text(&self) -> String {
        let mut out = String::from("# format=HCCM1\n");
        match &self.scan {
            ScanKind::Phase => out.push_str("# scan=phase\n"),
            ScanKind::Lo { phase, grid } => {
                out.push_str("# scan=lo\n");
                out.push_str(&format!("# scan_phase_rad={phase}\n"));
                let g: Vec<String> = grid.iter().map(|e| e.to_string()).collect();
                out.push_str(&format!("# scan_grid={}\n", g.join(",")));
            }
        }
        for (k, v) in self.config.to_entries() {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out.push_str(&format!("# segments={}\n", self.plan.len()));
        for s in &self.plan {
            out.push_str(&format!(
                "# segment.{}=kind={};phase_rad={};lo_amplitude={};samples={}\n",
                s.index,
                s.kind.as_str(),
                s.phase,
                s.lo_amplitude,
                s.samples
            ));
        }
        out.push_str("# columns=phase_index,phase_rad,c1,c2\n");
        out
    }

    fn from_lines<'a>(lines: impl Iterator<Item = &'a str>) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for line in lines {
            let body = line.strip_prefix('#').ok_or_else(|| malformed(format!("header line without '#': '{line}'")))?;
            let Some((k, v)) = body.trim().split_once('=') else {
                return Err(malformed(format!("header line without '=': '{line}'")));
            };
            entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        let mut take = |k: &str| entries.remove(k).ok_or_else(|| malformed(format!("header lacks '{k}'")));
        if take("format")? != "HCCM1" {
            return Err(malformed("unsupported record format tag".into()));
        }
        take("columns")?;
        let scan = match take("scan")?.as_str() {
            "phase" => ScanKind::Phase,
            "lo" => {
                let phase = parse_f64("scan_phase_rad", &take("scan_phase_rad")?)?;
                let grid =
                    take("scan_grid")?.split(',').map(|g| parse_f64("scan_grid", g)).collect::<Result<Vec<_>>>()?;
                ScanKind::Lo { phase, grid }
            }
            other => return Err(malformed(format!("unknown scan kind '{other}'"))),
        };
        let n: usize = take("segments")?.parse().map_err(|_| malformed("bad segment count".into()))?;
        let mut plan = Vec::with_capacity(n);
        for index in 0..n {
            let desc = take(&format!("segment.{index}"))?;
            let mut fields = BTreeMap::new();
            for part in desc.split(';') {
                let (k, v) = part.split_once('=').ok_or_else(|| malformed(format!("bad segment entry '{desc}'")))?;
                fields.insert(k, v);
            }
            let get = |k: &str| fields.get(k).copied().ok_or_else(|| malformed(format!("segment {index} lacks {k}")));
            plan.push(SegmentSpec {
                index,
                kind: SegmentKind::parse(get("kind")?)?,
                phase: parse_f64("phase_rad", get("phase_rad")?)?,
                lo_amplitude: parse_f64("lo_amplitude", get("lo_amplitude")?)?,
                samples: get("samples")?
                    .parse()
                    .map_err(|_| malformed(format!("segment {index}: bad sample count")))?,
            });
        }
        let config = RunConfig::from_entries(entries)?;
        Ok(Self { config, scan, plan })
    }
}

fn malformed(msg: String) -> HccmError {
    HccmError::MalformedRecord(msg)
}

fn parse_f64(what: &str, s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| malformed(format!("{what}: not a number: '{s}'")))
}

/// Streams segments to `w`; segments must follow the header's plan.
pub fn write_record<W: Write>(
    w: W,
    format: RecordFormat,
    header: &RecordHeader,
    segments: impl Iterator<Item = Result<Segment>>,
) -> Result<()> {
    let mut w = BufWriter::with_capacity(1 << 20, w);
    let text = header.to_text();
    match format {
        RecordFormat::Text => w.write_all(text.as_bytes())?,
        RecordFormat::Binary => {
            w.write_all(MAGIC)?;
            w.write_all(&(text.len() as u64).to_le_bytes())?;
            w.write_all(text.as_bytes())?;
        }
    }
    let mut planned = header.plan.iter();
    for segment in segments {
        let segment = segment?;
        if planned.next() != Some(&segment.spec) || segment.samples.len() as u64 != segment.spec.samples {
            return Err(HccmError::InvalidArgument(format!(
                "segment {} does not match the record plan",
                segment.spec.index
            )));
        }
        let idx = segment.spec.index;
        let phase = segment.spec.phase;
        match format {
            RecordFormat::Text => {
                for (c1, c2) in &segment.samples {
                    writeln!(w, "{idx},{phase},{c1},{c2}")?;
                }
            }
            RecordFormat::Binary => {
                let mut row = [0u8; ROW_BYTES];
                row[..4].copy_from_slice(&(idx as u32).to_le_bytes());
                row[4..12].copy_from_slice(&phase.to_le_bytes());
                for (c1, c2) in &segment.samples {
                    row[12..20].copy_from_slice(&c1.to_le_bytes());
                    row[20..28].copy_from_slice(&c2.to_le_bytes());
                    w.write_all(&row)?;
                }
            }
        }
    }
    if planned.next().is_some() {
        return Err(HccmError::InvalidArgument("record ended before the plan was complete".into()));
    }
    w.flush()?;
    Ok(())
}

/// Simulates the run described by `header` one segment at a time and writes it to `path`.
pub fn simulate_to_file(path: &Path, format: RecordFormat, header: &RecordHeader) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let cfg = &header.config.experiment;
    let segments = header.plan.iter().map(|spec| simulate_segment(cfg, &header.scan, spec));
    write_record(file, format, header, segments)
}

pub fn write_record_file(
    path: &Path,
    format: RecordFormat,
    config: &RunConfig,
    record: &PhaseScanRecord,
) -> Result<()> {
    let header = RecordHeader {
        config: config.clone(),
        scan: record.scan.clone(),
        plan: record.segments.iter().map(|s| s.spec).collect(),
    };
    let file = std::fs::File::create(path)?;
    write_record(file, format, &header, record.segments.iter().cloned().map(Ok))
}

/// Row consumer shared by the full and the summary readers.
trait RowSink {
    fn row(&mut self, segment: usize, c1: f64, c2: f64);
}

struct Collect(Vec<Vec<(f64, f64)>>);

impl RowSink for Collect {
    fn row(&mut self, segment: usize, c1: f64, c2: f64) {
        self.0[segment].push((c1, c2));
    }
}

struct Reduce(Vec<ChunkedAccumulator>);

impl RowSink for Reduce {
    fn row(&mut self, segment: usize, c1: f64, c2: f64) {
        self.0[segment].push(c1, c2);
    }
}

/// Checks that rows arrive segment by segment in plan order with the planned counts.
struct Tracker<'a> {
    plan: &'a [SegmentSpec],
    current: usize,
    seen: u64,
}

impl Tracker<'_> {
    fn accept(&mut self, idx: usize, phase: f64) -> Result<()> {
        while self.current < self.plan.len() && self.seen == self.plan[self.current].samples && idx != self.current {
            self.current += 1;
            self.seen = 0;
        }
        let Some(spec) = self.plan.get(self.current) else {
            return Err(malformed(format!("row for segment {idx} after the last segment")));
        };
        if idx != self.current {
            return Err(malformed(format!(
                "segment {} has {} rows, expected {}; next row belongs to segment {idx}",
                self.current, self.seen, spec.samples
            )));
        }
        if self.seen == spec.samples {
            return Err(malformed(format!("segment {idx} has more than {} rows", spec.samples)));
        }
        if phase.to_bits() != spec.phase.to_bits() {
            return Err(malformed(format!("segment {idx}: row phase {phase} differs from {}", spec.phase)));
        }
        self.seen += 1;
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        while self.current < self.plan.len() && self.seen == self.plan[self.current].samples {
            self.current += 1;
            self.seen = 0;
        }
        if self.current < self.plan.len() {
            return Err(malformed(format!(
                "record truncated: segment {} has {} of {} rows",
                self.current, self.seen, self.plan[self.current].samples
            )));
        }
        Ok(())
    }
}

/// Like `read_exact`, but returns the number of bytes read when the input ends early.
fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(filled)
}

fn read_text_line<R: BufRead>(r: &mut R, line: &mut String) -> Result<usize> {
    r.read_line(line).map_err(|e| match e.kind() {
        std::io::ErrorKind::InvalidData => malformed("text record is not valid UTF-8".into()),
        _ => e.into(),
    })
}

fn read_into<R: BufRead, S: RowSink>(
    mut r: R,
    make_sink: impl FnOnce(&RecordHeader) -> S,
) -> Result<(RecordHeader, S)> {
    let binary = r.fill_buf()?.starts_with(MAGIC);
    if binary {
        let mut prefix = [0u8; 13];
        if read_full(&mut r, &mut prefix)? != prefix.len() {
            return Err(malformed("truncated binary header".into()));
        }
        let len = u64::from_le_bytes(prefix[5..].try_into().expect("8 bytes"));
        let mut bytes = Vec::new();
        (&mut r).take(len).read_to_end(&mut bytes)?;
        if bytes.len() as u64 != len {
            return Err(malformed("truncated binary header".into()));
        }
        let text = String::from_utf8(bytes).map_err(|_| malformed("binary header is not UTF-8 text".into()))?;
        let header = RecordHeader::from_lines(text.lines())?;
        let mut sink = make_sink(&header);
        let mut tracker = Tracker { plan: &header.plan, current: 0, seen: 0 };
        let mut row = [0u8; ROW_BYTES];
        loop {
            match read_full(&mut r, &mut row)? {
                0 => break,
                ROW_BYTES => {}
                n => return Err(malformed(format!("trailing partial row of {n} bytes"))),
            }
            let idx = u32::from_le_bytes(row[..4].try_into().expect("4 bytes")) as usize;
            let f = |a: usize| f64::from_le_bytes(row[a..a + 8].try_into().expect("8 bytes"));
            tracker.accept(idx, f(4))?;
            sink.row(idx, f(12), f(20));
        }
        tracker.finish()?;
        Ok((header, sink))
    } else {
        let mut header_lines = Vec::new();
        let mut line = String::new();
        let mut first_row = None;
        loop {
            line.clear();
            if read_text_line(&mut r, &mut line)? == 0 {
                break;
            }
            let t = line.trim_end();
            if t.starts_with('#') {
                header_lines.push(t.to_string());
            } else if !t.is_empty() {
                first_row = Some(t.to_string());
                break;
            }
        }
        let header = RecordHeader::from_lines(header_lines.iter().map(String::as_str))?;
        let mut sink = make_sink(&header);
        let mut tracker = Tracker { plan: &header.plan, current: 0, seen: 0 };
        let mut handle = |t: &str| -> Result<()> {
            let mut parts = t.split(',');
            let mut next = |what: &str| parts.next().ok_or_else(|| malformed(format!("row lacks {what}: '{t}'")));
            let idx: usize = next("phase_index")?.trim().parse().map_err(|_| malformed(format!("bad row '{t}'")))?;
            let phase = parse_f64("phase_rad", next("phase_rad")?)?;
            let c1 = parse_f64("c1", next("c1")?)?;
            let c2 = parse_f64("c2", next("c2")?)?;
            if parts.next().is_some() {
                return Err(malformed(format!("row has more than 4 columns: '{t}'")));
            }
            tracker.accept(idx, phase)?;
            sink.row(idx, c1, c2);
            Ok(())
        };
        if let Some(t) = first_row {
            handle(&t)?;
        }
        loop {
            line.clear();
            if read_text_line(&mut r, &mut line)? == 0 {
                break;
            }
            let t = line.trim_end();
            if !t.is_empty() {
                handle(t)?;
            }
        }
        tracker.finish()?;
        Ok((header, sink))
    }
}

/// Reads a complete record (all samples in memory).
pub fn read_record<R: BufRead>(r: R) -> Result<(RecordHeader, PhaseScanRecord)> {
    let (header, Collect(samples)) = read_into(r, |h| Collect(vec![Vec::new(); h.plan.len()]))?;
    let record = PhaseScanRecord {
        config: header.config.experiment.clone(),
        scan: header.scan.clone(),
        segments: header.plan.iter().zip(samples).map(|(spec, samples)| Segment { spec: *spec, samples }).collect(),
    };
    Ok((header, record))
}

/// Reads a record reducing each segment on the fly; memory use does not grow with the sample count.
pub fn read_summary<R: BufRead>(r: R) -> Result<(RecordHeader, RecordSummary)> {
    let (header, Reduce(accs)) = read_into(r, |h| Reduce(vec![ChunkedAccumulator::default(); h.plan.len()]))?;
    let summary = RecordSummary {
        config: header.config.experiment.clone(),
        scan: header.scan.clone(),
        segments: header
            .plan
            .iter()
            .zip(accs)
            .map(|(spec, acc)| SegmentSummary { spec: *spec, stats: acc.finish() })
            .collect(),
    };
    Ok((header, summary))
}

pub fn read_summary_file(path: &Path) -> Result<(RecordHeader, RecordSummary)> {
    let file = std::fs::File::open(path)?;
    read_summary(std::io::BufReader::with_capacity(1 << 20, file))
}

pub fn read_record_file(path: &Path) -> Result<(RecordHeader, PhaseScanRecord)> {
    let file = std::fs::File::open(path)?;
    read_record(std::io::BufReader::with_capacity(1 << 20, file))
}
