use std::io::Cursor;

use hccm_core::config::RunConfig;
use hccm_core::detector::{
    equidistant_phases, simulate_lo_scan, simulate_phase_scan, summarize_lo_scan, summarize_phase_scan,
};
use hccm_core::record::{read_record, read_summary, write_record, RecordFormat, RecordHeader};
use hccm_core::HccmError;

fn small_run() -> RunConfig {
    let mut run = RunConfig::preset("default").unwrap();
    let cfg = &mut run.experiment;
    cfg.phases = equidistant_phases(7);
    cfg.samples_per_phase = 3000;
    cfg.blocked_lo_samples = 70_000;
    cfg.calibration_samples = 1500;
    cfg.seed = 42;
    cfg.detector.dark_corr = 2.0;
    run
}

fn encode(run: &RunConfig, format: RecordFormat) -> Vec<u8> {
    let header = RecordHeader::for_phase_scan(run).unwrap();
    let rec = simulate_phase_scan(&run.experiment).unwrap();
    let mut buf = Vec::new();
    write_record(&mut buf, format, &header, rec.segments.into_iter().map(Ok)).unwrap();
    buf
}

#[test]
fn text_and_binary_round_trip_exactly() {
    let run = small_run();
    let original = simulate_phase_scan(&run.experiment).unwrap();
    for format in [RecordFormat::Text, RecordFormat::Binary] {
        let (header, rec) = read_record(Cursor::new(encode(&run, format))).unwrap();
        assert_eq!(header.config, run, "{format:?}");
        assert_eq!(rec, original, "{format:?}");
    }
}

#[test]
fn streaming_summary_matches_in_memory_summary_bitwise() {
    let run = small_run();
    let direct = summarize_phase_scan(&run.experiment).unwrap();
    assert_eq!(simulate_phase_scan(&run.experiment).unwrap().summarize(), direct);
    for format in [RecordFormat::Text, RecordFormat::Binary] {
        let (_, summary) = read_summary(Cursor::new(encode(&run, format))).unwrap();
        assert_eq!(summary, direct, "{format:?}");
    }
}

#[test]
fn lo_scan_record_round_trip() {
    let mut run = RunConfig::preset("paper").unwrap();
    run.experiment = small_run().experiment;
    let header = RecordHeader::for_lo_scan(&run).unwrap();
    let lo = run.lo_scan.as_ref().unwrap();
    let rec = simulate_lo_scan(&run.experiment, lo.phase, &lo.grid()).unwrap();
    let mut buf = Vec::new();
    write_record(&mut buf, RecordFormat::Binary, &header, rec.segments.clone().into_iter().map(Ok)).unwrap();
    let (back_header, back) = read_record(Cursor::new(&buf)).unwrap();
    assert_eq!(back_header, header);
    assert_eq!(back, rec);
    let (_, summary) = read_summary(Cursor::new(&buf)).unwrap();
    assert_eq!(summary, summarize_lo_scan(&run.experiment, lo.phase, &lo.grid()).unwrap());
}

#[test]
fn writer_rejects_segments_off_plan() {
    let run = small_run();
    let header = RecordHeader::for_phase_scan(&run).unwrap();
    let mut rec = simulate_phase_scan(&run.experiment).unwrap();
    rec.segments.swap(0, 1);
    let err = write_record(Vec::new(), RecordFormat::Text, &header, rec.segments.into_iter().map(Ok)).unwrap_err();
    assert!(matches!(err, HccmError::InvalidArgument(_)));
}

fn expect_malformed(bytes: Vec<u8>) -> String {
    match read_summary(Cursor::new(bytes)) {
        Err(HccmError::MalformedRecord(msg)) => msg,
        other => panic!("expected a malformed-record error, got {other:?}"),
    }
}

#[test]
fn truncated_records_are_malformed() {
    let run = small_run();
    let text = encode(&run, RecordFormat::Text);
    let cut = text.len() - 200;
    let end = text[..cut].iter().rposition(|&b| b == b'\n').unwrap() + 1;
    expect_malformed(text[..end].to_vec());
    let bin = encode(&run, RecordFormat::Binary);
    expect_malformed(bin[..bin.len() - 28].to_vec());
    expect_malformed(bin[..bin.len() - 5].to_vec());
    expect_malformed(bin[..10].to_vec());
}

#[test]
fn corrupted_rows_are_malformed() {
    let run = small_run();
    let text = String::from_utf8(encode(&run, RecordFormat::Text)).unwrap();
    let header_len: usize = text.lines().take_while(|l| l.starts_with('#')).map(|l| l.len() + 1).sum();
    let (head, body) = text.split_at(header_len);
    let mut lines: Vec<String> = body.lines().map(str::to_string).collect();

    let mut bad = lines.clone();
    bad[3] = "0,not-a-number,1,2".into();
    expect_malformed(format!("{head}{}\n", bad.join("\n")).into_bytes());

    let mut bad = lines.clone();
    bad[3] = "0,0.1,1".into();
    expect_malformed(format!("{head}{}\n", bad.join("\n")).into_bytes());

    // Segment index out of order.
    let mut bad = lines.clone();
    let fields: Vec<&str> = bad[0].split(',').collect();
    bad[0] = format!("5,{},{},{}", fields[1], fields[2], fields[3]);
    expect_malformed(format!("{head}{}\n", bad.join("\n")).into_bytes());

    // Phase column disagreeing with the plan.
    let last = lines.len() - 1;
    let fields: Vec<String> = lines[last].split(',').map(str::to_string).collect();
    lines[last] = format!("{},{},{},{}", fields[0], 1.2345, fields[2], fields[3]);
    expect_malformed(format!("{head}{}\n", lines.join("\n")).into_bytes());
}

#[test]
fn bad_headers_are_malformed() {
    let run = small_run();
    let text = String::from_utf8(encode(&run, RecordFormat::Text)).unwrap();
    expect_malformed(text.replacen("format=HCCM1", "format=HCCM9", 1).into_bytes());
    expect_malformed(text.replacen("# segments=", "# segment_count=", 1).into_bytes());
    expect_malformed(b"hello\n".to_vec());
    expect_malformed(Vec::new());
    let mut bin = encode(&run, RecordFormat::Binary);
    bin[5..13].copy_from_slice(&u64::MAX.to_le_bytes());
    expect_malformed(bin);
}

#[test]
fn paper_record_is_sized_by_the_preset() {
    let run = RunConfig::preset("paper").unwrap();
    let header = RecordHeader::for_phase_scan(&run).unwrap();
    let e = &run.experiment;
    let scans: Vec<_> = header.plan.iter().filter(|s| s.kind == hccm_core::detector::SegmentKind::Scan).collect();
    assert_eq!(scans.len(), 120);
    assert!(scans.iter().all(|s| s.samples == 458_000));
    let expected = 120 * 458_000 + 2 * e.blocked_lo_samples + 2 * e.calibration_samples;
    assert_eq!(header.total_samples(), expected);
}
