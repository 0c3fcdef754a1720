use headroom_core::trace::{
    decode_trace, encode_trace, read_trace, write_trace, RecordKind, Trace, TraceRecord,
    RECORD_BYTES,
};

fn million() -> Trace {
    let mut x: u64 = 0x9E37_79B9_7F4A_7C15;
    let records = (0..1_000_000u64)
        .map(|i| {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            let pc = 0x40_0000 + (i % 97) * 4;
            match x % 4 {
                0 => TraceRecord::load(pc, x >> 8),
                1 => TraceRecord::store(pc, x >> 12),
                2 => TraceRecord::branch(pc),
                _ => TraceRecord::other(pc),
            }
        })
        .collect();
    Trace::new(records)
}

#[test]
fn million_record_file_roundtrip() {
    let trace = million();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.trace");
    write_trace(&trace, &path).unwrap();
    let size = std::fs::metadata(&path).unwrap().len();
    assert_eq!(size, 5 + 8 + 1_000_000 * RECORD_BYTES as u64);
    let back = read_trace(&path).unwrap();
    assert_eq!(back, trace);
    assert!(back.records().iter().any(|r| r.kind == RecordKind::Store));
}

#[test]
fn truncated_file_reports_offset() {
    let mut bytes = encode_trace(&million());
    bytes.truncate(bytes.len() - 3);
    let err = decode_trace(&bytes).unwrap_err().to_string();
    assert!(err.contains("byte"), "{err}");
}

#[test]
fn missing_file_is_io_error() {
    let err = read_trace("/nonexistent/dir/x.trace").unwrap_err();
    assert!(err.is_io());
}
