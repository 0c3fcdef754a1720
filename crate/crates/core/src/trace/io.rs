//! Binary trace file format.
//!
//! ```text
//! offset  size  field
//! 0       5     magic "PHTR1"
//! 5       8     record count, u64 little-endian
//! 13      17*n  records: pc u64 LE, kind u8 (0 load, 1 store, 2 branch, 3 other), addr u64 LE
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{RecordKind, Trace, TraceRecord};
use crate::{Error, Result};

pub const TRACE_MAGIC: &[u8; 5] = b"PHTR1";
pub const RECORD_BYTES: usize = 17;
const HEADER_BYTES: usize = TRACE_MAGIC.len() + 8;

pub fn encode_trace(trace: &Trace) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_BYTES + RECORD_BYTES * trace.len());
    out.extend_from_slice(TRACE_MAGIC);
    out.extend_from_slice(&(trace.len() as u64).to_le_bytes());
    for r in trace.records() {
        out.extend_from_slice(&r.pc.to_le_bytes());
        out.push(r.kind.code());
        out.extend_from_slice(&r.addr.to_le_bytes());
    }
    out
}

pub fn decode_trace(bytes: &[u8]) -> Result<Trace> {
    if bytes.len() < TRACE_MAGIC.len() || &bytes[..TRACE_MAGIC.len()] != TRACE_MAGIC {
        return Err(Error::format(0, "bad magic, expected \"PHTR1\""));
    }
    if bytes.len() < HEADER_BYTES {
        return Err(Error::format(
            bytes.len() as u64,
            "truncated header: record count missing",
        ));
    }
    let count = u64::from_le_bytes(bytes[5..13].try_into().unwrap());
    let body = &bytes[HEADER_BYTES..];
    let expected = (count as u128) * RECORD_BYTES as u128;
    if (body.len() as u128) < expected {
        let whole = body.len() / RECORD_BYTES;
        return Err(Error::format(
            (HEADER_BYTES + whole * RECORD_BYTES) as u64,
            format!("truncated: header declares {count} records, file holds {whole}"),
        ));
    }
    if (body.len() as u128) > expected {
        return Err(Error::format(
            HEADER_BYTES as u64 + expected as u64,
            "trailing bytes after last record",
        ));
    }

    let mut records = Vec::with_capacity(count as usize);
    for (i, raw) in body.chunks_exact(RECORD_BYTES).enumerate() {
        let at = (HEADER_BYTES + i * RECORD_BYTES) as u64;
        let pc = u64::from_le_bytes(raw[..8].try_into().unwrap());
        let kind = RecordKind::from_code(raw[8])
            .ok_or_else(|| Error::format(at + 8, format!("unknown record kind {}", raw[8])))?;
        let addr = u64::from_le_bytes(raw[9..17].try_into().unwrap());
        if !kind.is_memory() && addr != 0 {
            return Err(Error::format(
                at + 9,
                "non-memory record carries a data address",
            ));
        }
        records.push(TraceRecord { pc, kind, addr });
    }
    Ok(Trace { records })
}

pub fn write_trace(trace: &Trace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&encode_trace(trace))
        .map_err(|e| Error::io(path, e))
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Trace> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_trace(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_record() -> impl Strategy<Value = TraceRecord> {
        (any::<u64>(), 0u8..4, any::<u64>()).prop_map(|(pc, k, addr)| {
            let kind = RecordKind::from_code(k).unwrap();
            TraceRecord {
                pc,
                kind,
                addr: if kind.is_memory() { addr } else { 0 },
            }
        })
    }

    #[test]
    fn empty_trace_is_header_only() {
        let bytes = encode_trace(&Trace::default());
        assert_eq!(bytes.len(), 13);
        assert_eq!(decode_trace(&bytes).unwrap(), Trace::default());
    }

    #[test]
    fn bad_magic_rejected() {
        let mut bytes = encode_trace(&Trace::default());
        bytes[..4].copy_from_slice(b"XXXX");
        match decode_trace(&bytes) {
            Err(Error::Format { offset: 0, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncation_reports_offset_of_missing_record() {
        let t = Trace::new(vec![TraceRecord::load(1, 2), TraceRecord::other(3)]);
        let bytes = encode_trace(&t);
        match decode_trace(&bytes[..bytes.len() - 1]) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 13 + 17),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            decode_trace(&bytes[..9]),
            Err(Error::Format { offset: 9, .. })
        ));
    }

    #[test]
    fn unknown_kind_rejected() {
        let mut bytes = encode_trace(&Trace::new(vec![TraceRecord::other(3)]));
        bytes[13 + 8] = 9;
        assert!(matches!(
            decode_trace(&bytes),
            Err(Error::Format { offset: 21, .. })
        ));
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.phtr");
        let t = Trace::new(vec![
            TraceRecord::load(0x400000, 0x1000),
            TraceRecord::store(0x400004, 0x2008),
            TraceRecord::branch(0x400008),
        ]);
        write_trace(&t, &path).unwrap();
        assert_eq!(read_trace(&path).unwrap(), t);
    }

    proptest! {
        #[test]
        fn encode_decode_identity(records in prop::collection::vec(arb_record(), 0..2000)) {
            let t = Trace::new(records);
            prop_assert_eq!(decode_trace(&encode_trace(&t)).unwrap(), t);
        }
    }
}
