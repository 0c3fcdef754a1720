//! Instruction traces, synthetic trace generation and fixed-length segmentation.
//!
//! A trace is an ordered list of [`TraceRecord`]s. The record's sequence
//! number is its index in the trace, so sequence numbers are always
//! consecutive from zero.

mod io;
mod synth;

pub use io::{decode_trace, encode_trace, read_trace, write_trace, RECORD_BYTES, TRACE_MAGIC};
pub use synth::{generate_trace, AccessPattern, PhaseSpec, SyntheticSpec};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Load,
    Store,
    Branch,
    Other,
}

impl RecordKind {
    pub fn code(self) -> u8 {
        match self {
            RecordKind::Load => 0,
            RecordKind::Store => 1,
            RecordKind::Branch => 2,
            RecordKind::Other => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => RecordKind::Load,
            1 => RecordKind::Store,
            2 => RecordKind::Branch,
            3 => RecordKind::Other,
            _ => return None,
        })
    }

    pub fn is_memory(self) -> bool {
        matches!(self, RecordKind::Load | RecordKind::Store)
    }
}

/// One dynamic instruction. `addr` is zero unless the record is a load or store.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TraceRecord {
    pub pc: u64,
    pub kind: RecordKind,
    pub addr: u64,
}

impl TraceRecord {
    pub fn load(pc: u64, addr: u64) -> Self {
        TraceRecord {
            pc,
            kind: RecordKind::Load,
            addr,
        }
    }

    pub fn store(pc: u64, addr: u64) -> Self {
        TraceRecord {
            pc,
            kind: RecordKind::Store,
            addr,
        }
    }

    pub fn branch(pc: u64) -> Self {
        TraceRecord {
            pc,
            kind: RecordKind::Branch,
            addr: 0,
        }
    }

    pub fn other(pc: u64) -> Self {
        TraceRecord {
            pc,
            kind: RecordKind::Other,
            addr: 0,
        }
    }
}

/// An immutable instruction trace.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    records: Vec<TraceRecord>,
}

impl Trace {
    /// Builds a trace, zeroing the address of non-memory records.
    pub fn new(mut records: Vec<TraceRecord>) -> Self {
        for r in &mut records {
            if !r.kind.is_memory() {
                r.addr = 0;
            }
        }
        Trace { records }
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records paired with their sequence numbers.
    pub fn iter_seq(&self) -> impl Iterator<Item = (u64, &TraceRecord)> {
        self.records.iter().enumerate().map(|(i, r)| (i as u64, r))
    }
}

/// One timestep: a fixed-length slice of a benchmark's trace.
#[derive(Clone, Copy, Debug)]
pub struct Segment<'a> {
    pub benchmark_id: &'a str,
    pub timestep_index: usize,
    pub records: &'a [TraceRecord],
}

impl Segment<'_> {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Splits a trace into `⌊len / chunk_len⌋` equal segments. A trailing partial
/// chunk is dropped so every timestep covers the same instruction count.
pub fn segment_trace<'a>(
    benchmark_id: &'a str,
    trace: &'a Trace,
    chunk_len: usize,
) -> crate::Result<Vec<Segment<'a>>> {
    if chunk_len == 0 {
        return Err(crate::Error::validation("chunk_len must be at least 1"));
    }
    Ok(trace
        .records()
        .chunks_exact(chunk_len)
        .enumerate()
        .map(|(timestep_index, records)| Segment {
            benchmark_id,
            timestep_index,
            records,
        })
        .collect())
}
