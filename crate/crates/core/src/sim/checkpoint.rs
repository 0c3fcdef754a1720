//! Machine-state checkpoints.
//!
//! Blob layout, all integers little-endian:
//!
//! ```text
//! "PHCK"                      magic
//! u16                         format version (1)
//! u64 + bytes                 policy id, UTF-8
//! cache × 3                   L1I, L1D, L2
//! data prefetcher
//! instruction prefetcher
//! u64                         instructions simulated
//! f64 bits                    cycles accumulated
//! ```
//!
//! A cache is `sets, ways, line_size` (u64 each), the replacement code
//! (u8; random adds its u64 seed), the access clock, six statistics counters,
//! the ChaCha8 stream position for random/DRRIP (32-byte seed, u64 stream,
//! u128 word position), the DRRIP PSEL (u16) and finally every line as
//! `tag u64, meta u64, flags u8` (bit 0 valid, bit 1 prefetched).

use super::{MachineState, PolicyConfig};
use crate::cache::{CacheState, ReplacementPolicyId};
use crate::codec::{PutLe, Reader};
use crate::prefetch::{DataPrefetcher, InstrPrefetcher};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"PHCK";
pub const CHECKPOINT_VERSION: u16 = 1;

pub fn checkpoint(state: &MachineState) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.put_u16(CHECKPOINT_VERSION);
    let id = state.policy.id();
    out.put_u64(id.len() as u64);
    out.extend_from_slice(id.as_bytes());
    state.l1i.encode(&mut out);
    state.l1d.encode(&mut out);
    state.l2.encode(&mut out);
    state.l1d_prefetcher.encode(&mut out);
    state.l1i_prefetcher.encode(&mut out);
    out.put_u64(state.instructions);
    out.put_f64(state.cycles);
    out
}

pub fn restore(blob: &[u8]) -> Result<MachineState> {
    let mut r = Reader::new(blob);
    if r.take(4).ok() != Some(&CHECKPOINT_MAGIC[..]) {
        return Err(Error::format(0, "bad checkpoint magic"));
    }
    let version = r.u16()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::format(
            4,
            format!("unsupported checkpoint version {version}"),
        ));
    }
    let at = r.offset();
    let n = r.len(4096)?;
    let policy: PolicyConfig = std::str::from_utf8(r.take(n)?)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::format(at, "invalid policy id"))?;

    let at = r.offset();
    let l1i = CacheState::decode(&mut r)?;
    let l1d = CacheState::decode(&mut r)?;
    let l2 = CacheState::decode(&mut r)?;
    if l1i.policy() != ReplacementPolicyId::Lru
        || l1d.policy() != ReplacementPolicyId::Lru
        || l2.policy() != policy.l2
    {
        return Err(Error::format(at, "cache policies disagree with policy id"));
    }
    let at = r.offset();
    let l1d_prefetcher = DataPrefetcher::decode(&mut r)?;
    let l1i_prefetcher = InstrPrefetcher::decode(&mut r)?;
    if l1d_prefetcher.id() != policy.l1d || l1i_prefetcher.id() != policy.l1i {
        return Err(Error::format(at, "prefetchers disagree with policy id"));
    }
    let instructions = r.u64()?;
    let cycles = r.f64()?;
    if !r.is_empty() {
        return Err(Error::format(r.offset(), "trailing bytes after checkpoint"));
    }
    let state = MachineState {
        policy,
        l1i,
        l1d,
        l2,
        l1d_prefetcher,
        l1i_prefetcher,
        instructions,
        cycles,
    };
    state
        .hierarchy()
        .validate()
        .map_err(|e| Error::format(0, e.to_string()))?;
    Ok(state)
}
