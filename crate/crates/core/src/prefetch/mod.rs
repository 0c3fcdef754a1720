//! L1 prefetchers.
//!
//! Data-side prefetchers observe every L1D demand access; instruction-side
//! prefetchers observe the pc stream one line at a time. All of them emit
//! line-aligned candidate addresses, at most `degree` per observation.
//! Prefetches are installed instantly by [`issue_prefetches`].

mod ids;

pub use ids::{DataPrefetcherId, InstrPrefetcherId};

use std::collections::VecDeque;

use crate::cache::{AccessClass, CacheState};
use crate::codec::{PutLe, Reader};
use crate::{Error, Result};

/// One IP-stride table entry; `stride` is a signed byte offset.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IpStrideEntry {
    pub tag: u64,
    pub last_addr: u64,
    pub stride: i64,
    /// 2-bit saturating counter.
    pub confidence: u8,
    pub valid: bool,
}

/// Direct-mapped table indexed by pc bits `[2, 2 + log2(table_size))`.
///
/// Repeated accesses to the same address carry no stride information and are
/// ignored. A repeated stride raises confidence; a different stride lowers it, and once
/// confidence is already zero the new stride replaces the old one with
/// confidence 1. Prefetches go out while confidence ≥ threshold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IpStride {
    table: Vec<IpStrideEntry>,
    threshold: u8,
    degree: usize,
    line_size: u64,
}

impl IpStride {
    pub fn new(table_size: usize, threshold: u8, degree: usize, line_size: u64) -> Self {
        IpStride {
            table: vec![IpStrideEntry::default(); table_size],
            threshold,
            degree,
            line_size,
        }
    }

    fn index(&self, pc: u64) -> usize {
        ((pc >> 2) as usize) & (self.table.len() - 1)
    }

    pub fn entry(&self, pc: u64) -> &IpStrideEntry {
        &self.table[self.index(pc)]
    }

    fn observe(&mut self, pc: u64, addr: u64, out: &mut Vec<u64>) {
        let idx = self.index(pc);
        let e = &mut self.table[idx];
        if !e.valid || e.tag != pc {
            *e = IpStrideEntry {
                tag: pc,
                last_addr: addr,
                stride: 0,
                confidence: 0,
                valid: true,
            };
            return;
        }
        let delta = addr.wrapping_sub(e.last_addr) as i64;
        if delta == 0 {
            return;
        }
        if delta == e.stride {
            e.confidence = (e.confidence + 1).min(3);
        } else if e.confidence == 0 {
            e.stride = delta;
            e.confidence = 1;
        } else {
            e.confidence -= 1;
        }
        e.last_addr = addr;
        if e.confidence >= self.threshold {
            let mask = !(self.line_size - 1);
            for i in 1..=self.degree as i64 {
                out.push(addr.wrapping_add(e.stride.wrapping_mul(i) as u64) & mask);
            }
        }
    }
}

/// Global stream detector over the last `window` distinct lines. Three lines
/// in a row (ascending or descending) trigger `degree` prefetches ahead in
/// the same direction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamDetector {
    recent: VecDeque<u64>,
    window: usize,
    degree: usize,
    line_shift: u32,
}

impl StreamDetector {
    pub fn new(window: usize, degree: usize, line_size: u64) -> Self {
        StreamDetector {
            recent: VecDeque::with_capacity(window),
            window,
            degree,
            line_shift: line_size.trailing_zeros(),
        }
    }

    fn observe(&mut self, addr: u64, out: &mut Vec<u64>) {
        let line = addr >> self.line_shift;
        if self.recent.back() == Some(&line) {
            return;
        }
        let seen = |l: u64| self.recent.contains(&l);
        let direction: i64 = if seen(line.wrapping_sub(1)) && seen(line.wrapping_sub(2)) {
            1
        } else if seen(line.wrapping_add(1)) && seen(line.wrapping_add(2)) {
            -1
        } else {
            0
        };
        if direction != 0 {
            for i in 1..=self.degree as i64 {
                out.push(line.wrapping_add_signed(direction * i) << self.line_shift);
            }
        }
        if self.recent.len() == self.window {
            self.recent.pop_front();
        }
        self.recent.push_back(line);
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DataPrefetcher {
    None,
    NextLine { line_size: u64 },
    IpStride(IpStride),
    Stream(StreamDetector),
}

impl DataPrefetcher {
    pub fn new(id: DataPrefetcherId, line_size: u64) -> Self {
        match id {
            DataPrefetcherId::None => DataPrefetcher::None,
            DataPrefetcherId::NextLine => DataPrefetcher::NextLine { line_size },
            DataPrefetcherId::IpStride {
                table_size,
                confidence_threshold,
                degree,
            } => DataPrefetcher::IpStride(IpStride::new(
                table_size,
                confidence_threshold,
                degree,
                line_size,
            )),
            DataPrefetcherId::Stream {
                detect_window,
                degree,
            } => DataPrefetcher::Stream(StreamDetector::new(detect_window, degree, line_size)),
        }
    }

    pub fn id(&self) -> DataPrefetcherId {
        match self {
            DataPrefetcher::None => DataPrefetcherId::None,
            DataPrefetcher::NextLine { .. } => DataPrefetcherId::NextLine,
            DataPrefetcher::IpStride(t) => DataPrefetcherId::IpStride {
                table_size: t.table.len(),
                confidence_threshold: t.threshold,
                degree: t.degree,
            },
            DataPrefetcher::Stream(s) => DataPrefetcherId::Stream {
                detect_window: s.window,
                degree: s.degree,
            },
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            DataPrefetcher::None => 0,
            DataPrefetcher::NextLine { .. } => 1,
            DataPrefetcher::IpStride(t) => t.degree,
            DataPrefetcher::Stream(s) => s.degree,
        }
    }

    /// Appends prefetch candidates for a demand access to `out`.
    pub fn observe(&mut self, pc: u64, addr: u64, _was_hit: bool, out: &mut Vec<u64>) {
        match self {
            DataPrefetcher::None => {}
            DataPrefetcher::NextLine { line_size } => {
                out.push((addr & !(*line_size - 1)).wrapping_add(*line_size))
            }
            DataPrefetcher::IpStride(t) => t.observe(pc, addr, out),
            DataPrefetcher::Stream(s) => s.observe(addr, out),
        }
    }

    pub fn observe_access(&mut self, pc: u64, addr: u64, was_hit: bool) -> Vec<u64> {
        let mut out = Vec::new();
        self.observe(pc, addr, was_hit, &mut out);
        out
    }

    pub(crate) fn encode(&self, out: &mut Vec<u8>) {
        match self {
            DataPrefetcher::None => out.put_u8(0),
            DataPrefetcher::NextLine { line_size } => {
                out.put_u8(1);
                out.put_u64(*line_size);
            }
            DataPrefetcher::IpStride(t) => {
                out.put_u8(2);
                out.put_u64(t.table.len() as u64);
                out.put_u8(t.threshold);
                out.put_u64(t.degree as u64);
                out.put_u64(t.line_size);
                for e in &t.table {
                    out.put_u64(e.tag);
                    out.put_u64(e.last_addr);
                    out.put_i64(e.stride);
                    out.put_u8(e.confidence);
                    out.put_bool(e.valid);
                }
            }
            DataPrefetcher::Stream(s) => {
                out.put_u8(3);
                out.put_u64(s.window as u64);
                out.put_u64(s.degree as u64);
                out.put_u64(1 << s.line_shift);
                out.put_u64(s.recent.len() as u64);
                for &l in &s.recent {
                    out.put_u64(l);
                }
            }
        }
    }

    pub(crate) fn decode(r: &mut Reader<'_>) -> Result<Self> {
        let at = r.offset();
        Ok(match r.u8()? {
            0 => DataPrefetcher::None,
            1 => DataPrefetcher::NextLine {
                line_size: line_size(r)?,
            },
            2 => {
                let at = r.offset();
                let size = r.len(1 << 24)?;
                if !size.is_power_of_two() {
                    return Err(Error::format(at, "table size not a power of two"));
                }
                let threshold = r.u8()?;
                let degree = r.len(1 << 16)?;
                let mut t = IpStride::new(size, threshold, degree, line_size(r)?);
                for e in t.table.iter_mut() {
                    e.tag = r.u64()?;
                    e.last_addr = r.u64()?;
                    e.stride = r.i64()?;
                    e.confidence = r.u8()?;
                    e.valid = r.bool()?;
                }
                DataPrefetcher::IpStride(t)
            }
            3 => {
                let window = r.len(1 << 16)?;
                let degree = r.len(1 << 16)?;
                let mut s = StreamDetector::new(window, degree, line_size(r)?);
                let at = r.offset();
                let n = r.len(1 << 16)?;
                if n > window {
                    return Err(Error::format(at, "stream history exceeds its window"));
                }
                for _ in 0..n {
                    s.recent.push_back(r.u64()?);
                }
                DataPrefetcher::Stream(s)
            }
            c => {
                return Err(Error::format(
                    at,
                    format!("unknown data prefetcher code {c}"),
                ))
            }
        })
    }
}

fn line_size(r: &mut Reader<'_>) -> Result<u64> {
    let at = r.offset();
    let v = r.u64()?;
    if !v.is_power_of_two() {
        return Err(Error::format(at, "line size not a power of two"));
    }
    Ok(v)
}

/// Sequential instruction prefetcher: on entering a new code line it emits
/// the next `lines_ahead` lines.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstrPrefetcher {
    lines_ahead: u64,
    line_size: u64,
    last_line: Option<u64>,
}

impl InstrPrefetcher {
    pub fn new(id: InstrPrefetcherId, line_size: u64) -> Self {
        InstrPrefetcher {
            lines_ahead: match id {
                InstrPrefetcherId::NextLine => 1,
                InstrPrefetcherId::Next2Line => 2,
            },
            line_size,
            last_line: None,
        }
    }

    pub fn id(&self) -> InstrPrefetcherId {
        if self.lines_ahead == 1 {
            InstrPrefetcherId::NextLine
        } else {
            InstrPrefetcherId::Next2Line
        }
    }

    pub fn degree(&self) -> usize {
        self.lines_ahead as usize
    }

    pub fn observe(&mut self, pc: u64, out: &mut Vec<u64>) {
        let line = pc & !(self.line_size - 1);
        if self.last_line == Some(line) {
            return;
        }
        self.last_line = Some(line);
        for i in 1..=self.lines_ahead {
            out.push(line.wrapping_add(i * self.line_size));
        }
    }

    pub(crate) fn encode(&self, out: &mut Vec<u8>) {
        out.put_u64(self.lines_ahead);
        out.put_u64(self.line_size);
        out.put_bool(self.last_line.is_some());
        out.put_u64(self.last_line.unwrap_or(0));
    }

    pub(crate) fn decode(r: &mut Reader<'_>) -> Result<Self> {
        let at = r.offset();
        let lines_ahead = r.u64()?;
        if !(1..=2).contains(&lines_ahead) {
            return Err(Error::format(at, "invalid instruction prefetch distance"));
        }
        let line_size = line_size(r)?;
        let has_last = r.bool()?;
        let last = r.u64()?;
        Ok(InstrPrefetcher {
            lines_ahead,
            line_size,
            last_line: has_last.then_some(last),
        })
    }
}

/// Installs up to `cap` distinct candidates that are not yet in `l1` into
/// `l1` and, when missing there too, into `l2`. Returns the number of L1 fills.
pub fn issue_prefetches(
    candidates: &[u64],
    l1: &mut CacheState,
    l2: &mut CacheState,
    cap: usize,
) -> usize {
    let mask = !(l1.geometry().line_size - 1);
    let mut fills = 0;
    for (i, &c) in candidates.iter().take(cap).enumerate() {
        let line = c & mask;
        if candidates[..i].iter().any(|&p| p & mask == line) || l1.contains(line) {
            continue;
        }
        l1.access(line, AccessClass::PrefetchFill);
        l2.access(line, AccessClass::PrefetchFill);
        fills += 1;
    }
    fills
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cache::{CacheGeometry, ReplacementPolicyId};

    fn caches() -> (CacheState, CacheState) {
        let l1 = CacheState::new(
            CacheGeometry::new(64, 8, 64).unwrap(),
            ReplacementPolicyId::Lru,
        )
        .unwrap();
        let l2 = CacheState::new(
            CacheGeometry::new(512, 8, 64).unwrap(),
            ReplacementPolicyId::Lru,
        )
        .unwrap();
        (l1, l2)
    }

    #[test]
    fn none_emits_nothing() {
        let mut p = DataPrefetcher::new(DataPrefetcherId::None, 64);
        assert!(p.observe_access(0x400, 0x1000, false).is_empty());
    }

    #[test]
    fn next_line() {
        let mut p = DataPrefetcher::new(DataPrefetcherId::NextLine, 64);
        assert_eq!(p.observe_access(0x400, 0x1000, false), vec![0x1040]);
        assert_eq!(p.observe_access(0x400, 0x1038, true), vec![0x1040]);
    }

    #[test]
    fn ip_stride_trains_on_third_access() {
        let id = DataPrefetcherId::IpStride {
            table_size: 256,
            confidence_threshold: 2,
            degree: 1,
        };
        let mut p = DataPrefetcher::new(id, 64);
        let pc = 0x40_0010;
        assert!(p.observe_access(pc, 0x100, false).is_empty());
        assert!(p.observe_access(pc, 0x140, false).is_empty());
        assert_eq!(p.observe_access(pc, 0x180, false), vec![0x1C0]);
    }

    #[test]
    fn ip_stride_confidence_walk() {
        let mut t = IpStride::new(256, 2, 2, 64);
        let pc = 0x40_0000;
        let mut out = Vec::new();
        for a in [0x1000, 0x1040, 0x1080, 0x10C0, 0x1100] {
            t.observe(pc, a, &mut out);
        }
        assert_eq!(t.entry(pc).confidence, 3);
        assert_eq!(t.entry(pc).stride, 0x40);
        // a break lowers confidence but keeps the stride
        out.clear();
        t.observe(pc, 0x9000, &mut out);
        assert_eq!((t.entry(pc).confidence, t.entry(pc).stride), (2, 0x40));
        assert_eq!(out, vec![0x9040, 0x9080]);
        t.observe(pc, 0x9400, &mut out);
        t.observe(pc, 0x9800, &mut out);
        assert_eq!((t.entry(pc).confidence, t.entry(pc).stride), (0, 0x40));
        t.observe(pc, 0x9C00, &mut out);
        assert_eq!((t.entry(pc).confidence, t.entry(pc).stride), (1, 0x400));
        // repeated addresses are ignored
        t.observe(pc, 0x9C00, &mut out);
        assert_eq!((t.entry(pc).confidence, t.entry(pc).stride), (1, 0x400));
        t.observe(pc, 0x9C08, &mut out);
        assert_eq!(t.entry(pc).last_addr, 0x9C08);
    }

    #[test]
    fn ip_stride_collision_retrains() {
        let mut t = IpStride::new(256, 1, 1, 64);
        let mut out = Vec::new();
        let (a, b) = (0x40_0000, 0x40_0000 + (256 << 2));
        t.observe(a, 0x1000, &mut out);
        t.observe(a, 0x1040, &mut out);
        t.observe(b, 0x8000, &mut out);
        assert_eq!(t.entry(a).tag, b);
        assert_eq!(t.entry(a).confidence, 0);
    }

    #[test]
    fn stream_detects_both_directions() {
        let id = DataPrefetcherId::Stream {
            detect_window: 8,
            degree: 2,
        };
        let mut p = DataPrefetcher::new(id, 64);
        assert!(p.observe_access(0, 0x1000, false).is_empty());
        assert!(p.observe_access(0, 0x1040, false).is_empty());
        assert_eq!(p.observe_access(0, 0x1080, false), vec![0x10C0, 0x1100]);

        let mut p = DataPrefetcher::new(id, 64);
        p.observe_access(0, 0x5080, false);
        p.observe_access(0, 0x5040, false);
        assert_eq!(p.observe_access(0, 0x5000, false), vec![0x4FC0, 0x4F80]);
    }

    #[test]
    fn instruction_prefetch_on_line_change() {
        let mut p = InstrPrefetcher::new(InstrPrefetcherId::Next2Line, 64);
        let mut out = Vec::new();
        p.observe(0x40_0000, &mut out);
        p.observe(0x40_0004, &mut out);
        assert_eq!(out, vec![0x40_0040, 0x40_0080]);
        out.clear();
        let mut p = InstrPrefetcher::new(InstrPrefetcherId::NextLine, 64);
        p.observe(0x40_0044, &mut out);
        assert_eq!(out, vec![0x40_0080]);
    }

    #[test]
    fn redundant_prefetch_not_filled() {
        let (mut l1, mut l2) = caches();
        l1.access(0x1000, AccessClass::Demand);
        assert_eq!(issue_prefetches(&[0x1000], &mut l1, &mut l2, 4), 0);
        assert_eq!(l1.stats().prefetch_fills, 0);
    }

    #[test]
    fn distinct_candidates_filled_and_deduplicated() {
        let (mut l1, mut l2) = caches();
        assert_eq!(
            issue_prefetches(&[0x2000, 0x2010, 0x3000], &mut l1, &mut l2, 4),
            2
        );
        assert_eq!(l1.stats().prefetch_fills, 2);
        assert_eq!(l2.stats().prefetch_fills, 2);
        assert!(l2.contains(0x3000));
        assert_eq!(issue_prefetches(&[0x4000, 0x5000], &mut l1, &mut l2, 1), 1);
    }

    #[test]
    fn demand_hit_on_prefetched_line_counted_once() {
        let (mut l1, mut l2) = caches();
        issue_prefetches(&[0x2000], &mut l1, &mut l2, 1);
        assert!(l1.access(0x2008, AccessClass::Demand).hit);
        assert!(l1.access(0x2010, AccessClass::Demand).hit);
        assert_eq!(l1.stats().prefetch_hits, 1);
    }

    #[test]
    fn codec_roundtrip() {
        let ids = [
            DataPrefetcherId::None,
            DataPrefetcherId::NextLine,
            DataPrefetcherId::ip_stride_default(),
            DataPrefetcherId::stream_default(),
        ];
        for id in ids {
            let mut p = DataPrefetcher::new(id, 64);
            for a in (0..40u64).map(|i| 0x1000 + i * 64) {
                p.observe_access(0x400 + (a & 0xc), a, false);
            }
            let mut blob = Vec::new();
            p.encode(&mut blob);
            let mut r = Reader::new(&blob);
            assert_eq!(DataPrefetcher::decode(&mut r).unwrap(), p);
            assert!(r.is_empty());
        }
    }
}
