//! Set-associative cache model with pluggable replacement.
//!
//! Lines are tracked by full line number (address >> log2(line_size)), so the
//! stored tag also identifies the set. Every cache keeps demand statistics and
//! separately counts prefetch fills and the first demand hit on each prefetched
//! line.

mod reference;
mod replacement;

pub use reference::lru_reference_hits;
pub use replacement::{
    ReplacementPolicyId, SetDueling, SetRole, BRRIP_LONG_ONE_IN, LEADER_SETS_PER_TEAM, PSEL_MAX,
    PSEL_MID, RRPV_INSERT, RRPV_MAX,
};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{PutLe, Reader};
use crate::{Error, Result};

/// Seed of the BRRIP insertion stream used by DRRIP caches.
pub const DRRIP_STREAM_SEED: u64 = 0x0D22_1905;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheGeometry {
    pub sets: usize,
    pub ways: usize,
    pub line_size: u64,
}

impl CacheGeometry {
    pub fn new(sets: usize, ways: usize, line_size: u64) -> Result<Self> {
        let g = CacheGeometry {
            sets,
            ways,
            line_size,
        };
        g.validate()?;
        Ok(g)
    }

    /// Geometry holding `capacity_bytes` with the given associativity.
    pub fn with_capacity(capacity_bytes: u64, ways: usize, line_size: u64) -> Result<Self> {
        if ways == 0 || line_size == 0 {
            return Err(Error::validation("ways and line_size must be non-zero"));
        }
        let sets = capacity_bytes / (ways as u64 * line_size);
        Self::new(sets as usize, ways, line_size)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sets.is_power_of_two() {
            return Err(Error::validation(format!(
                "cache sets must be a power of two, got {}",
                self.sets
            )));
        }
        if self.ways == 0 {
            return Err(Error::validation("cache ways must be at least 1"));
        }
        if !self.line_size.is_power_of_two() {
            return Err(Error::validation(format!(
                "line_size must be a power of two, got {}",
                self.line_size
            )));
        }
        Ok(())
    }

    pub fn capacity(&self) -> u64 {
        self.sets as u64 * self.ways as u64 * self.line_size
    }

    pub fn line_shift(&self) -> u32 {
        self.line_size.trailing_zeros()
    }

    /// Address of the first byte of the line holding `addr`.
    pub fn line_addr(&self, addr: u64) -> u64 {
        addr & !(self.line_size - 1)
    }

    pub fn set_index(&self, addr: u64) -> usize {
        ((addr >> self.line_shift()) as usize) & (self.sets - 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AccessClass {
    Demand,
    /// Installs the line if absent; a resident line is left untouched.
    PrefetchFill,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AccessOutcome {
    pub hit: bool,
    /// Line address of the evicted line, if a valid line was displaced.
    pub victim: Option<u64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    /// Demand accesses only; `hits + misses == accesses`.
    pub accesses: u64,
    pub hits: u64,
    pub misses: u64,
    pub evictions: u64,
    pub prefetch_fills: u64,
    pub prefetch_hits: u64,
}

impl CacheStats {
    pub fn since(&self, earlier: &CacheStats) -> CacheStats {
        CacheStats {
            accesses: self.accesses - earlier.accesses,
            hits: self.hits - earlier.hits,
            misses: self.misses - earlier.misses,
            evictions: self.evictions - earlier.evictions,
            prefetch_fills: self.prefetch_fills - earlier.prefetch_fills,
            prefetch_hits: self.prefetch_hits - earlier.prefetch_hits,
        }
    }

    pub fn hit_rate(&self) -> f64 {
        if self.accesses == 0 {
            0.0
        } else {
            self.hits as f64 / self.accesses as f64
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Line {
    tag: u64,
    /// Recency stamp (LRU), insertion stamp (FIFO) or RRPV (SRRIP/DRRIP).
    meta: u64,
    valid: bool,
    prefetched: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CacheState {
    geometry: CacheGeometry,
    policy: ReplacementPolicyId,
    lines: Vec<Line>,
    clock: u64,
    stats: CacheStats,
    rng: Option<ChaCha8Rng>,
    dueling: Option<SetDueling>,
}

impl CacheState {
    pub fn new(geometry: CacheGeometry, policy: ReplacementPolicyId) -> Result<Self> {
        geometry.validate()?;
        let rng = match policy {
            ReplacementPolicyId::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
            ReplacementPolicyId::Drrip => Some(ChaCha8Rng::seed_from_u64(DRRIP_STREAM_SEED)),
            _ => None,
        };
        let dueling =
            (policy == ReplacementPolicyId::Drrip).then(|| SetDueling::new(geometry.sets));
        Ok(CacheState {
            geometry,
            policy,
            lines: vec![Line::default(); geometry.sets * geometry.ways],
            clock: 0,
            stats: CacheStats::default(),
            rng,
            dueling,
        })
    }

    pub fn geometry(&self) -> &CacheGeometry {
        &self.geometry
    }

    pub fn policy(&self) -> ReplacementPolicyId {
        self.policy
    }

    pub fn stats(&self) -> &CacheStats {
        &self.stats
    }

    pub fn dueling(&self) -> Option<&SetDueling> {
        self.dueling.as_ref()
    }

    fn set_range(&self, set: usize) -> std::ops::Range<usize> {
        set * self.geometry.ways..(set + 1) * self.geometry.ways
    }

    fn find(&self, set: usize, tag: u64) -> Option<usize> {
        self.lines[self.set_range(set)]
            .iter()
            .position(|l| l.valid && l.tag == tag)
    }

    /// Side-effect free residency check.
    pub fn contains(&self, addr: u64) -> bool {
        let tag = addr >> self.geometry.line_shift();
        self.find(self.geometry.set_index(addr), tag).is_some()
    }

    /// Line addresses resident in `set`, ordered by way.
    pub fn resident_lines(&self, set: usize) -> Vec<u64> {
        let shift = self.geometry.line_shift();
        self.lines[self.set_range(set)]
            .iter()
            .filter(|l| l.valid)
            .map(|l| l.tag << shift)
            .collect()
    }

    /// RRPV values of `set` by way (`None` for invalid ways). Only meaningful for RRIP policies.
    pub fn rrpvs(&self, set: usize) -> Vec<Option<u64>> {
        self.lines[self.set_range(set)]
            .iter()
            .map(|l| l.valid.then_some(l.meta))
            .collect()
    }

    pub fn access(&mut self, addr: u64, class: AccessClass) -> AccessOutcome {
        let shift = self.geometry.line_shift();
        let tag = addr >> shift;
        let set = (tag as usize) & (self.geometry.sets - 1);
        self.clock += 1;

        if let Some(way) = self.find(set, tag) {
            if class == AccessClass::Demand {
                self.stats.accesses += 1;
                self.stats.hits += 1;
                if let Some(d) = self.dueling.as_mut() {
                    d.duel_update(set, false);
                }
                let idx = set * self.geometry.ways + way;
                let line = &mut self.lines[idx];
                if line.prefetched {
                    line.prefetched = false;
                    self.stats.prefetch_hits += 1;
                }
                match self.policy {
                    ReplacementPolicyId::Lru => line.meta = self.clock,
                    ReplacementPolicyId::Srrip | ReplacementPolicyId::Drrip => line.meta = 0,
                    ReplacementPolicyId::Fifo | ReplacementPolicyId::Random { .. } => {}
                }
            }
            return AccessOutcome {
                hit: true,
                victim: None,
            };
        }

        if class == AccessClass::Demand {
            self.stats.accesses += 1;
            self.stats.misses += 1;
            if let Some(d) = self.dueling.as_mut() {
                d.duel_update(set, true);
            }
        } else {
            self.stats.prefetch_fills += 1;
        }

        let way = self.choose_victim(set);
        let meta = self.insertion_meta(set);
        let idx = set * self.geometry.ways + way;
        let old = self.lines[idx];
        let victim = old.valid.then(|| {
            self.stats.evictions += 1;
            old.tag << shift
        });
        self.lines[idx] = Line {
            tag,
            meta,
            valid: true,
            prefetched: class == AccessClass::PrefetchFill,
        };
        AccessOutcome { hit: false, victim }
    }

    fn insertion_meta(&mut self, set: usize) -> u64 {
        match self.policy {
            ReplacementPolicyId::Lru | ReplacementPolicyId::Fifo => self.clock,
            ReplacementPolicyId::Random { .. } => 0,
            ReplacementPolicyId::Srrip => RRPV_INSERT,
            ReplacementPolicyId::Drrip => {
                let brrip = self.dueling.as_ref().is_some_and(|d| d.use_brrip(set));
                // the stream advances only on BRRIP fills
                if brrip
                    && !self
                        .rng
                        .as_mut()
                        .unwrap()
                        .next_u32()
                        .is_multiple_of(BRRIP_LONG_ONE_IN)
                {
                    RRPV_MAX
                } else {
                    RRPV_INSERT
                }
            }
        }
    }

    fn choose_victim(&mut self, set: usize) -> usize {
        let range = self.set_range(set);
        let ways = &mut self.lines[range];
        if let Some(w) = ways.iter().position(|l| !l.valid) {
            return w;
        }
        match self.policy {
            ReplacementPolicyId::Lru | ReplacementPolicyId::Fifo => ways
                .iter()
                .enumerate()
                .min_by_key(|(_, l)| l.meta)
                .map(|(w, _)| w)
                .unwrap(),
            ReplacementPolicyId::Random { .. } => {
                self.rng.as_mut().unwrap().random_range(0..ways.len())
            }
            ReplacementPolicyId::Srrip | ReplacementPolicyId::Drrip => {
                // Aging every line until one reaches RRPV_MAX is the same as
                // adding the gap between RRPV_MAX and the current maximum.
                let max = ways.iter().map(|l| l.meta).max().unwrap();
                if max < RRPV_MAX {
                    for l in ways.iter_mut() {
                        l.meta += RRPV_MAX - max;
                    }
                }
                ways.iter().position(|l| l.meta == RRPV_MAX).unwrap()
            }
        }
    }

    pub(crate) fn encode(&self, out: &mut Vec<u8>) {
        out.put_u64(self.geometry.sets as u64);
        out.put_u64(self.geometry.ways as u64);
        out.put_u64(self.geometry.line_size);
        out.put_u8(self.policy.code());
        if let ReplacementPolicyId::Random { seed } = self.policy {
            out.put_u64(seed);
        }
        out.put_u64(self.clock);
        for v in [
            self.stats.accesses,
            self.stats.hits,
            self.stats.misses,
            self.stats.evictions,
            self.stats.prefetch_fills,
            self.stats.prefetch_hits,
        ] {
            out.put_u64(v);
        }
        if let Some(rng) = &self.rng {
            out.extend_from_slice(&rng.get_seed());
            out.put_u64(rng.get_stream());
            out.put_u128(rng.get_word_pos());
        }
        if let Some(d) = &self.dueling {
            out.put_u16(d.psel());
        }
        for l in &self.lines {
            out.put_u64(l.tag);
            out.put_u64(l.meta);
            out.put_u8(l.valid as u8 | (l.prefetched as u8) << 1);
        }
    }

    pub(crate) fn decode(r: &mut Reader<'_>) -> Result<Self> {
        let at = r.offset();
        let sets = r.len(1 << 32)?;
        let ways = r.len(1 << 16)?;
        let line_size = r.u64()?;
        let geometry = CacheGeometry::new(sets, ways, line_size)
            .map_err(|e| Error::format(at, e.to_string()))?;
        if sets.saturating_mul(ways) > 1 << 28 {
            return Err(Error::format(at, "implausible cache size"));
        }
        let at = r.offset();
        let policy = match r.u8()? {
            0 => ReplacementPolicyId::Lru,
            1 => ReplacementPolicyId::Fifo,
            2 => ReplacementPolicyId::Random { seed: r.u64()? },
            3 => ReplacementPolicyId::Srrip,
            4 => ReplacementPolicyId::Drrip,
            c => return Err(Error::format(at, format!("unknown replacement code {c}"))),
        };
        let mut state = CacheState::new(geometry, policy)?;
        state.clock = r.u64()?;
        state.stats = CacheStats {
            accesses: r.u64()?,
            hits: r.u64()?,
            misses: r.u64()?,
            evictions: r.u64()?,
            prefetch_fills: r.u64()?,
            prefetch_hits: r.u64()?,
        };
        if state.rng.is_some() {
            let seed: [u8; 32] = r.take(32)?.try_into().unwrap();
            let mut rng = ChaCha8Rng::from_seed(seed);
            rng.set_stream(r.u64()?);
            rng.set_word_pos(r.u128()?);
            state.rng = Some(rng);
        }
        if state.dueling.is_some() {
            let at = r.offset();
            let psel = r.u16()?;
            if psel > PSEL_MAX {
                return Err(Error::format(at, format!("PSEL {psel} out of range")));
            }
            state.dueling = Some(SetDueling::restore(sets, psel));
        }
        for line in state.lines.iter_mut() {
            line.tag = r.u64()?;
            line.meta = r.u64()?;
            let at = r.offset();
            let flags = r.u8()?;
            if flags > 3 {
                return Err(Error::format(at, format!("invalid line flags {flags}")));
            }
            line.valid = flags & 1 != 0;
            line.prefetched = flags & 2 != 0;
        }
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const A: u64 = 0x0000;
    const B: u64 = 0x1000;
    const C: u64 = 0x2000;

    /// One set, `ways` ways, 64B lines: every address maps to set 0.
    fn one_set(ways: usize, policy: ReplacementPolicyId) -> CacheState {
        CacheState::new(CacheGeometry::new(1, ways, 64).unwrap(), policy).unwrap()
    }

    fn demand(c: &mut CacheState, addr: u64) -> AccessOutcome {
        c.access(addr, AccessClass::Demand)
    }

    #[test]
    fn geometry_validation() {
        assert!(CacheGeometry::new(3, 8, 64).is_err());
        assert!(CacheGeometry::new(4, 0, 64).is_err());
        assert!(CacheGeometry::new(4, 2, 48).is_err());
        let g = CacheGeometry::with_capacity(32 * 1024, 8, 64).unwrap();
        assert_eq!(g.sets, 64);
        assert_eq!(g.capacity(), 32 * 1024);
        assert_eq!(g.line_addr(0x1234), 0x1200);
        assert_eq!(g.set_index(0x1234), (0x1234 >> 6) & 63);
    }

    #[test]
    fn cold_access_misses_without_victim() {
        for p in ["lru", "fifo", "random", "srrip", "drrip"] {
            let mut c = one_set(2, p.parse().unwrap());
            assert_eq!(
                demand(&mut c, 0x1234),
                AccessOutcome {
                    hit: false,
                    victim: None
                }
            );
        }
    }

    #[test]
    fn lru_promotes_on_hit() {
        let mut c = one_set(2, ReplacementPolicyId::Lru);
        demand(&mut c, A);
        demand(&mut c, B);
        assert!(demand(&mut c, A).hit);
        assert_eq!(demand(&mut c, C).victim, Some(B));
    }

    #[test]
    fn fifo_ignores_hits() {
        let mut c = one_set(2, ReplacementPolicyId::Fifo);
        demand(&mut c, A);
        demand(&mut c, B);
        assert!(demand(&mut c, A).hit);
        assert_eq!(demand(&mut c, C).victim, Some(A));
    }

    #[test]
    fn srrip_ages_then_evicts_lowest_way() {
        let mut c = one_set(2, ReplacementPolicyId::Srrip);
        demand(&mut c, A);
        demand(&mut c, B);
        assert_eq!(c.rrpvs(0), vec![Some(2), Some(2)]);
        assert_eq!(demand(&mut c, C).victim, Some(A));
        assert_eq!(c.rrpvs(0), vec![Some(2), Some(3)]);
    }

    #[test]
    fn srrip_hit_promotes_to_zero() {
        let mut c = one_set(2, ReplacementPolicyId::Srrip);
        demand(&mut c, A);
        demand(&mut c, B);
        demand(&mut c, A);
        assert_eq!(c.rrpvs(0), vec![Some(0), Some(2)]);
        assert_eq!(demand(&mut c, C).victim, Some(B));
    }

    #[test]
    fn brrip_leader_inserts_distant() {
        // 2 sets: set 0 leads SRRIP, set 1 leads BRRIP.
        let g = CacheGeometry::new(2, 4, 64).unwrap();
        let mut c = CacheState::new(g, ReplacementPolicyId::Drrip).unwrap();
        let mut distant = 0;
        for i in 0..64u64 {
            let addr = (2 * i + 1) * 64;
            demand(&mut c, addr);
            let way = c.resident_lines(1).iter().position(|&l| l == addr).unwrap();
            if c.rrpvs(1)[way] == Some(RRPV_MAX) {
                distant += 1;
            }
        }
        assert!(distant >= 48, "{distant}");
        assert_eq!(c.dueling().unwrap().psel(), PSEL_MID - 64);
    }

    #[test]
    fn prefetch_fill_and_first_hit_counted_once() {
        let mut c = one_set(4, ReplacementPolicyId::Lru);
        let out = c.access(A, AccessClass::PrefetchFill);
        assert!(!out.hit);
        assert_eq!(c.stats().prefetch_fills, 1);
        assert_eq!(c.stats().accesses, 0);
        assert!(c.access(A, AccessClass::PrefetchFill).hit);
        assert_eq!(c.stats().prefetch_fills, 1);
        assert!(demand(&mut c, A).hit);
        assert!(demand(&mut c, A).hit);
        assert_eq!(c.stats().prefetch_hits, 1);
        assert_eq!(c.stats().hits, 2);
    }

    #[test]
    fn random_policy_is_seeded() {
        let run = |seed| {
            let mut c = one_set(4, ReplacementPolicyId::Random { seed });
            (0..200u64)
                .map(|i| demand(&mut c, (i * 7919 % 13) * 64).victim)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
    }

    #[test]
    fn checkpoint_codec_roundtrip() {
        for p in ["lru", "random:9", "drrip"] {
            let g = CacheGeometry::new(4, 2, 64).unwrap();
            let mut c = CacheState::new(g, p.parse().unwrap()).unwrap();
            for i in 0..50u64 {
                demand(&mut c, (i * 37 % 23) * 64);
            }
            c.access(0x9000, AccessClass::PrefetchFill);
            let mut blob = Vec::new();
            c.encode(&mut blob);
            let mut r = Reader::new(&blob);
            let mut d = CacheState::decode(&mut r).unwrap();
            assert!(r.is_empty());
            assert_eq!(d, c);
            for i in 0..50u64 {
                assert_eq!(demand(&mut d, i * 64 * 3), demand(&mut c, i * 64 * 3));
            }
        }
    }

    fn arb_policy() -> impl Strategy<Value = ReplacementPolicyId> {
        prop_oneof![
            Just(ReplacementPolicyId::Lru),
            Just(ReplacementPolicyId::Fifo),
            any::<u64>().prop_map(|seed| ReplacementPolicyId::Random { seed }),
            Just(ReplacementPolicyId::Srrip),
            Just(ReplacementPolicyId::Drrip),
        ]
    }

    proptest! {
        #[test]
        fn structural_invariants(
            policy in arb_policy(),
            sets_log in 0u32..4,
            ways in 1usize..6,
            addrs in prop::collection::vec((0u64..4096, any::<bool>()), 1..400),
        ) {
            let g = CacheGeometry::new(1 << sets_log, ways, 64).unwrap();
            let mut c = CacheState::new(g, policy).unwrap();
            let mut twin = c.clone();
            for &(a, pf) in &addrs {
                let addr = a * 16;
                let class = if pf { AccessClass::PrefetchFill } else { AccessClass::Demand };
                let set = g.set_index(addr);
                let before = c.resident_lines(set);
                let out = c.access(addr, class);
                prop_assert_eq!(out, twin.access(addr, class));
                if let Some(v) = out.victim {
                    prop_assert!(before.contains(&v));
                }
                let mut lines = c.resident_lines(set);
                let n = lines.len();
                lines.sort_unstable();
                lines.dedup();
                prop_assert_eq!(lines.len(), n);
                if policy.is_rrip() {
                    prop_assert!(c.rrpvs(set).iter().flatten().all(|&v| v <= RRPV_MAX));
                }
                let s = c.stats();
                prop_assert_eq!(s.hits + s.misses, s.accesses);
                prop_assert!(s.prefetch_hits <= s.prefetch_fills);
            }
        }
    }
}
