//! Per-segment simulation: caches, prefetchers and an additive-penalty timing model.

mod checkpoint;
mod policy;

pub use checkpoint::{checkpoint, restore, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use policy::{enumerate_policy_space, PolicyConfig};

use serde::{Deserialize, Serialize};

use crate::cache::{AccessClass, CacheGeometry, CacheState, CacheStats, ReplacementPolicyId};
use crate::prefetch::{issue_prefetches, DataPrefetcher, InstrPrefetcher};
use crate::trace::Segment;
use crate::{Error, Result};

/// Scalar timing model. Every instruction costs `base_cpi` cycles; an L1 miss
/// that hits in the L2 adds `l2_hit_penalty`, and one that misses in the L2
/// adds `mem_penalty`. Only the fraction `1 - overlap` of each penalty is charged.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingModel {
    pub base_cpi: f64,
    pub l2_hit_penalty: f64,
    pub mem_penalty: f64,
    pub overlap: f64,
}

impl Default for TimingModel {
    fn default() -> Self {
        TimingModel {
            base_cpi: 0.25,
            l2_hit_penalty: 12.0,
            mem_penalty: 200.0,
            overlap: 0.6,
        }
    }
}

impl TimingModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_cpi > 0.0 && self.base_cpi.is_finite()) {
            return Err(Error::validation(format!(
                "timing.base_cpi must be positive, got {}",
                self.base_cpi
            )));
        }
        for (name, v) in [
            ("l2_hit_penalty", self.l2_hit_penalty),
            ("mem_penalty", self.mem_penalty),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::validation(format!(
                    "timing.{name} must be non-negative, got {v}"
                )));
            }
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::validation(format!(
                "timing.overlap must lie in [0, 1), got {}",
                self.overlap
            )));
        }
        Ok(())
    }

    pub fn effective_l2_penalty(&self) -> f64 {
        self.l2_hit_penalty * (1.0 - self.overlap)
    }

    pub fn effective_mem_penalty(&self) -> f64 {
        self.mem_penalty * (1.0 - self.overlap)
    }
}

/// Geometries of the three caches. All levels must share one line size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HierarchyConfig {
    pub l1i: CacheGeometry,
    pub l1d: CacheGeometry,
    pub l2: CacheGeometry,
}

impl Default for HierarchyConfig {
    /// L1I 32KiB/8-way, L1D 32KiB/8-way, L2 512KiB/8-way, 64B lines.
    fn default() -> Self {
        HierarchyConfig {
            l1i: CacheGeometry::with_capacity(32 << 10, 8, 64).unwrap(),
            l1d: CacheGeometry::with_capacity(32 << 10, 8, 64).unwrap(),
            l2: CacheGeometry::with_capacity(512 << 10, 8, 64).unwrap(),
        }
    }
}

impl HierarchyConfig {
    pub fn validate(&self) -> Result<()> {
        self.l1i.validate()?;
        self.l1d.validate()?;
        self.l2.validate()?;
        if self.l1i.line_size != self.l1d.line_size || self.l1d.line_size != self.l2.line_size {
            return Err(Error::validation(
                "all cache levels must use the same line_size",
            ));
        }
        Ok(())
    }
}

/// Complete microarchitectural state carried between segments.
#[derive(Clone, Debug, PartialEq)]
pub struct MachineState {
    policy: PolicyConfig,
    l1i: CacheState,
    l1d: CacheState,
    l2: CacheState,
    l1d_prefetcher: DataPrefetcher,
    l1i_prefetcher: InstrPrefetcher,
    instructions: u64,
    cycles: f64,
}

impl MachineState {
    pub fn new(hierarchy: &HierarchyConfig, policy: &PolicyConfig) -> Result<Self> {
        hierarchy.validate()?;
        policy.l1d.validate()?;
        let line = hierarchy.l1d.line_size;
        Ok(MachineState {
            policy: *policy,
            l1i: CacheState::new(hierarchy.l1i, ReplacementPolicyId::Lru)?,
            l1d: CacheState::new(hierarchy.l1d, ReplacementPolicyId::Lru)?,
            l2: CacheState::new(hierarchy.l2, policy.l2)?,
            l1d_prefetcher: DataPrefetcher::new(policy.l1d, line),
            l1i_prefetcher: InstrPrefetcher::new(policy.l1i, line),
            instructions: 0,
            cycles: 0.0,
        })
    }

    pub fn policy(&self) -> &PolicyConfig {
        &self.policy
    }

    pub fn hierarchy(&self) -> HierarchyConfig {
        HierarchyConfig {
            l1i: *self.l1i.geometry(),
            l1d: *self.l1d.geometry(),
            l2: *self.l2.geometry(),
        }
    }

    pub fn l1i(&self) -> &CacheState {
        &self.l1i
    }

    pub fn l1d(&self) -> &CacheState {
        &self.l1d
    }

    pub fn l2(&self) -> &CacheState {
        &self.l2
    }

    /// Instructions simulated since this state was created.
    pub fn instructions(&self) -> u64 {
        self.instructions
    }

    pub fn cycles(&self) -> f64 {
        self.cycles
    }
}

/// Outcome of simulating one segment. Cache counters cover this segment only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentResult {
    pub ipc: f64,
    pub instructions: u64,
    pub cycles: f64,
    pub l1i: CacheStats,
    pub l1d: CacheStats,
    pub l2: CacheStats,
    /// Demand L1 misses served by the L2.
    pub l2_served: u64,
    /// Demand L1 misses served by memory.
    pub mem_served: u64,
    pub l1d_prefetch_candidates: u64,
    pub l1i_prefetch_candidates: u64,
}

/// Demand lookup through the hierarchy: 0 = L1 hit, 1 = L2 hit, 2 = memory.
#[inline]
fn demand(l1: &mut CacheState, l2: &mut CacheState, addr: u64) -> u8 {
    if l1.access(addr, AccessClass::Demand).hit {
        0
    } else if l2.access(addr, AccessClass::Demand).hit {
        1
    } else {
        2
    }
}

/// Runs `segment` on `state` under `policy`, mutating the state so a later
/// segment continues where this one stopped.
pub fn simulate_segment(
    segment: &Segment<'_>,
    policy: &PolicyConfig,
    timing: &TimingModel,
    state: &mut MachineState,
) -> Result<SegmentResult> {
    timing.validate()?;
    if state.policy != *policy {
        return Err(Error::Config(format!(
            "machine state was built for policy {} but segment requested {}",
            state.policy.id(),
            policy.id()
        )));
    }
    if segment.is_empty() {
        return Err(Error::validation(format!(
            "segment {}#{} is empty",
            segment.benchmark_id, segment.timestep_index
        )));
    }

    let start = (*state.l1i.stats(), *state.l1d.stats(), *state.l2.stats());
    let mut served = [0u64; 3];
    let mut candidates = Vec::with_capacity(8);
    let (mut d_cands, mut i_cands) = (0u64, 0u64);
    let i_cap = state.l1i_prefetcher.degree();
    let d_cap = state.l1d_prefetcher.degree();

    let s = state;
    for r in segment.records {
        served[demand(&mut s.l1i, &mut s.l2, r.pc) as usize] += 1;
        candidates.clear();
        s.l1i_prefetcher.observe(r.pc, &mut candidates);
        if !candidates.is_empty() {
            i_cands += candidates.len() as u64;
            issue_prefetches(&candidates, &mut s.l1i, &mut s.l2, i_cap);
        }

        if r.kind.is_memory() {
            let level = demand(&mut s.l1d, &mut s.l2, r.addr);
            served[level as usize] += 1;
            candidates.clear();
            s.l1d_prefetcher
                .observe(r.pc, r.addr, level == 0, &mut candidates);
            if !candidates.is_empty() {
                d_cands += candidates.len() as u64;
                issue_prefetches(&candidates, &mut s.l1d, &mut s.l2, d_cap);
            }
        }
    }

    let n = segment.len() as u64;
    let cycles = n as f64 * timing.base_cpi
        + served[1] as f64 * timing.effective_l2_penalty()
        + served[2] as f64 * timing.effective_mem_penalty();
    s.instructions += n;
    s.cycles += cycles;
    Ok(SegmentResult {
        ipc: n as f64 / cycles,
        instructions: n,
        cycles,
        l1i: s.l1i.stats().since(&start.0),
        l1d: s.l1d.stats().since(&start.1),
        l2: s.l2.stats().since(&start.2),
        l2_served: served[1],
        mem_served: served[2],
        l1d_prefetch_candidates: d_cands,
        l1i_prefetch_candidates: i_cands,
    })
}
