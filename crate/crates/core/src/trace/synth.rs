//! Deterministic synthetic traces with controllable phase behavior.
//!
//! All randomness comes from a single ChaCha8 stream (`rand_chacha::ChaCha8Rng`)
//! seeded with `SyntheticSpec::seed` via `seed_from_u64`. ChaCha8 output is
//! platform independent, so the same spec yields the same trace everywhere.
//!
//! Each phase runs a small loop body of 8 to 32 instructions at its own code
//! address range (`0x40_0000 + phase * 0x1_0000`, 4 bytes per instruction).
//! Which body slots are loads is fixed per phase, so every load pc sees a
//! stable address progression. The last non-load slot is the loop branch.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{RecordKind, Trace, TraceRecord};
use crate::{Error, Result};

const CODE_BASE: u64 = 0x40_0000;
const PHASE_CODE_STRIDE: u64 = 0x1_0000;
const INSN_BYTES: u64 = 4;
const CHASE_SLOT_BYTES: u64 = 64;
const MIN_BODY: usize = 8;
const MAX_BODY: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub phases: Vec<PhaseSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    pub pattern: AccessPattern,
    /// Instruction count of the phase.
    pub length: u64,
    /// Fraction of loop-body slots that are loads.
    pub load_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AccessPattern {
    /// `region_base, region_base + step, region_base + 2*step, ...`
    Stride { step: i64, region_base: u64 },
    /// Uniform byte addresses in `[region_base, region_base + working_set_bytes)`.
    RandomWs {
        working_set_bytes: u64,
        region_base: u64,
    },
    /// Walks a random single-cycle permutation of `permutation_size` 64-byte slots.
    Chase {
        permutation_size: u64,
        region_base: u64,
    },
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        for (i, phase) in self.phases.iter().enumerate() {
            if phase.length == 0 {
                return Err(Error::validation(format!(
                    "phases[{i}].length must be at least 1"
                )));
            }
            if !(0.0..=1.0).contains(&phase.load_fraction) {
                return Err(Error::validation(format!(
                    "phases[{i}].load_fraction must lie in [0, 1], got {}",
                    phase.load_fraction
                )));
            }
            match phase.pattern {
                AccessPattern::RandomWs {
                    working_set_bytes, ..
                } if !working_set_bytes.is_power_of_two() => {
                    return Err(Error::validation(format!(
                        "phases[{i}].pattern.working_set_bytes must be a power of two, got {working_set_bytes}"
                    )));
                }
                AccessPattern::Chase {
                    permutation_size, ..
                } if !permutation_size.is_power_of_two() => {
                    return Err(Error::validation(format!(
                        "phases[{i}].pattern.permutation_size must be a power of two, got {permutation_size}"
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn total_length(&self) -> u64 {
        self.phases.iter().map(|p| p.length).sum()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SyntheticSpec = toml::from_str(text)
            .map_err(|e| Error::validation(format!("synthetic spec: {}", e.message())))?;
        spec.validate()?;
        Ok(spec)
    }
}

enum Walker {
    Stride {
        next: u64,
        step: i64,
    },
    Random {
        base: u64,
        bytes: u64,
    },
    Chase {
        base: u64,
        next_slot: Vec<u32>,
        cur: u32,
    },
}

impl Walker {
    fn new(pattern: &AccessPattern, rng: &mut ChaCha8Rng) -> Self {
        match *pattern {
            AccessPattern::Stride { step, region_base } => Walker::Stride {
                next: region_base,
                step,
            },
            AccessPattern::RandomWs {
                working_set_bytes,
                region_base,
            } => Walker::Random {
                base: region_base,
                bytes: working_set_bytes,
            },
            AccessPattern::Chase {
                permutation_size,
                region_base,
            } => {
                // Sattolo's algorithm: a uniformly random single cycle.
                let n = permutation_size as usize;
                let mut next_slot: Vec<u32> = (0..n as u32).collect();
                for i in (1..n).rev() {
                    let j = rng.random_range(0..i);
                    next_slot.swap(i, j);
                }
                Walker::Chase {
                    base: region_base,
                    next_slot,
                    cur: 0,
                }
            }
        }
    }

    fn next_addr(&mut self, rng: &mut ChaCha8Rng) -> u64 {
        match self {
            Walker::Stride { next, step } => {
                let addr = *next;
                *next = next.wrapping_add_signed(*step);
                addr
            }
            Walker::Random { base, bytes } => base.wrapping_add(rng.random_range(0..*bytes)),
            Walker::Chase {
                base,
                next_slot,
                cur,
            } => {
                let addr = base.wrapping_add(*cur as u64 * CHASE_SLOT_BYTES);
                *cur = next_slot[*cur as usize];
                addr
            }
        }
    }
}

fn loop_body(load_fraction: f64, rng: &mut ChaCha8Rng) -> Vec<RecordKind> {
    let len = rng.random_range(MIN_BODY..=MAX_BODY);
    let loads = ((load_fraction * len as f64).round() as usize).min(len);
    let mut slots: Vec<usize> = (0..len).collect();
    slots.shuffle(rng);
    let mut body = vec![RecordKind::Other; len];
    for &s in &slots[..loads] {
        body[s] = RecordKind::Load;
    }
    if let Some(last) = body.iter_mut().rev().find(|k| **k == RecordKind::Other) {
        *last = RecordKind::Branch;
    }
    body
}

/// Generates the trace described by `spec`. Identical specs give identical traces.
pub fn generate_trace(spec: &SyntheticSpec) -> Result<Trace> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut records = Vec::with_capacity(spec.total_length() as usize);
    for (phase_index, phase) in spec.phases.iter().enumerate() {
        let body = loop_body(phase.load_fraction, &mut rng);
        let code_base = CODE_BASE + phase_index as u64 * PHASE_CODE_STRIDE;
        let mut walker = Walker::new(&phase.pattern, &mut rng);
        for i in 0..phase.length {
            let slot = (i % body.len() as u64) as usize;
            let pc = code_base + slot as u64 * INSN_BYTES;
            let kind = body[slot];
            let addr = if kind == RecordKind::Load {
                walker.next_addr(&mut rng)
            } else {
                0
            };
            records.push(TraceRecord { pc, kind, addr });
        }
    }
    Ok(Trace { records })
}
