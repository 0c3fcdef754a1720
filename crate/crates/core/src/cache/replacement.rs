use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Replacement policy selectable for the L2. L1 caches always use [`ReplacementPolicyId::Lru`].
///
/// Canonical string forms: `lru`, `fifo`, `random` (seed 0) or `random:<seed>`,
/// `srrip`, `drrip`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReplacementPolicyId {
    Lru,
    Fifo,
    Random { seed: u64 },
    Srrip,
    Drrip,
}

impl ReplacementPolicyId {
    pub(crate) fn code(self) -> u8 {
        match self {
            ReplacementPolicyId::Lru => 0,
            ReplacementPolicyId::Fifo => 1,
            ReplacementPolicyId::Random { .. } => 2,
            ReplacementPolicyId::Srrip => 3,
            ReplacementPolicyId::Drrip => 4,
        }
    }

    pub fn is_rrip(self) -> bool {
        matches!(
            self,
            ReplacementPolicyId::Srrip | ReplacementPolicyId::Drrip
        )
    }
}

impl fmt::Display for ReplacementPolicyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReplacementPolicyId::Lru => f.write_str("lru"),
            ReplacementPolicyId::Fifo => f.write_str("fifo"),
            ReplacementPolicyId::Random { seed: 0 } => f.write_str("random"),
            ReplacementPolicyId::Random { seed } => write!(f, "random:{seed}"),
            ReplacementPolicyId::Srrip => f.write_str("srrip"),
            ReplacementPolicyId::Drrip => f.write_str("drrip"),
        }
    }
}

impl FromStr for ReplacementPolicyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "lru" => ReplacementPolicyId::Lru,
            "fifo" => ReplacementPolicyId::Fifo,
            "random" => ReplacementPolicyId::Random { seed: 0 },
            "srrip" => ReplacementPolicyId::Srrip,
            "drrip" => ReplacementPolicyId::Drrip,
            _ => match s.strip_prefix("random:").map(str::parse::<u64>) {
                Some(Ok(seed)) => ReplacementPolicyId::Random { seed },
                _ => {
                    return Err(Error::validation(format!(
                        "unknown replacement policy '{s}'"
                    )))
                }
            },
        })
    }
}

/// Maximum re-reference prediction value of the 2-bit RRIP counters.
pub const RRPV_MAX: u64 = 3;
/// SRRIP insertion value ("long" re-reference interval).
pub const RRPV_INSERT: u64 = 2;

pub const PSEL_BITS: u32 = 10;
pub const PSEL_MAX: u16 = (1 << PSEL_BITS) - 1;
/// Initial PSEL value. Followers use BRRIP insertion only while PSEL is above it.
pub const PSEL_MID: u16 = 1 << (PSEL_BITS - 1);
pub const LEADER_SETS_PER_TEAM: usize = 32;
/// BRRIP inserts at `RRPV_INSERT` once every this many fills on average.
pub const BRRIP_LONG_ONE_IN: u32 = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetRole {
    SrripLeader,
    BrripLeader,
    Follower,
}

/// Set-dueling monitor for DRRIP.
///
/// Leader sets follow the complement-select layout: with `t = min(32, sets / 2)`
/// teams and `region = sets / t`, set `s` lies in constituency `c = s / region`
/// at offset `o = s % region`. It leads for SRRIP when `o == c % region` and for
/// BRRIP when `o == region - 1 - c % region`; every other set is a follower.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetDueling {
    psel: u16,
    region: usize,
}

impl SetDueling {
    pub fn new(sets: usize) -> Self {
        let teams = LEADER_SETS_PER_TEAM.min(sets / 2);
        SetDueling {
            psel: PSEL_MID,
            region: sets.checked_div(teams).unwrap_or(0),
        }
    }

    pub(crate) fn restore(sets: usize, psel: u16) -> Self {
        SetDueling {
            psel,
            ..SetDueling::new(sets)
        }
    }

    pub fn psel(&self) -> u16 {
        self.psel
    }

    pub fn role(&self, set: usize) -> SetRole {
        if self.region == 0 {
            return SetRole::Follower;
        }
        let c = (set / self.region) % self.region;
        let o = set % self.region;
        if o == c {
            SetRole::SrripLeader
        } else if o == self.region - 1 - c {
            SetRole::BrripLeader
        } else {
            SetRole::Follower
        }
    }

    /// Records a demand lookup in `set`. Leader misses steer PSEL: SRRIP-leader
    /// misses count up, BRRIP-leader misses count down, saturating in `[0, PSEL_MAX]`.
    pub fn duel_update(&mut self, set: usize, missed: bool) -> u16 {
        if missed {
            match self.role(set) {
                SetRole::SrripLeader => self.psel = (self.psel + 1).min(PSEL_MAX),
                SetRole::BrripLeader => self.psel = self.psel.saturating_sub(1),
                SetRole::Follower => {}
            }
        }
        self.psel
    }

    /// Whether a fill into `set` should use BRRIP insertion.
    pub fn use_brrip(&self, set: usize) -> bool {
        match self.role(set) {
            SetRole::SrripLeader => false,
            SetRole::BrripLeader => true,
            SetRole::Follower => self.psel > PSEL_MID,
        }
    }
}
