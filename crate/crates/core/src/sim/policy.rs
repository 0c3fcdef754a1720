use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::cache::ReplacementPolicyId;
use crate::prefetch::{DataPrefetcherId, InstrPrefetcherId};
use crate::{Error, Result};

/// One point of the policy space: an L1D prefetcher, an L1I prefetcher and an
/// L2 replacement policy. Its canonical id is `"l1d/l1i/l2"`, e.g.
/// `ip_stride/i_next_line/lru`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PolicyConfig {
    pub l1d: DataPrefetcherId,
    pub l1i: InstrPrefetcherId,
    pub l2: ReplacementPolicyId,
}

impl PolicyConfig {
    pub fn id(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PolicyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.l1d, self.l1i, self.l2)
    }
}

impl FromStr for PolicyConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('/').collect();
        let [l1d, l1i, l2] = parts[..] else {
            return Err(Error::validation(format!(
                "policy id '{s}' is not of the form l1d/l1i/l2"
            )));
        };
        Ok(PolicyConfig {
            l1d: l1d.parse()?,
            l1i: l1i.parse()?,
            l2: l2.parse()?,
        })
    }
}

fn check_unique<T: fmt::Display>(what: &str, items: &[T]) -> Result<()> {
    if items.is_empty() {
        return Err(Error::validation(format!("{what} option list is empty")));
    }
    let mut seen = HashSet::new();
    for item in items {
        let id = item.to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::validation(format!("duplicate {what} option '{id}'")));
        }
    }
    Ok(())
}

/// Cartesian product of the option lists, sorted by canonical id.
pub fn enumerate_policy_space(
    l1d: &[DataPrefetcherId],
    l1i: &[InstrPrefetcherId],
    l2: &[ReplacementPolicyId],
) -> Result<Vec<PolicyConfig>> {
    check_unique("l1d", l1d)?;
    check_unique("l1i", l1i)?;
    check_unique("l2", l2)?;
    let mut space: Vec<PolicyConfig> = itertools::iproduct!(l1d, l1i, l2)
        .map(|(&l1d, &l1i, &l2)| PolicyConfig { l1d, l1i, l2 })
        .collect();
    space.sort_by_cached_key(PolicyConfig::id);
    Ok(space)
}
