use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::stats::percent_of;
use super::OracleResult;
use crate::matrix::IpcMatrix;
use crate::scalar::{mean, within_tie, Scalar};
use crate::{Error, Result};

/// Head-to-head record of policy A against policy B.
///
/// At a timestep where A wins, its speedup is `(IPC_A / IPC_B − 1) × 100`;
/// where it loses, its slowdown is `(1 − IPC_A / IPC_B) × 100`. Both are
/// relative to B's IPC. Means are absent when there is nothing to average.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DuelStats<F> {
    pub a: String,
    pub b: String,
    pub timesteps: usize,
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    pub win_rate: F,
    pub loss_rate: F,
    pub tie_rate: F,
    pub mean_speedup_on_wins: Option<F>,
    pub mean_slowdown_on_losses: Option<F>,
}

pub fn pairwise_compare<F: Scalar>(
    matrix: &IpcMatrix<F>,
    a: &str,
    b: &str,
) -> Result<DuelStats<F>> {
    if a == b {
        return Err(Error::validation(format!(
            "pairwise comparison needs two distinct policies, got '{a}' twice"
        )));
    }
    let pa = matrix.require_policy(a)?;
    let pb = matrix.require_policy(b)?;
    let mut speedups = Vec::new();
    let mut slowdowns = Vec::new();
    let mut ties = 0;
    for t in 0..matrix.num_timesteps() {
        let (x, y) = (matrix.ipc(t, pa), matrix.ipc(t, pb));
        let ratio = x / y;
        if within_tie(x.max(y), x.min(y)) {
            ties += 1;
        } else if x > y {
            speedups.push((ratio - F::one()) * F::hundred());
        } else {
            slowdowns.push((F::one() - ratio) * F::hundred());
        }
    }
    let n = matrix.num_timesteps();
    Ok(DuelStats {
        a: a.to_string(),
        b: b.to_string(),
        timesteps: n,
        wins: speedups.len(),
        losses: slowdowns.len(),
        ties,
        win_rate: percent_of(speedups.len(), n),
        loss_rate: percent_of(slowdowns.len(), n),
        tie_rate: percent_of(ties, n),
        mean_speedup_on_wins: (!speedups.is_empty()).then(|| mean(&speedups)),
        mean_slowdown_on_losses: (!slowdowns.is_empty()).then(|| mean(&slowdowns)),
    })
}

/// What a baseline policy is measured against.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reference {
    Oracle,
    Policy(String),
}

impl Reference {
    pub fn label(&self) -> &str {
        match self {
            Reference::Oracle => "oracle",
            Reference::Policy(id) => id,
        }
    }
}

/// Improvement of a reference over a baseline, `(IPC_ref − IPC_base) / IPC_base × 100`
/// per timestep. The headline mean is the mean of per-timestep ratios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Headroom<F> {
    pub baseline: String,
    pub reference: String,
    pub timesteps: usize,
    pub mean_improvement: F,
    pub threshold: F,
    pub count_above: usize,
    pub percent_above: F,
    pub mean_improvement_above: Option<F>,
    pub benchmarks_above: usize,
    pub benchmarks_total: usize,
}

pub fn baseline_headroom<F: Scalar>(
    matrix: &IpcMatrix<F>,
    oracle: &OracleResult<F>,
    baseline: &str,
    reference: &Reference,
    threshold: F,
) -> Result<Headroom<F>> {
    let base = matrix.require_policy(baseline)?;
    let reference_ipc: Vec<F> = match reference {
        Reference::Oracle => oracle.oracle_ipc.clone(),
        Reference::Policy(id) => matrix.column(matrix.require_policy(id)?),
    };
    let improvements: Vec<F> = reference_ipc
        .iter()
        .enumerate()
        .map(|(t, &r)| {
            let b = matrix.ipc(t, base);
            (r - b) / b * F::hundred()
        })
        .collect();
    let above: Vec<usize> = (0..improvements.len())
        .filter(|&t| improvements[t] > threshold)
        .collect();
    let above_values: Vec<F> = above.iter().map(|&t| improvements[t]).collect();
    let benchmarks: BTreeSet<usize> = above
        .iter()
        .map(|&t| matrix.timesteps()[t].benchmark)
        .collect();
    Ok(Headroom {
        baseline: baseline.to_string(),
        reference: reference.label().to_string(),
        timesteps: improvements.len(),
        mean_improvement: mean(&improvements),
        threshold,
        count_above: above.len(),
        percent_above: percent_of(above.len(), improvements.len()),
        mean_improvement_above: (!above_values.is_empty()).then(|| mean(&above_values)),
        benchmarks_above: benchmarks.len(),
        benchmarks_total: matrix.benchmarks().len(),
    })
}
