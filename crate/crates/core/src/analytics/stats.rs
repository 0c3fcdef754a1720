use serde::{Deserialize, Serialize};

use super::{loss_row, OracleResult};
use crate::matrix::IpcMatrix;
use crate::scalar::{mean, Scalar};

/// Loss thresholds (percent) at which exceedance counts are reported.
pub const EXCEEDANCE_THRESHOLDS: [f64; 4] = [1.0, 2.5, 5.0, 10.0];

/// Upper edges (percent, inclusive) of the loss buckets after the zero bucket.
const BUCKET_EDGES: [f64; 6] = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0];

/// Bucket labels, bottom to top.
pub const BUCKET_LABELS: [&str; 8] = [
    "0", "0-0.1", "0.1-0.5", "0.5-1", "1-2", "2-5", "5-10", ">10",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary<F> {
    pub policy: String,
    pub timesteps: usize,
    /// Mean loss in percent.
    pub mean_loss: F,
    /// Percent of timesteps at zero loss.
    pub match_rate: F,
    pub matches: usize,
    /// Timesteps with loss strictly above each of [`EXCEEDANCE_THRESHOLDS`].
    pub exceedances: [usize; 4],
    pub mean_ipc: F,
}

pub fn summarize_losses<F: Scalar>(policy: &str, losses: &[F], mean_ipc: F) -> PolicySummary<F> {
    let matches = losses.iter().filter(|&&l| l <= F::tie_epsilon()).count();
    let exceedances =
        EXCEEDANCE_THRESHOLDS.map(|th| losses.iter().filter(|&&l| l > F::lit(th)).count());
    PolicySummary {
        policy: policy.to_string(),
        timesteps: losses.len(),
        mean_loss: mean(losses),
        match_rate: percent_of(matches, losses.len()),
        matches,
        exceedances,
        mean_ipc,
    }
}

pub fn summarize_policy<F: Scalar>(
    matrix: &IpcMatrix<F>,
    oracle: &OracleResult<F>,
    policy: &str,
) -> crate::Result<PolicySummary<F>> {
    let p = matrix.require_policy(policy)?;
    let losses = loss_row(matrix, oracle, p);
    Ok(summarize_losses(policy, &losses, mean(&matrix.column(p))))
}

pub(crate) fn percent_of<F: Scalar>(count: usize, total: usize) -> F {
    if total == 0 {
        F::zero()
    } else {
        F::from_usize_lossy(count) / F::from_usize_lossy(total) * F::hundred()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketHistogram {
    /// Counts per bucket in [`BUCKET_LABELS`] order.
    pub counts: [usize; 8],
}

impl BucketHistogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Buckets losses into zero (≤ ε), then ranges with closed upper edges:
/// (ε,0.1], (0.1,0.5], (0.5,1], (1,2], (2,5], (5,10], (10,∞).
pub fn bucket_histogram<F: Scalar>(losses: &[F]) -> BucketHistogram {
    let mut counts = [0; 8];
    for &l in losses {
        let b = if l <= F::tie_epsilon() {
            0
        } else {
            1 + BUCKET_EDGES
                .iter()
                .position(|&edge| l <= F::lit(edge))
                .unwrap_or(BUCKET_EDGES.len())
        };
        counts[b] += 1;
    }
    BucketHistogram { counts }
}

/// Five-number summary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distribution<F> {
    pub min: F,
    pub q1: F,
    pub median: F,
    pub q3: F,
    pub max: F,
}

/// Quantile of sorted data by linear interpolation between order statistics
/// at position `q × (n − 1)`.
pub fn quantile<F: Scalar>(sorted: &[F], q: F) -> F {
    let pos = q * F::from_usize_lossy(sorted.len() - 1);
    let lo = pos.floor();
    let i = lo.to_usize().unwrap();
    if i + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    let frac = pos - lo;
    sorted[i] + (sorted[i + 1] - sorted[i]) * frac
}

/// Five-number summary of a non-empty sample.
pub fn distribution<F: Scalar>(values: &[F]) -> Distribution<F> {
    assert!(!values.is_empty(), "distribution of an empty sample");
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Distribution {
        min: v[0],
        q1: quantile(&v, F::lit(0.25)),
        median: quantile(&v, F::lit(0.5)),
        q3: quantile(&v, F::lit(0.75)),
        max: v[v.len() - 1],
    }
}

/// Loss distribution of each benchmark over its own timesteps.
pub fn per_benchmark_distribution<F: Scalar>(
    matrix: &IpcMatrix<F>,
    losses: &[F],
) -> Vec<(String, Distribution<F>)> {
    matrix
        .benchmarks()
        .iter()
        .enumerate()
        .map(|(b, name)| {
            let sample: Vec<F> = matrix
                .timesteps()
                .iter()
                .zip(losses)
                .filter(|(ts, _)| ts.benchmark == b)
                .map(|(_, &l)| l)
                .collect();
            (name.clone(), distribution(&sample))
        })
        .collect()
}

pub fn mean_ipc_by_policy<F: Scalar>(matrix: &IpcMatrix<F>) -> Vec<F> {
    (0..matrix.num_policies())
        .map(|p| mean(&matrix.column(p)))
        .collect()
}

/// Index of the policy with the highest mean IPC; ties go to the
/// lexicographically smallest id.
pub fn best_static<F: Scalar>(matrix: &IpcMatrix<F>) -> usize {
    let means = mean_ipc_by_policy(matrix);
    let mut best = 0;
    for (p, &m) in means.iter().enumerate().skip(1) {
        if m > means[best] {
            best = p;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalityFrequency<F> {
    /// Timesteps at which each policy is in the winner set.
    pub counts: Vec<usize>,
    /// `counts` as a percentage of all timesteps.
    pub percent: Vec<F>,
    /// True when some timestep has several winners, so percentages sum above 100.
    pub ties_present: bool,
}

/// How often each policy is optimal. Every tied winner gets full credit.
pub fn optimality_frequency<F: Scalar>(
    oracle: &OracleResult<F>,
    num_policies: usize,
) -> OptimalityFrequency<F> {
    let mut counts = vec![0; num_policies];
    for w in &oracle.winners {
        for &p in w {
            counts[p] += 1;
        }
    }
    let t = oracle.num_timesteps();
    OptimalityFrequency {
        percent: counts.iter().map(|&c| percent_of(c, t)).collect(),
        ties_present: oracle.winners.iter().any(|w| w.len() > 1),
        counts,
    }
}
