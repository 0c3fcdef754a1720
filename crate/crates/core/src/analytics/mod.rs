//! Limit-study analytics over an [`IpcMatrix`].
//!
//! Everything here is a pure function of the matrix. Two IPC values count as
//! tied when they differ by at most [`crate::TIE_EPSILON`] relative to the
//! larger one; a policy tied with the per-timestep maximum is a winner and
//! has loss exactly zero.

mod compare;
mod stats;
mod subset;

pub use compare::{baseline_headroom, pairwise_compare, DuelStats, Headroom, Reference};
pub use stats::{
    best_static, bucket_histogram, distribution, mean_ipc_by_policy, optimality_frequency,
    per_benchmark_distribution, quantile, summarize_losses, summarize_policy, BucketHistogram,
    Distribution, OptimalityFrequency, PolicySummary, BUCKET_LABELS, EXCEEDANCE_THRESHOLDS,
};
pub use subset::{best_k_subset, evaluate_subset, SubsetObjective, SubsetSelection};

use crate::matrix::IpcMatrix;
use crate::scalar::{within_tie, Scalar};
use crate::Result;

/// Per-timestep oracle: the best IPC and every policy tied with it.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult<F> {
    pub oracle_ipc: Vec<F>,
    /// Winning policy indices per timestep, ascending; never empty.
    pub winners: Vec<Vec<usize>>,
}

impl<F: Scalar> OracleResult<F> {
    pub fn num_timesteps(&self) -> usize {
        self.oracle_ipc.len()
    }

    pub fn is_winner(&self, t: usize, p: usize) -> bool {
        self.winners[t].binary_search(&p).is_ok()
    }
}

pub fn compute_oracle<F: Scalar>(matrix: &IpcMatrix<F>) -> OracleResult<F> {
    let mut oracle_ipc = Vec::with_capacity(matrix.num_timesteps());
    let mut winners = Vec::with_capacity(matrix.num_timesteps());
    for t in 0..matrix.num_timesteps() {
        let row = matrix.row(t);
        let best = row.iter().copied().fold(F::neg_infinity(), F::max);
        oracle_ipc.push(best);
        winners.push(
            row.iter()
                .enumerate()
                .filter(|(_, &v)| within_tie(best, v))
                .map(|(p, _)| p)
                .collect(),
        );
    }
    OracleResult {
        oracle_ipc,
        winners,
    }
}

/// IPC loss in percent of `ipc` against `oracle`: `(oracle - ipc) / oracle × 100`,
/// or exactly zero when the two are tied.
pub fn loss_percent<F: Scalar>(oracle: F, ipc: F) -> F {
    if within_tie(oracle, ipc) {
        F::zero()
    } else {
        (oracle - ipc) / oracle * F::hundred()
    }
}

/// Loss of every (policy, timestep) pair, stored policy-major.
#[derive(Clone, Debug, PartialEq)]
pub struct LossTable<F> {
    policies: Vec<String>,
    rows: Vec<Vec<F>>,
}

impl<F: Scalar> LossTable<F> {
    pub fn policies(&self) -> &[String] {
        &self.policies
    }

    pub fn row(&self, p: usize) -> &[F] {
        &self.rows[p]
    }

    pub fn loss(&self, p: usize, t: usize) -> F {
        self.rows[p][t]
    }
}

/// Loss row of one policy across all timesteps.
pub fn compute_loss<F: Scalar>(
    matrix: &IpcMatrix<F>,
    oracle: &OracleResult<F>,
    policy: &str,
) -> Result<Vec<F>> {
    let p = matrix.require_policy(policy)?;
    Ok(loss_row(matrix, oracle, p))
}

pub(crate) fn loss_row<F: Scalar>(
    matrix: &IpcMatrix<F>,
    oracle: &OracleResult<F>,
    p: usize,
) -> Vec<F> {
    (0..matrix.num_timesteps())
        .map(|t| loss_percent(oracle.oracle_ipc[t], matrix.ipc(t, p)))
        .collect()
}

pub fn compute_loss_table<F: Scalar>(
    matrix: &IpcMatrix<F>,
    oracle: &OracleResult<F>,
) -> LossTable<F> {
    LossTable {
        policies: matrix.policies().to_vec(),
        rows: (0..matrix.num_policies())
            .map(|p| loss_row(matrix, oracle, p))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(cells: &[(&str, usize, &str, f64)]) -> IpcMatrix<f64> {
        IpcMatrix::from_cells(cells.iter().map(|&(b, t, p, v)| (b, t, p, v))).unwrap()
    }

    #[test]
    fn oracle_picks_max() {
        let mx = m(&[
            ("a", 0, "p1", 1.0),
            ("a", 0, "p2", 1.2),
            ("a", 0, "p3", 1.1),
        ]);
        let o = compute_oracle(&mx);
        assert_eq!(o.oracle_ipc, vec![1.2]);
        assert_eq!(o.winners, vec![vec![1]]);
    }

    #[test]
    fn equal_policies_all_win() {
        let mx = m(&[
            ("a", 0, "p1", 1.5),
            ("a", 0, "p2", 1.5),
            ("a", 0, "p3", 1.5),
        ]);
        let o = compute_oracle(&mx);
        assert_eq!(o.oracle_ipc, vec![1.5]);
        assert_eq!(o.winners, vec![vec![0, 1, 2]]);
        let lt = compute_loss_table(&mx, &o);
        assert!((0..3).all(|p| lt.loss(p, 0) == 0.0));
    }

    #[test]
    fn near_ties_within_epsilon() {
        let mx = m(&[
            ("a", 0, "p1", 1.0),
            ("a", 0, "p2", 1.0 - 5e-10),
            ("a", 0, "p3", 1.0 - 5e-9),
        ]);
        let o = compute_oracle(&mx);
        assert_eq!(o.winners[0], vec![0, 1]);
        let l = compute_loss(&mx, &o, "p2").unwrap();
        assert_eq!(l, vec![0.0]);
        assert!(compute_loss(&mx, &o, "p3").unwrap()[0] > 0.0);
    }

    #[test]
    fn loss_formula() {
        assert_eq!(loss_percent(2.0f64, 1.9), (2.0 - 1.9) / 2.0 * 100.0);
        assert!((loss_percent(2.0f64, 1.9) - 5.0).abs() < 1e-12);
        assert_eq!(loss_percent(2.0f64, 2.0), 0.0);
        assert!((loss_percent(2.0f32, 1.9) - 5.0).abs() < 1e-4);
    }

    #[test]
    fn unknown_policy_rejected() {
        let mx = m(&[("a", 0, "p1", 1.0)]);
        let o = compute_oracle(&mx);
        assert!(compute_loss(&mx, &o, "nope").is_err());
    }
}
