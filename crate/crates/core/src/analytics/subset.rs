use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::{loss_percent, OracleResult};
use crate::matrix::IpcMatrix;
use crate::scalar::{within_tie, Scalar};
use crate::{Error, Result};

/// What [`best_k_subset`] minimizes or maximizes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetObjective {
    /// Minimize mean per-timestep loss against the oracle.
    #[default]
    MeanLoss,
    /// Maximize mean per-timestep IPC of the subset's best member.
    MeanIpc,
}

/// A set of policies that can be switched between per timestep, scored as if
/// the best member were always chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetSelection<F> {
    pub k: usize,
    /// Policy ids in lexicographic order.
    pub policies: Vec<String>,
    pub mean_loss: F,
    pub mean_ipc: F,
    pub match_rate: F,
    pub matches: usize,
}

/// Scores one subset (policy indices) against the oracle.
pub fn evaluate_subset<F: Scalar>(
    matrix: &IpcMatrix<F>,
    oracle: &OracleResult<F>,
    subset: &[usize],
) -> SubsetSelection<F> {
    let n = matrix.num_timesteps();
    let mut loss_sum = F::zero();
    let mut ipc_sum = F::zero();
    let mut matches = 0;
    for t in 0..n {
        let row = matrix.row(t);
        let best = subset
            .iter()
            .map(|&p| row[p])
            .fold(F::neg_infinity(), F::max);
        let o = oracle.oracle_ipc[t];
        loss_sum = loss_sum + loss_percent(o, best);
        ipc_sum = ipc_sum + best;
        if within_tie(o, best) {
            matches += 1;
        }
    }
    let nf = F::from_usize_lossy(n);
    SubsetSelection {
        k: subset.len(),
        policies: subset
            .iter()
            .map(|&p| matrix.policies()[p].clone())
            .collect(),
        mean_loss: loss_sum / nf,
        mean_ipc: ipc_sum / nf,
        match_rate: F::from_usize_lossy(matches) / nf * F::hundred(),
        matches,
    }
}

/// Exhaustive search for the best size-`k` subset. Ties on the objective go
/// to the higher match rate, then to the lexicographically smallest id tuple.
pub fn best_k_subset<F: Scalar>(
    matrix: &IpcMatrix<F>,
    oracle: &OracleResult<F>,
    k: usize,
    objective: SubsetObjective,
) -> Result<SubsetSelection<F>> {
    let n = matrix.num_policies();
    if k == 0 || k > n {
        return Err(Error::validation(format!(
            "subset size k must lie in [1, {n}], got {k}"
        )));
    }
    let mut best: Option<SubsetSelection<F>> = None;
    // combinations are generated in lexicographic index order, which is
    // lexicographic id order because policies are sorted
    for subset in (0..n).combinations(k) {
        let cand = evaluate_subset(matrix, oracle, &subset);
        let better = match &best {
            None => true,
            Some(cur) => {
                let (c, b) = match objective {
                    SubsetObjective::MeanLoss => (cur.mean_loss, cand.mean_loss),
                    SubsetObjective::MeanIpc => (-cur.mean_ipc, -cand.mean_ipc),
                };
                b < c || (b == c && cand.matches > cur.matches)
            }
        };
        if better {
            best = Some(cand);
        }
    }
    Ok(best.unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::compute_oracle;

    fn toy() -> IpcMatrix<f64> {
        // p1 best at t0, p2 at t1, p3 at t2 but p3 is close everywhere
        IpcMatrix::from_cells(vec![
            ("a", 0, "p1", 2.0),
            ("a", 0, "p2", 1.0),
            ("a", 0, "p3", 1.9),
            ("a", 1, "p1", 1.0),
            ("a", 1, "p2", 2.0),
            ("a", 1, "p3", 1.9),
            ("a", 2, "p1", 1.0),
            ("a", 2, "p2", 1.0),
            ("a", 2, "p3", 2.0),
        ])
        .unwrap()
    }

    #[test]
    fn full_set_has_zero_loss() {
        let m = toy();
        let o = compute_oracle(&m);
        let s = best_k_subset(&m, &o, 3, SubsetObjective::MeanLoss).unwrap();
        assert_eq!(s.mean_loss, 0.0);
        assert_eq!(s.match_rate, 100.0);
    }

    #[test]
    fn pair_matches_hand_enumeration() {
        let m = toy();
        let o = compute_oracle(&m);
        // {p1,p2}: losses 0,0,50 → 16.67; {p1,p3}: 0,5,0 → 1.67; {p2,p3}: 5,0,0 → 1.67
        // tie on loss and match count → lexicographically smaller {p1,p3}
        let s = best_k_subset(&m, &o, 2, SubsetObjective::MeanLoss).unwrap();
        assert_eq!(s.policies, ["p1", "p3"]);
        assert!((s.mean_loss - 5.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.matches, 2);
        let single = best_k_subset(&m, &o, 1, SubsetObjective::MeanLoss).unwrap();
        assert_eq!(single.policies, ["p3"]);
    }

    #[test]
    fn mean_ipc_objective() {
        let m = toy();
        let o = compute_oracle(&m);
        let s = best_k_subset(&m, &o, 1, SubsetObjective::MeanIpc).unwrap();
        assert_eq!(s.policies, ["p3"]);
    }

    #[test]
    fn k_out_of_range() {
        let m = toy();
        let o = compute_oracle(&m);
        assert!(best_k_subset(&m, &o, 0, SubsetObjective::MeanLoss).is_err());
        assert!(best_k_subset(&m, &o, 4, SubsetObjective::MeanLoss).is_err());
    }
}
