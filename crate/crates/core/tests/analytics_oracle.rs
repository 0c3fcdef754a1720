//! Analytics checked against straightforward recomputation from raw cells.

use headroom_core::analytics::{
    best_k_subset, best_static, bucket_histogram, compute_loss_table, compute_oracle,
    optimality_frequency, pairwise_compare, summarize_losses, SubsetObjective,
};
use headroom_core::matrix::IpcMatrix;
use itertools::Itertools;
use proptest::prelude::*;

const EPS: f64 = 1e-9;

/// IPC values drawn from a small grid so exact ties are common.
fn matrix_strategy() -> impl Strategy<Value = IpcMatrix<f64>> {
    (1usize..=6, 1usize..=8, 1usize..=6).prop_flat_map(|(b, t, p)| {
        prop::collection::vec(1u32..=40, b * t * p).prop_map(move |vals| {
            let mut cells = Vec::new();
            let mut it = vals.into_iter();
            for bi in 0..b {
                for ti in 0..t {
                    for pi in 0..p {
                        let v = it.next().unwrap() as f64 / 16.0;
                        cells.push((format!("b{bi}"), ti, format!("p{pi}"), v));
                    }
                }
            }
            IpcMatrix::from_cells(cells).unwrap()
        })
    })
}

fn raw(m: &IpcMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.num_timesteps()).map(|t| m.row(t).to_vec()).collect()
}

fn brute_subset_loss(rows: &[Vec<f64>], subset: &[usize]) -> f64 {
    let total: f64 = rows
        .iter()
        .map(|r| {
            let best = r.iter().cloned().fold(f64::MIN, f64::max);
            let mine = subset.iter().map(|&p| r[p]).fold(f64::MIN, f64::max);
            if best - mine <= EPS * best {
                0.0
            } else {
                (best - mine) / best * 100.0
            }
        })
        .sum();
    total / rows.len() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn oracle_and_losses(m in matrix_strategy()) {
        let rows = raw(&m);
        let o = compute_oracle(&m);
        let table = compute_loss_table(&m, &o);
        for (t, r) in rows.iter().enumerate() {
            let max = r.iter().cloned().fold(f64::MIN, f64::max);
            prop_assert_eq!(o.oracle_ipc[t], max);
            let winners: Vec<usize> = (0..r.len()).filter(|&p| r[p] == max).collect();
            prop_assert_eq!(&o.winners[t], &winners);
            for (p, &v) in r.iter().enumerate() {
                let l = table.loss(p, t);
                prop_assert!((0.0..100.0).contains(&l));
                prop_assert_eq!(l == 0.0, winners.contains(&p));
                if l != 0.0 {
                    prop_assert_eq!(l, (max - v) / max * 100.0);
                }
            }
        }
    }

    #[test]
    fn best_static_and_frequency(m in matrix_strategy()) {
        let rows = raw(&m);
        let p = m.num_policies();
        let means: Vec<f64> = (0..p)
            .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64)
            .collect();
        let want = (0..p).fold(0, |b, j| if means[j] > means[b] { j } else { b });
        prop_assert_eq!(best_static(&m), want);

        let o = compute_oracle(&m);
        let f = optimality_frequency(&o, p);
        for j in 0..p {
            let c = rows
                .iter()
                .filter(|r| r[j] == r.iter().cloned().fold(f64::MIN, f64::max))
                .count();
            prop_assert_eq!(f.counts[j], c);
        }
        let total: usize = f.counts.iter().sum();
        prop_assert_eq!(total > rows.len(), f.ties_present);
    }

    #[test]
    fn subsets_match_enumeration(m in matrix_strategy()) {
        let rows = raw(&m);
        let o = compute_oracle(&m);
        let p = m.num_policies();
        let mut prev = f64::INFINITY;
        for k in 1..=p.min(3) {
            let got = best_k_subset(&m, &o, k, SubsetObjective::MeanLoss).unwrap();
            let best = (0..p)
                .combinations(k)
                .map(|c| brute_subset_loss(&rows, &c))
                .fold(f64::INFINITY, f64::min);
            prop_assert!((got.mean_loss - best).abs() <= 1e-9 * best.max(1.0));
            prop_assert!(got.mean_loss <= prev);
            prev = got.mean_loss;
        }
        let all = best_k_subset(&m, &o, p, SubsetObjective::MeanLoss).unwrap();
        prop_assert_eq!(all.mean_loss, 0.0);
        prop_assert_eq!(all.match_rate, 100.0);
    }

    #[test]
    fn conservation(m in matrix_strategy()) {
        let o = compute_oracle(&m);
        let table = compute_loss_table(&m, &o);
        for p in 0..m.num_policies() {
            let losses = table.row(p);
            prop_assert_eq!(bucket_histogram(losses).total(), m.num_timesteps());
            let s = summarize_losses("x", losses, 1.0);
            prop_assert!(s.exceedances.windows(2).all(|w| w[0] >= w[1]));
        }
        for (a, b) in m.policies().iter().tuple_combinations() {
            let d = pairwise_compare(&m, a, b).unwrap();
            prop_assert_eq!(d.wins + d.losses + d.ties, m.num_timesteps());
            prop_assert!((d.win_rate + d.loss_rate + d.tie_rate - 100.0).abs() < 1e-9);
        }
    }
}
