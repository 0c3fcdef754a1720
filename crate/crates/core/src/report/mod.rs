//! Report bundle: every analysis over one matrix, emitted as CSV tables plus
//! `bundle.json` (full precision) and `metadata.json`.
//!
//! Tables written by [`write_bundle`]:
//!
//! | file | columns |
//! |---|---|
//! | `summary.csv` | policy, timesteps, mean_ipc, mean_loss_pct, match_rate_pct, matches, over_1pct, over_2_5pct, over_5pct, over_10pct |
//! | `buckets.csv` | policy, bucket_label, count, fraction (8 rows per policy, bottom to top) |
//! | `boxplot.csv` | benchmark, min, q1, median, q3, max (loss of the best static policy) |
//! | `global_distribution.csv` | policy, min, q1, median, q3, max (loss over all timesteps) |
//! | `frequency.csv` | policy, winner_count, fraction, percent |
//! | `subsets.csv` | k, policies (`;`-separated), mean_loss_pct, match_rate_pct, matches, mean_ipc |
//! | `duels.csv` | a, b, timesteps, wins, losses, ties, win_rate_pct, loss_rate_pct, tie_rate_pct, mean_speedup_pct, mean_slowdown_pct |
//! | `headroom.csv` | baseline, reference, timesteps, mean_improvement_pct, threshold_pct, count_above, percent_above, mean_improvement_above_pct, benchmarks_above, benchmarks_total |
//!
//! Percentages are printed with a fixed number of decimals (2 by default);
//! other values with 9 significant digits. Absent values are empty fields.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytics::{
    baseline_headroom, best_k_subset, best_static, bucket_histogram, compute_loss_table,
    compute_oracle, distribution, mean_ipc_by_policy, optimality_frequency, pairwise_compare,
    per_benchmark_distribution, summarize_losses, Distribution, DuelStats, Headroom, PolicySummary,
    Reference, SubsetObjective, SubsetSelection, BUCKET_LABELS,
};
use crate::matrix::{format_sig9, IpcMatrix};
use crate::{Error, Result, TIE_EPSILON};

pub const BUNDLE_FILE: &str = "bundle.json";
pub const METADATA_FILE: &str = "metadata.json";

/// Knobs for [`analyze`].
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyzeOptions {
    /// Largest subset size searched; clipped to the number of policies.
    pub max_k: usize,
    pub objective: SubsetObjective,
    /// Headroom threshold in percent.
    pub threshold: f64,
    /// Recorded verbatim in the metadata.
    pub timestamp: Option<String>,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            max_k: 4,
            objective: SubsetObjective::MeanLoss,
            threshold: 2.5,
            timestamp: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool_version: String,
    /// SHA-256 of the matrix in canonical CSV form.
    pub matrix_sha256: String,
    pub timestamp: Option<String>,
    pub tie_epsilon: f64,
    pub benchmarks: usize,
    pub timesteps: usize,
    pub policies: usize,
    pub best_static: String,
    /// Every tied winner is credited in the frequency table.
    pub frequency_credit: String,
    /// True when some timestep has several winners, so frequency fractions sum above 1.
    pub ties_present: bool,
    pub subset_objective: SubsetObjective,
    pub slowdown_convention: String,
    pub headroom_convention: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyBuckets {
    pub policy: String,
    pub counts: [usize; 8],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedDistribution {
    pub name: String,
    #[serde(flatten)]
    pub stats: Distribution<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub policy: String,
    pub winner_count: usize,
    pub percent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub metadata: Metadata,
    pub summaries: Vec<PolicySummary<f64>>,
    pub buckets: Vec<PolicyBuckets>,
    /// Per-benchmark loss distribution of the best static policy.
    pub boxplot: Vec<NamedDistribution>,
    /// Per-policy loss distribution over all timesteps.
    pub global_distribution: Vec<NamedDistribution>,
    pub frequency: Vec<FrequencyRow>,
    pub subsets: Vec<SubsetSelection<f64>>,
    pub duels: Vec<DuelStats<f64>>,
    pub headroom: Vec<Headroom<f64>>,
}

pub fn matrix_sha256(matrix: &IpcMatrix<f64>) -> String {
    Sha256::digest(matrix.to_csv_string().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Runs every analysis on `matrix`.
pub fn analyze(matrix: &IpcMatrix<f64>, opts: &AnalyzeOptions) -> Result<ReportBundle> {
    if opts.max_k == 0 {
        return Err(Error::validation("max_k must be at least 1"));
    }
    if !opts.threshold.is_finite() {
        return Err(Error::validation("headroom threshold must be finite"));
    }
    let oracle = compute_oracle(matrix);
    let losses = compute_loss_table(matrix, &oracle);
    let means = mean_ipc_by_policy(matrix);
    let policies = matrix.policies();
    let best = best_static(matrix);
    let freq = optimality_frequency(&oracle, policies.len());

    let summaries = policies
        .iter()
        .enumerate()
        .map(|(p, id)| summarize_losses(id, losses.row(p), means[p]))
        .collect();
    let buckets = policies
        .iter()
        .enumerate()
        .map(|(p, id)| PolicyBuckets {
            policy: id.clone(),
            counts: bucket_histogram(losses.row(p)).counts,
        })
        .collect();
    let boxplot = per_benchmark_distribution(matrix, losses.row(best))
        .into_iter()
        .map(|(name, stats)| NamedDistribution { name, stats })
        .collect();
    let global_distribution = policies
        .iter()
        .enumerate()
        .map(|(p, id)| NamedDistribution {
            name: id.clone(),
            stats: distribution(losses.row(p)),
        })
        .collect();
    let frequency = policies
        .iter()
        .enumerate()
        .map(|(p, id)| FrequencyRow {
            policy: id.clone(),
            winner_count: freq.counts[p],
            percent: freq.percent[p],
        })
        .collect();
    let subsets = (1..=opts.max_k.min(policies.len()))
        .map(|k| best_k_subset(matrix, &oracle, k, opts.objective))
        .collect::<Result<_>>()?;
    let duels = policies
        .iter()
        .tuple_combinations()
        .map(|(a, b)| pairwise_compare(matrix, a, b))
        .collect::<Result<_>>()?;
    let headroom = policies
        .iter()
        .map(|id| baseline_headroom(matrix, &oracle, id, &Reference::Oracle, opts.threshold))
        .collect::<Result<_>>()?;

    Ok(ReportBundle {
        metadata: Metadata {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            matrix_sha256: matrix_sha256(matrix),
            timestamp: opts.timestamp.clone(),
            tie_epsilon: TIE_EPSILON,
            benchmarks: matrix.benchmarks().len(),
            timesteps: matrix.num_timesteps(),
            policies: policies.len(),
            best_static: policies[best].clone(),
            frequency_credit: "full".to_string(),
            ties_present: freq.ties_present,
            subset_objective: opts.objective,
            slowdown_convention: "(1 - ipc_a / ipc_b) * 100".to_string(),
            headroom_convention: "mean of per-timestep (ipc_ref - ipc_base) / ipc_base * 100"
                .to_string(),
        },
        summaries,
        buckets,
        boxplot,
        global_distribution,
        frequency,
        subsets,
        duels,
        headroom,
    })
}

/// How percentages are printed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    Decimals(usize),
    /// Shortest representation that reads back to the same `f64`.
    Full,
}

impl Default for Precision {
    fn default() -> Self {
        Precision::Decimals(2)
    }
}

impl std::str::FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "full" {
            return Ok(Precision::Full);
        }
        s.parse().map(Precision::Decimals).map_err(|_| {
            Error::validation(format!(
                "precision must be a digit count or 'full', got '{s}'"
            ))
        })
    }
}

impl Precision {
    pub fn pct(self, v: f64) -> String {
        match self {
            Precision::Decimals(d) => format!("{v:.d$}"),
            Precision::Full => format!("{v}"),
        }
    }

    fn opt_pct(self, v: Option<f64>) -> String {
        v.map(|v| self.pct(v)).unwrap_or_default()
    }
}

fn dist_cells(out: &mut String, d: &Distribution<f64>, prec: Precision) {
    for v in [d.min, d.q1, d.median, d.q3, d.max] {
        let _ = write!(out, ",{}", prec.pct(v));
    }
    out.push('\n');
}

/// Renders every table as `(file name, CSV text)`, in a fixed order.
pub fn render_tables(bundle: &ReportBundle, prec: Precision) -> Vec<(&'static str, String)> {
    let mut summary = String::from(
        "policy,timesteps,mean_ipc,mean_loss_pct,match_rate_pct,matches,over_1pct,over_2_5pct,over_5pct,over_10pct\n",
    );
    for s in &bundle.summaries {
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{}",
            s.policy,
            s.timesteps,
            format_sig9(s.mean_ipc),
            prec.pct(s.mean_loss),
            prec.pct(s.match_rate),
            s.matches,
            s.exceedances.iter().join(",")
        );
    }

    let mut buckets = String::from("policy,bucket_label,count,fraction\n");
    for b in &bundle.buckets {
        let total: usize = b.counts.iter().sum();
        for (label, &count) in BUCKET_LABELS.iter().zip(&b.counts) {
            let fraction = if total == 0 {
                0.0
            } else {
                count as f64 / total as f64
            };
            let _ = writeln!(
                buckets,
                "{},{label},{count},{}",
                b.policy,
                format_sig9(fraction)
            );
        }
    }

    let mut boxplot = String::from("benchmark,min,q1,median,q3,max\n");
    for d in &bundle.boxplot {
        boxplot.push_str(&d.name);
        dist_cells(&mut boxplot, &d.stats, prec);
    }

    let mut global = String::from("policy,min,q1,median,q3,max\n");
    for d in &bundle.global_distribution {
        global.push_str(&d.name);
        dist_cells(&mut global, &d.stats, prec);
    }

    let timesteps = bundle.metadata.timesteps.max(1) as f64;
    let mut frequency = String::from("policy,winner_count,fraction,percent\n");
    for f in &bundle.frequency {
        let _ = writeln!(
            frequency,
            "{},{},{},{}",
            f.policy,
            f.winner_count,
            format_sig9(f.winner_count as f64 / timesteps),
            prec.pct(f.percent)
        );
    }

    let mut subsets = String::from("k,policies,mean_loss_pct,match_rate_pct,matches,mean_ipc\n");
    for s in &bundle.subsets {
        let _ = writeln!(
            subsets,
            "{},{},{},{},{},{}",
            s.k,
            s.policies.join(";"),
            prec.pct(s.mean_loss),
            prec.pct(s.match_rate),
            s.matches,
            format_sig9(s.mean_ipc)
        );
    }

    let mut duels = String::from(
        "a,b,timesteps,wins,losses,ties,win_rate_pct,loss_rate_pct,tie_rate_pct,mean_speedup_pct,mean_slowdown_pct\n",
    );
    for d in &bundle.duels {
        let _ = writeln!(
            duels,
            "{},{},{},{},{},{},{},{},{},{},{}",
            d.a,
            d.b,
            d.timesteps,
            d.wins,
            d.losses,
            d.ties,
            prec.pct(d.win_rate),
            prec.pct(d.loss_rate),
            prec.pct(d.tie_rate),
            prec.opt_pct(d.mean_speedup_on_wins),
            prec.opt_pct(d.mean_slowdown_on_losses)
        );
    }

    let mut headroom = String::from(
        "baseline,reference,timesteps,mean_improvement_pct,threshold_pct,count_above,percent_above,mean_improvement_above_pct,benchmarks_above,benchmarks_total\n",
    );
    for h in &bundle.headroom {
        let _ = writeln!(
            headroom,
            "{},{},{},{},{},{},{},{},{},{}",
            h.baseline,
            h.reference,
            h.timesteps,
            prec.pct(h.mean_improvement),
            prec.pct(h.threshold),
            h.count_above,
            prec.pct(h.percent_above),
            prec.opt_pct(h.mean_improvement_above),
            h.benchmarks_above,
            h.benchmarks_total
        );
    }

    vec![
        ("summary.csv", summary),
        ("buckets.csv", buckets),
        ("boxplot.csv", boxplot),
        ("global_distribution.csv", global),
        ("frequency.csv", frequency),
        ("subsets.csv", subsets),
        ("duels.csv", duels),
        ("headroom.csv", headroom),
    ]
}

pub fn bundle_json(bundle: &ReportBundle) -> String {
    let mut s = serde_json::to_string_pretty(bundle).expect("bundle serializes");
    s.push('\n');
    s
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `bundle.json`, `metadata.json` and every CSV table into `dir`,
/// creating it if needed.
pub fn write_bundle(bundle: &ReportBundle, dir: &Path, prec: Precision) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join(BUNDLE_FILE), &bundle_json(bundle))?;
    let mut meta = serde_json::to_string_pretty(&bundle.metadata).expect("metadata serializes");
    meta.push('\n');
    write_file(&dir.join(METADATA_FILE), &meta)?;
    for (name, text) in render_tables(bundle, prec) {
        write_file(&dir.join(name), &text)?;
    }
    Ok(())
}

pub fn read_bundle(dir: &Path) -> Result<ReportBundle> {
    let path = dir.join(BUNDLE_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::validation(format!("{}: {e}", path.display())))
}
