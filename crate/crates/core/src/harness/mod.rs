//! Runs the full (benchmark, timestep, policy) grid and measures how much
//! cold-starting each chunk distorts IPC.
//!
//! Work is split into rows: one benchmark under one policy, all timesteps in
//! order. Rows are independent and run on a rayon pool; the matrix is
//! assembled from sorted keys, so output does not depend on scheduling.

mod plan;

pub use plan::{BenchmarkSource, ExperimentPlan, RunMode, TraceSource};

use rayon::prelude::*;
use serde::Serialize;

use crate::matrix::IpcMatrix;
use crate::sim::{
    simulate_segment, HierarchyConfig, MachineState, PolicyConfig, SegmentResult, TimingModel,
};
use crate::trace::generate_trace;
use crate::trace::read_trace;
use crate::trace::{segment_trace, Segment, Trace};
use crate::{Error, Result};

/// Loads or generates the trace for one benchmark.
pub fn load_benchmark(bench: &BenchmarkSource) -> Result<Trace> {
    match &bench.source {
        TraceSource::File(path) => read_trace(path),
        TraceSource::Synthetic(spec) => generate_trace(spec),
    }
    .map_err(|e| e.context(format!("benchmark '{}'", bench.id)))
}

/// Simulates consecutive segments of one benchmark under one policy.
pub fn simulate_row(
    segments: &[Segment<'_>],
    policy: &PolicyConfig,
    hierarchy: &HierarchyConfig,
    timing: &TimingModel,
    mode: RunMode,
) -> Result<Vec<SegmentResult>> {
    let mut state = MachineState::new(hierarchy, policy)?;
    let mut out = Vec::with_capacity(segments.len());
    for (i, seg) in segments.iter().enumerate() {
        if mode == RunMode::ColdChunk && i > 0 {
            state = MachineState::new(hierarchy, policy)?;
        }
        let r = simulate_segment(seg, policy, timing, &mut state).map_err(|e| {
            e.context(format!(
                "cell ({}, {}, {})",
                seg.benchmark_id, seg.timestep_index, policy
            ))
        })?;
        out.push(r);
    }
    Ok(out)
}

/// Runs `f` on a pool of `threads` workers, or on rayon's default pool when `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::validation("thread count must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Error::Config(format!("cannot start thread pool: {e}"))),
    }
}

/// Runs every cell of `plan`. A fresh machine is built for each
/// (benchmark, policy) row. `threads` of `Some(1)` runs serially.
pub fn run_experiment(plan: &ExperimentPlan, threads: Option<usize>) -> Result<IpcMatrix<f64>> {
    plan.validate()?;
    with_threads(threads, || run_grid(plan))?
}

fn run_grid(plan: &ExperimentPlan) -> Result<IpcMatrix<f64>> {
    let mut cells = Vec::new();
    for bench in &plan.benchmarks {
        let trace = load_benchmark(bench)?;
        let mut segments = segment_trace(&bench.id, &trace, plan.chunk_len)?;
        if let Some(max) = plan.max_timesteps {
            segments.truncate(max);
        }
        if segments.is_empty() {
            return Err(Error::validation(format!(
                "benchmark '{}': trace of {} instructions is shorter than chunk_len {}",
                bench.id,
                trace.len(),
                plan.chunk_len
            )));
        }
        let rows: Vec<Vec<SegmentResult>> = plan
            .policies
            .par_iter()
            .map(|p| simulate_row(&segments, p, &plan.hierarchy, &plan.timing, plan.mode))
            .collect::<Result<_>>()?;
        for (policy, row) in plan.policies.iter().zip(rows) {
            let id = policy.id();
            for (t, r) in row.iter().enumerate() {
                cells.push((bench.id.clone(), t, id.clone(), r.ipc));
            }
        }
    }
    IpcMatrix::from_cells(cells)
}

/// Gap between cold-start and continuous IPC at one chunk length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BiasPoint {
    pub chunk_len: usize,
    pub chunks: usize,
    /// Mean over chunks of `|ipc_cold − ipc_cont| / ipc_cont × 100`.
    pub gap_percent: f64,
}

/// Measures truncation bias for each chunk length over the common prefix of
/// `⌊len / L_max⌋ × L_max` instructions.
pub fn measure_truncation_bias(
    trace: &Trace,
    policy: &PolicyConfig,
    hierarchy: &HierarchyConfig,
    timing: &TimingModel,
    chunk_lengths: &[usize],
) -> Result<Vec<BiasPoint>> {
    let Some(&longest) = chunk_lengths.iter().max() else {
        return Err(Error::validation("at least one chunk length is required"));
    };
    if chunk_lengths.contains(&0) {
        return Err(Error::validation("chunk lengths must be at least 1"));
    }
    if trace.len() < longest {
        return Err(Error::validation(format!(
            "trace of {} instructions is shorter than one chunk of {longest}",
            trace.len()
        )));
    }
    let prefix = Trace::new(trace.records()[..trace.len() / longest * longest].to_vec());
    chunk_lengths
        .par_iter()
        .map(|&len| {
            let segments = segment_trace("bias", &prefix, len)?;
            let cont = simulate_row(&segments, policy, hierarchy, timing, RunMode::Continuous)?;
            let cold = simulate_row(&segments, policy, hierarchy, timing, RunMode::ColdChunk)?;
            let total: f64 = cont
                .iter()
                .zip(&cold)
                .map(|(c, k)| (k.ipc - c.ipc).abs() / c.ipc * 100.0)
                .sum();
            Ok(BiasPoint {
                chunk_len: len,
                chunks: segments.len(),
                gap_percent: total / segments.len() as f64,
            })
        })
        .collect()
}
