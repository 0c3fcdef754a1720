//! Trace-driven cache/prefetch policy simulator and limit-study analytics.
//!
//! The crate has two halves. The simulation half ([`trace`], [`cache`],
//! [`prefetch`], [`sim`], [`harness`]) turns instruction traces into an
//! [`IpcMatrix`]: one IPC value per (benchmark, timestep, policy) cell. The
//! analytics half ([`analytics`], [`report`]) measures how much a per-timestep
//! oracle, or a small set of switchable policies, gains over any single
//! static policy.
//!
//! The analytics are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what the harness produces.

pub mod analytics;
pub mod cache;
mod codec;
mod error;
pub mod harness;
pub mod matrix;
pub mod prefetch;
pub mod report;
pub mod scalar;
pub mod sim;
pub mod trace;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Relative tolerance under which two IPC values are treated as equal.
pub const TIE_EPSILON: f64 = 1e-9;

pub type IpcMatrix = matrix::IpcMatrix<f64>;
pub type IpcMatrix32 = matrix::IpcMatrix<f32>;
pub type OracleResult = analytics::OracleResult<f64>;
pub type LossTable = analytics::LossTable<f64>;
pub type PolicySummary = analytics::PolicySummary<f64>;
pub type Distribution = analytics::Distribution<f64>;
pub type DuelStats = analytics::DuelStats<f64>;
pub type Headroom = analytics::Headroom<f64>;
pub type SubsetSelection = analytics::SubsetSelection<f64>;
