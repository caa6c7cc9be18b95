//! Experiment drivers: convergence order studies (strong, in probability,
//! almost sure), L2-drift and computational-cost comparisons, soliton
//! observables, and blowup sweeps.
//!
//! All drivers parallelize over samples with deterministic per-sample
//! seeding; aggregation folds completed samples in index order, so numerical
//! results do not depend on the worker count.

pub mod blowup;
pub mod convergence;
pub mod cost;
pub mod drift;
pub mod soliton;
pub mod stats;
pub mod sweep;

use crate::field::FieldError;
use crate::noise::NoiseError;
use stats::StatsError;
use thiserror::Error;

pub use blowup::{blowup_sweep, BlowupConfig, BlowupRecord, BlowupReport, BlowupSummary};
pub use convergence::{
    as_convergence, probability_convergence, strong_convergence, ASOrderConfig, ASOrderEstimate,
    ConvergenceRow, ConvergenceTable, ProbabilityConfig, ProbabilityEstimate,
};
pub use cost::{cost_benchmark, CostConfig, CostReport, CostRow};
pub use drift::{l2_drift, DriftConfig, DriftReport, DriftRow};
pub use soliton::{observable_study_sets, soliton_study, SolitonCase, SolitonConfig};
pub use sweep::{crn_error_sweep, ErrorSweepConfig, Exclusion, SweepSamples};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
}

/// Run a closure inside a dedicated rayon pool of `workers` threads, or on
/// the global pool when `workers` is 0.
pub(crate) fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        f()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("worker pool")
            .install(f)
    }
}
