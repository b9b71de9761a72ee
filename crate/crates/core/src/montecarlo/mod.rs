//! Seeded Monte Carlo experiments.
//!
//! Every trial is keyed by `(seed, trial index)`: its coefficients come from
//! the ChaCha stream `trial` of a generator seeded with `seed`. Trials run in
//! parallel, results are collected in trial order and reduced sequentially,
//! so reports do not depend on the worker count.

mod convergence;
mod probability;
pub mod report;
mod zero_stats;

pub use convergence::{
    bergman_sandwich_check, convergence_experiment, weyl_mass_outside, ConvergenceSetup, ConvergenceSummary,
    SandwichSummary,
};
pub use probability::{
    flat_vector, i_n_estimate, log_moment, norm_tail_probability, pair_vector, small_ball_probability, unit_vector,
    validate_unit, InEstimate, NormTailEstimate, ProbabilityEstimate, LOG_CLAMP,
};
pub use report::{Aggregate, Check, Relation, TrialReport, TrialRow};
pub use zero_stats::{expected_zero_measure, ZeroMeasureSummary, ZeroStatsSpec};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Trials per persisted row in the high-volume probability experiments.
pub const BATCH: u64 = 10_000;

/// SplitMix64 finalizer over `master ^ tag`; used to give sub-experiments
/// independent seeds.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    let mut z = master ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `f` on a dedicated pool of `workers` threads, or on the current
/// pool when `workers` is `None`.
pub fn with_workers<R, F>(workers: Option<usize>, f: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::Contract("worker count must be positive".into())),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Contract(format!("cannot start {w} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// `f(start, end)` over consecutive trial ranges of size [`BATCH`],
/// results in batch order.
pub(crate) fn batched<T, F>(trials: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync,
{
    let batches = trials.div_ceil(BATCH);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let start = b * BATCH;
            f(start, (start + BATCH).min(trials))
        })
        .collect()
}

/// `f(trial)` for every trial, results in trial order.
pub(crate) fn per_trial<T, F>(trials: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    (0..trials).into_par_iter().map(&f).collect()
}
