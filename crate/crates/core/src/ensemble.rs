//! Parallel execution of independent realizations.
//!
//! Results come back in realization order whatever the worker count, so any
//! reduction done by the caller in index order is bit-for-bit reproducible.

use rayon::prelude::*;

use crate::disorder::DisorderSpec;
use crate::error::{QwalkError, Result};
use crate::integrator::{run_trajectory, IntegrationConfig, TrajectoryOptions, TrajectoryOutput};
use crate::lattice::WavePacket;

/// Evaluates `f(i)` for `i in 0..n` on `workers` threads (0 = all cores) and
/// returns the results in index order.
pub fn par_map_indexed<T, F>(n: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| QwalkError::invalid("workers", e.to_string()))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(&f).collect()))
}

/// Runs `realizations` trajectories of `spec` from the same initial state.
/// Realization `r` uses the disorder stream `r`.
pub fn run_ensemble(
    psi0: &WavePacket,
    spec: &DisorderSpec,
    cfg: &IntegrationConfig,
    opts: &TrajectoryOptions<'_>,
    realizations: usize,
    workers: usize,
) -> Result<Vec<TrajectoryOutput>> {
    if realizations == 0 {
        return Err(QwalkError::invalid("ensemble", "must be >= 1"));
    }
    cfg.validate_for(spec)?;
    par_map_indexed(realizations, workers, |r| {
        let field = spec.realize(r as u64);
        run_trajectory(psi0.clone(), &field, cfg, opts)
    })?
    .into_iter()
    .collect()
}
