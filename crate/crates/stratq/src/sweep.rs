//! Precision sweeps with one row per rayon task.

use rayon::prelude::*;
use stratq_core::clocks::{sweep_row, ClockFamily, SweepRow};
use stratq_core::{Error, Result};

/// Thread cap from `STRATQ_THREADS`; unset or unparsable means rayon's
/// default.
pub fn thread_limit() -> Option<usize> {
    std::env::var("STRATQ_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Rows `n_min..=n_max`, computed in parallel and returned in order.
pub fn parallel_sweep(family: &dyn ClockFamily, n_min: u32, n_max: u32) -> Result<Vec<SweepRow>> {
    if n_min > n_max {
        return Err(Error::InvalidArgument { reason: "empty precision range".into() });
    }
    if n_max > 14 {
        return Err(Error::InvalidArgument { reason: "precision above 14 bits is out of range".into() });
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_limit() {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::InvalidArgument { reason: e.to_string() })?;
    // Largest first so the expensive rows start immediately.
    let levels: Vec<u32> = (n_min..=n_max).rev().collect();
    let mut rows = pool.install(|| levels.par_iter().map(|&n| sweep_row(family, n)).collect::<Result<Vec<_>>>())?;
    rows.reverse();
    Ok(rows)
}
