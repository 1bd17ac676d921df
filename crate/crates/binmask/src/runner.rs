//! Parallel window sweep.

use std::time::Instant;

use binmask_core::sweep::Sweep;
use binmask_core::{AudioSignal, SweepConfig, SweepReport};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Options that affect how, not what, a sweep computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; rows run concurrently up to this limit.
    pub threads: usize,
    /// Record per-row wall time. Off by default because timings make reports
    /// differ from run to run.
    pub timings: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { threads: 1, timings: false }
    }
}

/// Runs every configured window size and assembles the report. Rows are
/// gathered in configuration order, so the result does not depend on the
/// thread count; on failure the error of the first failing window is returned.
pub fn run_sweep(
    source_a: &AudioSignal,
    source_b: &AudioSignal,
    cfg: SweepConfig,
    opts: RunOptions,
) -> Result<SweepReport> {
    if opts.threads == 0 {
        return Err(Error::Usage("thread count must be at least 1".into()));
    }
    let sweep = Sweep::prepare(source_a, source_b, cfg)?;
    let run = |i: usize| {
        let start = Instant::now();
        sweep.run_row(i).map(|mut row| {
            if opts.timings {
                row.wall_time_seconds = Some(start.elapsed().as_secs_f64());
            }
            row
        })
    };
    let results: Vec<_> = if opts.threads == 1 {
        (0..sweep.len()).map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .map_err(|e| Error::Usage(format!("cannot start worker threads: {e}")))?;
        pool.install(|| (0..sweep.len()).into_par_iter().map(run).collect())
    };
    let rows = results.into_iter().collect::<binmask_core::Result<Vec<_>>>()?;
    Ok(sweep.finish(rows, env!("CARGO_PKG_VERSION"))?)
}
