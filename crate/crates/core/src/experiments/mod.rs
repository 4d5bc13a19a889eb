//! Monte Carlo experiments on the stopped walk.
//!
//! Every experiment is a pure function of its configuration, seed and run
//! count. Run `i` draws from `stream(seed, domain, i)`, runs are grouped into
//! fixed-size chunks that each own their scratch state, and results are
//! gathered in run order, so the worker count only changes wall time.

mod diagnostics;
mod hashbench;
mod theorem;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{TorusPoint, WalkConfig};
use crate::potential::PatternSet;
use crate::rng::{stream, Domain};
use crate::walk::{RunSummary, StoppedWalk, TorusTarget};

pub use diagnostics::{
    bad_stretch_stats, exit_time_cdf, ks_exit_time, mixing_check, KsReport, MixingReport,
    StretchReport,
};
pub use hashbench::{hash_bench, HashBenchReport, HashBenchRow};
pub use theorem::{
    check_separation, empirical_marginals, estimate_lhs, pattern_masks, translation_sweep,
    verify_theorem, MarginalReport, VerifyReport, BIAS_TOL, MAX_EMPIRICAL_POINTS,
};

/// Runs per chunk of work handed to one worker.
const CHUNK: u64 = 64;

/// Evaluates `f(state, i)` for `i in 0..runs` on `workers` threads, with one
/// `init()` state per chunk, and returns the results in run order.
pub(crate) fn run_indexed<S, T, I, F>(workers: usize, runs: u64, init: I, f: F) -> Result<Vec<T>>
where
    T: Send,
    I: Fn() -> Result<S> + Sync,
    F: Fn(&mut S, u64) -> Result<T> + Sync,
{
    if workers == 0 {
        return Err(Error::InvalidInput("workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    let chunks = runs.div_ceil(CHUNK);
    let parts: Vec<Vec<T>> = pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut state = init()?;
                (c * CHUNK..runs.min((c + 1) * CHUNK))
                    .map(|i| f(&mut state, i))
                    .collect::<Result<Vec<T>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(parts.into_iter().flatten().collect())
}

/// `runs` stopped walks, optionally tracking the pattern `x + φ(K)`.
pub fn simulate(
    cfg: &WalkConfig,
    target: Option<(&PatternSet, &TorusPoint)>,
    runs: u64,
) -> Result<Vec<RunSummary>> {
    cfg.validate()?;
    let target = match target {
        Some((k, x)) => Some(TorusTarget::new(k, x)?),
        None => None,
    };
    run_indexed(
        cfg.workers,
        runs,
        || StoppedWalk::new(cfg, target.clone()),
        |walk, i| Ok(walk.run(&mut stream(cfg.seed, Domain::StoppedWalk, i))),
    )
}
