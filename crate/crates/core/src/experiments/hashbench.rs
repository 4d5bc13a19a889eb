//! Storing stopped trajectories in the torus-hashed store.

use serde::Serialize;

use super::run_indexed;
use crate::error::{Error, Result};
use crate::hash_store::{ChainPolicy, HashStore, DEFAULT_CHAIN_BOUND};
use crate::lattice::WalkConfig;
use crate::rng::{stream, Domain};
use crate::walk::StoppedWalk;

/// One stored trajectory; field order is the CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HashBenchRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub d: usize,
    pub m: u64,
    #[serde(rename = "L")]
    pub l: u64,
    pub inserted: u64,
    pub occupied: u64,
    pub load_factor: f64,
    pub max_chain: usize,
    pub mean_probes: f64,
    pub dense_bytes_equiv: u64,
    pub store_bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HashBenchReport {
    pub rows: Vec<HashBenchRow>,
    /// `(2L−1)^d / N^d`: dense box cells per bucket.
    pub memory_ratio: f64,
    pub mean_load_factor: f64,
    pub mean_inserted: f64,
    pub max_chain: usize,
    pub overflow_events: u64,
}

/// Inserts every pre-exit position of `runs` walks into a fresh store each.
pub fn hash_bench(cfg: &WalkConfig, runs: u64) -> Result<HashBenchReport> {
    cfg.validate()?;
    if runs == 0 {
        return Err(Error::InvalidInput("runs must be positive".into()));
    }
    let l = cfg.half_side();
    let per_run = run_indexed(
        cfg.workers,
        runs,
        || {
            let walk = StoppedWalk::new(cfg, None)?;
            let store: HashStore<u32> = HashStore::new(cfg.d, cfg.torus_side)?
                .with_box(l)
                .with_chain_bound(DEFAULT_CHAIN_BOUND, ChainPolicy::Report);
            Ok((walk, store))
        },
        |(walk, store), i| {
            store.clear();
            let mut failure = None;
            let mut t = 0u32;
            let run = walk.run_with(&mut stream(cfg.seed, Domain::StoppedWalk, i), |p| {
                if failure.is_none() {
                    if let Err(e) = store.insert_visit(p, t) {
                        failure = Some(e);
                    }
                }
                t = t.wrapping_add(1);
            });
            if let Some(e) = failure {
                return Err(e);
            }
            let prof = store.occupancy_profile();
            let row = HashBenchRow {
                n: cfg.torus_side,
                d: cfg.d,
                m: cfg.multiplier,
                l,
                inserted: prof.inserted,
                occupied: prof.occupied,
                load_factor: prof.load_factor,
                max_chain: prof.max_chain,
                mean_probes: store.probe_count() as f64 / run.exit_time as f64,
                dense_bytes_equiv: store.dense_bytes_equiv(l),
                store_bytes: store.store_bytes(),
            };
            Ok((row, store.overflow_events()))
        },
    )?;
    let k = runs as f64;
    let width = (2 * l - 1) as f64;
    let memory_ratio = width.powi(cfg.d as i32) / cfg.torus_volume() as f64;
    let mut rows = Vec::with_capacity(per_run.len());
    let mut overflow_events = 0;
    for (row, o) in per_run {
        overflow_events += o;
        rows.push(row);
    }
    Ok(HashBenchReport {
        mean_load_factor: rows.iter().map(|r| r.load_factor).sum::<f64>() / k,
        mean_inserted: rows.iter().map(|r| r.inserted as f64).sum::<f64>() / k,
        max_chain: rows.iter().map(|r| r.max_chain).max().unwrap_or(0),
        memory_ratio,
        overflow_events,
        rows,
    })
}
