//! Loop-erased random walk from the origin to the boundary of `(−L, L)^d`.
//!
//! Loops are erased chronologically: the erased path is a growing
//! self-avoiding prefix, and when the walk steps onto a vertex of the prefix
//! everything after that vertex is cut off. The online eraser keeps, for every
//! visited site, the prefix index it last occupied; a site is on the current
//! prefix exactly when the prefix still holds it at that index. Lazy steps are
//! dropped first since they form trivial loops.

use std::collections::HashMap;

use rand::RngCore;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::run_indexed;
use crate::hash_store::{ChainPolicy, HashStore, DEFAULT_CHAIN_BOUND};
use crate::lattice::{LatticePoint, WalkConfig};
use crate::rng::{stream, Domain};
use crate::walk::StoppedWalk;

/// Largest dense site table, in cells, that [`SiteIndex::dense`] will allocate.
pub const MAX_DENSE_CELLS: u64 = 1 << 28;

const NONE: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErasedPath {
    pub vertices: Vec<LatticePoint>,
    /// Steps of the generating walk, lazy steps included.
    pub generator_length: u64,
}

impl ErasedPath {
    /// Number of edges.
    pub fn len(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() <= 1
    }
}

/// Offline chronological loop erasure.
pub fn loop_erase(path: &[LatticePoint]) -> Result<ErasedPath> {
    let mut out: Vec<LatticePoint> = Vec::new();
    let mut index: HashMap<LatticePoint, usize> = HashMap::new();
    for (t, p) in path.iter().enumerate() {
        if let Some(last) = out.last() {
            match p.l1_distance(last) {
                0 => continue,
                1 => {}
                jump => {
                    return Err(Error::InvalidInput(format!(
                        "path jumps by {jump} between steps {} and {t}",
                        t - 1
                    )))
                }
            }
        }
        if let Some(&i) = index.get(p) {
            for q in out.drain(i + 1..) {
                index.remove(&q);
            }
        } else {
            index.insert(p.clone(), out.len());
            out.push(p.clone());
        }
    }
    Ok(ErasedPath {
        vertices: out,
        generator_length: path.len().saturating_sub(1) as u64,
    })
}

/// Site → prefix-index storage for the online eraser.
pub enum SiteIndex {
    /// Torus-hashed store; works for unbounded walks.
    Hash(HashStore<u32>),
    /// One cell per site of `(−L, L)^d`.
    Dense {
        half_side: i64,
        width: i64,
        cells: Vec<u32>,
        touched: Vec<usize>,
    },
}

impl SiteIndex {
    pub fn hash(d: usize, side: u64) -> Result<Self> {
        Ok(SiteIndex::Hash(HashStore::new(d, side)?.with_chain_bound(
            DEFAULT_CHAIN_BOUND,
            ChainPolicy::Report,
        )))
    }

    pub fn dense(d: usize, half_side: u64) -> Result<Self> {
        let width = 2 * half_side - 1;
        let cells = (0..d)
            .try_fold(1u64, |acc, _| acc.checked_mul(width))
            .filter(|&c| c <= MAX_DENSE_CELLS)
            .ok_or_else(|| {
                Error::Overflow(format!("dense table of {width}^{d} cells is too large"))
            })?;
        Ok(SiteIndex::Dense {
            half_side: half_side as i64,
            width: width as i64,
            cells: vec![NONE; cells as usize],
            touched: Vec::new(),
        })
    }

    fn cell(half_side: i64, width: i64, x: &[i64]) -> Result<usize> {
        if x.iter().any(|c| c.abs() >= half_side) {
            return Err(Error::InvalidInput(format!(
                "site {x:?} outside the dense table"
            )));
        }
        Ok(x.iter()
            .rev()
            .fold(0i64, |acc, &c| acc * width + c + half_side - 1) as usize)
    }

    fn get(&mut self, x: &[i64]) -> Result<Option<u32>> {
        match self {
            SiteIndex::Hash(s) => Ok(s.lookup(x)),
            SiteIndex::Dense {
                half_side,
                width,
                cells,
                ..
            } => {
                let v = cells[Self::cell(*half_side, *width, x)?];
                Ok((v != NONE).then_some(v))
            }
        }
    }

    fn set(&mut self, x: &[i64], index: u32) -> Result<()> {
        match self {
            SiteIndex::Hash(s) => {
                if s.insert_visit(x, index)? == crate::hash_store::Insertion::AlreadyPresent {
                    s.remove(x);
                    s.insert_visit(x, index)?;
                }
                Ok(())
            }
            SiteIndex::Dense {
                half_side,
                width,
                cells,
                touched,
            } => {
                let c = Self::cell(*half_side, *width, x)?;
                if cells[c] == NONE {
                    touched.push(c);
                }
                cells[c] = index;
                Ok(())
            }
        }
    }

    /// Distinct sites stored since the last reset.
    pub fn distinct(&self) -> u64 {
        match self {
            SiteIndex::Hash(s) => s.inserted_count(),
            SiteIndex::Dense { touched, .. } => touched.len() as u64,
        }
    }

    pub fn probes(&self) -> u64 {
        match self {
            SiteIndex::Hash(s) => s.probe_count(),
            SiteIndex::Dense { .. } => 0,
        }
    }

    fn reset(&mut self) {
        match self {
            SiteIndex::Hash(s) => s.clear(),
            SiteIndex::Dense { cells, touched, .. } => {
                for c in touched.drain(..) {
                    cells[c] = NONE;
                }
            }
        }
    }
}

/// Chronological loop erasure fed one walk position at a time.
pub struct OnlineEraser {
    d: usize,
    index: SiteIndex,
    /// Flat coordinates of the current self-avoiding prefix.
    prefix: Vec<i64>,
    steps: u64,
    started: bool,
}

impl OnlineEraser {
    pub fn new(d: usize, index: SiteIndex) -> Self {
        OnlineEraser {
            d,
            index,
            prefix: Vec::new(),
            steps: 0,
            started: false,
        }
    }

    pub fn reset(&mut self) {
        self.index.reset();
        self.prefix.clear();
        self.steps = 0;
        self.started = false;
    }

    fn prefix_len(&self) -> usize {
        self.prefix.len() / self.d
    }

    fn vertex(&self, i: usize) -> &[i64] {
        &self.prefix[i * self.d..(i + 1) * self.d]
    }

    /// Feeds the next walk position.
    pub fn push(&mut self, x: &[i64]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::Dimension {
                expected: format!("d = {}", self.d),
                found: format!("d = {}", x.len()),
            });
        }
        if self.started {
            self.steps += 1;
            let last = self.vertex(self.prefix_len() - 1);
            let dist: i64 = last.iter().zip(x).map(|(a, b)| (a - b).abs()).sum();
            match dist {
                0 => return Ok(()),
                1 => {}
                jump => {
                    return Err(Error::InvalidInput(format!(
                        "walk jumps by {jump} at step {}",
                        self.steps
                    )))
                }
            }
        }
        self.started = true;
        if let Some(i) = self.index.get(x)? {
            let i = i as usize;
            if i < self.prefix_len() && self.vertex(i) == x {
                self.prefix.truncate((i + 1) * self.d);
                return Ok(());
            }
        }
        let i = self.prefix_len() as u32;
        self.index.set(x, i)?;
        self.prefix.extend_from_slice(x);
        Ok(())
    }

    /// Appends a final vertex without recording it in the site index (used
    /// for the exit point, which lies outside the indexed box).
    fn push_terminal(&mut self, x: &[i64]) {
        self.steps += 1;
        self.prefix.extend_from_slice(x);
    }

    pub fn path(&self) -> ErasedPath {
        ErasedPath {
            vertices: self
                .prefix
                .chunks_exact(self.d)
                .map(|c| LatticePoint::new(c.to_vec()))
                .collect(),
            generator_length: self.steps,
        }
    }

    pub fn distinct_sites(&self) -> u64 {
        self.index.distinct()
    }

    pub fn probes(&self) -> u64 {
        self.index.probes()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LerwMetrics {
    pub generator_length: u64,
    /// Edges of the erased path.
    pub erased_length: u64,
    /// Distinct lattice sites visited by the walk, exit point included.
    pub visited: u64,
    pub store_probes: u64,
}

/// Reusable LERW generator for one configuration.
pub struct LerwGenerator {
    walk: StoppedWalk,
    eraser: OnlineEraser,
}

impl LerwGenerator {
    pub fn new(cfg: &WalkConfig, use_hash_store: bool) -> Result<Self> {
        cfg.validate()?;
        let index = if use_hash_store {
            SiteIndex::Hash(
                HashStore::new(cfg.d, cfg.torus_side)?
                    .with_box(cfg.half_side())
                    .with_chain_bound(DEFAULT_CHAIN_BOUND, ChainPolicy::Report),
            )
        } else {
            SiteIndex::dense(cfg.d, cfg.half_side())?
        };
        Ok(LerwGenerator {
            walk: StoppedWalk::new(cfg, None)?,
            eraser: OnlineEraser::new(cfg.d, index),
        })
    }

    pub fn generate<R: RngCore + ?Sized>(
        &mut self,
        rng: &mut R,
    ) -> Result<(ErasedPath, LerwMetrics)> {
        self.eraser.reset();
        let eraser = &mut self.eraser;
        let mut failure = None;
        let run = self.walk.run_with(rng, |p| {
            if failure.is_none() {
                if let Err(e) = eraser.push(p) {
                    failure = Some(e);
                }
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        eraser.push_terminal(run.exit_point.coords());
        let path = eraser.path();
        debug_assert_eq!(path.generator_length, run.exit_time);
        let metrics = LerwMetrics {
            generator_length: run.exit_time,
            erased_length: path.len() as u64,
            visited: eraser.distinct_sites() + 1,
            store_probes: eraser.probes(),
        };
        Ok((path, metrics))
    }
}

/// One loop-erased walk from the origin to the exit of `(−L, L)^d`.
pub fn generate_lerw<R: RngCore + ?Sized>(
    cfg: &WalkConfig,
    rng: &mut R,
    use_hash_store: bool,
) -> Result<(ErasedPath, LerwMetrics)> {
    LerwGenerator::new(cfg, use_hash_store)?.generate(rng)
}

/// Metrics of `runs` walks; run `i` uses `stream(seed, Lerw, i)`.
pub fn lerw_ensemble(
    cfg: &WalkConfig,
    runs: u64,
    use_hash_store: bool,
) -> Result<Vec<LerwMetrics>> {
    run_indexed(
        cfg.workers,
        runs,
        || LerwGenerator::new(cfg, use_hash_store),
        |g, i| Ok(g.generate(&mut stream(cfg.seed, Domain::Lerw, i))?.1),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::lazy_step;
    use rand::Rng;

    fn pts(v: &[[i64; 3]]) -> Vec<LatticePoint> {
        v.iter().map(|p| LatticePoint::new(p.to_vec())).collect()
    }

    fn check_invariants(p: &ErasedPath) {
        let set: std::collections::HashSet<_> = p.vertices.iter().collect();
        assert_eq!(set.len(), p.vertices.len());
        for w in p.vertices.windows(2) {
            assert_eq!(w[0].l1_distance(&w[1]), 1);
        }
    }

    #[test]
    fn square_loop_is_erased() {
        let path = pts(&[
            [0, 0, 0],
            [1, 0, 0],
            [1, 1, 0],
            [0, 1, 0],
            [0, 0, 0],
            [0, 0, 1],
        ]);
        let e = loop_erase(&path).unwrap();
        assert_eq!(e.vertices, pts(&[[0, 0, 0], [0, 0, 1]]));
        assert_eq!(e.generator_length, 5);
    }

    #[test]
    fn self_avoiding_path_only_loses_lazy_repeats() {
        let path = pts(&[[0, 0, 0], [0, 0, 0], [1, 0, 0], [1, 0, 0], [1, 1, 0]]);
        let e = loop_erase(&path).unwrap();
        assert_eq!(e.vertices, pts(&[[0, 0, 0], [1, 0, 0], [1, 1, 0]]));
        assert_eq!(loop_erase(&e.vertices).unwrap().vertices, e.vertices);
    }

    #[test]
    fn jumps_rejected() {
        assert!(loop_erase(&pts(&[[0, 0, 0], [2, 0, 0]])).is_err());
        let mut on = OnlineEraser::new(3, SiteIndex::hash(3, 8).unwrap());
        on.push(&[0, 0, 0]).unwrap();
        assert!(on.push(&[1, 1, 0]).is_err());
        assert!(on.push(&[1, 0]).is_err());
    }

    #[test]
    fn online_matches_offline_on_random_walks() {
        let mut rng = stream(21, Domain::Scratch, 0);
        let mut on = OnlineEraser::new(3, SiteIndex::hash(3, 8).unwrap());
        for _ in 0..200 {
            let len = rng.gen_range(1..=2000);
            let mut path = vec![LatticePoint::origin(3)];
            for _ in 1..len {
                let next = lazy_step(path.last().unwrap(), &mut rng);
                path.push(next);
            }
            on.reset();
            for p in &path {
                on.push(p.coords()).unwrap();
            }
            let off = loop_erase(&path).unwrap();
            assert_eq!(on.path(), off);
            check_invariants(&off);
            assert_eq!(loop_erase(&off.vertices).unwrap().vertices, off.vertices);
        }
    }

    #[test]
    fn generated_paths_satisfy_invariants() {
        let cfg = WalkConfig::new(5, 4, 2);
        let half = cfg.half_side() as i64;
        let mut hashed = LerwGenerator::new(&cfg, true).unwrap();
        let mut dense = LerwGenerator::new(&cfg, false).unwrap();
        for i in 0..100 {
            let (p, m) = hashed.generate(&mut stream(1, Domain::Lerw, i)).unwrap();
            let (q, n) = dense.generate(&mut stream(1, Domain::Lerw, i)).unwrap();
            assert_eq!(p, q);
            assert_eq!(m.visited, n.visited);
            check_invariants(&p);
            assert_eq!(p.vertices[0], LatticePoint::origin(5));
            assert!(!p.vertices.last().unwrap().in_open_box(half));
            assert!(m.erased_length <= m.generator_length);
            assert!(m.visited <= m.generator_length + 1);
            assert!(m.store_probes > 0 && n.store_probes == 0);
        }
    }

    #[test]
    fn online_generation_matches_offline_erasure_of_recorded_walk() {
        let cfg = WalkConfig::new(5, 4, 2);
        let mut walk = StoppedWalk::new(&cfg, None).unwrap();
        for i in 0..50 {
            let mut path = Vec::new();
            let run = walk.run_with(&mut stream(2, Domain::Lerw, i), |p| {
                path.push(LatticePoint::new(p.to_vec()))
            });
            path.push(run.exit_point);
            let (online, m) = generate_lerw(&cfg, &mut stream(2, Domain::Lerw, i), true).unwrap();
            assert_eq!(online, loop_erase(&path).unwrap());
            let distinct: std::collections::HashSet<_> = path.iter().collect();
            assert_eq!(m.visited, distinct.len() as u64);
        }
    }

    #[test]
    fn ensemble_is_worker_independent() {
        let cfg = WalkConfig::new(5, 4, 2).with_seed(3);
        let a = lerw_ensemble(&cfg, 40, true).unwrap();
        let b = lerw_ensemble(&cfg.clone().with_workers(3), 40, true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dense_table_size_guard() {
        assert!(SiteIndex::dense(5, 1000).is_err());
        assert!(SiteIndex::dense(3, 10).is_ok());
    }
}
