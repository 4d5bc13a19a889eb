//! Trajectory storage keyed by the torus hash `f = enumerate_index ∘ φ_N`.
//!
//! A walk stopped at the exit of `(-L, L)^d` visits on the order of `L²`
//! sites, far fewer than the `(2L−1)^d` sites of the box. The store keeps one
//! bucket per vertex of `T_N` (so `N^d = L²/A` buckets) and chains the entries
//! that collide in a bucket. Every entry carries its full coordinates, so a
//! lookup never confuses two lattice points with the same projection.
//!
//! Because buckets correspond one-to-one with torus sites, the occupancy
//! profile of a store filled with a trajectory is exactly the set of sites
//! visited by the projected walk.

use std::collections::BTreeMap;
use std::mem::size_of;

use crate::error::{Error, Result};
use crate::lattice::{reduce, torus_volume, LatticePoint};

const NIL: u32 = u32::MAX;

/// Default bound on the length of a single chain.
pub const DEFAULT_CHAIN_BOUND: usize = 64;

/// What to do when a chain would grow past the bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainPolicy {
    /// Refuse the insertion with [`Error::ChainOverflow`].
    Strict,
    /// Insert anyway and count the event.
    Report,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Insertion {
    Inserted,
    AlreadyPresent,
}

#[derive(Clone, Debug)]
struct Entry<P> {
    payload: P,
    next: u32,
}

#[derive(Clone, Debug)]
pub struct HashStore<P = u32> {
    d: usize,
    side: u64,
    half_side: Option<i64>,
    heads: Vec<u32>,
    chain_len: Vec<u32>,
    entries: Vec<Entry<P>>,
    keys: Vec<i64>,
    free: Vec<u32>,
    inserted: u64,
    probes: u64,
    chain_bound: usize,
    policy: ChainPolicy,
    overflow_events: u64,
}

/// Chain-length histogram and derived load statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyProfile {
    /// `k → number of buckets holding exactly k entries`.
    pub histogram: BTreeMap<usize, u64>,
    pub buckets: u64,
    pub inserted: u64,
    pub occupied: u64,
    /// Occupied buckets over `N^d`.
    pub load_factor: f64,
    pub max_chain: usize,
}

impl<P: Copy> HashStore<P> {
    pub fn new(d: usize, side: u64) -> Result<Self> {
        let vol = torus_volume(d, side)
            .filter(|&v| v <= crate::lattice::MAX_TORUS_VOLUME && side > 0 && d > 0)
            .ok_or_else(|| Error::InvalidInput(format!("unusable torus N = {side}, d = {d}")))?;
        Ok(HashStore {
            d,
            side,
            half_side: None,
            heads: vec![NIL; vol as usize],
            chain_len: vec![0; vol as usize],
            entries: Vec::new(),
            keys: Vec::new(),
            free: Vec::new(),
            inserted: 0,
            probes: 0,
            chain_bound: DEFAULT_CHAIN_BOUND,
            policy: ChainPolicy::Strict,
            overflow_events: 0,
        })
    }

    /// Restricts keys to the open box `(-L, L)^d`.
    pub fn with_box(mut self, half_side: u64) -> Self {
        self.half_side = Some(half_side as i64);
        self
    }

    pub fn with_chain_bound(mut self, bound: usize, policy: ChainPolicy) -> Self {
        self.chain_bound = bound;
        self.policy = policy;
        self
    }

    pub fn side(&self) -> u64 {
        self.side
    }

    pub fn buckets(&self) -> usize {
        self.heads.len()
    }

    /// Entries currently stored.
    pub fn inserted_count(&self) -> u64 {
        self.inserted
    }

    /// Chain entries scanned by all inserts, lookups and removals so far.
    pub fn probe_count(&self) -> u64 {
        self.probes
    }

    pub fn overflow_events(&self) -> u64 {
        self.overflow_events
    }

    /// `f(x)`: the row-major index of `φ_N(x)`.
    #[inline]
    pub fn bucket_of(&self, x: &[i64]) -> usize {
        let n = self.side;
        let off = (n / 2) as i64;
        x.iter()
            .rev()
            .fold(0u64, |acc, &c| acc * n + (reduce(c, n) + off) as u64) as usize
    }

    fn key(&self, slot: u32) -> &[i64] {
        let s = slot as usize * self.d;
        &self.keys[s..s + self.d]
    }

    fn check_key(&self, x: &[i64]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::Dimension {
                expected: format!("d = {}", self.d),
                found: format!("d = {}", x.len()),
            });
        }
        if let Some(h) = self.half_side {
            if x.iter().any(|c| c.abs() >= h) {
                return Err(Error::InvalidInput(format!(
                    "key {x:?} outside the open box (-{h}, {h})^d"
                )));
            }
        }
        Ok(())
    }

    /// Walks the chain of `bucket`; returns `(previous, slot)` of the match.
    fn find(&mut self, bucket: usize, x: &[i64]) -> Option<(u32, u32)> {
        let mut prev = NIL;
        let mut cur = self.heads[bucket];
        while cur != NIL {
            self.probes += 1;
            if self.key(cur) == x {
                return Some((prev, cur));
            }
            prev = cur;
            cur = self.entries[cur as usize].next;
        }
        None
    }

    pub fn insert_visit(&mut self, x: &[i64], payload: P) -> Result<Insertion> {
        self.check_key(x)?;
        let bucket = self.bucket_of(x);
        if self.find(bucket, x).is_some() {
            return Ok(Insertion::AlreadyPresent);
        }
        if self.chain_len[bucket] as usize >= self.chain_bound {
            match self.policy {
                ChainPolicy::Strict => {
                    return Err(Error::ChainOverflow {
                        bucket,
                        bound: self.chain_bound,
                    })
                }
                ChainPolicy::Report => self.overflow_events += 1,
            }
        }
        let entry = Entry {
            payload,
            next: self.heads[bucket],
        };
        let slot = match self.free.pop() {
            Some(slot) => {
                self.entries[slot as usize] = entry;
                let s = slot as usize * self.d;
                self.keys[s..s + self.d].copy_from_slice(x);
                slot
            }
            None => {
                self.entries.push(entry);
                self.keys.extend_from_slice(x);
                (self.entries.len() - 1) as u32
            }
        };
        self.heads[bucket] = slot;
        self.chain_len[bucket] += 1;
        self.inserted += 1;
        Ok(Insertion::Inserted)
    }

    /// The payload stored under exactly `x`.
    pub fn lookup(&mut self, x: &[i64]) -> Option<P> {
        if x.len() != self.d {
            return None;
        }
        let bucket = self.bucket_of(x);
        self.find(bucket, x)
            .map(|(_, slot)| self.entries[slot as usize].payload)
    }

    /// Like [`lookup`](Self::lookup) but without touching the probe counter.
    pub fn get(&self, x: &[i64]) -> Option<P> {
        if x.len() != self.d {
            return None;
        }
        let mut cur = self.heads[self.bucket_of(x)];
        while cur != NIL {
            if self.key(cur) == x {
                return Some(self.entries[cur as usize].payload);
            }
            cur = self.entries[cur as usize].next;
        }
        None
    }

    pub fn remove(&mut self, x: &[i64]) -> Option<P> {
        if x.len() != self.d {
            return None;
        }
        let bucket = self.bucket_of(x);
        let (prev, slot) = self.find(bucket, x)?;
        let next = self.entries[slot as usize].next;
        if prev == NIL {
            self.heads[bucket] = next;
        } else {
            self.entries[prev as usize].next = next;
        }
        self.chain_len[bucket] -= 1;
        self.inserted -= 1;
        self.free.push(slot);
        Some(self.entries[slot as usize].payload)
    }

    /// Stored keys of one bucket, most recent first.
    pub fn bucket_keys(&self, bucket: usize) -> Vec<LatticePoint> {
        let mut out = Vec::new();
        let mut cur = self.heads[bucket];
        while cur != NIL {
            out.push(LatticePoint::new(self.key(cur).to_vec()));
            cur = self.entries[cur as usize].next;
        }
        out
    }

    pub fn occupancy_profile(&self) -> OccupancyProfile {
        let mut histogram = BTreeMap::new();
        let mut max_chain = 0usize;
        for &len in &self.chain_len {
            *histogram.entry(len as usize).or_insert(0u64) += 1;
            max_chain = max_chain.max(len as usize);
        }
        let buckets = self.heads.len() as u64;
        let occupied = buckets - histogram.get(&0).copied().unwrap_or(0);
        OccupancyProfile {
            histogram,
            buckets,
            inserted: self.inserted,
            occupied,
            load_factor: occupied as f64 / buckets as f64,
            max_chain,
        }
    }

    /// Bytes held by the bucket table, entries and keys.
    pub fn store_bytes(&self) -> u64 {
        let per_bucket = 2 * size_of::<u32>();
        let per_entry = size_of::<Entry<P>>() + self.d * size_of::<i64>();
        (self.heads.len() * per_bucket + self.entries.len() * per_entry) as u64
    }

    /// Bytes of a dense per-site table of payloads over `(-L, L)^d`.
    pub fn dense_bytes_equiv(&self, half_side: u64) -> u64 {
        let width = 2 * half_side - 1;
        (0..self.d).fold(size_of::<P>() as u64, |acc, _| acc.saturating_mul(width))
    }

    pub fn clear(&mut self) {
        self.heads.iter_mut().for_each(|h| *h = NIL);
        self.chain_len.iter_mut().for_each(|c| *c = 0);
        self.entries.clear();
        self.keys.clear();
        self.free.clear();
        self.inserted = 0;
        self.probes = 0;
        self.overflow_events = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{enumerate_index, project};
    use crate::rng::{stream, Domain};
    use crate::walk::StoppedWalk;
    use crate::WalkConfig;

    #[test]
    fn insert_is_idempotent() {
        let mut s: HashStore<u32> = HashStore::new(3, 4).unwrap();
        assert_eq!(s.insert_visit(&[1, 2, 3], 7).unwrap(), Insertion::Inserted);
        assert_eq!(
            s.insert_visit(&[1, 2, 3], 9).unwrap(),
            Insertion::AlreadyPresent
        );
        assert_eq!(s.inserted_count(), 1);
        assert_eq!(s.lookup(&[1, 2, 3]), Some(7));
    }

    #[test]
    fn periodic_keys_collide_but_stay_distinct() {
        let mut s: HashStore<u32> = HashStore::new(3, 4).unwrap();
        s.insert_visit(&[1, 0, 0], 1).unwrap();
        s.insert_visit(&[5, 0, 0], 2).unwrap();
        assert_eq!(s.bucket_of(&[1, 0, 0]), s.bucket_of(&[5, 0, 0]));
        assert_eq!(s.inserted_count(), 2);
        assert_eq!(s.lookup(&[1, 0, 0]), Some(1));
        assert_eq!(s.lookup(&[5, 0, 0]), Some(2));
        // never-inserted key sharing the bucket
        assert_eq!(s.lookup(&[-3, 0, 0]), None);
        let p = s.occupancy_profile();
        assert_eq!(p.max_chain, 2);
    }

    #[test]
    fn empty_and_single_profiles() {
        let mut s: HashStore<u32> = HashStore::new(3, 4).unwrap();
        assert_eq!(s.lookup(&[0, 0, 0]), None);
        let p = s.occupancy_profile();
        assert_eq!(p.histogram, BTreeMap::from([(0, 64)]));
        assert_eq!(p.load_factor, 0.0);
        s.insert_visit(&[0, 0, 0], 0).unwrap();
        let p = s.occupancy_profile();
        assert_eq!(p.histogram, BTreeMap::from([(0, 63), (1, 1)]));
    }

    #[test]
    fn bucket_placement_law() {
        let s: HashStore<u32> = HashStore::new(3, 4).unwrap();
        let r = 18i64;
        for x in -r..r {
            for y in -r..r {
                for z in -r..r {
                    let p = LatticePoint::new(vec![x, y, z]);
                    assert_eq!(
                        s.bucket_of(p.coords()) as u64,
                        enumerate_index(&project(&p, 4))
                    );
                }
            }
        }
    }

    #[test]
    fn chain_bound_policies() {
        let mut strict: HashStore<u32> = HashStore::new(1, 2)
            .unwrap()
            .with_chain_bound(2, ChainPolicy::Strict);
        strict.insert_visit(&[0], 0).unwrap();
        strict.insert_visit(&[2], 0).unwrap();
        assert!(matches!(
            strict.insert_visit(&[4], 0),
            Err(Error::ChainOverflow { bound: 2, .. })
        ));
        let mut lax: HashStore<u32> = HashStore::new(1, 2)
            .unwrap()
            .with_chain_bound(2, ChainPolicy::Report);
        for k in 0..5 {
            lax.insert_visit(&[2 * k], 0).unwrap();
        }
        assert_eq!(lax.overflow_events(), 3);
        assert_eq!(lax.inserted_count(), 5);
    }

    #[test]
    fn box_precondition() {
        let mut s: HashStore<u32> = HashStore::new(3, 4).unwrap().with_box(8);
        assert!(s.insert_visit(&[8, 0, 0], 0).is_err());
        assert!(s.insert_visit(&[7, -7, 0], 0).is_ok());
        assert!(s.insert_visit(&[7, 0], 0).is_err());
    }

    #[test]
    fn remove_and_reuse() {
        let mut s: HashStore<u32> = HashStore::new(2, 3).unwrap();
        s.insert_visit(&[0, 0], 1).unwrap();
        s.insert_visit(&[3, 0], 2).unwrap();
        s.insert_visit(&[6, 0], 3).unwrap();
        assert_eq!(s.remove(&[3, 0]), Some(2));
        assert_eq!(s.remove(&[3, 0]), None);
        assert_eq!(s.lookup(&[0, 0]), Some(1));
        assert_eq!(s.lookup(&[6, 0]), Some(3));
        s.insert_visit(&[1, 1], 4).unwrap();
        assert_eq!(s.lookup(&[1, 1]), Some(4));
        assert_eq!(s.inserted_count(), 3);
    }

    #[test]
    fn trajectory_storage_memory() {
        let cfg = WalkConfig::new(3, 16, 4).with_delta(2.625);
        let mut walk = StoppedWalk::new(&cfg, None).unwrap();
        let mut store: HashStore<u32> = HashStore::new(3, 16)
            .unwrap()
            .with_box(64)
            .with_chain_bound(DEFAULT_CHAIN_BOUND, ChainPolicy::Report);
        let mut distinct = std::collections::HashSet::new();
        let run = walk.run_with(&mut stream(1, Domain::Scratch, 0), |p| {
            store.insert_visit(p, 0).unwrap();
            distinct.insert(p.to_vec());
        });
        assert!(store.inserted_count() <= run.exit_time);
        assert_eq!(store.inserted_count(), distinct.len() as u64);
        assert_eq!(store.buckets(), 4096);
        assert_eq!(store.occupancy_profile().occupied, run.visited_count);
        assert_eq!(store.dense_bytes_equiv(64), 127u64.pow(3) * 4);
        let ratio = 127f64.powi(3) / 4096.0;
        assert!((ratio - 500.09).abs() < 0.01);
    }
}
