//! Random walks on tori, their lifts to `Z^d`, and the random-interlacement
//! limit of the local pattern a stopped walk leaves behind.
//!
//! The walk is the lazy simple random walk on `Z^d` started at the origin and
//! stopped when it leaves the box `(−L, L)^d`, `L = mN`. Projected to the torus
//! `Z^d / NZ^d`, the probability that its trace avoids a translated pattern
//! `x + φ(K)` converges to `E[exp(−d·A·σ₁·Cap(K))]`, where `A = L²/N^d` and `σ₁`
//! is the exit time of Brownian motion from `(−1, 1)^d`.
//!
//! Modules:
//!
//! * [`lattice`]: points, torus projection, parameter validation.
//! * [`walk`]: the lazy walk, the stopped-walk driver, stretch statistics.
//! * [`hash_store`]: hashed storage of visited sites.
//! * [`potential`]: Green's function and capacity.
//! * [`brownian`]: the law of `σ₁`.
//! * [`interlace`]: the limiting vacancy law and mixed-interlacement marginals.
//! * [`experiments`]: Monte Carlo estimators built on the pieces above.
//! * [`lerw`]: loop-erased walk generated from the stopped walk.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod brownian;
pub mod error;
pub mod experiments;
pub mod hash_store;
pub mod interlace;
pub mod lattice;
pub mod lerw;
pub mod potential;
pub mod rng;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
pub use lattice::{LatticePoint, TorusPoint, Violation, WalkConfig};
pub use potential::PatternSet;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/lattice.md")]
    mod lattice {}
    #[doc = include_str!("../../../book/src/walk.md")]
    mod walk {}
    #[doc = include_str!("../../../book/src/hashing.md")]
    mod hashing {}
    #[doc = include_str!("../../../book/src/potential.md")]
    mod potential {}
    #[doc = include_str!("../../../book/src/brownian.md")]
    mod brownian {}
    #[doc = include_str!("../../../book/src/interlacements.md")]
    mod interlacements {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/lerw.md")]
    mod lerw {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
