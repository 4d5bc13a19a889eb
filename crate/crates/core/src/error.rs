use thiserror::Error;

use crate::lattice::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid walk configuration: {}", format_violations(.0))]
    InvalidConfig(Vec<Violation>),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: String, found: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("coordinate overflow guard: {0}")]
    Overflow(String),

    #[error("numerical accuracy unavailable: {0}")]
    Accuracy(String),

    #[error("ill-conditioned Green matrix: {0}")]
    IllConditioned(String),

    #[error("bucket {bucket} exceeded chain bound {bound}")]
    ChainOverflow { bucket: usize, bound: usize },

    #[error(
        "separation hypothesis violated: the translated pattern ball meets the \
         projected ball of radius g = {g} around the origin"
    )]
    Separation { g: u64 },
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| format!("{} ({})", v.name, v.detail))
        .collect::<Vec<_>>()
        .join("; ")
}
