//! Bidder selection for position auctions.
//!
//! Given n independent finite-support value distributions and a capacity k,
//! pick k bidders maximizing expected social welfare of the position auction
//! run on the chosen set. The library provides:
//!
//! - exact welfare evaluation for integral and fractional (multilinear) solutions,
//! - a concave relaxation solver (Poisson / Chernoff surrogate objectives) over
//!   the capped box {x in [0,1]^n : sum x <= budget},
//! - randomized rounding back to feasible bidder sets,
//! - Greedy / Local Search / Brute Force baselines,
//! - a benchmark harness with a CLI front end.

pub mod baselines;
pub mod distributions;
pub mod fixset;
pub mod harness;
pub mod objectives;
pub mod rounding;
pub mod solver;
pub mod welfare;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BspError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("infeasible parameters: {0}")]
    InfeasibleParameters(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("subset cap exceeded: C(n,k) = {subsets} > cap {cap}")]
    CapExceeded { subsets: u128, cap: u128 },
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, BspError>;
