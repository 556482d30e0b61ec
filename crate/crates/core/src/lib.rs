//! Numerics laboratory for two-layer ReLU networks under coupled
//! initialization.
//!
//! The crate provides the pieces needed to run and audit exact
//! gradient-descent schedules for logistic and squared loss on such
//! networks: dataset generators ([`dataset`]), the network with its exact
//! (sub)gradients ([`network`]), NTK Gram matrices and concentration checks
//! ([`kernel`]), Gaussian separation-margin estimation ([`margin`]),
//! trainers with per-step proof-chain diagnostics ([`train`]), and
//! lower-bound constructions and simulations ([`bounds`]).
//!
//! All randomness flows through counter-based substreams ([`rng`]) and all
//! data-parallel loops go through [`parallel`], so every result is
//! bit-identical for any thread count (and with the `parallel` feature
//! disabled).

pub mod bounds;
pub mod dataset;
pub mod kernel;
pub mod linalg;
pub mod margin;
pub mod network;
pub mod parallel;
pub mod rng;
pub mod selftest;
pub mod train;

/// Errors shared by all modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
