//! Satisficing contextual bandits.
//!
//! Implements the LinRS policy (linear risk-sensitive satisficing) together
//! with LinUCB and LinTS baselines, synthetic and real-world bandit
//! environments, and an experiment harness that records regret, greedy-rate
//! and runtime curves.

pub mod bandit;
pub mod config;
pub mod env;
pub mod harness;
pub mod numerics;
pub mod policy;
pub mod tabular;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 usage/config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Dimension(_) => 2,
            Error::Data(_) | Error::Io(_) => 3,
            Error::Numerical(_) => 4,
        }
    }
}
