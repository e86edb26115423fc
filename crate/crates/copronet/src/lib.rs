//! Agent-based simulator for a decentralized operator/coprocessor
//! task-delegation network.
//!
//! Operators receive AVS tasks each period and either execute them with
//! their own resources or delegate them to coprocessors through a
//! descending-price auction. Delegation is cross-checked against an
//! expected-benefit allocation program, outcomes feed a GAS-driven
//! reputation recursion per coprocessor, and a piecewise load curve maps
//! utilization to reward bonuses or amplified slashing.

pub mod allocation;
pub mod auction;
pub mod cli;
pub mod config;
pub mod curve;
pub mod engine;
pub mod metrics;
pub mod model;
pub mod reputation;

pub use config::SimulationConfig;
pub use engine::{run_simulation, Simulation};
pub use model::{Assignment, CoprocessorState, OperatorState, Task};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("instance too large: {size} feasible assignments exceed the cap of {cap}")]
    InstanceTooLarge { size: f64, cap: f64 },

    #[error("calibration failure: {0}")]
    Calibration(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// CLI exit code: 1 config, 2 runtime, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Io { .. } => 3,
            _ => 2,
        }
    }
}

/// Standard logistic function, used by the success model, the GAS
/// observation density, and the latent-score-to-reputation map.
#[inline]
pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
