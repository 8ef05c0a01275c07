//! Laboratory for transductive node classification on planted graphs.
//!
//! The crate generates two-block planted datasets whose graph communities and
//! feature classes agree only up to a controllable alignment, trains small
//! graph convolutional networks on them with exact manual backpropagation,
//! and evaluates closed-form generalization bounds (VC and transductive
//! Rademacher) against the measured train/unlabeled gap.
//!
//! Modules follow the pipeline order:
//!
//! * [`planted`] - latent labels, features, adjacency, and their expectations
//! * [`graph_ops`] - diffusion operators and the matrix norms the bounds use
//! * [`gnn`] - forward / backward / training for vanilla and residual GCNs
//! * [`bounds`] - closed-form capacity and generalization-gap formulas
//! * [`trc`] - Monte Carlo estimation of transductive Rademacher complexity
//! * [`data_io`] - dataset / model / results / config file formats, Cora loader
//! * [`experiments`] - parameter sweeps, trend statistics, norm validation
//! * [`cli`] - the `gnnlab` command-line front end
//!
//! Everything is dense `f64` and deterministic given a seed; the intended
//! scale is a few thousand nodes.

pub mod bounds;
pub mod cli;
pub mod data_io;
pub mod experiments;
pub mod gnn;
pub mod graph_ops;
pub mod planted;
pub mod rng;
pub mod trc;

mod svg;

use thiserror::Error;

/// Crate-wide error type. Variants keep enough context to print a one-line
/// diagnosis without a backtrace.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates a documented precondition.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// An operation received structurally invalid input (shape, range, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Power iteration failed to reach the requested tolerance.
    #[error("power iteration did not converge after {iterations} iterations (last estimate {last_estimate}, residual {residual})")]
    NonConvergence {
        iterations: usize,
        last_estimate: f64,
        residual: f64,
    },

    /// Training produced a non-finite loss or parameter.
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    TrainDiverged { epoch: usize, loss: f64 },

    /// A text or binary artifact failed to parse.
    #[error("parse error in {path} line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// File format version not understood by this build.
    #[error("unsupported format version in {path}: {found}")]
    VersionMismatch { path: String, found: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Relative difference |a-b| / max(|a|, |b|), 0 when both are exactly equal.
/// Shared by tests and the acceptance suite; exposed for convenience.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs())
}
