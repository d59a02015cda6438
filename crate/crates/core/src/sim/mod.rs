//! Desk-scale simulation of the DNA storage channel: multinomial sampling of
//! molecules, symbol-wise sequencing, sampling type classes, the penalized
//! empirical-mutual-information decoder and Monte Carlo estimation.
//!
//! The simulator works in `f64`.

mod decoder;
mod montecarlo;
mod sampling;
mod types;

use thiserror::Error;

pub use decoder::{
    decode_ml, decode_universal, ml_log_likelihood, universal_metric, Codebook, Codeword, DecoderConfig, TIE_TOL,
};
pub use montecarlo::{
    monte_carlo_error, outage_probability, simulate, wilson_interval, MonteCarloEstimate, SimulationSpec, WILSON_Z,
};
pub use sampling::{sample_channel, sample_indices, trial_rng, SamplingRealization};
pub use types::{type_class_log_sizes, type_class_sizes_exact, TypeClassSizes};

use crate::bounds::BoundsError;
use crate::channel::ChannelError;
use crate::info::InfoError;
use crate::reliability::ReliabilityError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid amplification vector: {0}")]
    InvalidAmplificationVector(String),
    #[error("inconsistent candidate index vector: {0}")]
    InconsistentCandidate(String),
    #[error("{candidates} candidate index vectors exceed the enumeration cap {cap}")]
    EnumerationCapExceeded { candidates: f64, cap: u64 },
    #[error("no index vector keeps every molecule below {dbar} draws")]
    EmptyCandidateSet { dbar: usize },
    #[error("invalid codebook: {0}")]
    InvalidCodebook(String),
    #[error("invalid simulation parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Info(#[from] InfoError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Reliability(#[from] ReliabilityError),
}
