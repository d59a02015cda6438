//! Capacity bounds, error exponents and symmetry checks for the DNA storage
//! channel, with a Monte Carlo simulator of the channel and its universal
//! decoder.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix it to one precision.

// `!(x > 0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod channel;
pub mod combinatorics;
pub mod info;
pub mod optimize;
pub mod reliability;
pub mod scalar;
pub mod sim;
pub mod symmetry;

pub use channel::{
    binomial_extend, make_bsc, make_modulo_additive, validate_dmc, ChannelError, ChannelMatrix, Composition, Dmc,
    MergedChannel,
};
pub use info::{
    binary_entropy, binary_kl, blahut_arimoto, cid, entropy, kl_divergence, mutual_information, poisson_hazard,
    poisson_pmf, Distribution, InfoError, PoissonTail,
};
pub use scalar::Scalar;

pub type Dmc64 = Dmc<f64>;
pub type Dmc32 = Dmc<f32>;
pub type MergedChannel64 = MergedChannel<f64>;
pub type MergedChannel32 = MergedChannel<f32>;
pub type Distribution64 = Distribution<f64>;
pub type Distribution32 = Distribution<f32>;
