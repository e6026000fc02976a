//! Black-box global optimization combining Gaussian-process Bayesian
//! optimization with Lipschitz envelopes.
//!
//! The library provides exact GP regression ([`gp`]), Lipschitz envelopes and
//! constant estimation ([`lipschitz`]), base and mixed acquisition functions
//! ([`acquisition`]), a DIRECT auxiliary maximizer ([`direct`]), the synthetic
//! benchmark registry ([`benchmarks`]), a reproducible experiment harness
//! ([`harness`]), and executable desk-scale checks of the harmlessness and
//! regret results ([`theory`]).

pub mod acquisition;
pub mod benchmarks;
pub mod direct;
pub mod domain;
pub mod error;
pub mod gp;
pub mod harness;
pub mod lipschitz;
pub mod stats;
pub mod theory;

pub use domain::{BoxDomain, ObservationHistory, Point};
pub use error::{Error, Result};
