//! Heavy-tailed series priors for Bayesian nonparametric inference.

#[cfg(test)]
#[macro_use]
mod testutil;

pub mod chain;
pub mod coordinate_posterior;
pub mod error;
pub mod field;
pub mod harness;
pub mod io;
pub mod model_likelihoods;
pub mod plot;
pub mod priors;
pub mod quadrature;
pub mod rng;
pub mod samplers;
pub mod sequence_models;
pub mod special;
pub mod stats;
pub mod theory_checks;
pub mod wavelet;

pub use error::{Error, Result};
pub use field::{CoefficientField, FieldLayout};
pub use priors::{IndexLayout, PriorSpec, ScaleKind, ScaleSpec, TailDensity, TailKind};
pub use wavelet::{WaveletFilter, WaveletName};
