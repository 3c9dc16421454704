//! Large Bayesian VAR estimation with a hierarchical normal-gamma
//! shrinkage prior, recursive structural identification, and temporal
//! disaggregation of mixed-frequency panels.
//!
//! Pipeline: ingest a long-format CSV into monthly [`series::TimeSeries`],
//! disaggregate quarterly members ([`disagg`]), assemble the identification
//! ordering into a [`series::Panel`], estimate the VAR by Gibbs sampling
//! ([`bvar`]), map posterior draws to normalized impulse responses with
//! credible bands ([`irf`]), and stress the result with the robustness
//! battery ([`robust`]).

pub mod bvar;
pub mod disagg;
pub mod error;
pub mod gig;
pub mod irf;
pub mod robust;
pub mod series;
pub mod store;
pub mod synth;

pub use error::{Error, Result};
