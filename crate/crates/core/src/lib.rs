//! Risk, trust and bias (R-T-B) assessment over discrete causal networks.
//!
//! - [`model`]: networks, validation, graph surgery and twin networks
//! - [`inference`]: exact association, intervention and counterfactual queries
//! - [`assessment`]: risk/trust/bias measures and the R-T-B query compiler
//! - [`admiralty`]: Admiralty Code ratings and the decision landscape
//! - [`rates`]: biometric error-rate tables
//! - [`scenarios`]: bundled models and the checkpoint scenario

pub mod admiralty;
pub mod assessment;
mod error;
pub mod inference;
pub mod model;
pub mod rates;
pub mod scenarios;

pub use error::{Error, Result};
pub use inference::{Assignment, Evidence, PosteriorDistribution};
pub use model::CausalNetwork;
