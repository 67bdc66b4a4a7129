//! Bayesian variable selection for linear regression under the κ-G prior
//!
//! The coefficient vector gets a Gaussian prior with covariance
//! `κσ²(G XᵀX G)⁻¹`, where `G = diag(g_1, ..., g_p)` and each `g_j ∈ (0, 1)`
//! acts as a per-variable stabilizer. Posterior mass of `g_j` near 0 marks a
//! promising predictor; mass near 1 marks an unpromising one.
//!
//! Module map:
//! - [`model`]: datasets, hyperparameters, model state and the OLS reference fit.
//! - [`posteriors`]: closed-form conditionals and log-density evaluators.
//! - [`sampler`]: Metropolis-within-Gibbs chains.
//! - [`selection`]: posterior summaries and the selection rule.
//! - [`oracle`]: deterministic quadrature for the orthogonal case.
//! - [`pip`]: indicator-based SSVS baseline under Zellner's g-prior.
//! - [`simgen`]: simulation designs and CSV round-trips.
//! - [`report`]: JSON/CSV report formats used by the CLI.

pub mod error;
pub mod io;
pub mod model;
pub mod oracle;
pub mod par;
pub mod pip;
pub mod posteriors;
pub mod quadrature;
pub mod report;
pub mod rng;
pub mod sampler;
pub mod selection;
pub mod simgen;

pub use error::{Error, Result};
pub use model::{Dataset, Hyperparameters, ModelState, OlsFit};
pub use sampler::{ChainTrace, SamplerConfig};
pub use selection::PosteriorSummary;
