//! Bayesian estimation of the regression and error-density bandwidths:
//! prior families, the leave-one-out pseudo-likelihood, adaptive random-walk
//! Metropolis sampling and chain diagnostics.

pub mod archive;
pub mod diagnostics;
pub mod likelihood;
pub mod prior;
pub mod sampler;

pub use archive::{chain_from_csv, chain_to_csv, ChainMeta};
pub use diagnostics::{integrated_autocorrelation_time, summarize_chain, ParamSummary, PosteriorSummary};
pub use likelihood::{log_posterior, log_pseudo_likelihood, residual_log_likelihood, PseudoLogLik, ResidualState};
pub use prior::{log_prior, NativeParams, PriorSpec, RateReparam};
pub use sampler::{sample_posterior, InitStrategy, PosteriorChain, SamplerConfig};
