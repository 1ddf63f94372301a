//! Bayesian bandwidth estimation for multivariate local linear regression
//! with a kernel-form error density.
//!
//! The crate covers the estimators themselves ([`kernel`]), classical
//! bandwidth selectors ([`select`]), the posterior sampler and its
//! diagnostics ([`bayes`]), marginal likelihoods ([`evidence`]), accuracy
//! criteria ([`metrics`]), simulation designs ([`sim`]) and the option
//! state-price-density application ([`spd`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes;
pub mod error;
pub mod evidence;
pub mod kernel;
mod linalg;
pub mod metrics;
pub mod optimize;
pub mod select;
pub mod sim;
pub mod spd;

pub use error::{Error, Result};
pub use kernel::{BandwidthSet, Dataset, Estimator, ResidualSet};
