//! Algebraic Bayesian analysis of two-way contingency tables whose cells may
//! carry zero probability.
//!
//! The pipeline: parse a table with structural zeros, derive the integer
//! kernel and binomial equations of its quasi-independence model, compute a
//! minimal Hilbert basis of the associated monoid, enumerate the model
//! instances obtained by switching generators off, and compare the
//! quasi-independence family against the saturated family through mixture
//! Bayes factors under Dirichlet priors.

pub mod analysis;
pub mod bayes;
pub mod error;
pub mod hilbert;
pub mod instances;
pub mod lattice;
pub mod tables;

pub use error::{Error, Result};
