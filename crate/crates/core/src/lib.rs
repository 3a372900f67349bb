//! Estimating cloth physics parameters from depth video.
//!
//! The pipeline simulates a hanging cloth under wind ([`sim`]), renders the
//! motion to depth frames ([`render`]), builds labelled corpora
//! ([`dataset`]), learns a 2-D similarity embedding with a triplet loss
//! ([`embed`]), scores it by nearest-neighbour clustering ([`eval`]) and
//! finally searches simulation parameters with Gaussian-process Bayesian
//! optimisation so that simulated and observed sequences embed close
//! together ([`bo`]).

pub mod bo;
pub mod config;
pub mod dataset;
pub mod embed;
pub mod error;
pub mod eval;
pub mod registry;
pub mod render;
pub mod sim;

pub use error::{Error, Result};
