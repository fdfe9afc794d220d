//! Gaussian-state model of a linearized atom laser: unconditioned moment
//! dynamics, stochastic unravelings, the physically realizable region of
//! pure-state ensembles, jump unravelings and experimental parameter checks.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod gaussian;
pub mod jumps;
pub mod optimize;
pub mod pr_region;
pub mod unraveling;

pub use error::{Error, Result};
pub use gaussian::{CovarianceTriple, LaserParams, MomentState};
