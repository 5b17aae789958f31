//! Higher-arity VC theory on finite product spaces.
//!
//! The crate computes exact VC_k dimensions of set families on k-fold
//! products, checks trace bounds against Zarankiewicz numbers, builds
//! packing covers out of Boolean combinations of lower-arity fibers, runs
//! the two-phase proper PAC_k learner under exact product measures, and
//! verifies slice-wise decompositions of higher-arity relations.

pub mod cli;
pub mod error;
pub mod io;
pub mod learner;
pub mod packing;
pub mod rational;
pub mod regularity;
pub mod relation;
pub mod sampling;
pub mod vcdim;

pub use error::{Error, Result};
pub use rational::Rational;
