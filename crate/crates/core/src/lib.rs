//! Polyak stepsizes viewed as gradient descent on surrogate losses.

pub mod counterexamples;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod problems;
pub mod steppers;
pub mod surrogates;

pub use error::{Error, Result};
