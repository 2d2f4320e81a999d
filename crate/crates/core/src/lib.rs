//! Spectral simulator and verification harness for the exp(Phi)_2 model on the torus
//! `[-pi, pi)^2`: Gaussian free field sampling, renormalized Wick exponentials
//! (Gaussian multiplicative chaos), torus Green functions, and integrators for the
//! regularized stochastic quantization equation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gff;
pub mod gmc;
pub mod green;
pub mod harness;
pub mod measure;
pub mod multiplier;
pub mod quadrature;
pub mod rng;
pub mod snapshot;
pub mod solver;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
