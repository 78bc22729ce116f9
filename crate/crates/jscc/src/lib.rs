//! Lossless joint source-channel coding based on linear codes over GF(q):
//! exact method-of-types spectra, code-ensemble alpha/beta coefficients,
//! the randomized encoder with threshold and MAP decoders, exact error
//! bounds, and seeded Monte Carlo experiments.

pub mod algebra;
pub mod cli;
pub mod codes;
pub mod config;
pub mod error;
pub mod experiments;
pub mod scheme;
pub mod spectra;

pub use error::{Error, Result, DEFAULT_BUDGET};
