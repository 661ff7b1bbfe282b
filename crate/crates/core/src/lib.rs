//! Moments and limit laws of additive arithmetic functions on arithmetic
//! progressions `m = l, l + k, l + 2k, ..., n`.
//!
//! The crate pairs exact empirical statistics (segmented sieving and
//! factorization over the progression) with the predictions of the
//! two-valued independent model `S_n = sum of X_p`, where `X_p = f(p)` with
//! probability `1/p` and `0` otherwise, and with the Kolmogorov family of
//! limit laws.

pub mod empirical;
pub mod error;
pub mod functions;
pub mod limitlaws;
pub mod model;
pub mod predictor;
pub mod primes;
pub mod report;
pub mod sum;

pub use error::{Error, Result};
