//! Ruin probabilities for correlated two-dimensional Brownian risk models and
//! for Levy risk processes facing a two-segment linear barrier.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: normal and bivariate-normal tails, special functions, adaptive quadrature.
//! * [`brm`]: closed-form one-dimensional ruin, bivariate bounds and tail asymptotics.
//! * [`constant`]: Monte Carlo estimation of the Pickands-type constant `C(a, rho)`.
//! * [`levy`]: model catalogue and the exact quadrature route for Levy ruin.
//! * [`mc`]: Monte Carlo oracles with per-path counter streams.

// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod brm;
pub mod constant;
pub mod error;
pub mod levy;
pub mod mc;
pub mod numerics;

pub use error::{Error, Result};
