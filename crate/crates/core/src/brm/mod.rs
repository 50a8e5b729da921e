//! Brownian risk models: closed-form one-dimensional ruin and the correlated
//! two-dimensional model with its bounds and tail asymptotics.

pub mod bivariate;
pub mod closed;

pub use bivariate::{
    asym_approx, crude_upper_bound, early_window_bound, lambda_pair, prop1_bounds, q_exponent, regime,
    ruin_time_limit_cdf, tail_equivalent_form, Approximation, BivariateBrm, Bounds, EarlyWindowBound, Regime,
};
pub use closed::{normalize, ruin_finite, ruin_infinite, Horizon, InfiniteRuin, Normalized, SinglePortfolio};
