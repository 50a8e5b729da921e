//! Numerical primitives used throughout the crate.

mod normal;
mod quadrature;
mod special;

pub use normal::{
    bivariate_normal_pdf, bivariate_normal_tail, ln_std_normal_tail, std_normal_cdf, std_normal_pdf, std_normal_tail,
};
pub use quadrature::{
    integrate_1d, integrate_breakpoints, integrate_power_singular, try_integrate_breakpoints, Quadrature,
    QuadratureSpec, SingularityTransform, TailEnvelope, Upper,
};
pub use special::{bisect, gamma_p, gamma_q, ln_gamma};
