//! Levy risk processes facing the two-segment barrier `max(x + c1 t, y + c2 t)`.
//!
//! [`LevyModel`] is the contract the exact quadrature route and the path
//! simulator share. Spectrally positive models feed the supremum functional
//! [`l_functional`]; spectrally negative ones use the Kendall-type first-passage
//! identity. [`psi_levy`] composes either into the simultaneous ruin probability.

mod exact;
mod gamma_closed;
mod models;
mod stable;

pub use exact::{density_integral, first_passage, l_functional, psi_levy, psi_levy_as};
pub use gamma_closed::gamma_l_closed;
pub use models::{perturbed_gamma_density, BrownianModel, GammaModel, Negated, PerturbedGammaModel};
pub use stable::{cms_sample, stable_cdf, stable_density, stable_expected_shortfall, EminTable, StableModel};

use crate::error::{invalid, require_finite, require_positive, Error, Result};
use crate::mc::PathRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralSign {
    /// Only upward jumps.
    Positive,
    /// Only downward jumps.
    Negative,
}

impl SpectralSign {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpectralSign::Positive => "positive",
            SpectralSign::Negative => "negative",
        }
    }
}

/// Boundary of the support of `Z(t)` at the origin.
///
/// Models reporting an edge have a density that vanishes on one side of 0 and
/// behaves like `|v|^(t - 1)` on the other as `v -> 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    /// Density is zero for `v <= 0`.
    Lower,
    /// Density is zero for `v >= 0`.
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    /// Standard Brownian motion.
    Gaussian,
    /// Nondecreasing paths.
    Increasing,
    /// Nonincreasing paths.
    Decreasing,
    General,
}

/// A Levy process `Z` with `Z(0) = 0` and absolutely continuous marginals.
pub trait LevyModel: Send + Sync {
    fn name(&self) -> &'static str;
    fn params(&self) -> Vec<(&'static str, f64)>;
    fn spectral_sign(&self) -> SpectralSign;

    /// Whether the ruin formulas for `sign` apply to this model.
    fn supports(&self, sign: SpectralSign) -> bool {
        sign == self.spectral_sign()
    }

    /// Density of `Z(t)` at `v`.
    fn density(&self, v: f64, t: f64) -> Result<f64>;

    fn ln_density(&self, v: f64, t: f64) -> Result<f64> {
        Ok(self.density(v, t)?.ln())
    }

    /// `P(Z(t) > v)`.
    fn tail(&self, v: f64, t: f64) -> Result<f64>;

    /// `P(Z(t) <= v)`.
    fn cdf(&self, v: f64, t: f64) -> Result<f64> {
        Ok(1.0 - self.tail(v, t)?)
    }

    fn mean(&self, t: f64) -> f64;

    /// `E min(0, Z(s) - c s)`.
    fn expected_min(&self, c: f64, s: f64) -> Result<f64>;

    /// Interpolation table for `expected_min(c, s)`, `0 < s <= t_max`, for
    /// models where direct evaluation is expensive.
    fn expected_min_table(&self, _c: f64, _t_max: f64) -> Result<Option<EminTable>> {
        Ok(None)
    }

    fn edge(&self) -> Option<Edge> {
        None
    }

    /// Points that resolve the bulk of the law of `Z(t)`.
    fn breakpoints(&self, t: f64) -> Vec<f64>;

    /// Whether `Z(t) - c t` is positive at arbitrarily small times almost surely.
    fn immediately_exceeds(&self, _c: f64) -> bool {
        true
    }

    fn path_kind(&self) -> PathKind {
        PathKind::General
    }

    fn sample_increment(&self, dt: f64, rng: &mut PathRng) -> f64;

    /// For monotone models: the fraction of an increment over a step of length
    /// `h` that is realised by the step midpoint, drawn from its bridge law.
    fn bridge_fraction(&self, _h: f64, _rng: &mut PathRng) -> Option<f64> {
        None
    }
}

/// Which segment of the barrier is active over the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BarrierCase {
    /// `x >= y`: the first line dominates on all of `[0, T]`.
    First,
    /// `x < y < x + delta T`: the second line dominates up to `xi`, the first after.
    Crossing { xi: f64 },
    /// `y >= x + delta T`: the second line dominates on all of `[0, T]`.
    Second,
}

impl BarrierCase {
    pub fn as_str(&self) -> &'static str {
        match self {
            BarrierCase::First => "first",
            BarrierCase::Crossing { .. } => "crossing",
            BarrierCase::Second => "second",
        }
    }
}

/// Ruin when `Z(t) - c1 t > x` and `Z(t) - c2 t > y` at a common `t` in `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLineBarrier {
    pub c1: f64,
    pub c2: f64,
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl TwoLineBarrier {
    /// Labels are swapped if needed so that `c1 > c2`.
    pub fn new(c1: f64, c2: f64, x: f64, y: f64, t: f64) -> Result<Self> {
        require_finite("c1", c1)?;
        require_finite("c2", c2)?;
        require_finite("x", x)?;
        require_finite("y", y)?;
        require_positive("T", t)?;
        if x < 0.0 || y < 0.0 {
            return Err(invalid(format!("capitals must be nonnegative, got x={x}, y={y}")));
        }
        if c1 == c2 {
            return Err(Error::DegenerateDrift(format!("c1 = c2 = {c1}")));
        }
        Ok(if c1 > c2 {
            Self { c1, c2, x, y, t }
        } else {
            Self {
                c1: c2,
                c2: c1,
                x: y,
                y: x,
                t,
            }
        })
    }

    pub fn delta(&self) -> f64 {
        self.c1 - self.c2
    }

    pub fn case(&self) -> BarrierCase {
        let d = self.delta();
        if self.x >= self.y {
            BarrierCase::First
        } else if self.y < self.x + d * self.t {
            BarrierCase::Crossing {
                xi: (self.y - self.x) / d,
            }
        } else {
            BarrierCase::Second
        }
    }

    pub fn level(&self, t: f64) -> f64 {
        (self.x + self.c1 * t).max(self.y + self.c2 * t)
    }

    /// Minimum of the barrier over `[a, b]`; it is convex, so the minimum sits
    /// at an endpoint or at the switch time.
    pub fn min_level(&self, a: f64, b: f64) -> f64 {
        let mut m = self.level(a).min(self.level(b));
        if let BarrierCase::Crossing { xi } = self.case() {
            if xi > a && xi < b {
                m = m.min(self.level(xi));
            }
        }
        m
    }
}
