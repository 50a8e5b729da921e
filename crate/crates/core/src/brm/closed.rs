use crate::error::{invalid, require_finite, require_positive, Result};
use crate::numerics::{ln_std_normal_tail, std_normal_tail};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Finite(f64),
    Infinite,
}

/// Surplus `u + c t - sigma W(t)` of a single Brownian portfolio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinglePortfolio {
    pub c: f64,
    pub sigma: f64,
    pub u: f64,
    pub horizon: Horizon,
}

impl SinglePortfolio {
    pub fn new(c: f64, sigma: f64, u: f64, horizon: Horizon) -> Result<Self> {
        require_finite("c", c)?;
        require_positive("sigma", sigma)?;
        require_finite("u", u)?;
        if u < 0.0 {
            return Err(invalid(format!("initial capital must be nonnegative, got {u}")));
        }
        if let Horizon::Finite(t) = horizon {
            require_positive("T", t)?;
        }
        Ok(Self { c, sigma, u, horizon })
    }
}

/// Finite-horizon ruin probability `P(sup_{t<=T} sigma W(t) - c t > u)`.
///
/// Evaluated after reduction to unit volatility and unit horizon, so the
/// reflection factor is `exp(-2 c u / sigma^2)`.
pub fn ruin_finite(p: &SinglePortfolio) -> Result<f64> {
    let Horizon::Finite(t) = p.horizon else {
        return Err(invalid("ruin_finite needs a finite horizon"));
    };
    let cn = p.c * t.sqrt() / p.sigma;
    let un = p.u / (p.sigma * t.sqrt());
    let direct = std_normal_tail(un + cn);
    let log_reflected = -2.0 * cn * un + ln_std_normal_tail(un - cn);
    Ok((direct + log_reflected.exp()).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfiniteRuin {
    pub probability: f64,
    /// Set when `c <= 0`: ruin is certain and the exponential formula does not apply.
    pub degenerate: bool,
}

/// Infinite-horizon ruin probability `exp(-2 c u / sigma^2)`.
pub fn ruin_infinite(p: &SinglePortfolio) -> Result<InfiniteRuin> {
    if p.c <= 0.0 {
        return Ok(InfiniteRuin {
            probability: 1.0,
            degenerate: true,
        });
    }
    Ok(InfiniteRuin {
        probability: (-2.0 * p.c * p.u / (p.sigma * p.sigma)).exp(),
        degenerate: false,
    })
}

/// Parameters of a two-portfolio model rescaled to unit volatilities and horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalized {
    pub c1: f64,
    pub c2: f64,
    pub u: f64,
    pub v: f64,
}

/// Maps `(c_i, sigma_i, capitals, T)` to the unit model: `c_i sqrt(T)/sigma_i`
/// and `capital/(sigma_i sqrt(T))`.
pub fn normalize(c1: f64, c2: f64, sigma1: f64, sigma2: f64, u: f64, v: f64, t: f64) -> Result<Normalized> {
    require_finite("c1", c1)?;
    require_finite("c2", c2)?;
    require_positive("sigma1", sigma1)?;
    require_positive("sigma2", sigma2)?;
    require_finite("u", u)?;
    require_finite("v", v)?;
    require_positive("T", t)?;
    let st = t.sqrt();
    Ok(Normalized {
        c1: c1 * st / sigma1,
        c2: c2 * st / sigma2,
        u: u / (sigma1 * st),
        v: v / (sigma2 * st),
    })
}
