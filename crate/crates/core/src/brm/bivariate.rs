use std::f64::consts::PI;

use crate::error::{invalid, require_finite, require_rho, Error, Result};
use crate::numerics::{bivariate_normal_tail, std_normal_cdf, std_normal_tail};

use super::closed::{normalize, ruin_finite, Horizon, SinglePortfolio};

/// Two correlated Brownian portfolios in unit time and volatility:
/// `R_1(t) = u + c1 t - W_1(t)`, `R_2(t) = a u + c2 t - W_2(t)` with
/// `W_2 = rho B_1 + sqrt(1 - rho^2) B_2` and `W_1 = B_1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateBrm {
    pub c1: f64,
    pub c2: f64,
    pub rho: f64,
    pub a: f64,
    pub u: f64,
}

impl BivariateBrm {
    pub fn new(c1: f64, c2: f64, rho: f64, a: f64, u: f64) -> Result<Self> {
        require_finite("c1", c1)?;
        require_finite("c2", c2)?;
        require_rho(rho)?;
        require_finite("a", a)?;
        require_finite("u", u)?;
        if a > 1.0 {
            return Err(invalid(format!("a must not exceed 1, got {a}")));
        }
        Ok(Self { c1, c2, rho, a, u })
    }

    /// Builds the unit model from raw drifts, volatilities, capitals and horizon.
    #[allow(clippy::too_many_arguments)]
    pub fn from_raw(c1: f64, c2: f64, sigma1: f64, sigma2: f64, rho: f64, u: f64, v: f64, t: f64) -> Result<Self> {
        let n = normalize(c1, c2, sigma1, sigma2, u, v, t)?;
        if n.u <= 0.0 {
            return Err(invalid("first capital must be positive to define a = v/u"));
        }
        Self::new(n.c1, n.c2, rho, n.v / n.u, n.u)
    }

    pub fn v(&self) -> f64 {
        self.a * self.u
    }

    pub fn rho_star(&self) -> f64 {
        ((1.0 - self.rho) * (1.0 + self.rho)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    AboveRho,
    AtRho,
    BelowRho,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::AboveRho => "above_rho",
            Regime::AtRho => "at_rho",
            Regime::BelowRho => "below_rho",
        }
    }
}

/// Exact comparison of `a` with `rho`.
pub fn regime(a: f64, rho: f64) -> Regime {
    if a > rho {
        Regime::AboveRho
    } else if a == rho {
        Regime::AtRho
    } else {
        Regime::BelowRho
    }
}

/// `(lambda_1, lambda_2)` of the dominating point; defined only for `a > rho`.
pub fn lambda_pair(a: f64, rho: f64) -> Result<(f64, f64)> {
    require_rho(rho)?;
    if !(a > rho) {
        return Err(Error::RegimeError(format!(
            "lambda pair needs a > rho, got a={a}, rho={rho}"
        )));
    }
    let s = (1.0 - rho) * (1.0 + rho);
    Ok(((1.0 - a * rho) / s, (a - rho) / s))
}

/// Rate of the limiting exponential law of the ruin time.
pub fn q_exponent(a: f64, rho: f64) -> f64 {
    if a > rho {
        (1.0 - 2.0 * a * rho + a * a) / ((1.0 - rho) * (1.0 + rho))
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

/// Sandwich `Psi_rho(u+c1, v+c2) <= psi <= Psi_rho(u+c1, v+c2) / Psi_rho(c1+, c2+)`.
///
/// The upper value is reported as computed and may exceed 1.
pub fn prop1_bounds(m: &BivariateBrm, v: f64) -> Result<Bounds> {
    require_finite("v", v)?;
    // The origin itself is kept: both bounds stay meaningful there.
    if m.u <= 0.0 && v <= 0.0 && !(m.u == 0.0 && v == 0.0) {
        return Err(invalid("capitals (u, v) must not both be nonpositive"));
    }
    let lower = bivariate_normal_tail(m.u + m.c1, v + m.c2, m.rho);
    let denom = bivariate_normal_tail(m.c1.max(0.0), m.c2.max(0.0), m.rho);
    Ok(Bounds {
        lower,
        upper: lower / denom,
    })
}

/// Smaller of the two marginal finite-horizon ruin probabilities.
///
/// A nonpositive marginal capital means that marginal is ruined at time zero.
pub fn crude_upper_bound(m: &BivariateBrm) -> Result<f64> {
    let marginal = |c: f64, cap: f64| -> Result<f64> {
        if cap <= 0.0 {
            Ok(1.0)
        } else {
            ruin_finite(&SinglePortfolio::new(c, 1.0, cap, Horizon::Finite(1.0))?)
        }
    };
    Ok(marginal(m.c1, m.u)?.min(marginal(m.c2, m.v())?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Approximation {
    pub value: f64,
    pub regime: Regime,
    /// `|a - rho| < 1e-9` without equality: both branches are unreliable there.
    pub near_boundary: bool,
}

fn ln_bvn_pdf(x: f64, y: f64, rho: f64) -> f64 {
    let s = (1.0 - rho) * (1.0 + rho);
    -(x * x - 2.0 * rho * x * y + y * y) / (2.0 * s) - (2.0 * PI * s.sqrt()).ln()
}

fn phi_star(m: &BivariateBrm, r: Regime) -> f64 {
    match r {
        Regime::BelowRho => 1.0,
        _ => std_normal_cdf((m.c1 * m.rho - m.c2) / m.rho_star()),
    }
}

fn checked_constant(r: Regime, c_hat: Option<f64>) -> Result<f64> {
    match (r, c_hat) {
        (Regime::AboveRho, None) => Err(Error::MissingConstant),
        (Regime::AboveRho, Some(c)) if !(c > 0.0 && c.is_finite()) => {
            Err(invalid(format!("C must be positive and finite, got {c}")))
        }
        (_, c) => Ok(c.unwrap_or(f64::NAN)),
    }
}

fn near(m: &BivariateBrm) -> bool {
    m.a != m.rho && (m.a - m.rho).abs() < 1e-9
}

/// Leading-order tail approximation of `psi(u, a u)` as `u -> inf`.
///
/// For `a > rho`: `C u^-2 phi_rho(u+c1, a u+c2)`; `C` must be supplied.
/// For `a <= rho`: `2 sqrt(2 pi (1-rho^2)) Phi*(c1 rho - c2) exp((c2-rho c1)^2/(2(1-rho^2)))
/// u^-1 phi_rho(u+c1, rho u+c2)` with `Phi* = 1` below the boundary.
pub fn asym_approx(m: &BivariateBrm, c_hat: Option<f64>) -> Result<Approximation> {
    if !(m.u > 0.0) {
        return Err(invalid("asymptotic forms need u > 0"));
    }
    let r = regime(m.a, m.rho);
    let c = checked_constant(r, c_hat)?;
    let value = match r {
        Regime::AboveRho => (c.ln() - 2.0 * m.u.ln() + ln_bvn_pdf(m.u + m.c1, m.a * m.u + m.c2, m.rho)).exp(),
        _ => {
            let s = (1.0 - m.rho) * (1.0 + m.rho);
            let d = m.c2 - m.rho * m.c1;
            let ln = (2.0 * (2.0 * PI * s).sqrt()).ln() + d * d / (2.0 * s) - m.u.ln()
                + ln_bvn_pdf(m.u + m.c1, m.rho * m.u + m.c2, m.rho);
            phi_star(m, r) * ln.exp()
        }
    };
    Ok(Approximation {
        value,
        regime: r,
        near_boundary: near(m),
    })
}

/// Tail-equivalent form: `C lambda_1 lambda_2 Psi_rho(u+c1, a u+c2)` above the
/// boundary and `2 Phi*(c1 rho - c2) Psi(u+c1)` otherwise.
pub fn tail_equivalent_form(m: &BivariateBrm, c_hat: Option<f64>) -> Result<Approximation> {
    let r = regime(m.a, m.rho);
    let c = checked_constant(r, c_hat)?;
    let value = match r {
        Regime::AboveRho => {
            let (l1, l2) = lambda_pair(m.a, m.rho)?;
            c * l1 * l2 * bivariate_normal_tail(m.u + m.c1, m.a * m.u + m.c2, m.rho)
        }
        _ => 2.0 * phi_star(m, r) * std_normal_tail(m.u + m.c1),
    };
    Ok(Approximation {
        value,
        regime: r,
        near_boundary: near(m),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarlyWindowBound {
    pub bound: f64,
    /// Smallest capital from which the step inequalities behind the bound hold.
    pub u_min: Option<f64>,
    pub valid: bool,
}

fn early_window_conditions(m: &BivariateBrm, t: f64, u: f64) -> bool {
    let d = 1.0 - t / (u * u);
    let dh = 1.0 - t / (2.0 * u * u);
    if !(d > 0.0 && dh > 0.0) {
        return false;
    }
    let nu = d.powf(-0.5);
    let nub = dh.powf(-0.5);
    let ok1 = nu * u + m.c1 / nu >= nub * (u + m.c1);
    let au = m.a * u;
    let ok2 = nu * au + m.c2 / nu >= nub * (au + m.c2);
    ok1 && ok2 && u + m.c1 > 0.0
}

/// Upper bound `e^{-T/8} Psi_rho(u+c1, a u+c2) / Psi_rho(c1+, c2+)` for ruin
/// during `[0, 1 - T/u^2]`, with the large-`u` validity threshold exposed.
pub fn early_window_bound(m: &BivariateBrm, t_window: f64) -> Result<EarlyWindowBound> {
    if !(t_window > 0.0 && t_window.is_finite()) {
        return Err(invalid("window parameter T must be positive"));
    }
    if !(1.0 - t_window / (m.u * m.u) > 0.0) {
        return Err(invalid(format!(
            "window 1 - T/u^2 is empty for u={}, T={t_window}",
            m.u
        )));
    }
    let b = prop1_bounds(m, m.v())?;
    let bound = (-t_window / 8.0).exp() * b.upper;

    // Scan a geometric grid for the last failure, then bisect to the threshold.
    let start = t_window.sqrt() * (1.0 + 1e-9);
    let grid: Vec<f64> = (0..=400).map(|i| start * 1.05f64.powi(i)).collect();
    let last_fail = grid.iter().rposition(|&u| !early_window_conditions(m, t_window, u));
    let u_min = match last_fail {
        None => Some(start),
        Some(i) if i + 1 == grid.len() => None,
        Some(i) => {
            let (mut lo, mut hi) = (grid[i], grid[i + 1]);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if early_window_conditions(m, t_window, mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Some(hi)
        }
    };
    let valid = u_min.is_some_and(|um| m.u >= um);
    Ok(EarlyWindowBound { bound, u_min, valid })
}

/// Limit law `1 - exp(-q x / 2)` of `u^2 (1 - tau(u))` given ruin.
pub fn ruin_time_limit_cdf(a: f64, rho: f64, x: f64) -> Result<f64> {
    require_rho(rho)?;
    if !(x >= 0.0) {
        return Err(invalid(format!("x must be nonnegative, got {x}")));
    }
    Ok(-(-q_exponent(a, rho) * x / 2.0).exp_m1())
}
