//! Totally right-skewed alpha-stable law, `1 < alpha < 2`, unit scale, with
//! characteristic function `exp(-|th|^alpha (1 - i sgn(th) tan(pi alpha / 2)))`.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;

use crate::error::{invalid, require_finite, require_positive, Result};
use crate::mc::PathRng;
use crate::numerics::{bisect, integrate_power_singular, ln_gamma, try_integrate_breakpoints, QuadratureSpec};

use super::{LevyModel, SpectralSign};

/// Frequency cutoff where `exp(-th^alpha)` is below `e^-40`.
fn cutoff(alpha: f64) -> f64 {
    40f64.powf(1.0 / alpha)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 1.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(invalid(format!("alpha must lie in (1, 2), got {alpha}")))
    }
}

/// Points splitting `[0, hi]` into pieces no longer than a half period of a
/// phase whose derivative is bounded by `rate`.
fn oscillation_points(hi: f64, rate: f64) -> Vec<f64> {
    let n = ((hi * rate / PI).ceil() as usize).clamp(4, 20_000);
    (0..=n).map(|i| hi * i as f64 / n as f64).collect()
}

/// Density of `Z(t)` from the inversion integral
/// `(1 / (pi t^(1/alpha))) int_0^inf exp(-x^alpha) cos(u x t^(-1/alpha) - x^alpha tan(pi alpha / 2)) dx`.
pub fn stable_density(alpha: f64, u: f64, t: f64, spec: &QuadratureSpec) -> Result<f64> {
    check_alpha(alpha)?;
    require_finite("u", u)?;
    require_positive("t", t)?;
    let scale = t.powf(1.0 / alpha);
    let x = u / scale;
    let ta = (FRAC_PI_2 * alpha).tan();
    let hi = cutoff(alpha);
    let rate = x.abs() + alpha * ta.abs() * hi.powf(alpha - 1.0);
    let f = |th: f64| -> Result<f64> {
        let p = th.powf(alpha);
        Ok((-p).exp() * (x * th - p * ta).cos())
    };
    let q = try_integrate_breakpoints(f, &oscillation_points(hi, rate), spec)?;
    Ok(q.value / (PI * scale))
}

/// Distribution function of `Z(t)` by Gil-Pelaez inversion,
/// `1/2 - (1/pi) int_0^inf exp(-th^alpha) sin(th^alpha tan(pi alpha / 2) - th x) / th dth`.
pub fn stable_cdf(alpha: f64, u: f64, t: f64, spec: &QuadratureSpec) -> Result<f64> {
    check_alpha(alpha)?;
    require_finite("u", u)?;
    require_positive("t", t)?;
    let x = u / t.powf(1.0 / alpha);
    let ta = (FRAC_PI_2 * alpha).tan();
    let hi = cutoff(alpha);
    let rate = x.abs() + alpha * ta.abs() * hi.powf(alpha - 1.0);
    let f = |th: f64| -> Result<f64> {
        let p = th.powf(alpha);
        Ok((-p).exp() * (p * ta - th * x).sin() / th)
    };
    let q = try_integrate_breakpoints(f, &oscillation_points(hi, rate), spec)?;
    Ok(0.5 - q.value / PI)
}

/// `E (k - X)^+` for `X = Z(1)`, which has mean 0:
/// `k/2 + (1/pi) int_0^inf (1 - Re[phi(th) e^(-i th k)]) / th^2 dth`.
pub fn stable_expected_shortfall(alpha: f64, k: f64, spec: &QuadratureSpec) -> Result<f64> {
    check_alpha(alpha)?;
    require_finite("k", k)?;
    let ta = (FRAC_PI_2 * alpha).tan();
    let hi = cutoff(alpha);
    // (1 - e^-p cos phi) / th^alpha, written to avoid cancellation at small th.
    let g = |th: f64| -> Result<f64> {
        let p = th.powf(alpha);
        let phi = p * ta - th * k;
        let s = (0.5 * phi).sin();
        let num = -(-p).exp_m1() + (-p).exp() * 2.0 * s * s;
        Ok(if p > 0.0 { num / p } else { 1.0 })
    };
    let rate = k.abs() + alpha * ta.abs() * hi.powf(alpha - 1.0);
    let pts = oscillation_points(hi, rate);
    let q = integrate_power_singular(g, alpha - 1.0, hi, &pts[1..pts.len() - 1], spec)?;
    Ok(0.5 * k + (q.value + 1.0 / hi) / PI)
}

/// Integral representation of the density and distribution function on a
/// half line, free of oscillation. For `x > 0` and skewness `beta = +-1`,
/// with `a = alpha / (alpha - 1)` and `g(th) = x^a V(th)` decreasing on `(-th0, pi/2)`:
///
/// * `f(x) = alpha / (pi (alpha - 1) x) int g e^-g dth`
/// * `P(X > x) = (1/pi) int e^-g dth`
///
/// The other half line follows from `X(beta) = -X(-beta)` in law.
#[derive(Debug, Clone, Copy)]
struct Zolotarev {
    alpha: f64,
    theta0: f64,
    a: f64,
    ln_c: f64,
}

impl Zolotarev {
    fn new(alpha: f64, beta: f64) -> Self {
        let theta0 = (beta * (FRAC_PI_2 * alpha).tan()).atan() / alpha;
        Self {
            alpha,
            theta0,
            a: alpha / (alpha - 1.0),
            ln_c: (alpha * theta0).cos().ln() / (alpha - 1.0),
        }
    }

    fn ln_v(&self, th: f64) -> f64 {
        let al = self.alpha;
        let ct = th.cos().ln();
        self.ln_c
            + self.a * (ct - (al * (self.theta0 + th)).sin().ln())
            + (al * self.theta0 + (al - 1.0) * th).cos().ln()
            - ct
    }

    /// Breakpoints where `ln g` crosses a few levels around its peak region.
    fn points(&self, ln_x: f64) -> Vec<f64> {
        let lo = -self.theta0;
        let hi = FRAC_PI_2;
        let mut p = vec![lo];
        for level in [4.0, 0.0, -4.0] {
            let h = |th: f64| {
                let v = self.a * ln_x + self.ln_v(th) - level;
                if v.is_nan() {
                    -1.0
                } else {
                    v
                }
            };
            let (l, r) = (lo + 1e-15 * (hi - lo), hi - 1e-15 * (hi - lo));
            if h(l) > 0.0 && h(r) < 0.0 {
                if let Ok(th) = bisect(h, l, r, 1e-10) {
                    p.push(th);
                }
            }
        }
        p.push(hi);
        p.sort_by(f64::total_cmp);
        p.dedup();
        p
    }

    fn ln_g(&self, ln_x: f64, th: f64) -> f64 {
        let v = self.a * ln_x + self.ln_v(th);
        if v.is_nan() {
            // Endpoints: V -> inf at -th0, V -> 0 at pi/2.
            if th < 0.5 * (FRAC_PI_2 - self.theta0) {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        } else {
            v
        }
    }

    fn density(&self, x: f64, spec: &QuadratureSpec) -> Result<f64> {
        let lx = x.ln();
        let f = |th: f64| -> Result<f64> {
            let lg = self.ln_g(lx, th);
            Ok(if lg.is_finite() { (lg - lg.exp()).exp() } else { 0.0 })
        };
        let q = try_integrate_breakpoints(f, &self.points(lx), spec)?;
        Ok(self.alpha / (PI * (self.alpha - 1.0) * x) * q.value)
    }

    fn upper_tail(&self, x: f64, spec: &QuadratureSpec) -> Result<f64> {
        let lx = x.ln();
        let f = |th: f64| -> Result<f64> { Ok((-self.ln_g(lx, th).exp()).exp()) };
        let q = try_integrate_breakpoints(f, &self.points(lx), spec)?;
        Ok(q.value / PI)
    }
}

/// Cubic Hermite table for `E min(0, Z(s) - c s) = -s^(1/alpha) m(c s^(1 - 1/alpha))`
/// with `m(k) = E (k - Z(1))^+`, whose derivative is the distribution function.
#[derive(Debug, Clone)]
pub struct EminTable {
    p: f64,
    c: f64,
    k0: f64,
    dk: f64,
    m: Vec<f64>,
    slope: Vec<f64>,
}

impl EminTable {
    pub fn eval(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let k = self.c * s.powf(1.0 - self.p);
        -s.powf(self.p) * self.interp(k)
    }

    fn interp(&self, k: f64) -> f64 {
        let n = self.m.len();
        if n == 1 || self.dk == 0.0 {
            return self.m[0] + self.slope[0] * (k - self.k0);
        }
        let pos = ((k - self.k0) / self.dk).clamp(0.0, (n - 1) as f64);
        let i = (pos.floor() as usize).min(n - 2);
        let u = pos - i as f64;
        let h = self.dk;
        let (y0, y1, d0, d1) = (self.m[i], self.m[i + 1], self.slope[i] * h, self.slope[i + 1] * h);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * d0 + (-2.0 * u3 + 3.0 * u2) * y1 + (u3 - u2) * d1
    }
}

/// Strictly stable process with `Z(1)` as in the module docs.
#[derive(Debug, Clone, Copy)]
pub struct StableModel {
    pub alpha: f64,
    pos: Zolotarev,
    neg: Zolotarev,
    spec: QuadratureSpec,
}

/// Table spacing in `k`; the Hermite error scales like `dk^4`.
const TABLE_DK: f64 = 0.02;

impl StableModel {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            alpha,
            pos: Zolotarev::new(alpha, 1.0),
            neg: Zolotarev::new(alpha, -1.0),
            spec: QuadratureSpec::with_tolerances(1e-13, 1e-11),
        })
    }

    /// Tolerances for the inner single integrals.
    pub fn with_spec(mut self, spec: QuadratureSpec) -> Self {
        self.spec = spec;
        self
    }

    fn theta0(&self) -> f64 {
        self.pos.theta0
    }

    /// Density of `Z(1)`.
    pub fn density1(&self, x: f64) -> Result<f64> {
        if x.abs() <= SERIES_RADIUS {
            return Ok(self.series(x).0);
        }
        if x > 0.0 {
            self.pos.density(x, &self.spec)
        } else {
            self.neg.density(-x, &self.spec)
        }
    }

    /// `P(Z(1) <= x)`.
    pub fn cdf1(&self, x: f64) -> Result<f64> {
        if x.abs() <= SERIES_RADIUS {
            Ok(self.series(x).1)
        } else if x > 0.0 {
            Ok(1.0 - self.pos.upper_tail(x, &self.spec)?)
        } else {
            self.neg.upper_tail(-x, &self.spec)
        }
    }

    /// Density and distribution function from the power series at 0, where the
    /// integral representation loses accuracy.
    ///
    /// With `w = 1 - i tan(pi alpha / 2)`,
    /// `f(x) = (1 / (pi alpha)) Re sum_k (-i x)^k / k! Gamma((k+1)/alpha) w^(-(k+1)/alpha)`.
    fn series(&self, x: f64) -> (f64, f64) {
        let al = self.alpha;
        let t = (FRAC_PI_2 * al).tan();
        let ln_r = 0.5 * (1.0 + t * t).ln();
        let phi = (-t).atan2(1.0);
        let mut dens = 0.0;
        let mut cdf = (FRAC_PI_2 - self.theta0()) / PI;
        let mut xk: f64 = 1.0;
        for k in 0..60 {
            let p = (k + 1) as f64 / al;
            let mag = ln_gamma(p).exp() * (-p * ln_r).exp() / (PI * al);
            let phase = -(k as f64) * FRAC_PI_2 - p * phi;
            // x^k / k! and x^(k+1) / (k+1)!
            let size = xk.abs() * mag;
            dens += xk * mag * phase.cos();
            xk *= x / (k + 1) as f64;
            cdf += xk * mag * phase.cos();
            if size < 1e-18 {
                break;
            }
        }
        (dens, cdf)
    }

    /// `P(Z(1) > x)`.
    pub fn tail1(&self, x: f64) -> Result<f64> {
        if x > SERIES_RADIUS {
            self.pos.upper_tail(x, &self.spec)
        } else {
            Ok(1.0 - self.cdf1(x)?)
        }
    }

    fn scale(&self, t: f64) -> f64 {
        t.powf(1.0 / self.alpha)
    }
}

/// Below this `|x|` the unit-time density and distribution use the series at 0.
const SERIES_RADIUS: f64 = 0.05;

/// Chambers-Mallows-Stuck draw of `Z(1)`.
pub fn cms_sample(alpha: f64, rng: &mut PathRng) -> f64 {
    let ta = (FRAC_PI_2 * alpha).tan();
    let b = ta.atan() / alpha;
    let s = (1.0 + ta * ta).powf(0.5 / alpha);
    let v = PI * (rng.random::<f64>() - 0.5);
    let w = -(1.0 - rng.random::<f64>()).ln();
    s * (alpha * (v + b)).sin() / v.cos().powf(1.0 / alpha)
        * ((v - alpha * (v + b)).cos() / w).powf((1.0 - alpha) / alpha)
}

impl LevyModel for StableModel {
    fn name(&self) -> &'static str {
        "stable"
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("alpha", self.alpha)]
    }

    fn spectral_sign(&self) -> SpectralSign {
        SpectralSign::Positive
    }

    fn density(&self, v: f64, t: f64) -> Result<f64> {
        let s = self.scale(t);
        Ok(self.density1(v / s)? / s)
    }

    fn tail(&self, v: f64, t: f64) -> Result<f64> {
        self.tail1(v / self.scale(t))
    }

    fn cdf(&self, v: f64, t: f64) -> Result<f64> {
        self.cdf1(v / self.scale(t))
    }

    fn mean(&self, _t: f64) -> f64 {
        0.0
    }

    fn expected_min(&self, c: f64, s: f64) -> Result<f64> {
        let k = c * s.powf(1.0 - 1.0 / self.alpha);
        Ok(-self.scale(s) * stable_expected_shortfall(self.alpha, k, &self.spec)?)
    }

    fn expected_min_table(&self, c: f64, t_max: f64) -> Result<Option<EminTable>> {
        require_finite("c", c)?;
        require_positive("t_max", t_max)?;
        let p = 1.0 / self.alpha;
        let k_end = c * t_max.powf(1.0 - p);
        let (k0, k1) = (k_end.min(0.0), k_end.max(0.0));
        let n = (((k1 - k0) / TABLE_DK).ceil() as usize).clamp(1, 4000);
        let dk = (k1 - k0) / n as f64;
        let mut m = Vec::with_capacity(n + 1);
        let mut slope = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let k = k0 + dk * i as f64;
            m.push(stable_expected_shortfall(self.alpha, k, &self.spec)?);
            slope.push(self.cdf1(k)?);
        }
        Ok(Some(EminTable { p, c, k0, dk, m, slope }))
    }

    fn breakpoints(&self, t: f64) -> Vec<f64> {
        let s = self.scale(t);
        [-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 10.0, 30.0, 100.0]
            .iter()
            .map(|k| k * s)
            .collect()
    }

    fn sample_increment(&self, dt: f64, rng: &mut PathRng) -> f64 {
        self.scale(dt) * cms_sample(self.alpha, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tight() -> QuadratureSpec {
        QuadratureSpec::with_tolerances(1e-13, 1e-11)
    }

    #[test]
    fn rejects_alpha_outside_range() {
        assert!(StableModel::new(1.0).is_err());
        assert!(StableModel::new(2.0).is_err());
        assert!(stable_density(0.5, 0.0, 1.0, &tight()).is_err());
    }

    #[test]
    fn integral_and_inversion_densities_agree() {
        for alpha in [1.2, 1.5, 1.8] {
            let m = StableModel::new(alpha).unwrap();
            for x in [-2.0, -0.7, -1e-3, 0.0, 0.3, 1.0, 4.0, 12.0] {
                let a = m.density1(x).unwrap();
                let b = stable_density(alpha, x, 1.0, &tight()).unwrap();
                assert!((a - b).abs() < 1e-10, "alpha {alpha} x {x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn integral_and_inversion_cdfs_agree() {
        for alpha in [1.2, 1.5, 1.8] {
            let m = StableModel::new(alpha).unwrap();
            for x in [-2.0, -0.5, 0.0, 0.5, 2.0, 8.0] {
                let a = m.cdf1(x).unwrap();
                let b = stable_cdf(alpha, x, 1.0, &tight()).unwrap();
                assert!((a - b).abs() < 1e-10, "alpha {alpha} x {x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn shortfall_matches_integrated_cdf() {
        let m = StableModel::new(1.5).unwrap();
        for k in [-1.0, 0.0, 0.8] {
            // m(k) = int_{-inf}^k F(w) dw; the left tail is super-exponentially light.
            let q = try_integrate_breakpoints(|w| m.cdf1(w), &[k - 12.0, k - 4.0, k - 1.0, k], &tight())
                .unwrap()
                .value;
            let e = stable_expected_shortfall(1.5, k, &tight()).unwrap();
            assert!((e - q).abs() < 1e-9, "k {k}: {e} vs {q}");
        }
    }

    #[test]
    fn table_matches_direct_expected_min() {
        let m = StableModel::new(1.6).unwrap();
        for c in [-0.5, 0.0, 1.5] {
            let tab = m.expected_min_table(c, 2.0).unwrap().unwrap();
            for s in [1e-6, 0.01, 0.3, 1.0, 2.0] {
                let a = tab.eval(s);
                let b = m.expected_min(c, s).unwrap();
                assert!((a - b).abs() < 1e-9, "c {c} s {s}: {a} vs {b}");
            }
        }
    }
}
