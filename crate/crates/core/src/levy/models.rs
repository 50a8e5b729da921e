use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{require_positive, Result};
use crate::mc::PathRng;
use crate::numerics::{
    gamma_p, gamma_q, integrate_power_singular, ln_gamma, std_normal_cdf, std_normal_pdf, std_normal_tail,
    QuadratureSpec,
};

use super::{Edge, EminTable, LevyModel, PathKind, SpectralSign};

/// `E min(0, X)` for `X ~ N(mu, sd^2)`.
fn normal_expected_min(mu: f64, sd: f64) -> f64 {
    if sd == 0.0 {
        return mu.min(0.0);
    }
    mu * std_normal_cdf(-mu / sd) - sd * std_normal_pdf(mu / sd)
}

/// `ln G` for `G ~ Gamma(shape, 1)`, accurate for tiny shapes where `G` underflows.
pub(crate) fn ln_gamma_variate(shape: f64, rng: &mut PathRng) -> f64 {
    if shape >= 1.0 {
        let g: f64 = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
        return g.ln();
    }
    // G = G' U^(1/shape) with G' ~ Gamma(1 + shape).
    let g: f64 = Gamma::new(1.0 + shape, 1.0).expect("positive shape").sample(rng);
    let u: f64 = rng.random::<f64>();
    g.ln() + (1.0 - u).ln() / shape
}

/// Standard Brownian motion.
#[derive(Debug, Clone, Copy, Default)]
pub struct BrownianModel;

impl LevyModel for BrownianModel {
    fn name(&self) -> &'static str {
        "brownian"
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        Vec::new()
    }

    fn spectral_sign(&self) -> SpectralSign {
        SpectralSign::Positive
    }

    fn supports(&self, _sign: SpectralSign) -> bool {
        true
    }

    fn density(&self, v: f64, t: f64) -> Result<f64> {
        let sd = t.sqrt();
        Ok(std_normal_pdf(v / sd) / sd)
    }

    fn ln_density(&self, v: f64, t: f64) -> Result<f64> {
        Ok(-0.5 * v * v / t - 0.5 * (2.0 * std::f64::consts::PI * t).ln())
    }

    fn tail(&self, v: f64, t: f64) -> Result<f64> {
        Ok(std_normal_tail(v / t.sqrt()))
    }

    fn cdf(&self, v: f64, t: f64) -> Result<f64> {
        Ok(std_normal_cdf(v / t.sqrt()))
    }

    fn mean(&self, _t: f64) -> f64 {
        0.0
    }

    fn expected_min(&self, c: f64, s: f64) -> Result<f64> {
        Ok(normal_expected_min(-c * s, s.sqrt()))
    }

    fn breakpoints(&self, t: f64) -> Vec<f64> {
        let sd = t.sqrt();
        [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|k| k * sd)
            .collect()
    }

    fn path_kind(&self) -> PathKind {
        PathKind::Gaussian
    }

    fn sample_increment(&self, dt: f64, rng: &mut PathRng) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        dt.sqrt() * z
    }
}

/// Gamma process: `Z(t) ~ Gamma(shape t, rate lambda)`.
#[derive(Debug, Clone, Copy)]
pub struct GammaModel {
    pub lambda: f64,
}

impl GammaModel {
    pub fn new(lambda: f64) -> Result<Self> {
        require_positive("lambda", lambda)?;
        Ok(Self { lambda })
    }

    fn gamma_bulk(&self, t: f64) -> Vec<f64> {
        let m = t / self.lambda;
        let sd = t.sqrt() / self.lambda;
        let mut p: Vec<f64> = [-2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0, 16.0]
            .iter()
            .map(|k| m + k * sd)
            .filter(|&v| v > 0.0)
            .collect();
        p.push(m.min(1.0 / self.lambda));
        p.sort_by(f64::total_cmp);
        p.dedup();
        p
    }
}

impl LevyModel for GammaModel {
    fn name(&self) -> &'static str {
        "gamma"
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("lambda", self.lambda)]
    }

    fn spectral_sign(&self) -> SpectralSign {
        SpectralSign::Positive
    }

    fn density(&self, v: f64, t: f64) -> Result<f64> {
        Ok(self.ln_density(v, t)?.exp())
    }

    fn ln_density(&self, v: f64, t: f64) -> Result<f64> {
        if v <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let l = self.lambda;
        Ok(t * l.ln() - ln_gamma(t) + (t - 1.0) * v.ln() - l * v)
    }

    fn tail(&self, v: f64, t: f64) -> Result<f64> {
        Ok(gamma_q(t, self.lambda * v))
    }

    fn cdf(&self, v: f64, t: f64) -> Result<f64> {
        Ok(gamma_p(t, self.lambda * v))
    }

    fn mean(&self, t: f64) -> f64 {
        t / self.lambda
    }

    /// `-E (cs - Z(s))^+ = -(cs P(s, lambda cs) - (s / lambda) P(s + 1, lambda cs))`.
    fn expected_min(&self, c: f64, s: f64) -> Result<f64> {
        if c <= 0.0 {
            return Ok(0.0);
        }
        let k = c * s;
        let lk = self.lambda * k;
        Ok(-(k * gamma_p(s, lk) - s / self.lambda * gamma_p(s + 1.0, lk)).max(0.0))
    }

    fn edge(&self) -> Option<Edge> {
        Some(Edge::Lower)
    }

    fn breakpoints(&self, t: f64) -> Vec<f64> {
        self.gamma_bulk(t)
    }

    fn immediately_exceeds(&self, c: f64) -> bool {
        c <= 0.0
    }

    fn path_kind(&self) -> PathKind {
        PathKind::Increasing
    }

    fn sample_increment(&self, dt: f64, rng: &mut PathRng) -> f64 {
        ln_gamma_variate(dt, rng).exp() / self.lambda
    }

    /// The midpoint fraction of a gamma bridge over a step of length `h` is `Beta(h/2, h/2)`.
    fn bridge_fraction(&self, h: f64, rng: &mut PathRng) -> Option<f64> {
        let a = ln_gamma_variate(0.5 * h, rng);
        let b = ln_gamma_variate(0.5 * h, rng);
        Some(1.0 / (1.0 + (b - a).exp()))
    }
}

/// Gamma process plus an independent `sigma`-scaled Brownian motion.
#[derive(Debug, Clone, Copy)]
pub struct PerturbedGammaModel {
    pub lambda: f64,
    pub sigma: f64,
    gamma: GammaModel,
    spec: QuadratureSpec,
}

impl PerturbedGammaModel {
    pub fn new(lambda: f64, sigma: f64) -> Result<Self> {
        require_positive("sigma", sigma)?;
        let spec = QuadratureSpec::with_tolerances(1e-13, 1e-10);
        Ok(Self {
            lambda,
            sigma,
            gamma: GammaModel::new(lambda)?,
            spec,
        })
    }

    /// Tolerances for the inner convolution integrals.
    pub fn with_spec(mut self, spec: QuadratureSpec) -> Self {
        self.spec = spec;
        self
    }

    /// `E h(G(t))` for the gamma component, with `h` negligible beyond `hi`.
    /// `center` locates the Gaussian kernel so its bulk is resolved.
    fn gamma_expectation(&self, t: f64, hi: f64, center: f64, h: &dyn Fn(f64) -> f64) -> Result<f64> {
        let l = self.lambda;
        let norm = t * l.ln() - ln_gamma(t);
        let g = |w: f64| Ok(h(w) * (norm - l * w).exp());
        let sd = self.sd(t);
        let mut pts: Vec<f64> = self.gamma.gamma_bulk(t);
        pts.extend([-6.0, -2.0, 0.0, 2.0, 6.0].iter().map(|k| center + k * sd));
        Ok(integrate_power_singular(g, t, hi, &pts, &self.spec)?.value)
    }

    fn sd(&self, t: f64) -> f64 {
        self.sigma * t.sqrt()
    }
}

/// `(1 / (sigma sqrt(t))) int_0^inf phi((u - w) / (sigma sqrt(t))) f_gamma(w, t) dw`.
pub fn perturbed_gamma_density(lambda: f64, sigma: f64, u: f64, t: f64, spec: &QuadratureSpec) -> Result<f64> {
    require_positive("t", t)?;
    PerturbedGammaModel::new(lambda, sigma)?.with_spec(*spec).density(u, t)
}

impl LevyModel for PerturbedGammaModel {
    fn name(&self) -> &'static str {
        "perturbed-gamma"
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("lambda", self.lambda), ("sigma", self.sigma)]
    }

    fn spectral_sign(&self) -> SpectralSign {
        SpectralSign::Positive
    }

    fn density(&self, v: f64, t: f64) -> Result<f64> {
        let sd = self.sd(t);
        let hi = v.max(0.0) + 40.0 * sd;
        self.gamma_expectation(t, hi, v, &|w| std_normal_pdf((v - w) / sd) / sd)
    }

    fn tail(&self, v: f64, t: f64) -> Result<f64> {
        let sd = self.sd(t);
        let hi = v.max(0.0) + 40.0 * sd;
        let head = self.gamma_expectation(t, hi, v, &|w| std_normal_tail((v - w) / sd))?;
        Ok(head + gamma_q(t, self.lambda * hi))
    }

    fn cdf(&self, v: f64, t: f64) -> Result<f64> {
        let sd = self.sd(t);
        if v + 40.0 * sd <= 0.0 {
            return Ok(0.0);
        }
        let hi = v + 40.0 * sd;
        self.gamma_expectation(t, hi, v, &|w| std_normal_cdf((v - w) / sd))
    }

    fn mean(&self, t: f64) -> f64 {
        t / self.lambda
    }

    fn expected_min(&self, c: f64, s: f64) -> Result<f64> {
        let sd = self.sd(s);
        let hi = (c * s).max(0.0) + 40.0 * sd;
        Ok(self
            .gamma_expectation(s, hi, c * s, &|w| normal_expected_min(w - c * s, sd))?
            .min(0.0))
    }

    fn breakpoints(&self, t: f64) -> Vec<f64> {
        let m = self.mean(t);
        let sd = (t / (self.lambda * self.lambda) + self.sigma * self.sigma * t).sqrt();
        [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0, 16.0]
            .iter()
            .map(|k| m + k * sd)
            .collect()
    }

    fn sample_increment(&self, dt: f64, rng: &mut PathRng) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.gamma.sample_increment(dt, rng) + self.sigma * dt.sqrt() * z
    }
}

/// The mirror image `-Z` of a model, flipping the direction of its jumps.
#[derive(Debug, Clone, Copy)]
pub struct Negated<M>(pub M);

impl<M: LevyModel> LevyModel for Negated<M> {
    fn name(&self) -> &'static str {
        match self.0.name() {
            "brownian" => "neg-brownian",
            "gamma" => "neg-gamma",
            "stable" => "neg-stable",
            "perturbed-gamma" => "neg-perturbed-gamma",
            _ => "negated",
        }
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        self.0.params()
    }

    fn spectral_sign(&self) -> SpectralSign {
        match self.0.spectral_sign() {
            SpectralSign::Positive => SpectralSign::Negative,
            SpectralSign::Negative => SpectralSign::Positive,
        }
    }

    fn supports(&self, sign: SpectralSign) -> bool {
        let flipped = match sign {
            SpectralSign::Positive => SpectralSign::Negative,
            SpectralSign::Negative => SpectralSign::Positive,
        };
        self.0.supports(flipped)
    }

    fn density(&self, v: f64, t: f64) -> Result<f64> {
        self.0.density(-v, t)
    }

    fn ln_density(&self, v: f64, t: f64) -> Result<f64> {
        self.0.ln_density(-v, t)
    }

    fn tail(&self, v: f64, t: f64) -> Result<f64> {
        self.0.cdf(-v, t)
    }

    fn cdf(&self, v: f64, t: f64) -> Result<f64> {
        self.0.tail(-v, t)
    }

    fn mean(&self, t: f64) -> f64 {
        -self.0.mean(t)
    }

    /// `E min(0, -X) = E min(0, X) - E X` with `X = Z(s) + c s`.
    fn expected_min(&self, c: f64, s: f64) -> Result<f64> {
        Ok((self.0.expected_min(-c, s)? - self.0.mean(s) - c * s).min(0.0))
    }

    fn expected_min_table(&self, _c: f64, _t_max: f64) -> Result<Option<EminTable>> {
        Ok(None)
    }

    fn edge(&self) -> Option<Edge> {
        self.0.edge().map(|e| match e {
            Edge::Lower => Edge::Upper,
            Edge::Upper => Edge::Lower,
        })
    }

    fn breakpoints(&self, t: f64) -> Vec<f64> {
        let mut p: Vec<f64> = self.0.breakpoints(t).iter().map(|v| -v).collect();
        p.reverse();
        p
    }

    fn immediately_exceeds(&self, c: f64) -> bool {
        match self.0.path_kind() {
            PathKind::Increasing => c < 0.0,
            PathKind::Decreasing => c <= 0.0,
            _ => true,
        }
    }

    fn path_kind(&self) -> PathKind {
        match self.0.path_kind() {
            PathKind::Increasing => PathKind::Decreasing,
            PathKind::Decreasing => PathKind::Increasing,
            PathKind::Gaussian => PathKind::Gaussian,
            PathKind::General => PathKind::General,
        }
    }

    fn sample_increment(&self, dt: f64, rng: &mut PathRng) -> f64 {
        -self.0.sample_increment(dt, rng)
    }

    fn bridge_fraction(&self, h: f64, rng: &mut PathRng) -> Option<f64> {
        self.0.bridge_fraction(h, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::StreamFactory;

    #[test]
    fn gamma_unit_time_is_exponential() {
        let m = GammaModel::new(1.7).unwrap();
        for v in [0.1, 0.5, 1.0, 3.0] {
            let d = m.density(v, 1.0).unwrap();
            assert!((d - 1.7 * (-1.7 * v).exp()).abs() < 1e-13);
        }
        assert_eq!(m.density(-0.1, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn gamma_expected_min_matches_quadrature() {
        let m = GammaModel::new(1.3).unwrap();
        for (c, s) in [(1.5, 0.3), (0.5, 2.0), (2.0, 0.01)] {
            let k = c * s;
            let q = integrate_power_singular(
                |w| Ok((w - k).min(0.0) * (s * 1.3f64.ln() - ln_gamma(s) - 1.3 * w).exp()),
                s,
                k,
                &[],
                &QuadratureSpec::with_tolerances(1e-15, 1e-12),
            )
            .unwrap()
            .value;
            let e = m.expected_min(c, s).unwrap();
            assert!((e - q).abs() < 1e-11, "{c} {s}: {e} vs {q}");
        }
    }

    #[test]
    fn brownian_expected_min_closed_form() {
        // E min(0, B(1) - 0) = -1 / sqrt(2 pi).
        let e = BrownianModel.expected_min(0.0, 1.0).unwrap();
        assert!((e + 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn small_shape_gamma_variates_are_finite() {
        let f = StreamFactory::new(1, 0);
        let mut rng = f.path(0);
        for _ in 0..1000 {
            let l = ln_gamma_variate(1e-4, &mut rng);
            assert!(l < 50.0 && !l.is_nan());
        }
    }

    #[test]
    fn negated_flips_sign_and_edge() {
        let n = Negated(GammaModel::new(1.0).unwrap());
        assert_eq!(n.spectral_sign(), SpectralSign::Negative);
        assert_eq!(n.edge(), Some(Edge::Upper));
        assert!((n.density(-1.0, 1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!((n.tail(-1.0, 1.0).unwrap() - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
        assert!(!n.immediately_exceeds(0.5));
        assert!(n.immediately_exceeds(-0.5));
    }
}
