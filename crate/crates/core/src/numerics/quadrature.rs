//! Adaptive 21-point Gauss-Kronrod quadrature with global bisection.

use crate::error::{invalid, Error, Result};

use super::normal::std_normal_tail;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularityTransform {
    None,
    /// `s = b - w^2` removes an inverse square-root singularity at the upper endpoint.
    SqrtEndpoint,
    /// Splits at the midpoint and applies the square-root map at both ends.
    SqrtBothEndpoints,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Mass allowed beyond the truncation point of a semi-infinite range.
    pub truncation_tail_mass: f64,
    pub singularity_transform: SingularityTransform,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 2000,
            truncation_tail_mass: 1e-13,
            singularity_transform: SingularityTransform::None,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    /// Same spec with both tolerances divided by `factor`.
    pub fn tighter(&self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol / factor,
            rel_tol: self.rel_tol / factor,
            truncation_tail_mass: self.truncation_tail_mass / factor,
            ..*self
        }
    }

    pub fn with_transform(&self, t: SingularityTransform) -> Self {
        Self {
            singularity_transform: t,
            ..*self
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.abs_tol >= 0.0 && self.rel_tol >= 0.0) || (self.abs_tol == 0.0 && self.rel_tol == 0.0) {
            return Err(invalid("quadrature tolerances must be nonnegative and not both zero"));
        }
        if self.max_subdivisions == 0 {
            return Err(invalid("max_subdivisions must be positive"));
        }
        if !(self.truncation_tail_mass > 0.0) {
            return Err(invalid("truncation_tail_mass must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub err_est: f64,
    pub evaluations: usize,
}

/// Bound on the mass of `|f|` beyond a truncation point.
pub enum TailEnvelope<'a> {
    /// `|f(x)| <= s exp(-(x - a)^2 / 2)` with `s` probed near the lower limit `a`.
    GaussianLike,
    /// `|f(x)| <= s exp(-rate (x - a))` with `s` probed near the lower limit `a`.
    Exponential { rate: f64 },
    /// Caller-supplied `X -> bound on int_X^inf |f|`, nonincreasing in `X`.
    Custom(&'a dyn Fn(f64) -> f64),
}

pub enum Upper<'a> {
    Finite(f64),
    Infinite(TailEnvelope<'a>),
}

/// `int_lower^upper f` to `max(abs_tol, rel_tol |I|)`.
///
/// A semi-infinite range is truncated where the envelope's tail mass falls
/// below `truncation_tail_mass`; that mass is added to the error estimate.
pub fn integrate_1d<F>(f: F, lower: f64, upper: Upper<'_>, spec: &QuadratureSpec) -> Result<Quadrature>
where
    F: Fn(f64) -> f64,
{
    match upper {
        Upper::Finite(b) => integrate_breakpoints(f, &[lower, b], spec),
        Upper::Infinite(env) => {
            spec.validate()?;
            if spec.singularity_transform != SingularityTransform::None {
                return Err(invalid("singularity transforms need a finite upper limit"));
            }
            if !lower.is_finite() {
                return Err(invalid("lower limit must be finite"));
            }
            let scale = [0.0, 0.25, 0.5, 1.0, 2.0]
                .iter()
                .map(|d| f(lower + d).abs())
                .fold(0.0, f64::max);
            let tail = |x: f64| -> f64 {
                match &env {
                    TailEnvelope::GaussianLike => {
                        scale * (2.0 * std::f64::consts::PI).sqrt() * std_normal_tail(x - lower)
                    }
                    TailEnvelope::Exponential { rate } => scale * (-rate * (x - lower)).exp() / rate,
                    TailEnvelope::Custom(g) => g(x),
                }
            };
            if let TailEnvelope::Exponential { rate } = env {
                if !(rate > 0.0) {
                    return Err(invalid("exponential envelope needs a positive rate"));
                }
            }
            let mut width = 1.0;
            let mut x = lower + width;
            while tail(x) > spec.truncation_tail_mass {
                width *= 2.0;
                x = lower + width;
                if width > 1e12 {
                    return Err(invalid("tail envelope never falls below the truncation budget"));
                }
            }
            let mut q = integrate_breakpoints(f, &[lower, x], spec)?;
            q.err_est += tail(x);
            Ok(q)
        }
    }
}

/// `int_{p_0}^{p_last} f` with the range pre-split at the given points.
pub fn integrate_breakpoints<F>(f: F, points: &[f64], spec: &QuadratureSpec) -> Result<Quadrature>
where
    F: Fn(f64) -> f64,
{
    try_integrate_breakpoints(|x| Ok(f(x)), points, spec)
}

/// Fallible-integrand variant; the first integrand error aborts the integration.
pub fn try_integrate_breakpoints<F>(f: F, points: &[f64], spec: &QuadratureSpec) -> Result<Quadrature>
where
    F: Fn(f64) -> Result<f64>,
{
    spec.validate()?;
    if points.len() < 2 {
        return Err(invalid("need at least two integration limits"));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(invalid("integration limits must be finite"));
    }
    if points.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("breakpoints must be nondecreasing"));
    }
    let a = points[0];
    let b = *points.last().unwrap();
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            err_est: 0.0,
            evaluations: 0,
        });
    }
    match spec.singularity_transform {
        SingularityTransform::None => adaptive(&f, points, spec),
        SingularityTransform::SqrtEndpoint => {
            let mut w: Vec<f64> = points.iter().rev().map(|p| (b - p).max(0.0).sqrt()).collect();
            w[0] = 0.0;
            adaptive(&|t: f64| Ok(f(b - t * t)? * 2.0 * t), &w, spec)
        }
        SingularityTransform::SqrtBothEndpoints => {
            let m = 0.5 * (a + b);
            let mut lo = vec![0.0];
            lo.extend(points.iter().filter(|&&p| p > a && p < m).map(|p| (p - a).sqrt()));
            lo.push((m - a).sqrt());
            let mut hi = vec![0.0];
            hi.extend(points.iter().rev().filter(|&&p| p > m && p < b).map(|p| (b - p).sqrt()));
            hi.push((b - m).sqrt());
            let q1 = adaptive(&|t: f64| Ok(f(a + t * t)? * 2.0 * t), &lo, spec)?;
            let q2 = adaptive(&|t: f64| Ok(f(b - t * t)? * 2.0 * t), &hi, spec)?;
            Ok(Quadrature {
                value: q1.value + q2.value,
                err_est: q1.err_est + q2.err_est,
                evaluations: q1.evaluations + q2.evaluations,
            })
        }
    }
}

/// `int_0^hi g(z) z^(h-1) dz` for `h > 0`, robust to the endpoint singularity when `h < 1`.
///
/// Below a tiny cutoff the power is absorbed by `v = z^h`; above it the range is
/// integrated in `ln z`, which spreads the logarithmically distributed mass of
/// small shapes evenly.
pub fn integrate_power_singular<F>(
    g: F,
    h: f64,
    hi: f64,
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> Result<Quadrature>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(h > 0.0) || !h.is_finite() {
        return Err(invalid(format!("power exponent must be positive, got {h}")));
    }
    if !(hi >= 0.0) || !hi.is_finite() {
        return Err(invalid("upper limit must be finite and nonnegative"));
    }
    if hi == 0.0 {
        return Ok(Quadrature {
            value: 0.0,
            err_est: 0.0,
            evaluations: 0,
        });
    }
    let mut pts: Vec<f64> = breakpoints.iter().copied().filter(|&p| p > 0.0 && p < hi).collect();
    pts.sort_by(f64::total_cmp);
    if h >= 1.0 {
        let mut all = vec![0.0];
        all.extend(&pts);
        all.push(hi);
        return try_integrate_breakpoints(|z| Ok(g(z)? * z.powf(h - 1.0)), &all, spec);
    }
    let scale = pts.first().copied().unwrap_or(hi).min(1.0);
    let cut = 1e-14 * scale;
    let half = spec.tighter(2.0);
    let vmax = cut.powf(h);
    let qa = try_integrate_breakpoints(|v| Ok(g(v.powf(1.0 / h))? / h), &[0.0, vmax], &half)?;
    let mut lp = vec![cut.ln()];
    lp.extend(pts.iter().map(|p| p.ln()));
    lp.push(hi.ln());
    let qb = try_integrate_breakpoints(
        |r| {
            let z = r.exp();
            Ok(g(z)? * (h * r).exp())
        },
        &lp,
        &half,
    )?;
    Ok(Quadrature {
        value: qa.value + qb.value,
        err_est: qa.err_est + qb.err_est,
        evaluations: qa.evaluations + qb.evaluations,
    })
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    frozen: bool,
}

fn qk21<F>(f: &F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut resg = 0.0;
    let mut resk = WGK[10] * fc;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = resk * 0.5;
    let mut resasc = WGK[10] * (fc - reskh).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let result = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    if !result.is_finite() || !err.is_finite() {
        return Err(invalid(format!("integrand is not finite on [{a}, {b}]")));
    }
    Ok((result, err))
}

fn adaptive<F>(f: &F, points: &[f64], spec: &QuadratureSpec) -> Result<Quadrature>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut segs: Vec<Segment> = Vec::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            let (value, err) = qk21(f, w[0], w[1])?;
            segs.push(Segment {
                a: w[0],
                b: w[1],
                value,
                err,
                frozen: false,
            });
        }
    }
    let mut evaluations = 21 * segs.len();
    loop {
        let value: f64 = segs.iter().map(|s| s.value).sum();
        let err: f64 = segs.iter().map(|s| s.err).sum();
        let target = spec.abs_tol.max(spec.rel_tol * value.abs());
        if err <= target {
            return Ok(Quadrature {
                value,
                err_est: err,
                evaluations,
            });
        }
        let worst = segs
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.frozen)
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i);
        let Some(i) = worst else {
            return Err(Error::NonConvergence { value, err_est: err });
        };
        if segs.len() >= spec.max_subdivisions {
            return Err(Error::NonConvergence { value, err_est: err });
        }
        let s = segs[i];
        let m = 0.5 * (s.a + s.b);
        if !(m > s.a && m < s.b) || (s.b - s.a) < 1e3 * f64::EPSILON * s.a.abs().max(s.b.abs()) {
            segs[i].frozen = true;
            continue;
        }
        let (v1, e1) = qk21(f, s.a, m)?;
        let (v2, e2) = qk21(f, m, s.b)?;
        evaluations += 42;
        segs[i] = Segment {
            a: s.a,
            b: m,
            value: v1,
            err: e1,
            frozen: false,
        };
        segs.push(Segment {
            a: m,
            b: s.b,
            value: v2,
            err: e2,
            frozen: false,
        });
    }
}
