use crate::error::{invalid, require_finite, require_positive, Result};
use crate::numerics::{integrate_power_singular, try_integrate_breakpoints, QuadratureSpec, SingularityTransform};

use super::{BarrierCase, Edge, EminTable, LevyModel, SpectralSign, TwoLineBarrier};

/// Range points with geometric clustering toward both ends, where time
/// integrands carry `h^(-1/2)` singularities or first-passage spikes.
fn clustered(lo: f64, hi: f64) -> Vec<f64> {
    let d = hi - lo;
    let mut p = vec![lo];
    for k in [8, 6, 4, 2] {
        p.push(lo + d * 10f64.powi(-k));
    }
    p.push(lo + 0.5 * d);
    for k in [2, 4, 6, 8] {
        p.push(hi - d * 10f64.powi(-k));
    }
    p.push(hi);
    p
}

/// Smallest distance to a support edge used when evaluating power-scaled
/// integrands, so `r -> 0` reads the (finite) limit instead of `0 * inf`.
const R_FLOOR: f64 = 1e-300;

/// `int_lo^hi g(s) density(a + b s, s) ds`.
///
/// For models with a support edge the density carries `|a + b s|^(s - 1)`,
/// which blows up where the argument crosses 0 at `s* = -a / b`; that side is
/// integrated in `r = |s - s*|` with the power absorbed exactly.
fn time_integral(
    model: &dyn LevyModel,
    lo: f64,
    hi: f64,
    a: f64,
    b: f64,
    g: &dyn Fn(f64) -> Result<f64>,
    spec: &QuadratureSpec,
) -> Result<f64> {
    time_integral_with(model, lo, hi, a, b, &[], g, spec)
}

/// As [`time_integral`] with extra breakpoints, used where they fall inside the range.
#[allow(clippy::too_many_arguments)]
fn time_integral_with(
    model: &dyn LevyModel,
    lo: f64,
    hi: f64,
    a: f64,
    b: f64,
    extra: &[f64],
    g: &dyn Fn(f64) -> Result<f64>,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(hi > lo) {
        return Ok(0.0);
    }
    let plain = |l: f64, h: f64| -> Result<f64> {
        let f = |s: f64| -> Result<f64> {
            let d = model.density(a + b * s, s)?;
            if d == 0.0 {
                return Ok(0.0);
            }
            Ok(g(s)? * d)
        };
        let mut pts = clustered(l, h);
        pts.extend(extra.iter().copied().filter(|&p| p > l && p < h));
        pts.sort_by(f64::total_cmp);
        let q = try_integrate_breakpoints(f, &pts, &spec.with_transform(SingularityTransform::SqrtBothEndpoints))?;
        Ok(q.value)
    };
    let Some(edge) = model.edge() else {
        return plain(lo, hi);
    };
    let side = match edge {
        Edge::Lower => 1.0,
        Edge::Upper => -1.0,
    };
    if b == 0.0 {
        return if side * a > 0.0 { plain(lo, hi) } else { Ok(0.0) };
    }
    let s_star = -a / b;
    // Positive-density side is `s > s*` when `side * b > 0`.
    let after = side * b > 0.0;
    let (l, h) = if after {
        (lo.max(s_star), hi)
    } else {
        (lo, hi.min(s_star))
    };
    if !(h > l) {
        return Ok(0.0);
    }
    let singular_end = if after { l } else { h };
    if !(singular_end == s_star && s_star > 0.0) {
        return plain(l, h);
    }
    let len = h - l;
    let scale = b.abs();
    let f = |r: f64| -> Result<f64> {
        let r = r.max(R_FLOOR);
        let s = if after { s_star + r } else { s_star - r };
        let v = side * scale * r;
        let ld = model.ln_density(v, s)?;
        if ld == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        Ok(g(s)? * (ld - (s_star - 1.0) * r.ln()).exp())
    };
    let pts: Vec<f64> = (1..=8).map(|k| len * (1.0 - 10f64.powi(-k))).collect();
    Ok(integrate_power_singular(f, s_star, len, &pts, spec)?.value)
}

/// `int_lo^hi g(w) density(w, t) dw`, with edge models integrated in the
/// distance to the edge so the `w^(t - 1)` singularity is absorbed exactly.
pub fn density_integral(
    model: &dyn LevyModel,
    t: f64,
    lo: f64,
    hi: f64,
    g: &dyn Fn(f64) -> Result<f64>,
    spec: &QuadratureSpec,
) -> Result<f64> {
    density_integral_with(model, t, lo, hi, &[], g, spec)
}

/// As [`density_integral`] with extra breakpoints for features of `g`.
fn density_integral_with(
    model: &dyn LevyModel,
    t: f64,
    lo: f64,
    hi: f64,
    extra: &[f64],
    g: &dyn Fn(f64) -> Result<f64>,
    spec: &QuadratureSpec,
) -> Result<f64> {
    require_positive("t", t)?;
    if lo.is_nan() || hi.is_nan() {
        return Err(invalid("integration limits must not be NaN"));
    }
    if !(hi > lo) {
        return Ok(0.0);
    }
    let mut bulk = model.breakpoints(t);
    bulk.extend_from_slice(extra);
    bulk.sort_by(f64::total_cmp);
    let with_points = |l: f64, h: f64| -> Vec<f64> {
        let mut p = vec![l];
        p.extend(bulk.iter().copied().filter(|&q| q > l && q < h));
        p.push(h);
        p
    };
    let plain = |l: f64, h: f64| -> Result<f64> {
        let f = |w: f64| -> Result<f64> {
            let d = model.density(w, t)?;
            if d == 0.0 {
                return Ok(0.0);
            }
            Ok(g(w)? * d)
        };
        Ok(try_integrate_breakpoints(f, &with_points(l, h), spec)?.value)
    };
    let Some(edge) = model.edge() else {
        return plain(lo, hi);
    };
    // Reflect so that the support is `w > 0`.
    let side = match edge {
        Edge::Lower => 1.0,
        Edge::Upper => -1.0,
    };
    let (l, h) = if side > 0.0 { (lo, hi) } else { (-hi, -lo) };
    if h <= 0.0 {
        return Ok(0.0);
    }
    if l > 0.0 {
        return plain(lo, hi);
    }
    let f = |r: f64| -> Result<f64> {
        let r = r.max(R_FLOOR);
        let ld = model.ln_density(side * r, t)?;
        if ld == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        Ok(g(side * r)? * (ld - (t - 1.0) * r.ln()).exp())
    };
    let pts: Vec<f64> = bulk.iter().map(|&q| side * q).filter(|&q| q > 0.0).collect();
    Ok(integrate_power_singular(f, t, h, &pts, spec)?.value)
}

enum EminSource {
    Direct,
    Table(EminTable),
}

/// First-passage probability `P(sup_{[0, T]} (Z(t) - c t) > u)` as a function of `u`
/// for fixed `(c, T)`, sharing the expected-minimum table across calls.
pub(crate) struct FirstPassage<'a> {
    model: &'a dyn LevyModel,
    sign: SpectralSign,
    c: f64,
    t: f64,
    emin: EminSource,
    spec: QuadratureSpec,
}

impl<'a> FirstPassage<'a> {
    pub(crate) fn new(
        model: &'a dyn LevyModel,
        sign: SpectralSign,
        c: f64,
        t: f64,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        require_finite("c", c)?;
        require_positive("T", t)?;
        if !model.supports(sign) {
            return Err(invalid(format!(
                "model {} is not spectrally {}",
                model.name(),
                sign.as_str()
            )));
        }
        let emin = match sign {
            SpectralSign::Positive => match model.expected_min_table(c, t)? {
                Some(tab) => EminSource::Table(tab),
                None => EminSource::Direct,
            },
            SpectralSign::Negative => EminSource::Direct,
        };
        Ok(Self {
            model,
            sign,
            c,
            t,
            emin,
            spec: *spec,
        })
    }

    fn expected_min(&self, s: f64) -> Result<f64> {
        match &self.emin {
            EminSource::Direct => self.model.expected_min(self.c, s),
            EminSource::Table(tab) => Ok(tab.eval(s)),
        }
    }

    /// Value at level `u`; levels below 0 are crossed at time 0.
    pub(crate) fn eval(&self, u: f64) -> Result<f64> {
        if u < 0.0 {
            return Ok(1.0);
        }
        let (c, t) = (self.c, self.t);
        match self.sign {
            SpectralSign::Positive => {
                let head = self.model.tail(u + c * t, t)?;
                let g = |s: f64| -> Result<f64> {
                    let h = t - s;
                    if h <= 0.0 {
                        return Ok(0.0);
                    }
                    Ok(self.expected_min(h)? / h)
                };
                let corr = time_integral(self.model, 0.0, t, u, c, &g, &self.spec)?;
                Ok(head - corr)
            }
            SpectralSign::Negative => {
                if u == 0.0 {
                    return Ok(if self.model.immediately_exceeds(c) { 1.0 } else { 0.0 });
                }
                let g = |s: f64| -> Result<f64> { Ok(u / s) };
                time_integral(self.model, 0.0, t, u, c, &g, &self.spec)
            }
        }
    }
}

/// `P(sup_{t in [0, T]} (Z(t) - c t) > u)` from the supremum formula of a
/// spectrally positive model:
///
/// `P(Z(T) - cT > u) - int_0^T E min(0, Z(T-s) - c(T-s)) / (T-s) f(u + cs, s) ds`.
pub fn l_functional(model: &dyn LevyModel, c: f64, t: f64, u: f64, spec: &QuadratureSpec) -> Result<f64> {
    first_passage(model, SpectralSign::Positive, c, t, u, spec)
}

/// Single-barrier crossing probability through the formula for `sign`:
/// the supremum functional for positive models, and the Kendall identity
/// `u int_0^T p(u + cs, s) / s ds` for negative ones.
pub fn first_passage(
    model: &dyn LevyModel,
    sign: SpectralSign,
    c: f64,
    t: f64,
    u: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    require_finite("u", u)?;
    if u < 0.0 {
        return Err(invalid(format!("u must be nonnegative, got {u}")));
    }
    FirstPassage::new(model, sign, c, t, spec)?.eval(u)
}

/// Simultaneous ruin probability `P(exists t <= T: Z(t) > max(x + c1 t, y + c2 t))`
/// using the formulas matching the model's jump direction.
pub fn psi_levy(model: &dyn LevyModel, b: &TwoLineBarrier, spec: &QuadratureSpec) -> Result<f64> {
    psi_levy_as(model, model.spectral_sign(), b, spec)
}

/// As [`psi_levy`] with the formula family chosen explicitly; Brownian motion
/// supports both.
pub fn psi_levy_as(
    model: &dyn LevyModel,
    sign: SpectralSign,
    b: &TwoLineBarrier,
    spec: &QuadratureSpec,
) -> Result<f64> {
    match b.case() {
        BarrierCase::First => FirstPassage::new(model, sign, b.c1, b.t, spec)?.eval(b.x),
        BarrierCase::Second => FirstPassage::new(model, sign, b.c2, b.t, spec)?.eval(b.y),
        BarrierCase::Crossing { xi } => crossing_case(model, sign, b, xi, spec),
    }
}

/// Before `xi` the second line is active, after it the first.
///
/// With `z = y + c2 xi - Z(xi)` the distance below the barrier at the switch,
/// `psi = P1 + int L1(z) q(z) dz - int L1(z) k(z) dz` where `P1` is crossing
/// the second line before `xi`, `L1` crossing the first line over the remaining
/// `T - xi`, `q` the density of `z`, and `k` the density of `z` jointly with an
/// earlier crossing, split at the last (positive) or first (negative) passage.
fn crossing_case(
    model: &dyn LevyModel,
    sign: SpectralSign,
    b: &TwoLineBarrier,
    xi: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let inner = spec.tighter(10.0);
    let (c1, c2, y) = (b.c1, b.c2, b.y);
    let rest = b.t - xi;
    let term1 = FirstPassage::new(model, sign, c2, xi, spec)?.eval(y)?;
    let after = FirstPassage::new(model, sign, c1, rest, &inner)?;

    let budget = spec.truncation_tail_mass.max(spec.abs_tol);
    let mut z_max: f64 = 1.0;
    while after.eval(z_max)? > budget {
        z_max *= 2.0;
        if z_max > 1e8 {
            return Err(invalid("first-passage tail never falls below the truncation budget"));
        }
    }
    let top = y + c2 * xi;
    let g2 = |w: f64| after.eval(top - w);
    // `L1` drops from near 1 to near 0 within a few `sqrt(T - xi)` of the barrier.
    let near_top: Vec<f64> = (1..=12).map(|k| top - z_max * 10f64.powi(-k)).collect();
    let term2 = density_integral_with(model, xi, top - z_max, top, &near_top, &g2, spec)?;

    // Both kernels are integrated in the time `h` elapsed since the crossing
    // of the second line, whose density peaks once `h` is long enough to cover
    // `z`; that scale reaches far below the resolution of `xi - h`.
    let decades: Vec<f64> = (1..=14)
        .flat_map(|k| {
            let d = xi * 10f64.powi(-k);
            [d, 3.0 * d, xi - d, xi - 3.0 * d]
        })
        .collect();
    let edge_time = -y / c2;
    let kernel = |z: f64| -> Result<f64> {
        let mut pts = decades.clone();
        let floor = 1e-2 * z * z;
        let mut d = xi * 1e-15;
        while d > floor && d > 1e-300 {
            pts.extend([d, 3.0 * d]);
            d *= 0.1;
        }
        if edge_time > 0.0 && edge_time < xi {
            pts.push(xi - edge_time);
        }
        let g = |h: f64| -> Result<f64> {
            let s = xi - h;
            if s <= 0.0 || h <= 0.0 {
                return Ok(0.0);
            }
            let before = model.density(y + c2 * s, s)?;
            Ok(match sign {
                SpectralSign::Positive => before * z / h,
                SpectralSign::Negative => before * y / s,
            })
        };
        time_integral_with(model, 0.0, xi, -z, c2, &pts, &g, &inner)
    };
    let z_hi = match (sign, model.edge()) {
        // Increasing paths can only sit below the second line after touching it when c2 > 0.
        (SpectralSign::Positive, Some(Edge::Lower)) => z_max.min(c2 * xi),
        _ => z_max,
    };
    let term3 = if z_hi > 0.0 {
        let f = |z: f64| -> Result<f64> {
            let k = kernel(z)?;
            if k == 0.0 {
                return Ok(0.0);
            }
            Ok(after.eval(z)? * k)
        };
        let mut pts = clustered(0.0, z_hi);
        pts.extend((-6..=20).map(|k| 2f64.powi(k)).filter(|&p| p < z_hi));
        pts.sort_by(f64::total_cmp);
        try_integrate_breakpoints(f, &pts, &spec.with_transform(SingularityTransform::SqrtBothEndpoints))?.value
    } else {
        0.0
    };
    Ok(term1 + term2 - term3)
}
