use crate::error::{require_positive, Result};
use crate::numerics::{
    gamma_q, integrate_power_singular, ln_gamma, try_integrate_breakpoints, QuadratureSpec, SingularityTransform,
};

/// Supremum functional of the gamma process written out explicitly:
///
/// `Q(T, lambda (u + cT)) + lambda^T e^(-lambda u) int_0^T ds int_0^(c(T-s))
///  (u + cs)^(s-1) e^(-c lambda s) / (Gamma(s) Gamma(T-s+1)) (c(T-s) - z) z^(T-s-1) e^(-lambda z) dz`.
///
/// The inner integral is taken directly rather than through incomplete gamma
/// functions, so this is an independent check on [`super::l_functional`].
pub fn gamma_l_closed(lambda: f64, c: f64, t: f64, u: f64, spec: &QuadratureSpec) -> Result<f64> {
    require_positive("lambda", lambda)?;
    require_positive("c", c)?;
    require_positive("T", t)?;
    require_positive("u", u)?;
    let head = gamma_q(t, lambda * (u + c * t));
    let inner_spec = spec.tighter(10.0);
    let outer = |s: f64| -> Result<f64> {
        let h = t - s;
        if h <= 0.0 || s <= 0.0 {
            return Ok(0.0);
        }
        let top = c * h;
        let q = integrate_power_singular(|z| Ok((top - z) * (-lambda * z).exp()), h, top, &[], &inner_spec)?;
        let ln_pre = t * lambda.ln() - lambda * u + (s - 1.0) * (u + c * s).ln()
            - c * lambda * s
            - ln_gamma(s)
            - ln_gamma(h + 1.0);
        Ok(ln_pre.exp() * q.value)
    };
    let pts: Vec<f64> = (0..=16).map(|i| t * i as f64 / 16.0).collect();
    let body = try_integrate_breakpoints(
        outer,
        &pts,
        &spec.with_transform(SingularityTransform::SqrtBothEndpoints),
    )?;
    Ok(head + body.value)
}
