use std::f64::consts::{FRAC_1_SQRT_2, PI};

use libm::erfc;

use super::quadrature::{integrate_breakpoints, QuadratureSpec};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn std_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `Phi(x)`, accurate in the lower tail.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// `1 - Phi(x)`, accurate in the upper tail.
pub fn std_normal_tail(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// `ln(1 - Phi(x))` without underflow for large `x`.
pub fn ln_std_normal_tail(x: f64) -> f64 {
    if x < 25.0 {
        std_normal_tail(x).ln()
    } else {
        let z = 1.0 / (x * x);
        -0.5 * x * x - (x * (2.0 * PI).sqrt()).ln()
            + (1.0 - z * (1.0 - 3.0 * z * (1.0 - 5.0 * z * (1.0 - 7.0 * z)))).ln()
    }
}

/// Density of the standard bivariate normal with correlation `rho`.
pub fn bivariate_normal_pdf(x: f64, y: f64, rho: f64) -> f64 {
    let s = (1.0 - rho) * (1.0 + rho);
    let q = (x * x - 2.0 * rho * x * y + y * y) / s;
    (-0.5 * q).exp() / (2.0 * PI * s.sqrt())
}

/// `P(X > h, Y > k)` for a standard bivariate normal pair with correlation `rho`.
///
/// Uses the Drezner-Wesolowsky/Genz Gauss-Legendre scheme, absolute accuracy
/// near 1e-15. Results below 1e-7 are recomputed from the one-dimensional
/// representation `int_h^inf phi(x) Psi((k - rho x)/rho*) dx` so that far-tail
/// values keep their relative accuracy.
pub fn bivariate_normal_tail(h: f64, k: f64, rho: f64) -> f64 {
    assert!(
        (-1.0..=1.0).contains(&rho),
        "correlation must lie in [-1, 1], got {rho}"
    );
    if h.is_nan() || k.is_nan() {
        return f64::NAN;
    }
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return std_normal_tail(k);
    }
    if k == f64::NEG_INFINITY {
        return std_normal_tail(h);
    }
    if rho == 0.0 {
        return std_normal_tail(h) * std_normal_tail(k);
    }
    if rho == 1.0 {
        return std_normal_tail(h.max(k));
    }
    if rho == -1.0 {
        return (std_normal_tail(h) - std_normal_cdf(-k)).max(0.0);
    }
    let p = genz(h, k, rho);
    if p < 1e-7 {
        if let Some(q) = tail_by_quadrature(h, k, rho) {
            return q;
        }
    }
    p
}

const X6: [f64; 3] = [0.932_469_514_203_152_2, 0.661_209_386_466_264_7, 0.238_619_186_083_197];
const W6: [f64; 3] = [
    0.171_324_492_379_170_5,
    0.360_761_573_048_138_4,
    0.467_913_934_572_690_4,
];
const X12: [f64; 6] = [
    0.981_560_634_246_719_1,
    0.904_117_256_370_475,
    0.769_902_674_194_305,
    0.587_317_954_286_617_1,
    0.367_831_498_998_180_2,
    0.125_233_408_511_469_2,
];
const W12: [f64; 6] = [
    0.047_175_336_386_511_77,
    0.106_939_325_995_318_3,
    0.160_078_328_543_346_4,
    0.203_167_426_723_065_9,
    0.233_492_536_538_354_7,
    0.249_147_045_813_402_9,
];
const X20: [f64; 10] = [
    0.993_128_599_185_094_9,
    0.963_971_927_277_913_8,
    0.912_234_428_251_325_9,
    0.839_116_971_822_218_8,
    0.746_331_906_460_150_8,
    0.636_053_680_726_515,
    0.510_867_001_950_827_1,
    0.373_706_088_715_419_6,
    0.227_785_851_141_645_1,
    0.076_526_521_133_497_33,
];
const W20: [f64; 10] = [
    0.017_614_007_139_152_12,
    0.040_601_429_800_386_94,
    0.062_672_048_334_109_06,
    0.083_276_741_576_704_75,
    0.101_930_119_817_240_4,
    0.118_194_531_961_518_4,
    0.131_688_638_449_176_6,
    0.142_096_109_318_382_1,
    0.149_172_986_472_603_7,
    0.152_753_387_130_725_9,
];

fn genz(h: f64, k: f64, r: f64) -> f64 {
    let (x, w): (&[f64], &[f64]) = if r.abs() < 0.3 {
        (&X6, &W6)
    } else if r.abs() < 0.75 {
        (&X12, &W12)
    } else {
        (&X20, &W20)
    };
    let tp = 2.0 * PI;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin();
        for (xi, wi) in x.iter().zip(w) {
            for s in [-1.0, 1.0] {
                let sn = (asr * (1.0 + s * xi) / 2.0).sin();
                bvn += wi * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        bvn = bvn * asr / (2.0 * tp) + std_normal_tail(h) * std_normal_tail(k);
    } else {
        let mut k = k;
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        let a2 = (1.0 - r) * (1.0 + r);
        let mut a = a2.sqrt();
        let bs = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        bvn = a
            * (-(bs / a2 + hk) / 2.0).exp()
            * (1.0 - c * (bs - a2) * (1.0 - d * bs / 5.0) / 3.0 + c * d * a2 * a2 / 5.0);
        if hk > -160.0 {
            let b = bs.sqrt();
            bvn -= (-hk / 2.0).exp()
                * tp.sqrt()
                * std_normal_cdf(-b / a)
                * b
                * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a /= 2.0;
        for (xi, wi) in x.iter().zip(w) {
            for s in [-1.0, 1.0] {
                let xs = (a * (1.0 + s * xi)).powi(2);
                let rs = (1.0 - xs).sqrt();
                let asr = -(bs / xs + hk) / 2.0;
                if asr > -100.0 {
                    bvn += a
                        * wi
                        * asr.exp()
                        * ((-hk * xs / (2.0 * (1.0 + rs).powi(2))).exp() / rs - (1.0 + c * xs * (1.0 + d * xs)));
                }
            }
        }
        bvn = -bvn / tp;
        if r > 0.0 {
            bvn += std_normal_tail(h.max(k));
        } else {
            bvn = -bvn;
            if k > h {
                if h < 0.0 {
                    bvn += std_normal_cdf(k) - std_normal_cdf(h);
                } else {
                    bvn += std_normal_tail(h) - std_normal_tail(k);
                }
            }
        }
    }
    bvn.clamp(0.0, 1.0)
}

fn tail_by_quadrature(h: f64, k: f64, rho: f64) -> Option<f64> {
    let (h, k) = if k > h { (k, h) } else { (h, k) };
    let rs = ((1.0 - rho) * (1.0 + rho)).sqrt();
    let f = |x: f64| std_normal_pdf(x) * std_normal_tail((k - rho * x) / rs);
    let hi = (h.max(0.0).powi(2) + 120.0).sqrt();
    let scale = 1.0 / h.max(1.0);
    let mut points = vec![h];
    for m in [0.25, 1.0, 3.0, 8.0, 20.0] {
        let p = h + m * scale;
        if p < hi {
            points.push(p);
        }
    }
    points.push(hi);
    let spec = QuadratureSpec {
        abs_tol: 1e-300,
        rel_tol: 1e-12,
        max_subdivisions: 400,
        ..QuadratureSpec::default()
    };
    integrate_breakpoints(f, &points, &spec).ok().map(|q| q.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn univariate_reference_values() {
        assert!((std_normal_cdf(1.96) - 0.975_002_104_851_779_6).abs() < 1e-15);
        assert!((std_normal_tail(5.0) / 2.866_515_718_791_939e-7 - 1.0).abs() < 1e-13);
        assert!((std_normal_pdf(0.0) - 0.398_942_280_401_432_7).abs() < 1e-16);
    }

    #[test]
    fn log_tail_is_continuous_at_switch() {
        let a = std_normal_tail(24.999_999).ln();
        let b = ln_std_normal_tail(25.000_001);
        assert!((a - b).abs() < 1e-4);
        assert!((ln_std_normal_tail(25.0) - std_normal_tail(25.0).ln()).abs() < 1e-10);
    }

    #[test]
    fn orthant_at_origin_matches_arcsine_law() {
        for rho in [-0.95f64, -0.5, 0.0, 0.3, 0.8, 0.99] {
            let exact = 0.25 + rho.asin() / (2.0 * PI);
            assert!((bivariate_normal_tail(0.0, 0.0, rho) - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn independent_case_factorises() {
        let p = bivariate_normal_tail(0.7, -0.3, 0.0);
        assert!((p - std_normal_tail(0.7) * std_normal_tail(-0.3)).abs() < 1e-16);
    }

    #[test]
    fn pdf_integrates_against_tail() {
        let rho: f64 = 0.6;
        let s = ((1.0 - rho) * (1.0 + rho)).sqrt();
        let v = bivariate_normal_pdf(0.4, -0.2, rho);
        let direct = std_normal_pdf(0.4) * std_normal_pdf((-0.2 - rho * 0.4) / s) / s;
        assert!((v - direct).abs() < 1e-15);
    }
}
