//! Monte Carlo estimation of the constant `C(a, rho)` in the `a > rho` tail
//! asymptotics, through the truncated integrals
//!
//! `I(T) = int int P(exists t in [0,T]: W_1(t) - t > x, W_2(t) - a t > y) e^{lambda_1 x + lambda_2 y} dx dy`
//!
//! and their limit as `T` grows.
//!
//! The primary estimator integrates the indicator exactly per path: the set of
//! `(x, y)` reached by a path is a union of lower-left quadrants at the path
//! points, whose exponentially weighted area is a staircase sum. A lattice
//! estimator that brackets the same integral on a grid is kept as an
//! independent route.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::brm::lambda_pair;
use crate::error::{invalid, require_rho, Error, Result};
use crate::mc::{run_blocks, LevelEstimate, Moments, SimConfig, StreamFactory};
use crate::numerics::{bivariate_normal_tail, std_normal_tail};

const DEFAULT_STEPS_PER_UNIT: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct LadderRung {
    pub t: f64,
    pub value: f64,
    pub stderr: f64,
    /// `I(T) - I(T/2)` on common paths (zero for the first rung).
    pub increment: f64,
    pub increment_stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantEstimate {
    pub value: f64,
    /// Monte Carlo standard error plus, for extrapolated values, the geometric
    /// tail bound on the remaining increments.
    pub stderr: f64,
    pub t_used: f64,
    pub steps_per_unit: usize,
    pub n_paths: u64,
    pub seed: u64,
    pub method: String,
    pub ladder: Vec<LadderRung>,
    /// Smallest `increment(T) / increment(2T)` over rungs with `T >= 4`.
    pub contraction: Option<f64>,
    /// The same paths read at half the time resolution.
    pub coarse: Option<LevelEstimate>,
}

/// `1 / (lambda_1 lambda_2 Psi_rho(c1+, c2+))`, an upper bound on `C(a, rho)`.
pub fn upper_bound_c(a: f64, rho: f64, c1: f64, c2: f64) -> Result<f64> {
    let (l1, l2) = lambda_pair(a, rho)?;
    Ok(1.0 / (l1 * l2 * bivariate_normal_tail(c1.max(0.0), c2.max(0.0), rho)))
}

struct PathSim {
    rho: f64,
    rs: f64,
    a: f64,
    dt: f64,
    sd: f64,
}

impl PathSim {
    /// Points `(W_1 - t, W_2 - a t)` at grid index `j >= 1` that are not
    /// dominated by the origin, tagged with `j`.
    fn points<R: Rng>(&self, rng: &mut R, n: usize, out: &mut Vec<(f64, f64, usize)>) {
        out.clear();
        let (mut b1, mut b2) = (0.0, 0.0);
        for j in 1..=n {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            b1 += self.sd * z1;
            b2 += self.sd * z2;
            let t = j as f64 * self.dt;
            let x = b1 - t;
            let y = self.rho * b1 + self.rs * b2 - self.a * t;
            if x > 0.0 || y > 0.0 {
                out.push((x, y, j));
            }
        }
    }
}

/// Weighted area of the union of quadrants `(-inf, x_i) x (-inf, y_i)` under
/// the density `e^{l1 x + l2 y}`: with points sorted by `x` descending, each
/// new record in `y` adds the band between the previous record and itself.
fn union_area(pts: &mut [(f64, f64)], l1: f64, l2: f64) -> f64 {
    pts.sort_by(|p, q| q.0.total_cmp(&p.0));
    let mut area = 0.0;
    let mut top = f64::NEG_INFINITY;
    let mut top_exp = 0.0;
    for &(x, y) in pts.iter() {
        if y > top {
            let e = (l2 * y).exp();
            area += (l1 * x).exp() / l1 * (e - top_exp) / l2;
            top = y;
            top_exp = e;
        }
    }
    area
}

fn check(a: f64, rho: f64, t: f64, cfg: &SimConfig) -> Result<(f64, f64, usize)> {
    require_rho(rho)?;
    if a > 1.0 {
        return Err(invalid("a must not exceed 1"));
    }
    let (l1, l2) = lambda_pair(a, rho)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("T must be positive"));
    }
    if cfg.n_paths < 2 || cfg.workers == 0 {
        return Err(invalid("need at least two paths and one worker"));
    }
    let spu = if cfg.n_steps == 0 {
        DEFAULT_STEPS_PER_UNIT
    } else {
        cfg.n_steps
    };
    if spu % 2 != 0 {
        return Err(invalid("steps per unit time must be even"));
    }
    Ok((l1, l2, spu))
}

/// Pathwise estimates of `I(T)` for every `T` in `ts` (increasing) on common
/// paths; `cfg.n_steps` is read as steps per unit time (default 256).
fn ladder(a: f64, rho: f64, ts: &[f64], cfg: &SimConfig) -> Result<(Vec<LadderRung>, LevelEstimate, usize)> {
    let t_max = *ts.last().unwrap();
    let (l1, l2, spu) = check(a, rho, t_max, cfg)?;
    let marks: Vec<usize> = ts.iter().map(|t| (t * spu as f64).round() as usize).collect();
    if marks.contains(&0) || marks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("ladder horizons must be increasing and resolvable on the grid"));
    }
    let n = *marks.last().unwrap();
    let dt = 1.0 / spu as f64;
    let sim = PathSim {
        rho,
        rs: ((1.0 - rho) * (1.0 + rho)).sqrt(),
        a,
        dt,
        sd: dt.sqrt(),
    };
    let factory = StreamFactory::new(cfg.seed, crate::mc::domain_constant());
    let k = marks.len();
    let blocks = run_blocks(cfg.n_paths, cfg.workers, |range| {
        let mut vals = vec![Moments::default(); k];
        let mut incs = vec![Moments::default(); k];
        let mut coarse = Moments::default();
        let mut pts = Vec::new();
        let mut buf: Vec<(f64, f64)> = Vec::new();
        for i in range {
            let mut rng = factory.path(i);
            sim.points(&mut rng, n, &mut pts);
            let mut prev = 0.0;
            for (r, &mark) in marks.iter().enumerate() {
                buf.clear();
                buf.push((0.0, 0.0));
                buf.extend(pts.iter().filter(|p| p.2 <= mark).map(|p| (p.0, p.1)));
                let v = union_area(&mut buf, l1, l2);
                vals[r].push(v);
                incs[r].push(if r == 0 { 0.0 } else { v - prev });
                prev = v;
            }
            buf.clear();
            buf.push((0.0, 0.0));
            buf.extend(pts.iter().filter(|p| p.2 % 2 == 0).map(|p| (p.0, p.1)));
            coarse.push(union_area(&mut buf, l1, l2));
        }
        (vals, incs, coarse)
    });
    let mut vals = vec![Moments::default(); k];
    let mut incs = vec![Moments::default(); k];
    let mut coarse = Moments::default();
    for (v, d, c) in &blocks {
        for r in 0..k {
            vals[r].merge(&v[r]);
            incs[r].merge(&d[r]);
        }
        coarse.merge(c);
    }
    let rungs = ts
        .iter()
        .zip(vals.iter().zip(&incs))
        .map(|(&t, (v, d))| LadderRung {
            t,
            value: v.mean(),
            stderr: v.stderr(),
            increment: d.mean(),
            increment_stderr: d.stderr(),
        })
        .collect();
    let coarse = LevelEstimate {
        n_steps: n / 2,
        value: coarse.mean(),
        stderr: coarse.stderr(),
    };
    Ok((rungs, coarse, spu))
}

/// Estimate of `I(T)` by the exact per-path staircase integral.
pub fn estimate_i_t(a: f64, rho: f64, t: f64, cfg: &SimConfig) -> Result<ConstantEstimate> {
    let (rungs, coarse, spu) = ladder(a, rho, &[t], cfg)?;
    let r = &rungs[0];
    Ok(ConstantEstimate {
        value: r.value,
        stderr: r.stderr,
        t_used: t,
        steps_per_unit: spu,
        n_paths: cfg.n_paths,
        seed: cfg.seed,
        method: "pathwise staircase".into(),
        ladder: rungs,
        contraction: None,
        coarse: Some(coarse),
    })
}

/// `C(a, rho)` from the ladder `T = 1, 2, 4, ..., t_max` on common paths.
///
/// Increments must shrink by at least 1.5x per doubling from `T = 4` on;
/// otherwise `NonConvergence` carries the last rung. The reported error adds the
/// geometric bound `d_last / (r - 1)` on the unobserved increments.
pub fn extrapolate_c(a: f64, rho: f64, t_max: f64, cfg: &SimConfig) -> Result<ConstantEstimate> {
    if !(t_max >= 16.0) || (t_max.log2().fract() != 0.0) {
        return Err(invalid("t_max must be a power of two, at least 16"));
    }
    let ts: Vec<f64> = (0..=t_max.log2() as i32).map(|i| 2f64.powi(i)).collect();
    let (rungs, coarse, spu) = ladder(a, rho, &ts, cfg)?;
    let mut contraction = f64::INFINITY;
    for w in rungs.windows(2) {
        if w[0].t < 8.0 {
            continue;
        }
        let r = if w[1].increment == 0.0 {
            f64::INFINITY
        } else {
            w[0].increment / w[1].increment
        };
        contraction = contraction.min(r);
    }
    let last = rungs.last().unwrap();
    if contraction < 1.5 {
        return Err(Error::NonConvergence {
            value: last.value,
            err_est: last.increment,
        });
    }
    let tail = if contraction.is_finite() {
        last.increment / (contraction - 1.0)
    } else {
        0.0
    };
    Ok(ConstantEstimate {
        value: last.value,
        stderr: last.stderr + tail,
        t_used: last.t,
        steps_per_unit: spu,
        n_paths: cfg.n_paths,
        seed: cfg.seed,
        method: "pathwise staircase ladder".into(),
        contraction: Some(contraction),
        ladder: rungs,
        coarse: Some(coarse),
    })
}

/// Grid for the lattice route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub spacing: f64,
    /// Budget for the exponentially weighted mass outside the truncation box.
    pub tail_mass: f64,
}

impl Default for Lattice {
    fn default() -> Self {
        Self {
            spacing: 0.05,
            tail_mass: 1e-3,
        }
    }
}

/// Bound on `E[e^{l M}]` for `M = sup_{t <= T} W(t)`.
fn exp_sup_bound(l: f64, t: f64) -> f64 {
    2.0 * (l * l * t / 2.0).exp()
}

/// Bound on `E[e^{2 l M} 1{M > x}]` for `M = sup_{t <= T} W(t)`.
fn exp_sup_tail_bound(l: f64, t: f64, x: f64) -> f64 {
    2.0 * (2.0 * l * l * t).exp() * std_normal_tail((x - 2.0 * l * t) / t.sqrt())
}

/// Lattice estimate of `I(T)`: per path the staircase is read at lattice
/// corners; lower-left and upper-right corners bracket each cell and the
/// midpoint of the bracket is reported. The truncation box follows from
/// reflection-principle moment bounds, so it is practical for small `T`.
pub fn estimate_i_t_lattice(a: f64, rho: f64, t: f64, lattice: &Lattice, cfg: &SimConfig) -> Result<ConstantEstimate> {
    let (l1, l2, spu) = check(a, rho, t, cfg)?;
    if !(lattice.spacing > 0.0 && lattice.tail_mass > 0.0) {
        return Err(invalid("lattice spacing and tail mass must be positive"));
    }
    let budget = lattice.tail_mass / 4.0;
    let e1 = exp_sup_bound(l1, t);
    let e2 = exp_sup_bound(l2, t);
    let find = |f: &dyn Fn(f64) -> f64| -> Result<f64> {
        let mut x = 1.0;
        while f(x) > budget {
            x *= 1.25;
            if x > 1e4 {
                return Err(Error::NonConvergence {
                    value: f64::NAN,
                    err_est: f(x),
                });
            }
        }
        Ok(x)
    };
    let x0 = find(&|x| (-l1 * x).exp() / (l1 * l2) * e2)?;
    let y0 = find(&|y| (-l2 * y).exp() / (l1 * l2) * e1)?;
    let f2 = (2.0 * exp_sup_bound(2.0 * l2, t)).sqrt();
    let x1 = find(&|x| exp_sup_tail_bound(l1, t, x).sqrt() * f2 / (l1 * l2))?;
    let f1 = (2.0 * exp_sup_bound(2.0 * l1, t)).sqrt();
    let y1 = find(&|y| exp_sup_tail_bound(l2, t, y).sqrt() * f1 / (l1 * l2))?;
    let h = lattice.spacing;
    let nx = ((x0 + x1) / h).ceil() as usize;
    let ny = ((y0 + y1) / h).ceil() as usize;
    let xs: Vec<f64> = (0..=nx).map(|i| -x0 + i as f64 * h).collect();
    let ys: Vec<f64> = (0..=ny).map(|j| -y0 + j as f64 * h).collect();
    let mx: Vec<f64> = xs
        .windows(2)
        .map(|w| ((l1 * w[1]).exp() - (l1 * w[0]).exp()) / l1)
        .collect();
    let my: Vec<f64> = ys
        .windows(2)
        .map(|w| ((l2 * w[1]).exp() - (l2 * w[0]).exp()) / l2)
        .collect();
    // cum[j] = sum of the first j y-cell masses
    let mut cum = vec![0.0; ny + 1];
    for j in 0..ny {
        cum[j + 1] = cum[j] + my[j];
    }
    // number of lattice y-values strictly below g
    let below = |g: f64| -> usize {
        if g == f64::NEG_INFINITY {
            0
        } else {
            ys.partition_point(|&y| y < g)
        }
    };
    let n = (t * spu as f64).round() as usize;
    let dt = t / n as f64;
    let sim = PathSim {
        rho,
        rs: ((1.0 - rho) * (1.0 + rho)).sqrt(),
        a,
        dt,
        sd: dt.sqrt(),
    };
    let factory = StreamFactory::new(cfg.seed, crate::mc::domain_constant_lattice());
    let blocks = run_blocks(cfg.n_paths, cfg.workers, |range| {
        let mut acc = Moments::default();
        let mut width = Moments::default();
        let mut pts = Vec::new();
        let mut sorted: Vec<(f64, f64)> = Vec::new();
        let mut g = vec![f64::NEG_INFINITY; nx + 1];
        for i in range {
            let mut rng = factory.path(i);
            sim.points(&mut rng, n, &mut pts);
            sorted.clear();
            sorted.push((0.0, 0.0));
            sorted.extend(pts.iter().map(|p| (p.0, p.1)));
            sorted.sort_by(|p, q| q.0.total_cmp(&p.0));
            // g(x) = max{y_j : x_j > x}, swept over lattice x descending
            let mut k = 0;
            let mut best = f64::NEG_INFINITY;
            for ix in (0..=nx).rev() {
                while k < sorted.len() && sorted[k].0 > xs[ix] {
                    best = best.max(sorted[k].1);
                    k += 1;
                }
                g[ix] = best;
            }
            let mut upper = 0.0;
            let mut lower = 0.0;
            for ix in 0..nx {
                // cells [ys[j], ys[j+1]] with ys[j] < g(xs[ix]) are counted in the upper sum
                let cu = below(g[ix]).min(ny);
                upper += mx[ix] * cum[cu];
                // lower sum needs ys[j+1] < g(xs[ix+1])
                let cl = below(g[ix + 1]).saturating_sub(1).min(ny);
                lower += mx[ix] * cum[cl];
            }
            acc.push(0.5 * (upper + lower));
            width.push(0.5 * (upper - lower));
        }
        (acc, width)
    });
    let mut acc = Moments::default();
    let mut width = Moments::default();
    for (a_, w) in &blocks {
        acc.merge(a_);
        width.merge(w);
    }
    let value = acc.mean();
    Ok(ConstantEstimate {
        value,
        stderr: acc.stderr() + width.mean() + lattice.tail_mass,
        t_used: t,
        steps_per_unit: spu,
        n_paths: cfg.n_paths,
        seed: cfg.seed,
        method: format!(
            "lattice spacing {h}, box [{:.3}, {:.3}] x [{:.3}, {:.3}]",
            -x0, x1, -y0, y1
        ),
        ladder: Vec::new(),
        contraction: None,
        coarse: None,
    })
}
