use rand::Rng;
use rand_distr::StandardNormal;

use crate::brm::BivariateBrm;
use crate::error::{invalid, require_finite, require_rho, Error, Result};
use crate::numerics::bivariate_normal_tail;

use super::exec::run_blocks;
use super::rng::{domain, PathRng, StreamFactory};
use super::stats::{Estimate, LevelEstimate, Moments};
use super::{IsDrift, SimConfig};

const MAX_DEPTH: usize = 6;
const MIN_ESS: f64 = 100.0;

/// Dominating point of `{x >= h, y >= k}` under the standard bivariate normal
/// with correlation `rho`, or `None` when the origin already lies in the set.
pub fn default_tilt(rho: f64, h: f64, k: f64) -> Option<(f64, f64)> {
    if h <= 0.0 && k <= 0.0 {
        return None;
    }
    let q = |x: f64, y: f64| (x * x - 2.0 * rho * x * y + y * y) / ((1.0 - rho) * (1.0 + rho));
    let c1 = (h, k.max(rho * h));
    let c2 = (h.max(rho * k), k);
    Some(if q(c1.0, c1.1) <= q(c2.0, c2.1) { c1 } else { c2 })
}

#[derive(Clone, Copy)]
struct Node {
    t: f64,
    b1: f64,
    b2: f64,
}

struct Geometry {
    c1: f64,
    c2: f64,
    rho: f64,
    rs: f64,
    u: f64,
    v: f64,
    k0: usize,
    depth: usize,
    h: f64,
    theta: (f64, f64),
    eps: f64,
}

impl Geometry {
    fn new(c1: f64, c2: f64, rho: f64, u: f64, v: f64, cfg: &SimConfig) -> Result<Self> {
        require_finite("c1", c1)?;
        require_finite("c2", c2)?;
        require_rho(rho)?;
        require_finite("u", u)?;
        require_finite("v", v)?;
        cfg.validate()?;
        let w = cfg.window_end;
        let n = if cfg.n_steps == 0 {
            let scale = u.abs().max(v.abs()).max(1.0);
            (64 * (4.0 * scale * scale).ceil() as usize).max(1024)
        } else {
            cfg.n_steps
        };
        let depth = (n.trailing_zeros() as usize).min(MAX_DEPTH);
        let k0 = n >> depth;
        let rs = ((1.0 - rho) * (1.0 + rho)).sqrt();
        let hs = (u + c1 * w) / w.sqrt();
        let ks = (v + c2 * w) / w.sqrt();
        let theta = match cfg.is_drift {
            IsDrift::None => (0.0, 0.0),
            IsDrift::Fixed(a, b) => (a, b),
            IsDrift::Auto => match default_tilt(rho, hs, ks) {
                Some((x, y)) => {
                    let q = (x * x - 2.0 * rho * x * y + y * y) / (rs * rs);
                    if q >= 1.0 {
                        (x / w.sqrt(), (y - rho * x) / rs / w.sqrt())
                    } else {
                        (0.0, 0.0)
                    }
                }
                None => (0.0, 0.0),
            },
        };
        let target = bivariate_normal_tail(hs, ks, rho);
        let eps = (1e-9 * target / n as f64).clamp(1e-300, 1e-12);
        Ok(Self {
            c1,
            c2,
            rho,
            rs,
            u,
            v,
            k0,
            depth,
            h: w / k0 as f64,
            theta,
            eps,
        })
    }

    fn n_steps(&self, level: usize) -> usize {
        self.k0 << level
    }

    fn tilted(&self) -> bool {
        self.theta != (0.0, 0.0)
    }

    fn clearance(&self, n: &Node) -> (f64, f64) {
        (
            self.u - (n.b1 - self.c1 * n.t),
            self.v - (self.rho * n.b1 + self.rs * n.b2 - self.c2 * n.t),
        )
    }

    fn crosses(&self, n: &Node) -> bool {
        let (d1, d2) = self.clearance(n);
        d1 < 0.0 && d2 < 0.0
    }

    /// Brownian-bridge bound on a joint crossing inside `(a, b)` is negligible.
    fn prunable(&self, a: &Node, b: &Node) -> bool {
        let dt = b.t - a.t;
        let (a1, a2) = self.clearance(a);
        let (e1, e2) = self.clearance(b);
        let p = |x: f64, y: f64| {
            if x > 0.0 && y > 0.0 {
                (-2.0 * x * y / dt).exp()
            } else {
                1.0
            }
        };
        p(a1, e1).min(p(a2, e2)) < self.eps
    }

    fn likelihood_ratio(&self, n: &Node) -> f64 {
        let (t1, t2) = self.theta;
        (-(t1 * n.b1 + t2 * n.b2) + 0.5 * (t1 * t1 + t2 * t2) * n.t).exp()
    }
}

struct Walker<'a> {
    geo: &'a Geometry,
    rng: PathRng,
    /// First crossing node per resolution level (nodes of depth <= level).
    first: [Option<Node>; MAX_DEPTH + 1],
}

impl Walker<'_> {
    fn record(&mut self, node: Node, depth: usize) {
        for slot in self.first[depth..=self.geo.depth].iter_mut() {
            if slot.is_none_or(|f| node.t < f.t) {
                *slot = Some(node);
            }
        }
    }

    fn refine(&mut self, a: Node, b: Node, depth: usize) {
        let g = self.geo;
        if depth == g.depth {
            return;
        }
        if self.first[depth + 1..=g.depth]
            .iter()
            .all(|f| f.is_some_and(|f| f.t <= a.t))
        {
            return;
        }
        if g.prunable(&a, &b) {
            return;
        }
        let half = 0.5 * (b.t - a.t);
        let sd = (0.5 * half).sqrt();
        let z1: f64 = self.rng.sample(StandardNormal);
        let z2: f64 = self.rng.sample(StandardNormal);
        let m = Node {
            t: a.t + half,
            b1: 0.5 * (a.b1 + b.b1) + sd * z1,
            b2: 0.5 * (a.b2 + b.b2) + sd * z2,
        };
        if g.crosses(&m) {
            self.record(m, depth + 1);
        }
        self.refine(a, m, depth + 1);
        self.refine(m, b, depth + 1);
    }

    fn run(&mut self) {
        let g = self.geo;
        let mut a = Node {
            t: 0.0,
            b1: 0.0,
            b2: 0.0,
        };
        if g.crosses(&a) {
            self.record(a, 0);
            return;
        }
        let sd = g.h.sqrt();
        for k in 0..g.k0 {
            let z1: f64 = self.rng.sample(StandardNormal);
            let z2: f64 = self.rng.sample(StandardNormal);
            let b = Node {
                t: (k + 1) as f64 * g.h,
                b1: a.b1 + g.theta.0 * g.h + sd * z1,
                b2: a.b2 + g.theta.1 * g.h + sd * z2,
            };
            self.refine(a, b, 0);
            if g.crosses(&b) {
                self.record(b, 0);
            }
            if self.first[..=g.depth].iter().all(|f| f.is_some()) {
                return;
            }
            a = b;
        }
    }
}

fn walk(geo: &Geometry, rng: PathRng) -> [Option<Node>; MAX_DEPTH + 1] {
    let mut w = Walker {
        geo,
        rng,
        first: [None; MAX_DEPTH + 1],
    };
    w.run();
    w.first
}

/// `P(exists t in [0, w]: W_1(t) - c1 t > u, W_2(t) - c2 t > v)` on a fine grid.
///
/// The grid of `n_steps` points (default `ceil(256 max(u,v)^2)` rounded up to a
/// multiple of 64, at least 1024) is sampled lazily: a coarse walk is refined by
/// Brownian-bridge midpoints only where a joint crossing is not negligible.
/// Importance sampling shifts the driving pair by a constant drift and weights
/// each ruined path by the likelihood ratio at its first crossing. `levels`
/// reports the same paths at `n`, `n/2` and `n/4` steps.
pub fn simulate_psi_uv(c1: f64, c2: f64, rho: f64, u: f64, v: f64, cfg: &SimConfig) -> Result<Estimate> {
    let geo = Geometry::new(c1, c2, rho, u, v, cfg)?;
    let levels: Vec<usize> = (0..3).filter_map(|i| geo.depth.checked_sub(i)).collect();
    let factory = StreamFactory::new(cfg.seed, domain::TWO_DIM);
    let blocks = run_blocks(cfg.n_paths, cfg.workers, |range| {
        let mut acc = vec![Moments::default(); levels.len()];
        for i in range {
            let first = walk(&geo, factory.path(i));
            for (m, &l) in acc.iter_mut().zip(&levels) {
                m.push(first[l].map_or(0.0, |n| geo.likelihood_ratio(&n)));
            }
        }
        acc
    });
    let mut acc = vec![Moments::default(); levels.len()];
    for b in &blocks {
        for (m, x) in acc.iter_mut().zip(b) {
            m.merge(x);
        }
    }
    let tilted = geo.tilted();
    let ess = if tilted { acc[0].kish() } else { cfg.n_paths as f64 };
    if tilted && ess < MIN_ESS {
        return Err(Error::DegenerateIs { ess });
    }
    let method = if tilted {
        "grid-sup lazy-bridge, importance sampling"
    } else {
        "grid-sup lazy-bridge"
    };
    let mut est = Estimate::from_moments(&acc[0], ess, method);
    est.levels = acc
        .iter()
        .zip(&levels)
        .map(|(m, &l)| LevelEstimate {
            n_steps: geo.n_steps(l),
            value: m.mean(),
            stderr: m.stderr(),
        })
        .collect();
    Ok(est)
}

/// [`simulate_psi_uv`] at capitals `(u, a u)`.
pub fn simulate_psi(m: &BivariateBrm, cfg: &SimConfig) -> Result<Estimate> {
    simulate_psi_uv(m.c1, m.c2, m.rho, m.u, m.v(), cfg)
}

/// Weighted draws of `u^2 (1 - tau)` given ruin by time 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RuinTimeSample {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub n_paths: u64,
    pub n_effective: f64,
    pub n_steps: usize,
}

/// Samples the scaled ruin time `u^2 (1 - tau(u))` on the finest grid, with
/// importance weights when a tilt is active.
pub fn sample_ruin_time(m: &BivariateBrm, cfg: &SimConfig) -> Result<RuinTimeSample> {
    if !(m.u > 0.0) {
        return Err(invalid("ruin-time sampling needs u > 0"));
    }
    if cfg.window_end != 1.0 {
        return Err(invalid("ruin-time sampling uses the full unit window"));
    }
    let geo = Geometry::new(m.c1, m.c2, m.rho, m.u, m.v(), cfg)?;
    let factory = StreamFactory::new(cfg.seed, domain::TWO_DIM);
    let u2 = m.u * m.u;
    let blocks = run_blocks(cfg.n_paths, cfg.workers, |range| {
        let mut out = Vec::new();
        for i in range {
            if let Some(n) = walk(&geo, factory.path(i))[geo.depth] {
                out.push((u2 * (1.0 - n.t), geo.likelihood_ratio(&n)));
            }
        }
        out
    });
    let (values, weights): (Vec<f64>, Vec<f64>) = blocks.into_iter().flatten().unzip();
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    let n_effective = s * s / s2;
    if geo.tilted() && n_effective < MIN_ESS {
        return Err(Error::DegenerateIs { ess: n_effective });
    }
    Ok(RuinTimeSample {
        values,
        weights,
        n_paths: cfg.n_paths,
        n_effective,
        n_steps: geo.n_steps(geo.depth),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tilt_hits_corner_above_boundary() {
        assert_eq!(default_tilt(0.0, 3.0, 3.0), Some((3.0, 3.0)));
        let (x, y) = default_tilt(0.5, 3.0, 0.0).unwrap();
        assert_eq!((x, y), (3.0, 1.5));
        assert_eq!(default_tilt(0.3, -1.0, -0.5), None);
    }

    #[test]
    fn immediate_ruin_is_certain() {
        let cfg = SimConfig {
            n_paths: 2000,
            ..SimConfig::default()
        };
        let e = simulate_psi_uv(0.0, 0.0, 0.2, -0.01, -0.01, &cfg).unwrap();
        assert!(e.value >= 0.999);
    }
}
