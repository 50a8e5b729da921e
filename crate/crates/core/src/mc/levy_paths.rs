use crate::error::{require_finite, require_positive, Result};
use crate::levy::{LevyModel, PathKind, TwoLineBarrier};

use super::exec::run_blocks;
use super::rng::{domain, PathRng, StreamFactory};
use super::stats::{Estimate, LevelEstimate, Moments};
use super::SimConfig;

/// `max(x + c1 t, y + c2 t)`, possibly with both lines equal.
#[derive(Debug, Clone, Copy)]
struct Lines {
    x: f64,
    c1: f64,
    y: f64,
    c2: f64,
    /// Interior switch time, if any.
    kink: Option<f64>,
}

impl Lines {
    fn level(&self, t: f64) -> f64 {
        (self.x + self.c1 * t).max(self.y + self.c2 * t)
    }

    fn min_level(&self, a: f64, b: f64) -> f64 {
        let mut m = self.level(a).min(self.level(b));
        if let Some(k) = self.kink {
            if k > a && k < b {
                m = m.min(self.level(k));
            }
        }
        m
    }
}

/// Levels of refinement below the base grid for monotone paths.
const MAX_DEPTH: u32 = 10;

/// Simultaneous ruin `P(exists t <= T: Z(t) > max(x + c1 t, y + c2 t))` by path simulation.
///
/// * Brownian paths: exact Brownian-bridge crossing probabilities between grid
///   nodes (the switch time is a node), so there is no grid bias.
/// * Monotone paths: the `n_steps` grid is built lazily from a coarse grid by
///   bridge midpoints, refining only steps where the path can reach the barrier.
/// * Other paths: barrier checked at the `n_steps` grid nodes.
///
/// `levels` holds the same estimator on the `n_steps` and `n_steps / 2` grids.
/// The importance-sampling drift of `cfg` is not used.
pub fn simulate_levy_psi(model: &dyn LevyModel, b: &TwoLineBarrier, cfg: &SimConfig) -> Result<Estimate> {
    let kink = match b.case() {
        crate::levy::BarrierCase::Crossing { xi } => Some(xi),
        _ => None,
    };
    let lines = Lines {
        x: b.x,
        c1: b.c1,
        y: b.y,
        c2: b.c2,
        kink,
    };
    simulate(model, lines, b.t, cfg)
}

/// `P(sup_{t <= T} (Z(t) - c t) > u)` with the same estimators and streams as
/// [`simulate_levy_psi`].
pub fn simulate_levy_sup(model: &dyn LevyModel, c: f64, t: f64, u: f64, cfg: &SimConfig) -> Result<Estimate> {
    require_finite("c", c)?;
    require_finite("u", u)?;
    let lines = Lines {
        x: u,
        c1: c,
        y: u,
        c2: c,
        kink: None,
    };
    simulate(model, lines, t, cfg)
}

fn default_steps(kind: PathKind) -> usize {
    match kind {
        PathKind::Gaussian => 64,
        PathKind::Increasing | PathKind::Decreasing => 4096,
        PathKind::General => 1024,
    }
}

fn simulate(model: &dyn LevyModel, lines: Lines, t_end: f64, cfg: &SimConfig) -> Result<Estimate> {
    cfg.validate()?;
    require_positive("T", t_end)?;
    let kind = model.path_kind();
    let n = if cfg.n_steps == 0 {
        default_steps(kind)
    } else {
        cfg.n_steps
    };
    if n < 2 {
        return Err(crate::error::invalid("n_steps must be at least 2"));
    }
    let factory = StreamFactory::new(cfg.seed, domain::LEVY);
    let walker = Walker { model, lines, t_end, n };
    let scheme = match kind {
        PathKind::Gaussian => Scheme::Bridge,
        PathKind::Increasing | PathKind::Decreasing if n % 2 == 0 => Scheme::Refined,
        _ => Scheme::Grid,
    };
    let method = match scheme {
        Scheme::Bridge => "bridge-corrected",
        Scheme::Refined => "bridge-refined grid",
        Scheme::Grid => "grid",
    };
    let blocks = run_blocks(cfg.n_paths, cfg.workers, |range| {
        let mut fine = Moments::default();
        let mut half = Moments::default();
        for i in range {
            let mut rng = factory.path(i);
            let (f, h) = match scheme {
                Scheme::Bridge => walker.gaussian(&mut rng),
                Scheme::Refined => walker.monotone(&mut rng),
                Scheme::Grid => walker.grid(&mut rng),
            };
            fine.push(f);
            half.push(h);
        }
        (fine, half)
    });
    let mut fine = Moments::default();
    let mut half = Moments::default();
    for (f, h) in &blocks {
        fine.merge(f);
        half.merge(h);
    }
    let mut est = Estimate::from_moments(&fine, cfg.n_paths as f64, method);
    est.levels.push(LevelEstimate {
        n_steps: n,
        value: fine.mean(),
        stderr: fine.stderr(),
    });
    est.levels.push(LevelEstimate {
        n_steps: n / 2,
        value: half.mean(),
        stderr: half.stderr(),
    });
    Ok(est)
}

#[derive(Clone, Copy)]
enum Scheme {
    Bridge,
    Refined,
    Grid,
}

struct Walker<'a> {
    model: &'a dyn LevyModel,
    lines: Lines,
    t_end: f64,
    n: usize,
}

impl Walker<'_> {
    /// Grid nodes `k T / n` plus the switch time; the flag marks nodes of the half grid.
    fn nodes(&self) -> Vec<(f64, bool)> {
        let dt = self.t_end / self.n as f64;
        let mut v: Vec<(f64, bool)> = (0..=self.n).map(|k| (k as f64 * dt, k % 2 == 0)).collect();
        if self.n % 2 == 1 {
            v[self.n].1 = true;
        }
        if let Some(k) = self.lines.kink {
            if k > 0.0 && k < self.t_end && !v.iter().any(|&(t, _)| t == k) {
                v.push((k, true));
                v.sort_by(|a, b| a.0.total_cmp(&b.0));
            }
        }
        v
    }

    /// Returns `(estimate on the full grid, estimate on the half grid)`.
    fn gaussian(&self, rng: &mut PathRng) -> (f64, f64) {
        let nodes = self.nodes();
        let l = &self.lines;
        let clear0 = l.level(0.0);
        if clear0 < 0.0 {
            return (1.0, 1.0);
        }
        let mut z = 0.0;
        let (mut ta, mut ca) = (0.0, clear0);
        let (mut tc, mut cc) = (0.0, clear0);
        let mut surv_f = 1.0;
        let mut surv_h = 1.0;
        let mut hit_f = false;
        let mut hit_h = false;
        for &(t, coarse) in &nodes[1..] {
            z += self.model.sample_increment(t - ta, rng);
            let cb = l.level(t) - z;
            if cb < 0.0 {
                hit_f = true;
            } else if !hit_f {
                surv_f *= 1.0 - (-2.0 * ca * cb / (t - ta)).exp();
            }
            if coarse {
                if cb < 0.0 {
                    hit_h = true;
                } else if !hit_h {
                    surv_h *= 1.0 - (-2.0 * cc * cb / (t - tc)).exp();
                }
                tc = t;
                cc = cb;
            }
            ta = t;
            ca = cb;
            if hit_f && hit_h {
                break;
            }
        }
        (
            if hit_f { 1.0 } else { 1.0 - surv_f },
            if hit_h { 1.0 } else { 1.0 - surv_h },
        )
    }

    fn grid(&self, rng: &mut PathRng) -> (f64, f64) {
        let l = &self.lines;
        if l.level(0.0) < 0.0 {
            return (1.0, 1.0);
        }
        let dt = self.t_end / self.n as f64;
        let mut z = 0.0;
        let mut hit_f = false;
        for k in 1..=self.n {
            z += self.model.sample_increment(dt, rng);
            if z > l.level(k as f64 * dt) {
                hit_f = true;
                if k % 2 == 0 {
                    return (1.0, 1.0);
                }
            }
        }
        (if hit_f { 1.0 } else { 0.0 }, 0.0)
    }

    fn monotone(&self, rng: &mut PathRng) -> (f64, f64) {
        let l = &self.lines;
        if l.level(0.0) < 0.0 {
            return (1.0, 1.0);
        }
        let depth = self.n.trailing_zeros().min(MAX_DEPTH);
        let base = self.n >> depth;
        let dt = self.t_end / base as f64;
        // Coarsest level at which some node exceeds the barrier.
        let mut best = depth + 1;
        let mut z = 0.0;
        for k in 0..base {
            let (ta, tb) = (k as f64 * dt, (k + 1) as f64 * dt);
            let zb = z + self.model.sample_increment(dt, rng);
            if zb > l.level(tb) {
                return (1.0, 1.0);
            }
            self.refine(ta, tb, z, zb, 1, depth, &mut best, rng);
            z = zb;
        }
        (
            if best <= depth { 1.0 } else { 0.0 },
            if best < depth { 1.0 } else { 0.0 },
        )
    }

    /// Visits the midpoint of `[ta, tb]`, a node of grid level `lvl`, when the
    /// monotone path can reach the barrier there and a hit would lower `best`.
    #[allow(clippy::too_many_arguments)]
    fn refine(&self, ta: f64, tb: f64, za: f64, zb: f64, lvl: u32, depth: u32, best: &mut u32, rng: &mut PathRng) {
        if lvl > depth || *best <= lvl {
            return;
        }
        if za.max(zb) <= self.lines.min_level(ta, tb) {
            return;
        }
        let Some(frac) = self.model.bridge_fraction(tb - ta, rng) else {
            return;
        };
        let tm = 0.5 * (ta + tb);
        let zm = za + (zb - za) * frac;
        if zm > self.lines.level(tm) {
            *best = lvl;
            return;
        }
        self.refine(ta, tm, za, zm, lvl + 1, depth, best, rng);
        self.refine(tm, tb, zm, zb, lvl + 1, depth, best, rng);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brm::{ruin_finite, Horizon, SinglePortfolio};
    use crate::levy::{BrownianModel, GammaModel};

    fn cfg(n_paths: u64, n_steps: usize) -> SimConfig {
        SimConfig {
            n_paths,
            n_steps,
            seed: 11,
            ..SimConfig::default()
        }
    }

    #[test]
    fn brownian_single_line_matches_closed_form() {
        let est = simulate_levy_sup(&BrownianModel, 1.0, 1.0, 1.0, &cfg(200_000, 32)).unwrap();
        let exact = ruin_finite(&SinglePortfolio::new(1.0, 1.0, 1.0, Horizon::Finite(1.0)).unwrap()).unwrap();
        assert!(est.z_score(exact).abs() < 4.0, "{est:?} vs {exact}");
    }

    #[test]
    fn equal_capitals_reuse_single_line_streams() {
        let g = GammaModel::new(1.0).unwrap();
        let b = TwoLineBarrier::new(1.5, 0.5, 1.0, 1.0, 1.0).unwrap();
        let a = simulate_levy_psi(&g, &b, &cfg(5000, 256)).unwrap();
        let s = simulate_levy_sup(&g, 1.5, 1.0, 1.0, &cfg(5000, 256)).unwrap();
        assert_eq!(a.value, s.value);
    }

    #[test]
    fn negative_level_is_immediate() {
        let b = TwoLineBarrier::new(1.0, 0.0, 0.0, 0.0, 1.0).unwrap();
        let mut l = Lines {
            x: b.x,
            c1: b.c1,
            y: b.y,
            c2: b.c2,
            kink: None,
        };
        l.x = -0.1;
        l.y = -0.1;
        let e = simulate(&BrownianModel, l, 1.0, &cfg(100, 8)).unwrap();
        assert_eq!(e.value, 1.0);
    }
}
