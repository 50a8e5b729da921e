use rand::Rng;
use rand_distr::StandardNormal;

use crate::brm::{Horizon, SinglePortfolio};
use crate::error::{invalid, Result};

use super::exec::run_blocks;
use super::rng::{domain, StreamFactory};
use super::stats::{Estimate, LevelEstimate, Moments};
use super::SimConfig;

const DEFAULT_STEPS: usize = 64;

/// Finite-horizon ruin of `u + c t - sigma W(t)` by a Brownian-bridge-corrected walk.
///
/// Each path contributes `1 - prod_i (1 - exp(-2 (u - x_i)(u - x_{i+1}) / (sigma^2 dt)))`,
/// the exact conditional crossing probability given the grid values, so the
/// estimator is unbiased for any step count. The same walk read at half
/// resolution is reported in `levels`.
pub fn simulate_one_dim(p: &SinglePortfolio, cfg: &SimConfig) -> Result<Estimate> {
    cfg.validate()?;
    let Horizon::Finite(t_end) = p.horizon else {
        return Err(invalid("Monte Carlo needs a finite horizon"));
    };
    let n = if cfg.n_steps == 0 { DEFAULT_STEPS } else { cfg.n_steps };
    let dt = t_end / n as f64;
    let sd = p.sigma * dt.sqrt();
    let var = p.sigma * p.sigma;
    let factory = StreamFactory::new(cfg.seed, domain::ONE_DIM);
    let half = n % 2 == 0;
    let blocks = run_blocks(cfg.n_paths, cfg.workers, |range| {
        let mut fine = Moments::default();
        let mut coarse = Moments::default();
        for i in range {
            let mut rng = factory.path(i);
            let (yf, yc) = if p.u <= 0.0 {
                (1.0, 1.0)
            } else {
                let mut x = 0.0;
                let mut x2 = 0.0;
                let mut sf = 1.0;
                let mut sc = 1.0;
                let mut hit_f = false;
                let mut hit_c = false;
                for k in 0..n {
                    let z: f64 = rng.sample(StandardNormal);
                    let xn = x + sd * z - p.c * dt;
                    if xn >= p.u {
                        hit_f = true;
                    } else if !hit_f {
                        sf *= 1.0 - (-2.0 * (p.u - x) * (p.u - xn) / (var * dt)).exp();
                    }
                    if half && k % 2 == 1 {
                        if xn >= p.u {
                            hit_c = true;
                        } else if !hit_c {
                            sc *= 1.0 - (-2.0 * (p.u - x2) * (p.u - xn) / (var * 2.0 * dt)).exp();
                        }
                        x2 = xn;
                    }
                    x = xn;
                    if hit_f && (hit_c || !half) {
                        break;
                    }
                }
                (if hit_f { 1.0 } else { 1.0 - sf }, if hit_c { 1.0 } else { 1.0 - sc })
            };
            fine.push(yf);
            coarse.push(yc);
        }
        (fine, coarse)
    });
    let mut fine = Moments::default();
    let mut coarse = Moments::default();
    for (f, c) in &blocks {
        fine.merge(f);
        coarse.merge(c);
    }
    let mut est = Estimate::from_moments(&fine, cfg.n_paths as f64, "bridge-corrected");
    est.levels.push(LevelEstimate {
        n_steps: n,
        value: fine.mean(),
        stderr: fine.stderr(),
    });
    if half {
        est.levels.push(LevelEstimate {
            n_steps: n / 2,
            value: coarse.mean(),
            stderr: coarse.stderr(),
        });
    }
    Ok(est)
}
