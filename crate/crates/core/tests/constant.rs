use biruin::constant::*;
use biruin::mc::SimConfig;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

/// Paths of `(W_1(t) - t, W_2(t) - a t)` on `[0, T]`, origin included.
fn brute_paths(a: f64, rho: f64, t: f64, spu: usize, n: usize, seed: u64) -> Vec<Vec<(f64, f64)>> {
    let mut rng = StdRng::seed_from_u64(seed);
    let steps = (t * spu as f64).round() as usize;
    let dt = t / steps as f64;
    let rs = (1.0 - rho * rho).sqrt();
    (0..n)
        .map(|_| {
            let (mut w1, mut w2) = (0.0, 0.0);
            let mut p = vec![(0.0, 0.0)];
            for j in 1..=steps {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                w1 += dt.sqrt() * z1;
                w2 += dt.sqrt() * (rho * z1 + rs * z2);
                let s = j as f64 * dt;
                p.push((w1 - s, w2 - a * s));
            }
            p
        })
        .collect()
}

/// Per path `int int 1{some point exceeds (x, y)} e^{l1 x + l2 y}`: the `y` integral
/// is `e^{l2 M(x)} / l2` with `M(x)` the best second coordinate among points whose
/// first exceeds `x`; the `x` integral uses a midpoint rule above the lowest
/// point and the exact exponential below it.
fn brute_value(path: &[(f64, f64)], l1: f64, l2: f64, h: f64) -> f64 {
    let x_lo = path.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x_hi = path.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let m_all = path.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let mut total = (l1 * x_lo).exp() / l1 * (l2 * m_all).exp() / l2;
    let n = ((x_hi - x_lo) / h).ceil().max(1.0) as usize;
    let dx = (x_hi - x_lo) / n as f64;
    for i in 0..n {
        let x = x_lo + (i as f64 + 0.5) * dx;
        let m = path
            .iter()
            .filter(|p| p.0 > x)
            .map(|p| p.1)
            .fold(f64::NEG_INFINITY, f64::max);
        if m > f64::NEG_INFINITY {
            total += dx * (l1 * x).exp() * (l2 * m).exp() / l2;
        }
    }
    total
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn staircase_matches_brute_force_oracle() {
    let (a, rho, t, spu) = (1.0, 0.0, 1.0, 64);
    let paths = brute_paths(a, rho, t, spu, 4000, 99);
    let vals: Vec<f64> = paths.iter().map(|p| brute_value(p, 1.0, 1.0, 1e-3)).collect();
    let (m, se) = mean_se(&vals);
    let cfg = SimConfig {
        n_paths: 20_000,
        n_steps: spu,
        seed: 3,
        ..SimConfig::default()
    };
    let e = estimate_i_t(a, rho, t, &cfg).unwrap();
    let z = (e.value - m) / (e.stderr.powi(2) + se * se).sqrt();
    assert!(
        z.abs() < 3.0,
        "staircase {} +- {} vs brute {m} +- {se}",
        e.value,
        e.stderr
    );
}

#[test]
fn lattice_agrees_with_staircase() {
    let cfg = SimConfig {
        n_paths: 20_000,
        n_steps: 64,
        seed: 8,
        ..SimConfig::default()
    };
    for (a, rho) in [(1.0, 0.0), (0.5, -0.3)] {
        let s = estimate_i_t(a, rho, 1.0, &cfg).unwrap();
        let l = estimate_i_t_lattice(a, rho, 1.0, &Lattice::default(), &cfg).unwrap();
        let z = (s.value - l.value) / (s.stderr.powi(2) + l.stderr.powi(2)).sqrt();
        assert!(z.abs() < 3.0, "a={a} rho={rho}: {} vs {}", s.value, l.value);
    }
}

#[test]
fn truncated_integral_grows_with_horizon() {
    let cfg = SimConfig {
        n_paths: 5_000,
        n_steps: 64,
        seed: 4,
        ..SimConfig::default()
    };
    let e = extrapolate_c(1.0, 0.0, 16.0, &cfg).unwrap();
    assert!(e.ladder.windows(2).all(|w| w[1].value >= w[0].value));
    assert!(e.ladder.iter().skip(1).all(|r| r.increment >= 0.0));
    // Increments shrink once the horizon is past the unit block.
    let inc: Vec<f64> = e.ladder.iter().skip(2).map(|r| r.increment).collect();
    assert!(inc.windows(2).all(|w| w[1] < w[0]), "{inc:?}");
}

#[test]
fn extrapolated_constant_is_positive_and_below_bound() {
    let cfg = SimConfig {
        n_paths: 20_000,
        n_steps: 64,
        seed: 6,
        ..SimConfig::default()
    };
    for (a, rho) in [(1.0, 0.0), (0.8, 0.3)] {
        let e = extrapolate_c(a, rho, 16.0, &cfg).unwrap();
        let bound = upper_bound_c(a, rho, 0.0, 0.0).unwrap();
        assert!(e.value - 3.0 * e.stderr > 0.0);
        assert!(
            e.value <= bound + 3.0 * e.stderr,
            "a={a} rho={rho}: {} vs {bound}",
            e.value
        );
    }
}

#[test]
fn inner_probability_decreases_and_obeys_the_reflection_bound() {
    let paths = brute_paths(1.0, 0.0, 2.0, 64, 20_000, 7);
    let p = |x: f64, y: f64| -> (f64, f64) {
        let hits: Vec<f64> = paths
            .iter()
            .map(|q| {
                if q.iter().any(|&(a, b)| a > x && b > y) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        mean_se(&hits)
    };
    let grid = [-0.5, 0.0, 0.5, 1.0];
    for &x in &grid {
        for w in grid.windows(2) {
            let (lo, se_lo) = p(x, w[0]);
            let (hi, se_hi) = p(x, w[1]);
            assert!(hi <= lo + 3.0 * (se_lo + se_hi));
            let (lo, se_lo) = p(w[0], x);
            let (hi, se_hi) = p(w[1], x);
            assert!(hi <= lo + 3.0 * (se_lo + se_hi));
        }
        if x >= 0.0 {
            let (v, se) = p(x, -10.0);
            assert!(v <= (-2.0 * x).exp() + 3.0 * se);
        }
    }
}

#[test]
fn estimates_are_reproducible_across_workers() {
    let base = SimConfig {
        n_paths: 3_000,
        n_steps: 64,
        seed: 21,
        ..SimConfig::default()
    };
    let one = estimate_i_t(1.0, 0.0, 2.0, &base).unwrap();
    let many = estimate_i_t(1.0, 0.0, 2.0, &SimConfig { workers: 3, ..base }).unwrap();
    assert_eq!(one, many);
}
