use biruin::brm::{prop1_bounds, q_exponent, BivariateBrm, Horizon, SinglePortfolio};
use biruin::levy::{GammaModel, TwoLineBarrier};
use biruin::mc::*;
use proptest::prelude::*;

fn cfg(n_paths: u64, seed: u64) -> SimConfig {
    SimConfig {
        n_paths,
        seed,
        ..SimConfig::default()
    }
}

#[test]
fn estimates_do_not_depend_on_worker_count() {
    let m = BivariateBrm::new(0.5, 0.5, 0.3, 1.0, 1.5).unwrap();
    let base = cfg(5_000, 17);
    let one = simulate_psi(&m, &base).unwrap();
    let many = simulate_psi(&m, &SimConfig { workers: 4, ..base }).unwrap();
    assert_eq!(one, many);
    let p = SinglePortfolio::new(1.0, 1.0, 1.0, Horizon::Finite(1.0)).unwrap();
    let c = SimConfig { n_steps: 32, ..base };
    assert_eq!(
        simulate_one_dim(&p, &c).unwrap(),
        simulate_one_dim(&p, &SimConfig { workers: 3, ..c }).unwrap()
    );
    let g = GammaModel::new(1.0).unwrap();
    let b = TwoLineBarrier::new(1.5, 0.5, 0.5, 1.0, 1.0).unwrap();
    let c = SimConfig { n_steps: 256, ..base };
    assert_eq!(
        simulate_levy_psi(&g, &b, &c).unwrap(),
        simulate_levy_psi(&g, &b, &SimConfig { workers: 2, ..c }).unwrap()
    );
}

#[test]
fn importance_sampling_is_unbiased() {
    let (c1, c2, rho, u) = (0.0, 0.0, 0.0, 1.0);
    let plain = simulate_psi_uv(
        c1,
        c2,
        rho,
        u,
        u,
        &SimConfig {
            is_drift: IsDrift::None,
            ..cfg(100_000, 1)
        },
    )
    .unwrap();
    for (k, drift) in [IsDrift::Auto, IsDrift::Fixed(0.5, 0.5), IsDrift::Fixed(1.0, 0.2)]
        .into_iter()
        .enumerate()
    {
        let e = simulate_psi_uv(
            c1,
            c2,
            rho,
            u,
            u,
            &SimConfig {
                is_drift: drift,
                ..cfg(100_000, 2 + k as u64)
            },
        )
        .unwrap();
        let z = (e.value - plain.value) / (e.stderr.powi(2) + plain.stderr.powi(2)).sqrt();
        assert!(z.abs() < 3.0, "{drift:?}: {} vs {}", e.value, plain.value);
        assert!(e.n_effective <= e.n_paths as f64);
    }
}

#[test]
fn estimate_lies_in_the_bounds() {
    let m = BivariateBrm::new(0.0, 0.0, 0.0, 1.0, 1.0).unwrap();
    let b = prop1_bounds(&m, 1.0).unwrap();
    let e = simulate_psi(&m, &cfg(100_000, 9)).unwrap();
    assert!(e.value + 3.0 * e.stderr >= b.lower && e.value - 3.0 * e.stderr <= b.upper);
}

#[test]
fn immediate_ruin_is_certain() {
    let e = simulate_psi_uv(0.0, 0.0, 0.0, -0.01, -0.01, &cfg(1_000, 0)).unwrap();
    assert!(e.value >= 0.999);
}

#[test]
fn grid_bias_decays_at_square_root_rate() {
    // Same paths read at n, n/2, n/4. A grid maximum misses the path maximum by
    // O(sqrt(dt)), so successive gaps shrink by about sqrt(2) per halving.
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for seed in 0..4 {
        let c = SimConfig {
            n_steps: 1024,
            is_drift: IsDrift::None,
            ..cfg(100_000, 40 + seed)
        };
        let e = simulate_psi_uv(0.0, 0.0, 0.5, 1.0, 1.0, &c).unwrap();
        let l = &e.levels;
        assert_eq!(l.len(), 3);
        assert!(l[0].n_steps == 2 * l[1].n_steps && l[1].n_steps == 2 * l[2].n_steps);
        d1 += l[1].value - l[2].value;
        d2 += l[0].value - l[1].value;
    }
    assert!(d1 > 0.0 && d2 > 0.0);
    let r = d1 / d2;
    assert!((1.2..1.6).contains(&r), "{d1} vs {d2}: ratio {r}");
}

#[test]
fn bridge_correction_removes_grid_bias() {
    use rand::{rngs::StdRng, Rng, SeedableRng};
    use rand_distr::StandardNormal;
    let p = SinglePortfolio::new(1.0, 1.0, 1.0, Horizon::Finite(1.0)).unwrap();
    let exact = biruin::brm::ruin_finite(&p).unwrap();
    let n_steps = 16;
    let e = simulate_one_dim(
        &p,
        &SimConfig {
            n_steps,
            ..cfg(200_000, 3)
        },
    )
    .unwrap();
    assert!(e.z_score(exact).abs() < 3.5, "{} vs {exact}", e.value);
    // Plain grid maximum on independent paths misses crossings between points.
    let mut rng = StdRng::seed_from_u64(1);
    let dt = 1.0 / n_steps as f64;
    let n = 200_000;
    let mut hits = 0.0;
    for _ in 0..n {
        let mut x = 0.0;
        for _ in 0..n_steps {
            let z: f64 = rng.sample(StandardNormal);
            x += dt.sqrt() * z - dt;
            if x > 1.0 {
                hits += 1.0;
                break;
            }
        }
    }
    let raw = hits / n as f64;
    let se = (raw * (1.0 - raw) / n as f64).sqrt();
    assert!(e.value > raw + 3.0 * (se + e.stderr), "{} vs raw {raw}", e.value);
    let zero = SinglePortfolio::new(1.0, 1.0, 0.0, Horizon::Finite(1.0)).unwrap();
    assert_eq!(simulate_one_dim(&zero, &cfg(100, 3)).unwrap().value, 1.0);
}

#[test]
fn ruin_times_are_scaled_into_range_and_centre_on_the_limit() {
    let m = BivariateBrm::new(0.0, 0.0, 0.0, 1.0, 3.0).unwrap();
    let s = sample_ruin_time(&m, &cfg(20_000, 12)).unwrap();
    assert!(!s.values.is_empty());
    assert!(s.values.iter().all(|&v| (0.0..=9.0).contains(&v)));
    assert!(s.weights.iter().all(|&w| w > 0.0));
    let tw: f64 = s.weights.iter().sum();
    let mean: f64 = s.values.iter().zip(&s.weights).map(|(v, w)| v * w).sum::<f64>() / tw;
    let target = 2.0 / q_exponent(1.0, 0.0);
    assert!((mean - target).abs() < 0.3 * target, "{mean} vs {target}");
}

#[test]
fn ks_examples() {
    let n = 10_000;
    let exp_q: Vec<f64> = (0..n).map(|i| -(1.0 - (i as f64 + 0.5) / n as f64).ln()).collect();
    let w = vec![1.0; n];
    let cdf = |x: f64| 1.0 - (-x).exp();
    assert!(ks_weighted(&exp_q, &w, cdf).unwrap() < 0.05);
    let median = 2f64.ln();
    assert!(ks_weighted(&[median; 10], &[1.0; 10], cdf).unwrap() >= 0.5 - 1e-12);
    assert!(ks_weighted(&[], &[], cdf).is_err());
}

proptest! {
    #[test]
    fn ks_ignores_sample_order(
        mut pairs in proptest::collection::vec((0.0f64..5.0, 0.1f64..2.0), 1..50),
        rot in 0usize..50,
    ) {
        let cdf = |x: f64| 1.0 - (-x).exp();
        let (v, w): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        let a = ks_weighted(&v, &w, cdf).unwrap();
        let k = rot % pairs.len();
        pairs.rotate_left(k);
        pairs.reverse();
        let (v, w): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let b = ks_weighted(&v, &w, cdf).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn moments_merge_like_a_single_pass(xs in proptest::collection::vec(-10.0f64..10.0, 2..100), cut in 0usize..100) {
        let cut = cut % xs.len();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let (mut a, mut b) = (Moments::default(), Moments::default());
        xs[..cut].iter().for_each(|&x| a.push(x));
        xs[cut..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        prop_assert!((a.mean() - all.mean()).abs() < 1e-12);
        prop_assert!((a.stderr() - all.stderr()).abs() < 1e-10);
    }
}
