use biruin::brm::*;
use biruin::mc::{simulate_one_dim, simulate_psi_uv, IsDrift, SimConfig};
use biruin::numerics::{bivariate_normal_tail, std_normal_tail};
use proptest::prelude::*;

fn fin(c: f64, sigma: f64, u: f64, t: f64) -> SinglePortfolio {
    SinglePortfolio::new(c, sigma, u, Horizon::Finite(t)).unwrap()
}

#[test]
fn reflection_principle_and_reference_values() {
    let r = ruin_finite(&fin(0.0, 1.0, 1.0, 1.0)).unwrap();
    assert!((r - 2.0 * std_normal_tail(1.0)).abs() < 1e-15);
    let r = ruin_finite(&fin(1.0, 1.0, 1.0, 1.0)).unwrap();
    let direct = std_normal_tail(2.0) + (-2.0f64).exp() * 0.5;
    assert!((r - direct).abs() < 1e-15);
    assert!((r - 0.0904178).abs() < 5e-8);
}

#[test]
fn closed_form_matches_bridge_corrected_simulation() {
    for (c, sigma, u, t) in [(1.0, 1.0, 1.0, 1.0), (0.5, 2.0, 1.5, 3.0), (-0.5, 1.0, 2.0, 1.0)] {
        let p = fin(c, sigma, u, t);
        let exact = ruin_finite(&p).unwrap();
        let cfg = SimConfig {
            n_paths: 200_000,
            n_steps: 64,
            seed: 11,
            ..SimConfig::default()
        };
        let e = simulate_one_dim(&p, &cfg).unwrap();
        assert!(
            e.z_score(exact).abs() < 3.5,
            "{c} {sigma} {u} {t}: {} vs {exact}",
            e.value
        );
    }
}

#[test]
fn long_horizon_reaches_infinite_horizon_value() {
    for (c, sigma, u) in [(1.0, 1.0, 0.5), (0.3, 2.0, 1.0)] {
        let f = ruin_finite(&fin(c, sigma, u, 1e3)).unwrap();
        let i = ruin_infinite(&SinglePortfolio::new(c, sigma, u, Horizon::Infinite).unwrap()).unwrap();
        assert!((f - i.probability).abs() < 1e-6);
    }
}

#[test]
fn correlation_near_one_reduces_to_one_dimension() {
    let (c, u) = (0.5, 1.0);
    let cfg = SimConfig {
        n_paths: 100_000,
        seed: 5,
        is_drift: IsDrift::None,
        ..SimConfig::default()
    };
    let e = simulate_psi_uv(c, c, 0.999, u, u, &cfg).unwrap();
    let one = ruin_finite(&fin(c, 1.0, u, 1.0)).unwrap();
    // Residual gap at rho = 0.999 is of order sqrt(1 - rho).
    assert!((e.value - one).abs() < 3.0 * e.stderr + 0.01, "{} vs {one}", e.value);
    assert!(e.value <= one + 3.0 * e.stderr);
}

#[test]
fn equivalent_tail_forms_agree_below_the_boundary() {
    let m = BivariateBrm::new(0.0, 0.0, 0.5, 0.3, 8.0).unwrap();
    let a = asym_approx(&m, None).unwrap().value;
    let b = tail_equivalent_form(&m, None).unwrap().value;
    assert!((a / b - 1.0).abs() < 0.05, "{a} vs {b}");
}

#[test]
fn above_the_boundary_decays_faster() {
    let hi = asym_approx(&BivariateBrm::new(0.0, 0.0, 0.0, 1.0, 6.0).unwrap(), Some(4.0)).unwrap();
    let lo = asym_approx(&BivariateBrm::new(0.0, 0.0, 0.0, 0.0, 6.0).unwrap(), None).unwrap();
    assert!(hi.value < lo.value);
}

#[test]
fn ruin_time_limit_examples() {
    assert_eq!(ruin_time_limit_cdf(1.0, 0.0, 0.0).unwrap(), 0.0);
    let med = 2.0 * 2f64.ln();
    assert!((ruin_time_limit_cdf(0.2, 0.5, med).unwrap() - 0.5).abs() < 1e-15);
    assert!((ruin_time_limit_cdf(1.0, 0.0, 1.0).unwrap() - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
}

proptest! {
    #[test]
    fn finite_ruin_is_monotone(
        c in -2.0f64..2.0, sigma in 0.2f64..3.0, u in 0.0f64..4.0, t in 0.1f64..5.0,
        d in 0.0f64..1.0,
    ) {
        let base = ruin_finite(&fin(c, sigma, u, t)).unwrap();
        prop_assert!((0.0..=1.0).contains(&base));
        let tol = 1e-14;
        prop_assert!(ruin_finite(&fin(c, sigma, u + d, t)).unwrap() <= base + tol);
        prop_assert!(ruin_finite(&fin(c + d, sigma, u, t)).unwrap() <= base + tol);
        prop_assert!(ruin_finite(&fin(c, sigma, u, t + d)).unwrap() >= base - tol);
        // With negative drift extra noise can only delay near-certain ruin.
        if c >= 0.0 {
            prop_assert!(ruin_finite(&fin(c, sigma + d, u, t)).unwrap() >= base - tol);
        }
    }

    #[test]
    fn normalisation_preserves_ruin(
        c in -2.0f64..2.0, sigma in 0.2f64..3.0, u in 0.0f64..4.0, t in 0.1f64..5.0,
    ) {
        let n = normalize(c, c, sigma, sigma, u, u, t).unwrap();
        let a = ruin_finite(&fin(c, sigma, u, t)).unwrap();
        let b = ruin_finite(&fin(n.c1, 1.0, n.u, 1.0)).unwrap();
        prop_assert!((a - b).abs() <= 1e-13);
    }

    #[test]
    fn lambda_identities_hold(rho in -0.95f64..0.95, frac in 0.01f64..1.0) {
        let a = rho + frac * (1.0 - rho);
        let (l1, l2) = lambda_pair(a, rho).unwrap();
        prop_assert!(l1 > 0.0 && l2 > 0.0);
        prop_assert!((l1 + rho * l2 - 1.0).abs() < 1e-12);
        prop_assert!((l1 + a * l2 - q_exponent(a, rho)).abs() < 1e-12);
    }

    #[test]
    fn q_is_at_least_one_and_continuous(rho in -0.95f64..0.95, a in -1.0f64..1.0) {
        let q = q_exponent(a, rho);
        prop_assert!(q >= 1.0 - 1e-15);
        if a > rho && a < 1.0 {
            prop_assert!(q > 1.0);
        }
        let eps = 1e-9;
        prop_assert!((q_exponent(rho + eps, rho) - q_exponent(rho, rho)).abs() < 1e-6);
    }

    #[test]
    fn bounds_are_ordered_and_sandwich_the_orthant(
        c1 in -1.0f64..1.0, c2 in -1.0f64..1.0, rho in -0.9f64..0.9,
        u in 0.01f64..3.0, v in -1.0f64..3.0,
    ) {
        let m = BivariateBrm::new(c1, c2, rho, 1.0, u).unwrap();
        let b = prop1_bounds(&m, v).unwrap();
        prop_assert!(b.lower <= b.upper);
        prop_assert!((b.lower - bivariate_normal_tail(u + c1, v + c2, rho)).abs() < 1e-16);
    }

    #[test]
    fn constant_bound_grows_with_drifts(
        rho in -0.9f64..0.5, c1 in 0.0f64..2.0, c2 in 0.0f64..2.0, d in 0.0f64..1.0,
    ) {
        use biruin::constant::upper_bound_c;
        let a = 1.0;
        let base = upper_bound_c(a, rho, c1, c2).unwrap();
        prop_assert!(upper_bound_c(a, rho, c1 + d, c2).unwrap() >= base * (1.0 - 1e-12));
        prop_assert!(upper_bound_c(a, rho, c1, c2 + d).unwrap() >= base * (1.0 - 1e-12));
    }
}

#[test]
fn constant_forms_converge_above_the_boundary() {
    // The two forms differ by Mills-ratio corrections of order 1/(lambda_i u)^2:
    // about 3% at u = 8 for a = 1, rho = 0, more when lambda_2 is small.
    for (a, rho) in [(1.0, 0.0), (0.8, 0.3), (0.5, -0.4)] {
        let gap = |u: f64| {
            let m = BivariateBrm::new(0.0, 0.0, rho, a, u).unwrap();
            let x = asym_approx(&m, Some(2.0)).unwrap().value;
            let y = tail_equivalent_form(&m, Some(2.0)).unwrap().value;
            (x / y - 1.0).abs()
        };
        let (g8, g16) = (gap(8.0), gap(16.0));
        assert!(g8 < 0.1, "a={a} rho={rho}: {g8}");
        assert!(g16 < g8 / 3.0, "a={a} rho={rho}: {g8} then {g16}");
    }
}
