mod common;

use cfmon_core::channel::compute_large_scale;
use cfmon_core::{
    bisection_with, build_weighted_lp, check_feasible, equal_power, generate_topology, tilde_xi, xi,
    BisectionOptions, BisectionTarget, ModeAssignment, PowerAllocation, SimParams,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn contributing(k: usize, a: &ModeAssignment, th: &PowerAllocation, gamma: &[Vec<f64>]) -> usize {
    a.jammers().filter(|m| th.theta[*m][k] > 0.0 && gamma[*m][k] > 0.0).count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tilde_xi_lower_bounds_xi(seed in any::<u64>(), m in 1usize..6, k in 1usize..4, n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ls, p) = common::synthetic(m, k, n, &mut rng);
        let a = common::random_assignment(m, &mut rng);
        let th = common::random_theta(&ls, n, &mut rng);
        for link in 0..k {
            let (t, x) = (tilde_xi(link, &a, &th, &ls, &p), xi(link, &a, &th, &ls, &p));
            prop_assert!(t <= x * (1.0 + 1e-14));
            if contributing(link, &a, &th, &ls.gamma_j) <= 1 {
                prop_assert!((x - t).abs() <= 1e-12 * x);
            } else {
                prop_assert!(t < x);
            }
        }
    }

    #[test]
    fn feasibility_is_monotone_in_level(seed in any::<u64>(), m in 2usize..6, k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ls, p) = common::synthetic(m, k, 2, &mut rng);
        let a = common::random_assignment(m, &mut rng);
        prop_assume!(a.observers().next().is_some());
        let epa = equal_power(&a, &ls, &p).unwrap();
        let base = BisectionTarget::SuccessExponent.level(&a, &epa, &ls, &p, true);
        let mut last = true;
        for step in 0..12 {
            let rho = base * 0.8 * 1.25f64.powi(step);
            let lp = build_weighted_lp(rho, BisectionTarget::SuccessExponent, &a, &ls, &p);
            let now = check_feasible(&lp, 1e-9).unwrap().is_feasible();
            prop_assert!(last || !now, "feasible again at {rho}");
            last = now;
        }
    }

    #[test]
    fn optimized_power_dominates_equal_power(seed in any::<u64>(), m in 2usize..6, k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ls, p) = common::synthetic(m, k, 2, &mut rng);
        let a = common::random_assignment(m, &mut rng);
        let opts = BisectionOptions::default();
        let res = bisection_with(&a, &ls, &p, &opts).unwrap();
        let epa = equal_power(&a, &ls, &p).unwrap();
        prop_assert!(res.objective >= opts.target.level(&a, &epa, &ls, &p, false));
        prop_assert!(res.theta_opt.max_violation(&a, &ls, p.antennas) <= 1e-9);
        let (ppa, _) = cfmon_core::min_success_probability(&a, &res.theta_opt, &ls, &p);
        let (epa_p, _) = cfmon_core::min_success_probability(&a, &epa, &ls, &p);
        prop_assert!(ppa >= epa_p);
    }
}

/// Dense grid of the single jammer's coefficient over its whole budget.
fn grid_optimum(target: BisectionTarget, ls: &cfmon_core::LargeScale, p: &SimParams, a: &ModeAssignment, jammer: usize) -> f64 {
    let theta_max = 1.0 / (p.antennas as f64 * ls.gamma_j[jammer][0]);
    let points = 10_000;
    (0..points)
        .map(|i| {
            let mut th = PowerAllocation::zeros(ls.num_mns(), 1);
            th.theta[jammer][0] = theta_max * i as f64 / (points - 1) as f64;
            target.level(a, &th, ls, p, false)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn single_jammer_bisection_matches_grid() {
    let params = SimParams {
        num_mns: 4,
        num_pairs: 1,
        antennas: 2,
        ..SimParams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..20 {
        let topo = generate_topology(&params, &mut rng).unwrap();
        let ls = compute_large_scale(&topo, &params, &mut rng).unwrap();
        let a = ModeAssignment::from_mask(4, 0b0001);
        for target in [BisectionTarget::Unweighted, BisectionTarget::SuccessExponent] {
            let opts = BisectionOptions { target, ..BisectionOptions::default() };
            let res = bisection_with(&a, &ls, &params, &opts).unwrap();
            let grid = grid_optimum(target, &ls, &params, &a, 0);
            assert!((res.objective - grid).abs() <= 1e-3 * grid, "{} vs {grid}", res.objective);
            assert!(res.theta_opt.max_violation(&a, &ls, 2) <= 1e-9);
        }
    }
}
