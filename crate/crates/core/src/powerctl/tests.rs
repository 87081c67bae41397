use super::*;
use alloc::vec;
use alloc::vec::Vec;
use crate::sinr::tests::{handpicked, sinr_o_direct, xi_direct};
use crate::sinr::xi;
use approx::assert_relative_eq;

/// One observer (MN 0), one jammer (MN 1), one link.
fn single_jammer() -> (LargeScale, SimParams, ModeAssignment) {
    let (ls, mut p) = handpicked();
    let pick = |g: &crate::Grid| -> crate::Grid { vec![vec![g[0][0]], vec![g[1][0]]] };
    let ls = LargeScale {
        beta_j: pick(&ls.beta_j),
        beta_o: pick(&ls.beta_o),
        beta_u: vec![vec![ls.beta_u[0][0]]],
        beta_mm: vec![vec![0.0, 0.4], vec![0.4, 0.0]],
        gamma_j: pick(&ls.gamma_j),
        gamma_o: pick(&ls.gamma_o),
    };
    p.num_mns = 2;
    p.num_pairs = 1;
    (ls, p, ModeAssignment::from_mask(2, 0b10))
}

#[test]
fn tilde_xi_examples() {
    let (ls, p) = handpicked();
    let zero = PowerAllocation::zeros(3, 2);
    let a = ModeAssignment::from_mask(3, 0b110);
    for k in 0..2 {
        assert_eq!(tilde_xi(k, &a, &zero, &ls, &p), xi(k, &a, &zero, &ls, &p));
    }

    let one = ModeAssignment::from_mask(3, 0b010);
    let th = PowerAllocation {
        theta: vec![vec![0.3, 0.2]; 3],
    };
    for k in 0..2 {
        assert_relative_eq!(
            tilde_xi(k, &one, &th, &ls, &p),
            xi(k, &one, &th, &ls, &p),
            max_relative = 1e-14
        );
    }

    // two jammers with equal theta * gamma on link 0: (x + x)^2 > 2 x^2
    let mut th = PowerAllocation::zeros(3, 2);
    th.theta[0][0] = 0.5 / ls.gamma_j[0][0];
    th.theta[1][0] = 0.5 / ls.gamma_j[1][0];
    let two = ModeAssignment::from_mask(3, 0b011);
    assert!(tilde_xi(0, &two, &th, &ls, &p) < xi(0, &two, &th, &ls, &p));
}

#[test]
fn no_jammers_gives_constant_rows() {
    let (ls, p) = handpicked();
    let a = ModeAssignment::all_observing(3);
    let lp = build_feasibility_lp(0.7, &a, &ls, &p);
    assert_eq!(lp.num_vars, 0);
    assert_eq!(lp.rows.len(), 2);
    for (k, row) in lp.rows.iter().enumerate() {
        let zero = PowerAllocation::zeros(3, 2);
        let t = Evaluator::new(&a, &zero, &ls, &p).link(k);
        assert_relative_eq!(row.rhs, t.xi_const / 0.7 - t.mu, max_relative = 1e-14);
    }
}

#[test]
fn row_count_is_links_plus_jammers() {
    let (ls, p) = handpicked();
    for mask in 0..8u64 {
        let a = ModeAssignment::from_mask(3, mask);
        let lp = build_feasibility_lp(1.3, &a, &ls, &p);
        assert_eq!(lp.rows.len(), 2 + a.num_jamming());
        assert_eq!(lp.num_vars, 2 * a.num_jamming());
        assert!(lp.is_well_formed());
    }
}

#[test]
fn lp_rows_evaluate_closed_forms() {
    // for any theta, row k's lhs - rhs equals mu + MI - tilde_xi / rho
    let (ls, p) = handpicked();
    let a = ModeAssignment::from_mask(3, 0b101);
    let rho = 0.9;
    let lp = build_feasibility_lp(rho, &a, &ls, &p);
    let x: Vec<f64> = (0..lp.num_vars).map(|v| 0.1 + 0.05 * v as f64).collect();
    let mut th = PowerAllocation::zeros(3, 2);
    for (v, (m, k)) in lp.var_map.iter().enumerate() {
        th.theta[*m][*k] = x[v];
    }
    for k in 0..2 {
        let row = &lp.rows[k];
        let lhs: f64 = row.coeffs.iter().zip(&x).map(|(c, v)| c * v).sum();
        let n = p.antennas as f64;
        let obs: f64 = a.observers().map(|m| ls.gamma_o[m][k]).sum();
        let den = n * p.rho_ut * obs * obs / sinr_o_direct(k, &a, &th, &ls, &p);
        let expected = den - tilde_xi(k, &a, &th, &ls, &p) / rho;
        assert_relative_eq!(lhs - row.rhs, expected, max_relative = 1e-10);
    }
    // power rows
    for (r, m) in lp.rows[2..].iter().zip(a.jammers()) {
        let lhs: f64 = r.coeffs.iter().zip(&x).map(|(c, v)| c * v).sum();
        assert_relative_eq!(lhs, th.budget_used(m, &ls), max_relative = 1e-14);
        assert_eq!(r.rhs, 0.5);
    }
}

/// Interval oracle: with one jammer and one link both `xi` and the
/// denominator are affine in theta, so feasibility at `rho` is the sign of an
/// affine function at the two budget endpoints.
fn interval_feasible(rho: f64, ls: &LargeScale, p: &SimParams, a: &ModeAssignment) -> (bool, f64) {
    let n = p.antennas as f64;
    let theta_max = 1.0 / (n * ls.gamma_j[1][0]);
    let obs = ls.gamma_o[0][0];
    let at = |t: f64| {
        let mut th = PowerAllocation::zeros(2, 1);
        th.theta[1][0] = t;
        let xi = xi_direct(0, a, &th, ls, p);
        let den = n * p.rho_ut * obs * obs / sinr_o_direct(0, a, &th, ls, p);
        xi - rho * den
    };
    let best = at(0.0).max(at(theta_max));
    (best >= 0.0, best.abs() / at(0.0).abs().max(1.0))
}

#[test]
fn single_jammer_lp_agrees_with_interval_oracle() {
    let (ls, p, a) = single_jammer();
    let lp = build_feasibility_lp(1.0, &a, &ls, &p);
    assert_eq!((lp.rows.len(), lp.num_vars), (2, 1));
    let mut agreed = 0;
    for i in 0..200 {
        let rho = 0.01 * 1.05f64.powi(i);
        let (truth, margin) = interval_feasible(rho, &ls, &p, &a);
        if margin < 1e-6 {
            continue;
        }
        let got = check_feasible(&build_feasibility_lp(rho, &a, &ls, &p), 1e-9).unwrap();
        assert_eq!(got.is_feasible(), truth, "rho = {rho}");
        agreed += 1;
    }
    assert!(agreed > 150);
}

#[test]
fn bisection_without_jammers_returns_constant() {
    let (ls, p) = handpicked();
    let a = ModeAssignment::all_observing(3);
    let res = bisection_power_control(&a, &ls, &p, 1e-3).unwrap();
    let zero = PowerAllocation::zeros(3, 2);
    let level = BisectionTarget::SuccessExponent.level(&a, &zero, &ls, &p, false);
    assert_relative_eq!(res.objective, level, max_relative = 1e-12);
    assert!(res.rho_star <= level && res.rho_star >= level * (1.0 - 1e-3));
    assert_eq!(res.theta_opt, zero);
}

#[test]
fn bisection_respects_budget_and_dominates_equal_power() {
    let (ls, p) = handpicked();
    for mask in 1..7u64 {
        let a = ModeAssignment::from_mask(3, mask);
        for target in [
            BisectionTarget::Unweighted,
            BisectionTarget::SinrXi,
            BisectionTarget::SuccessExponent,
        ] {
            let opts = BisectionOptions {
                target,
                ..BisectionOptions::default()
            };
            let res = bisection_with(&a, &ls, &p, &opts).unwrap();
            assert!(res.theta_opt.max_violation(&a, &ls, 2) <= 1e-9);
            let epa = equal_power(&a, &ls, &p).unwrap();
            assert!(res.objective >= target.level(&a, &epa, &ls, &p, false) - 1e-6);
            assert!(res.bracket[1] - res.bracket[0] < 1e-3 * res.bracket[1]);
            assert!(res.objective >= res.rho_star * (1.0 - 1e-9));
        }
    }
}

#[test]
fn all_jamming_short_circuits() {
    let (ls, p) = handpicked();
    let a = ModeAssignment::all_jamming(3);
    let res = bisection_power_control(&a, &ls, &p, 1e-3).unwrap();
    assert_eq!(res.objective, 0.0);
    assert_eq!(res.iterations, 0);
    let unweighted = BisectionOptions {
        target: BisectionTarget::Unweighted,
        ..BisectionOptions::default()
    };
    assert!(matches!(
        bisection_with(&a, &ls, &p, &unweighted),
        Err(Error::BracketFailure(_))
    ));
}

#[test]
fn objective_value_is_min_product() {
    let (ls, p) = handpicked();
    let a = ModeAssignment::all_observing(3);
    let zero = PowerAllocation::zeros(3, 2);
    let expected = (0..2)
        .map(|k| sinr_o_direct(k, &a, &zero, &ls, &p) * xi_direct(k, &a, &zero, &ls, &p))
        .fold(f64::INFINITY, f64::min);
    assert_relative_eq!(objective_value(&a, &zero, &ls, &p), expected, max_relative = 1e-12);
    // no jammers: xi is rho_UT * cross gain + 1
    for k in 0..2 {
        let l = 1 - k;
        assert_relative_eq!(
            xi(k, &a, &zero, &ls, &p),
            p.rho_ut * ls.beta_u[l][k] + 1.0,
            max_relative = 1e-14
        );
    }
}
