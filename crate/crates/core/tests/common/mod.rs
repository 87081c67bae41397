#![allow(dead_code)]

use cfmon_core::channel::EstimationModel;
use cfmon_core::{LargeScale, ModeAssignment, PowerAllocation, SimParams};
use rand::Rng;

/// Synthetic noise-normalized statistics with every entry in a moderate
/// range, so that no single term dominates by many orders of magnitude.
pub fn synthetic(m: usize, k: usize, n: usize, rng: &mut impl Rng) -> (LargeScale, SimParams) {
    let mut grid = |rows: usize, cols: usize| -> Vec<Vec<f64>> {
        (0..rows)
            .map(|_| (0..cols).map(|_| rng.random_range(0.1..1.0)).collect())
            .collect()
    };
    let beta_j = grid(m, k);
    let beta_o = grid(m, k);
    let beta_u = grid(k, k);
    let frac_j = grid(m, k);
    let frac_o = grid(m, k);
    let mut beta_mm = grid(m, m);
    for i in 0..m {
        beta_mm[i][i] = 0.0;
        for j in 0..i {
            beta_mm[i][j] = beta_mm[j][i] * 0.1;
            beta_mm[j][i] = beta_mm[i][j];
        }
    }
    let mul = |a: &Vec<Vec<f64>>, b: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        a.iter()
            .zip(b)
            .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x * y).collect())
            .collect()
    };
    let ls = LargeScale {
        gamma_j: mul(&beta_j, &frac_j),
        gamma_o: mul(&beta_o, &frac_o),
        beta_j,
        beta_o,
        beta_u,
        beta_mm,
    };
    let params = SimParams {
        num_mns: m,
        num_pairs: k,
        antennas: n,
        rho_j: rng.random_range(0.5..5.0),
        rho_ut: rng.random_range(0.5..5.0),
        estimation_model: EstimationModel::PERFECT,
        ..SimParams::default()
    };
    (ls, params)
}

/// Random allocation filling a random fraction of every MN's budget.
pub fn random_theta(ls: &LargeScale, n: usize, rng: &mut impl Rng) -> PowerAllocation {
    let mut th = PowerAllocation::zeros(ls.num_mns(), ls.num_pairs());
    for m in 0..ls.num_mns() {
        let w: Vec<f64> = (0..ls.num_pairs()).map(|_| rng.random_range(0.05..1.0)).collect();
        let used: f64 = w.iter().zip(&ls.gamma_j[m]).map(|(w, g)| w * g).sum();
        let fill = rng.random_range(0.1..=1.0);
        for k in 0..ls.num_pairs() {
            th.theta[m][k] = fill * w[k] / (used * n as f64);
        }
    }
    th
}

pub fn random_assignment(m: usize, rng: &mut impl Rng) -> ModeAssignment {
    ModeAssignment::from_jamming((0..m).map(|_| rng.random_bool(0.5)).collect())
}
