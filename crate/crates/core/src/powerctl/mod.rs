//! Max-min jamming power control.
//!
//! For a fixed mode assignment the objective of link `k` is a ratio whose
//! numerator contains the coherent jamming term `(sum_m sqrt(theta) gamma)^2`.
//! Replacing that term by its lower bound `sum_m theta gamma^2` makes every
//! level set linear in `theta`, so the max-min level is found by bisection over
//! linear feasibility programs.

mod lp;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use lp::{
    check_feasible, check_feasible_with, Feasibility, FeasibilityLP, LpRow, RowKind,
    DEFAULT_FEASIBILITY_TOL, DEFAULT_MAX_PIVOTS,
};

use crate::modes::equal_power;
use crate::sinr::{Evaluator, LinkTerms};
use crate::{Error, LargeScale, ModeAssignment, PowerAllocation, Result, SimParams};

/// Lower bound on `xi_k` that is linear in `theta`.
pub fn tilde_xi(
    k: usize,
    a: &ModeAssignment,
    theta: &PowerAllocation,
    ls: &LargeScale,
    params: &SimParams,
) -> f64 {
    Evaluator::new(a, theta, ls, params).link(k).tilde_xi()
}

/// `min_k SINR_O(k) * xi(k)` with the exact `xi`.
pub fn objective_value(
    a: &ModeAssignment,
    theta: &PowerAllocation,
    ls: &LargeScale,
    params: &SimParams,
) -> f64 {
    let ev = Evaluator::new(a, theta, ls, params);
    (0..ls.num_pairs())
        .map(|k| {
            let t = ev.link(k);
            t.sinr_observe(params) * t.xi()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Which per-link quantity the bisection level is compared against.
///
/// All three targets share the row structure `mu_k + MI_k(theta) -
/// (w_k / rho) xi_k(theta) <= 0`; they differ only in the constant weight
/// `w_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BisectionTarget {
    /// `w_k = 1`: the level is `xi_k / (mu_k + MI_k)`.
    Unweighted,
    /// `w_k = N rho_UT (sum_obs gamma_O)^2`: the level is `SINR_O * xi`.
    SinrXi,
    /// `w_k = N (sum_obs gamma_O)^2 / beta_U[k][k]`: the level is the
    /// exponent of the success probability, so maximizing it maximizes the
    /// minimum success probability.
    #[default]
    SuccessExponent,
}

impl BisectionTarget {
    pub fn weights(self, a: &ModeAssignment, ls: &LargeScale, params: &SimParams) -> Vec<f64> {
        let n = params.antennas as f64;
        (0..ls.num_pairs())
            .map(|k| {
                let obs: f64 = a.observers().map(|m| ls.gamma_o[m][k]).sum();
                match self {
                    BisectionTarget::Unweighted => 1.0,
                    BisectionTarget::SinrXi => n * params.rho_ut * obs * obs,
                    BisectionTarget::SuccessExponent => n * obs * obs / ls.beta_u[k][k],
                }
            })
            .collect()
    }

    /// `min_k w_k xi_k / (mu_k + MI_k)`, with `tilde_xi` when `bound` is set.
    pub fn level(
        self,
        a: &ModeAssignment,
        theta: &PowerAllocation,
        ls: &LargeScale,
        params: &SimParams,
        bound: bool,
    ) -> f64 {
        let weights = self.weights(a, ls, params);
        let ev = Evaluator::new(a, theta, ls, params);
        (0..ls.num_pairs())
            .map(|k| link_level(weights[k], &ev.link(k), bound))
            .fold(f64::INFINITY, f64::min)
    }
}

fn link_level(weight: f64, t: &LinkTerms, bound: bool) -> f64 {
    if weight == 0.0 {
        return 0.0;
    }
    let den = t.mu + t.mi;
    if den <= 0.0 {
        return f64::INFINITY;
    }
    weight * if bound { t.tilde_xi() } else { t.xi() } / den
}

/// The `rho`-independent pieces of the feasibility program.
struct LpTemplate {
    var_map: Vec<(usize, usize)>,
    /// `[k][var]`: inter-MN interference coefficient.
    mi: Vec<Vec<f64>>,
    /// `[k][var]`: coefficient in `tilde_xi_k`.
    xi: Vec<Vec<f64>>,
    xi_const: Vec<f64>,
    mu: Vec<f64>,
    weights: Vec<f64>,
    /// `(mn, gamma_J row)` for the power rows.
    power: Vec<(usize, Vec<f64>)>,
    budget: f64,
}

impl LpTemplate {
    fn new(weights: Vec<f64>, a: &ModeAssignment, ls: &LargeScale, params: &SimParams) -> Self {
        let n = params.antennas as f64;
        let k_count = ls.num_pairs();
        let jammers: Vec<usize> = a.jammers().collect();
        let var_map: Vec<(usize, usize)> = jammers
            .iter()
            .flat_map(|i| (0..k_count).map(move |l| (*i, l)))
            .collect();

        let zero = PowerAllocation::zeros(ls.num_mns(), k_count);
        let ev = Evaluator::new(a, &zero, ls, params);

        let mut mi = vec![vec![0.0; var_map.len()]; k_count];
        let mut xi = vec![vec![0.0; var_map.len()]; k_count];
        let mut xi_const = Vec::with_capacity(k_count);
        let mut mu = Vec::with_capacity(k_count);
        for k in 0..k_count {
            let t = ev.link(k);
            xi_const.push(t.xi_const);
            mu.push(t.mu);
            for (v, (i, l)) in var_map.iter().enumerate() {
                let g = ls.gamma_j[*i][*l];
                let coupling: f64 = a
                    .observers()
                    .map(|m| ls.gamma_o[m][k] * ls.beta_mm[m][*i])
                    .sum();
                mi[k][v] = params.rho_j * n * coupling * g;
                xi[k][v] = params.rho_j * n * ls.beta_j[*i][k] * g;
                if *l == k {
                    xi[k][v] += params.rho_j * n * n * g * g;
                }
            }
        }
        let power = jammers.iter().map(|i| (*i, ls.gamma_j[*i].clone())).collect();
        Self {
            var_map,
            mi,
            xi,
            xi_const,
            mu,
            weights,
            power,
            budget: 1.0 / n,
        }
    }

    fn at(&self, rho: f64) -> FeasibilityLP {
        let nv = self.var_map.len();
        let mut lp = FeasibilityLP::new(nv);
        lp.var_map = self.var_map.clone();
        for k in 0..self.mu.len() {
            let s = self.weights[k] / rho;
            let coeffs = (0..nv).map(|v| self.mi[k][v] - s * self.xi[k][v]).collect();
            lp.push(coeffs, s * self.xi_const[k] - self.mu[k], RowKind::Link(k));
        }
        for (pos, (m, gamma)) in self.power.iter().enumerate() {
            let mut coeffs = vec![0.0; nv];
            let k_count = gamma.len();
            coeffs[pos * k_count..(pos + 1) * k_count].copy_from_slice(gamma);
            lp.push(coeffs, self.budget, RowKind::Power(*m));
        }
        lp
    }

    fn to_allocation(&self, x: &[f64], num_mns: usize, k_count: usize) -> PowerAllocation {
        let mut th = PowerAllocation::zeros(num_mns, k_count);
        for (v, (m, k)) in self.var_map.iter().enumerate() {
            th.theta[*m][*k] = x[v].max(0.0);
        }
        th
    }
}

/// Feasibility program at level `rho` with unit link weights:
/// `mu_k + MI_k(theta) - tilde_xi_k(theta) / rho <= 0` for every link, the
/// per-jammer budget rows and `theta >= 0`. Variables are `theta[i][l]` of
/// jamming MNs only, in `(i, l)` order.
pub fn build_feasibility_lp(
    rho: f64,
    a: &ModeAssignment,
    ls: &LargeScale,
    params: &SimParams,
) -> FeasibilityLP {
    build_weighted_lp(rho, BisectionTarget::Unweighted, a, ls, params)
}

/// Same as [`build_feasibility_lp`] with each `1/rho` scaled by the weight of
/// `target`.
pub fn build_weighted_lp(
    rho: f64,
    target: BisectionTarget,
    a: &ModeAssignment,
    ls: &LargeScale,
    params: &SimParams,
) -> FeasibilityLP {
    LpTemplate::new(target.weights(a, ls, params), a, ls, params).at(rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionOptions {
    /// Stop once `rho_max - rho_min < eps * rho_max`.
    pub eps: f64,
    pub feasibility_tol: f64,
    pub max_pivots: usize,
    pub max_doublings: usize,
    pub target: BisectionTarget,
}

impl Default for BisectionOptions {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            feasibility_tol: DEFAULT_FEASIBILITY_TOL,
            max_pivots: DEFAULT_MAX_PIVOTS,
            max_doublings: 60,
            target: BisectionTarget::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessSource {
    Bisection,
    EqualPower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectionResult {
    /// Returned allocation: the better (by exact level) of the last feasible
    /// bisection witness and equal power.
    pub theta_opt: PowerAllocation,
    /// Final `rho_min`: the level certified by the linear bound.
    pub rho_star: f64,
    /// Target level of `theta_opt` with the exact `xi`.
    pub objective: f64,
    pub iterations: usize,
    pub feasibility_checks: usize,
    pub bracket: [f64; 2],
    pub source: WitnessSource,
}

pub fn bisection_power_control(
    a: &ModeAssignment,
    ls: &LargeScale,
    params: &SimParams,
    eps: f64,
) -> Result<BisectionResult> {
    bisection_with(
        a,
        ls,
        params,
        &BisectionOptions {
            eps,
            ..BisectionOptions::default()
        },
    )
}

/// Bisection on the level `rho`. The bracket starts at the equal-power level,
/// which equal power itself certifies, and doubles until infeasible.
pub fn bisection_with(
    a: &ModeAssignment,
    ls: &LargeScale,
    params: &SimParams,
    opts: &BisectionOptions,
) -> Result<BisectionResult> {
    let k_count = ls.num_pairs();
    let m_count = ls.num_mns();
    let epa = equal_power(a, ls, params)?;
    let weights = opts.target.weights(a, ls, params);
    let template = LpTemplate::new(weights, a, ls, params);

    let start = opts.target.level(a, &epa, ls, params, true);
    if start == 0.0 {
        // some link has no observer; nothing beats zero
        return Ok(BisectionResult {
            objective: opts.target.level(a, &epa, ls, params, false),
            theta_opt: epa,
            rho_star: 0.0,
            iterations: 0,
            feasibility_checks: 0,
            bracket: [0.0, 0.0],
            source: WitnessSource::EqualPower,
        });
    }
    if !start.is_finite() {
        return Err(Error::BracketFailure(format!(
            "equal-power level {start} is not finite"
        )));
    }

    let mut checks = 0;
    let mut probe = |rho: f64| -> Result<Option<Vec<f64>>> {
        checks += 1;
        let res = check_feasible_with(&template.at(rho), opts.feasibility_tol, opts.max_pivots)?;
        Ok(res.witness().map(<[f64]>::to_vec))
    };

    // equal power attains `start` with the bound, so it certifies the lower end
    let mut witness: Vec<f64> = template.var_map.iter().map(|(m, k)| epa.theta[*m][*k]).collect();
    let mut lo = start;
    let mut hi = 2.0 * start;
    let mut doublings = 0;
    while let Some(w) = probe(hi)? {
        witness = w;
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings >= opts.max_doublings {
            return Err(Error::BracketFailure(format!(
                "still feasible after {doublings} doublings"
            )));
        }
    }

    let mut iterations = 0;
    while hi - lo >= opts.eps * hi {
        let mid = 0.5 * (lo + hi);
        match probe(mid)? {
            Some(w) => {
                lo = mid;
                witness = w;
            }
            None => hi = mid,
        }
        iterations += 1;
    }

    let mut theta = template.to_allocation(&witness, m_count, k_count);
    enforce_budget(&mut theta, a, ls, params.antennas);

    let bis_level = opts.target.level(a, &theta, ls, params, false);
    let epa_level = opts.target.level(a, &epa, ls, params, false);
    let (theta_opt, objective, source) = if bis_level >= epa_level {
        (theta, bis_level, WitnessSource::Bisection)
    } else {
        (epa, epa_level, WitnessSource::EqualPower)
    };

    Ok(BisectionResult {
        theta_opt,
        rho_star: lo,
        objective,
        iterations,
        feasibility_checks: checks,
        bracket: [lo, hi],
        source,
    })
}

/// Scales down any jammer whose budget is exceeded by rounding.
fn enforce_budget(theta: &mut PowerAllocation, a: &ModeAssignment, ls: &LargeScale, antennas: usize) {
    let cap = 1.0 / antennas as f64;
    for m in a.jammers() {
        let used = theta.budget_used(m, ls);
        if used > cap {
            let s = cap / used;
            theta.theta[m].iter_mut().for_each(|t| *t *= s);
        }
    }
}

#[cfg(test)]
mod tests;
