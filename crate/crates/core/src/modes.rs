//! Observe/jam mode assignment: the greedy search and the random baseline.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::powerctl::{bisection_with, BisectionOptions};
use crate::sinr::{argmin, prob_from_exponent, Evaluator};
use crate::{Error, LargeScale, ModeAssignment, PowerAllocation, Result, SimParams};

pub const DEFAULT_E_MIN: f64 = 1e-4;

/// Equal power allocation: every jamming MN splits its budget into `K`
/// equal shares of `sum_k gamma_J theta`, meeting the budget with equality.
pub fn equal_power(
    a: &ModeAssignment,
    ls: &LargeScale,
    params: &SimParams,
) -> Result<PowerAllocation> {
    let k_count = ls.num_pairs();
    let mut theta = PowerAllocation::zeros(ls.num_mns(), k_count);
    let share = 1.0 / (params.antennas * k_count) as f64;
    for m in a.jammers() {
        for k in 0..k_count {
            let g = ls.gamma_j[m][k];
            if g <= 0.0 {
                return Err(Error::GammaZero { mn: m, link: k });
            }
            theta.theta[m][k] = share / g;
        }
    }
    Ok(theta)
}

/// Power allocation used to score a candidate assignment.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum PowerRule {
    #[default]
    Equal,
    /// Run max-min bisection for every candidate (expensive).
    Optimized(BisectionOptions),
}

impl PowerRule {
    pub fn allocate(
        &self,
        a: &ModeAssignment,
        ls: &LargeScale,
        params: &SimParams,
    ) -> Result<PowerAllocation> {
        match self {
            PowerRule::Equal => equal_power(a, ls, params),
            PowerRule::Optimized(opts) => Ok(bisection_with(a, ls, params, opts)?.theta_opt),
        }
    }
}

/// Minimum success probability of `a` under `rule`.
pub fn score(
    a: &ModeAssignment,
    ls: &LargeScale,
    params: &SimParams,
    rule: &PowerRule,
) -> Result<f64> {
    let theta = rule.allocate(a, ls, params)?;
    let ev = Evaluator::new(a, &theta, ls, params);
    Ok(argmin((0..ls.num_pairs()).map(|k| prob_from_exponent(ev.success_exponent(k)))).0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedyStep {
    /// MN switched to jamming.
    pub moved: usize,
    /// Minimum success probability after the switch.
    pub min_success_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyTrace {
    /// Value with every MN observing.
    pub initial_min_success_prob: f64,
    /// Accepted moves in order.
    pub iterations: Vec<GreedyStep>,
    /// Best candidate of the last round, when it was not accepted.
    pub rejected: Option<GreedyStep>,
    pub final_assignment: ModeAssignment,
}

impl GreedyTrace {
    /// Objective values `Pi*[0..=T]` of the accepted sequence.
    pub fn accepted_values(&self) -> Vec<f64> {
        core::iter::once(self.initial_min_success_prob)
            .chain(self.iterations.iter().map(|s| s.min_success_prob))
            .collect()
    }

    pub fn final_min_success_prob(&self) -> f64 {
        self.iterations
            .last()
            .map_or(self.initial_min_success_prob, |s| s.min_success_prob)
    }
}

/// Greedy assignment: start with every MN observing and, each round, switch
/// the observer whose move to jamming maximizes the minimum success
/// probability. A round's best move is applied only if it improves the
/// current value by at least `e_min`; otherwise the search stops. Ties go to
/// the lowest MN index.
pub fn greedy_assign(
    ls: &LargeScale,
    params: &SimParams,
    e_min: f64,
    rule: &PowerRule,
) -> Result<GreedyTrace> {
    let m_count = ls.num_mns();
    let mut a = ModeAssignment::all_observing(m_count);
    let initial = score(&a, ls, params, rule)?;
    let mut current = initial;
    let mut iterations = Vec::new();
    let mut rejected = None;

    while a.observers().next().is_some() {
        let mut best: Option<GreedyStep> = None;
        let candidates: Vec<usize> = a.observers().collect();
        for m in candidates {
            a.set_jamming(m, true);
            let value = score(&a, ls, params, rule)?;
            a.set_jamming(m, false);
            if best.is_none_or(|b| value > b.min_success_prob) {
                best = Some(GreedyStep {
                    moved: m,
                    min_success_prob: value,
                });
            }
        }
        let Some(step) = best else { break };
        if step.min_success_prob - current >= e_min {
            a.set_jamming(step.moved, true);
            current = step.min_success_prob;
            iterations.push(step);
        } else {
            rejected = Some(step);
            break;
        }
    }

    Ok(GreedyTrace {
        initial_min_success_prob: initial,
        iterations,
        rejected,
        final_assignment: a,
    })
}

/// I.i.d. Bernoulli(`p_jam`) jamming flags.
pub fn random_assign<R: Rng + ?Sized>(num_mns: usize, p_jam: f64, rng: &mut R) -> ModeAssignment {
    let p = p_jam.clamp(0.0, 1.0);
    ModeAssignment::from_jamming((0..num_mns).map(|_| rng.random_bool(p)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::channel::{compute_large_scale, generate_topology};
    use crate::sinr::min_success_probability;
    use crate::sinr::tests::handpicked;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equal_power_meets_budget() {
        let (ls, p) = handpicked();
        let a = ModeAssignment::from_mask(3, 0b011);
        let th = equal_power(&a, &ls, &p).unwrap();
        for m in 0..2 {
            assert_relative_eq!(th.budget_used(m, &ls) * 2.0, 1.0, epsilon = 1e-15);
            for k in 0..2 {
                assert_relative_eq!(th.theta[m][k], 1.0 / (2.0 * 2.0 * ls.gamma_j[m][k]));
            }
        }
        assert_eq!(th.theta[2], vec![0.0, 0.0]);
        assert!(th.max_violation(&a, &ls, 2) <= 1e-15);

        let none = equal_power(&ModeAssignment::all_observing(3), &ls, &p).unwrap();
        assert_eq!(none, PowerAllocation::zeros(3, 2));
    }

    #[test]
    fn equal_power_single_link() {
        let (mut ls, p) = handpicked();
        for g in [&mut ls.gamma_j, &mut ls.beta_j, &mut ls.gamma_o, &mut ls.beta_o] {
            g.iter_mut().for_each(|r| r.truncate(1));
        }
        ls.beta_u = vec![vec![1.0]];
        let a = ModeAssignment::from_mask(3, 0b100);
        let th = equal_power(&a, &ls, &p).unwrap();
        assert_relative_eq!(th.theta[2][0], 1.0 / (2.0 * ls.gamma_j[2][0]));
    }

    #[test]
    fn equal_power_rejects_zero_gamma() {
        let (mut ls, p) = handpicked();
        ls.gamma_j[1][0] = 0.0;
        let a = ModeAssignment::from_mask(3, 0b010);
        assert_eq!(
            equal_power(&a, &ls, &p),
            Err(Error::GammaZero { mn: 1, link: 0 })
        );
    }

    #[test]
    fn single_mn_stays_observing() {
        let (ls, p) = handpicked();
        let one = LargeScale {
            beta_j: vec![ls.beta_j[0].clone()],
            beta_o: vec![ls.beta_o[0].clone()],
            beta_u: ls.beta_u.clone(),
            beta_mm: vec![vec![0.0]],
            gamma_j: vec![ls.gamma_j[0].clone()],
            gamma_o: vec![ls.gamma_o[0].clone()],
        };
        let trace = greedy_assign(&one, &p, DEFAULT_E_MIN, &PowerRule::Equal).unwrap();
        assert!(trace.iterations.is_empty());
        assert_eq!(trace.rejected.unwrap().min_success_prob, 0.0);
        assert_eq!(trace.final_assignment, ModeAssignment::all_observing(1));
    }

    #[test]
    fn trace_matches_recomputation() {
        let params = SimParams {
            num_mns: 10,
            num_pairs: 3,
            ..SimParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let topo = generate_topology(&params, &mut rng).unwrap();
        let ls = compute_large_scale(&topo, &params, &mut rng).unwrap();
        let trace = greedy_assign(&ls, &params, DEFAULT_E_MIN, &PowerRule::Equal).unwrap();
        let mut a = ModeAssignment::all_observing(10);
        let th = PowerAllocation::zeros(10, 3);
        assert_eq!(
            trace.initial_min_success_prob,
            min_success_probability(&a, &th, &ls, &params).0
        );
        let mut seen = Vec::new();
        for step in &trace.iterations {
            assert!(!seen.contains(&step.moved));
            seen.push(step.moved);
            a.set_jamming(step.moved, true);
            let th = equal_power(&a, &ls, &params).unwrap();
            assert_relative_eq!(
                step.min_success_prob,
                min_success_probability(&a, &th, &ls, &params).0,
                max_relative = 1e-12
            );
        }
        assert_eq!(a, trace.final_assignment);
        let vals = trace.accepted_values();
        assert!(vals.windows(2).all(|w| w[1] - w[0] >= DEFAULT_E_MIN));

        let again = greedy_assign(&ls, &params, DEFAULT_E_MIN, &PowerRule::Equal).unwrap();
        assert_eq!(trace, again);
    }

    #[test]
    fn random_assign_extremes_and_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(random_assign(7, 0.0, &mut rng), ModeAssignment::all_observing(7));
        assert_eq!(random_assign(7, 1.0, &mut rng), ModeAssignment::all_jamming(7));
        let draws = 10_000;
        let jam: usize = (0..draws)
            .map(|_| random_assign(1, 0.5, &mut rng).num_jamming())
            .sum();
        let frac = jam as f64 / draws as f64;
        assert!((frac - 0.5).abs() < 0.02, "{frac}");
    }
}
