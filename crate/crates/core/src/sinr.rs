//! Closed-form effective SINRs and the monitoring success probability.
//!
//! Everything here is a function of large-scale statistics only: the CPU
//! detects with statistical CSI, and the success probability integrates the
//! exponential law of `|h_kk|^2` analytically.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Grid, LargeScale, SimParams};

/// Observe/jam role of every MN; `true` means jamming.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModeAssignment {
    jamming: Vec<bool>,
}

impl ModeAssignment {
    pub fn all_observing(num_mns: usize) -> Self {
        Self {
            jamming: vec![false; num_mns],
        }
    }

    pub fn all_jamming(num_mns: usize) -> Self {
        Self {
            jamming: vec![true; num_mns],
        }
    }

    pub fn from_jamming(jamming: Vec<bool>) -> Self {
        Self { jamming }
    }

    /// Builds the assignment whose `m`-th bit of `mask` is `a_m`.
    pub fn from_mask(num_mns: usize, mask: u64) -> Self {
        Self {
            jamming: (0..num_mns).map(|m| mask >> m & 1 == 1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.jamming.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jamming.is_empty()
    }

    pub fn is_jamming(&self, m: usize) -> bool {
        self.jamming[m]
    }

    pub fn set_jamming(&mut self, m: usize, jamming: bool) {
        self.jamming[m] = jamming;
    }

    /// `a_m` as a number.
    pub fn a(&self, m: usize) -> f64 {
        if self.jamming[m] {
            1.0
        } else {
            0.0
        }
    }

    pub fn observers(&self) -> impl Iterator<Item = usize> + '_ {
        self.jamming
            .iter()
            .enumerate()
            .filter(|(_, j)| !**j)
            .map(|(m, _)| m)
    }

    pub fn jammers(&self) -> impl Iterator<Item = usize> + '_ {
        self.jamming.iter().enumerate().filter(|(_, j)| **j).map(|(m, _)| m)
    }

    pub fn num_jamming(&self) -> usize {
        self.jamming.iter().filter(|j| **j).count()
    }

    pub fn as_bits(&self) -> Vec<u8> {
        self.jamming.iter().map(|j| u8::from(*j)).collect()
    }
}

impl Serialize for ModeAssignment {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.as_bits().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ModeAssignment {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let bits = Vec::<u8>::deserialize(d)?;
        if bits.iter().any(|b| *b > 1) {
            return Err(serde::de::Error::custom("mode bits must be 0 or 1"));
        }
        Ok(Self {
            jamming: bits.into_iter().map(|b| b == 1).collect(),
        })
    }
}

/// Jamming power-control coefficients `theta[m][k] >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub theta: Grid,
}

impl PowerAllocation {
    pub fn zeros(num_mns: usize, num_pairs: usize) -> Self {
        Self {
            theta: vec![vec![0.0; num_pairs]; num_mns],
        }
    }

    /// `sum_k gamma_J[m][k] theta[m][k]`, the per-MN power budget used.
    pub fn budget_used(&self, m: usize, ls: &LargeScale) -> f64 {
        self.theta[m]
            .iter()
            .zip(&ls.gamma_j[m])
            .map(|(t, g)| t * g)
            .sum()
    }

    /// Largest normalized violation `N * a_m * budget_used(m) - 1` over all
    /// MNs, or any negative coefficient. Non-positive means feasible.
    pub fn max_violation(&self, a: &ModeAssignment, ls: &LargeScale, antennas: usize) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for m in 0..self.theta.len() {
            if let Some(neg) = self.theta[m].iter().copied().reduce(f64::min) {
                worst = worst.max(-neg - 1.0);
            }
            worst = worst.max(a.a(m) * antennas as f64 * self.budget_used(m, ls) - 1.0);
        }
        worst
    }
}

/// Everything the closed forms need for one untrusted link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LinkTerms {
    /// `sum_m (1 - a_m) gamma_O[m][k]`
    pub obs_gain: f64,
    pub mu: f64,
    /// Inter-MN interference as it appears in the observing SINR denominator.
    pub mi: f64,
    /// `rho_UT sum_{l != k} beta_U[l][k] + 1`
    pub xi_const: f64,
    /// `rho_J N sum_m a_m beta_J[m][k] sum_k' theta[m][k'] gamma_J[m][k']`
    pub xi_spread: f64,
    /// `rho_J N^2 (sum_m a_m sqrt(theta[m][k]) gamma_J[m][k])^2`
    pub xi_coherent: f64,
    /// `rho_J N^2 sum_m a_m theta[m][k] gamma_J[m][k]^2`
    pub xi_coherent_bound: f64,
}

impl LinkTerms {
    pub fn xi(&self) -> f64 {
        self.xi_const + self.xi_spread + self.xi_coherent
    }

    pub fn tilde_xi(&self) -> f64 {
        self.xi_const + self.xi_spread + self.xi_coherent_bound
    }

    pub fn sinr_observe(&self, params: &SimParams) -> f64 {
        if self.obs_gain <= 0.0 {
            return 0.0;
        }
        params.antennas as f64 * params.rho_ut * self.obs_gain * self.obs_gain / (self.mu + self.mi)
    }
}

/// Per-link closed forms for a fixed `(a, theta)`, sharing the per-MN sums.
pub(crate) struct Evaluator<'a> {
    a: &'a ModeAssignment,
    theta: &'a PowerAllocation,
    ls: &'a LargeScale,
    params: &'a SimParams,
    /// `a_m * budget_used(m)`
    jam_budget: Vec<f64>,
    /// `sum_i a_i beta_MM[m][i] budget_used(i)`
    mn_interference: Vec<f64>,
    /// `sum_l beta_O[m][l]`
    obs_row_sum: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        a: &'a ModeAssignment,
        theta: &'a PowerAllocation,
        ls: &'a LargeScale,
        params: &'a SimParams,
    ) -> Self {
        let m_count = ls.num_mns();
        let jam_budget: Vec<f64> = (0..m_count)
            .map(|m| {
                if a.is_jamming(m) {
                    theta.budget_used(m, ls)
                } else {
                    0.0
                }
            })
            .collect();
        let mn_interference = (0..m_count)
            .map(|m| {
                ls.beta_mm[m]
                    .iter()
                    .zip(&jam_budget)
                    .map(|(b, p)| b * p)
                    .sum()
            })
            .collect();
        let obs_row_sum = ls.beta_o.iter().map(|r| r.iter().sum()).collect();
        Self {
            a,
            theta,
            ls,
            params,
            jam_budget,
            mn_interference,
            obs_row_sum,
        }
    }

    pub fn link(&self, k: usize) -> LinkTerms {
        let ls = self.ls;
        let p = self.params;
        let n = p.antennas as f64;

        let mut obs_gain = 0.0;
        let mut mu_ut = 0.0;
        let mut mi = 0.0;
        let mut spread = 0.0;
        let mut coherent = 0.0;
        let mut coherent_bound = 0.0;
        for m in 0..ls.num_mns() {
            let g_o = ls.gamma_o[m][k];
            if self.a.is_jamming(m) {
                let th = self.theta.theta[m][k];
                let g_j = ls.gamma_j[m][k];
                spread += ls.beta_j[m][k] * self.jam_budget[m];
                coherent += Float::sqrt(th) * g_j;
                coherent_bound += th * g_j * g_j;
            } else {
                obs_gain += g_o;
                mu_ut += self.obs_row_sum[m] * g_o;
                mi += g_o * self.mn_interference[m];
            }
        }
        let cross_ut: f64 = (0..ls.num_pairs())
            .filter(|l| *l != k)
            .map(|l| ls.beta_u[l][k])
            .sum();

        LinkTerms {
            obs_gain,
            mu: p.rho_ut * mu_ut + obs_gain,
            mi: p.rho_j * n * mi,
            xi_const: p.rho_ut * cross_ut + 1.0,
            xi_spread: p.rho_j * n * spread,
            xi_coherent: p.rho_j * n * n * coherent * coherent,
            xi_coherent_bound: p.rho_j * n * n * coherent_bound,
        }
    }

    pub fn success_exponent(&self, k: usize) -> f64 {
        let t = self.link(k);
        t.sinr_observe(self.params) * t.xi() / (self.ls.beta_u[k][k] * self.params.rho_ut)
    }
}

/// Interference-plus-noise variance `xi_k` at UR `k` (exact coherent term).
pub fn xi(
    k: usize,
    a: &ModeAssignment,
    theta: &PowerAllocation,
    ls: &LargeScale,
    params: &SimParams,
) -> f64 {
    Evaluator::new(a, theta, ls, params).link(k).xi()
}

/// Instantaneous SINR at UR `k` for a given `|h_kk|^2`.
pub fn sinr_untrusted(
    k: usize,
    h_kk_abs2: f64,
    a: &ModeAssignment,
    theta: &PowerAllocation,
    ls: &LargeScale,
    params: &SimParams,
) -> f64 {
    params.rho_ut * h_kk_abs2 / xi(k, a, theta, ls, params)
}

/// SINR of link `k` at the CPU after MR combining over observing MNs.
pub fn sinr_observe(
    k: usize,
    a: &ModeAssignment,
    theta: &PowerAllocation,
    ls: &LargeScale,
    params: &SimParams,
) -> f64 {
    Evaluator::new(a, theta, ls, params)
        .link(k)
        .sinr_observe(params)
}

/// `1 - exp(-x)` written so that small exponents keep full precision.
pub(crate) fn prob_from_exponent(x: f64) -> f64 {
    -Float::exp_m1(-x)
}

/// `Pr(SINR_O >= SINR_UR)` for link `k`.
pub fn success_probability(
    k: usize,
    a: &ModeAssignment,
    theta: &PowerAllocation,
    ls: &LargeScale,
    params: &SimParams,
) -> f64 {
    prob_from_exponent(Evaluator::new(a, theta, ls, params).success_exponent(k))
}

/// Smallest success probability over all links and its link index (lowest
/// index on ties).
pub fn min_success_probability(
    a: &ModeAssignment,
    theta: &PowerAllocation,
    ls: &LargeScale,
    params: &SimParams,
) -> (f64, usize) {
    let ev = Evaluator::new(a, theta, ls, params);
    argmin((0..ls.num_pairs()).map(|k| prob_from_exponent(ev.success_exponent(k))))
}

pub(crate) fn argmin(values: impl Iterator<Item = f64>) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for (k, v) in values.enumerate() {
        if v < best.0 {
            best = (v, k);
        }
    }
    best
}

/// Closed-form expectations of the five observing-signal components for one
/// link, before the common factor `N` is cancelled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObserveTerms {
    /// Squared desired-signal gain `|DS|^2`.
    pub ds2: f64,
    /// Beamforming gain uncertainty.
    pub bu: f64,
    /// Inter-untrusted-user interference.
    pub ui: f64,
    /// Inter-MN (jammer to observer) interference.
    pub mi: f64,
    /// Additive noise after combining.
    pub an: f64,
}

impl ObserveTerms {
    pub fn sinr(&self) -> f64 {
        if self.ds2 == 0.0 {
            return 0.0;
        }
        self.ds2 / (self.bu + self.ui + self.mi + self.an)
    }

    /// `E|r_k|^2`, the total received power of the combined signal.
    pub fn total(&self) -> f64 {
        self.ds2 + self.bu + self.ui + self.mi + self.an
    }
}

pub fn observe_terms(
    k: usize,
    a: &ModeAssignment,
    theta: &PowerAllocation,
    ls: &LargeScale,
    params: &SimParams,
) -> ObserveTerms {
    let n = params.antennas as f64;
    let terms = Evaluator::new(a, theta, ls, params).link(k);
    let mut bu = 0.0;
    let mut ui = 0.0;
    for m in a.observers() {
        let g = ls.gamma_o[m][k];
        bu += ls.beta_o[m][k] * g;
        ui += (0..ls.num_pairs())
            .filter(|l| *l != k)
            .map(|l| ls.beta_o[m][l] * g)
            .sum::<f64>();
    }
    ObserveTerms {
        ds2: params.rho_ut * n * n * terms.obs_gain * terms.obs_gain,
        bu: params.rho_ut * n * bu,
        ui: params.rho_ut * n * ui,
        mi: n * terms.mi,
        an: n * terms.obs_gain,
    }
}

/// Per-link closed forms for one `(a, theta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitoringReport {
    pub xi: Vec<f64>,
    pub sinr_o: Vec<f64>,
    pub success_prob: Vec<f64>,
    pub min_success_prob: f64,
    /// Link attaining `min_success_prob`.
    pub argmin: usize,
}

impl MonitoringReport {
    pub fn evaluate(
        a: &ModeAssignment,
        theta: &PowerAllocation,
        ls: &LargeScale,
        params: &SimParams,
    ) -> Self {
        let ev = Evaluator::new(a, theta, ls, params);
        let mut report = Self {
            xi: Vec::new(),
            sinr_o: Vec::new(),
            success_prob: Vec::new(),
            min_success_prob: 0.0,
            argmin: 0,
        };
        for k in 0..ls.num_pairs() {
            let t = ev.link(k);
            let sinr = t.sinr_observe(params);
            report.xi.push(t.xi());
            report.sinr_o.push(sinr);
            report.success_prob.push(prob_from_exponent(
                sinr * t.xi() / (ls.beta_u[k][k] * params.rho_ut),
            ));
        }
        (report.min_success_prob, report.argmin) = argmin(report.success_prob.iter().copied());
        report
    }
}
