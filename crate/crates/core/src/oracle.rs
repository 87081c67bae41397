//! Signal-level Monte-Carlo ground truth for the closed forms.
//!
//! Every estimator draws small-scale channels and unit-variance complex
//! Gaussian symbols, forms the received signals literally and averages.
//! Means use compensated summation.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::channel::{complex_gaussian, Cplx, SmallScaleDraw};
use crate::channel::{compute_large_scale, generate_topology};
use crate::sinr::{sinr_observe, xi, ObserveTerms};
use crate::{LargeScale, ModeAssignment, PowerAllocation, Result, SimParams};

/// Smallest sample count accepted by the estimators.
pub const MIN_SAMPLES: usize = 1_000;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

impl OracleEstimate {
    /// `|value - expected| <= max(rel * |expected|, n_se * std_error)`.
    pub fn agrees(&self, expected: f64, rel: f64, n_se: f64) -> bool {
        (self.value - expected).abs() <= (rel * expected.abs()).max(n_se * self.std_error)
    }

    pub fn relative_error(&self, expected: f64) -> f64 {
        if expected == 0.0 {
            self.value.abs()
        } else {
            ((self.value - expected) / expected).abs()
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Streaming mean and variance: compensated sum for the mean, Welford for
/// the spread.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulator {
    n: usize,
    sum: CompensatedSum,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum.add(x);
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Combines two partial accumulations (as produced by parallel workers).
    pub fn merge(&mut self, other: &Accumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = (self.n + other.n) as f64;
        let d = other.mean - self.mean;
        self.m2 += other.m2 + d * d * self.n as f64 * other.n as f64 / n;
        self.mean += d * other.n as f64 / n;
        self.sum.add(other.sum.sum);
        self.sum.add(other.sum.comp);
        self.n += other.n;
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn estimate(&self) -> OracleEstimate {
        let n = self.n.max(1) as f64;
        let var = if self.n > 1 {
            self.m2 / (n - 1.0)
        } else {
            0.0
        };
        OracleEstimate {
            value: self.sum.value() / n,
            std_error: Float::sqrt(var.max(0.0) / n),
            n_samples: self.n,
        }
    }
}

/// Unit-variance symbols and noise for one channel use.
#[derive(Debug, Clone, PartialEq)]
pub struct Symbols {
    pub s_ut: Vec<Cplx>,
    pub s_j: Vec<Cplx>,
    /// Receiver noise at each MN, `N` entries per MN.
    pub w_o: Vec<Vec<Cplx>>,
    pub w_ur: Vec<Cplx>,
}

impl Symbols {
    pub fn zeros(num_mns: usize, num_pairs: usize, antennas: usize) -> Self {
        let z = Cplx::new(0.0, 0.0);
        Self {
            s_ut: vec![z; num_pairs],
            s_j: vec![z; num_pairs],
            w_o: vec![vec![z; antennas]; num_mns],
            w_ur: vec![z; num_pairs],
        }
    }

    pub fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let all = self
            .s_ut
            .iter_mut()
            .chain(self.s_j.iter_mut())
            .chain(self.w_o.iter_mut().flatten())
            .chain(self.w_ur.iter_mut());
        for v in all {
            *v = complex_gaussian(1.0, rng);
        }
    }
}

/// `u^T v` (no conjugation).
fn dot(u: &[Cplx], v: &[Cplx]) -> Cplx {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// `u^H v`.
fn dot_h(u: &[Cplx], v: &[Cplx]) -> Cplx {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Effective noise at UR `k`: everything received except the own-link term.
pub fn effective_noise(
    k: usize,
    a: &ModeAssignment,
    theta: &PowerAllocation,
    params: &SimParams,
    draw: &SmallScaleDraw,
    sym: &Symbols,
) -> Cplx {
    let mut w = sym.w_ur[k];
    let sq_ut = Float::sqrt(params.rho_ut);
    for (l, s) in sym.s_ut.iter().enumerate() {
        if l != k {
            w += draw.h_u[l][k] * sq_ut * s;
        }
    }
    let sq_j = Float::sqrt(params.rho_j);
    for m in a.jammers() {
        let g = &draw.g_j[m][k];
        for (kp, s) in sym.s_j.iter().enumerate() {
            let hat: Vec<Cplx> = draw.hat_g_j[m][kp].iter().map(|h| h.conj()).collect();
            w += dot(g, &hat) * (sq_j * Float::sqrt(theta.theta[m][kp])) * s;
        }
    }
    w
}

/// Received vector at MN `m` (zero when jamming).
pub fn observed_signal(
    m: usize,
    a: &ModeAssignment,
    theta: &PowerAllocation,
    params: &SimParams,
    draw: &SmallScaleDraw,
    sym: &Symbols,
) -> Vec<Cplx> {
    let n = draw.antennas;
    let mut y = vec![Cplx::new(0.0, 0.0); n];
    if a.is_jamming(m) {
        return y;
    }
    let sq_ut = Float::sqrt(params.rho_ut);
    for (k, s) in sym.s_ut.iter().enumerate() {
        for (yv, g) in y.iter_mut().zip(&draw.g_o[m][k]) {
            *yv += g * sq_ut * s;
        }
    }
    let sq_j = Float::sqrt(params.rho_j);
    for i in a.jammers() {
        let f = &draw.f[m][i];
        for (l, s) in sym.s_j.iter().enumerate() {
            let c = sq_j * Float::sqrt(theta.theta[i][l]) * s;
            let hat = &draw.hat_g_j[i][l];
            for (r, yv) in y.iter_mut().enumerate() {
                let fv: Cplx = (0..n).map(|col| f[r * n + col] * hat[col].conj()).sum();
                *yv += fv * c;
            }
        }
    }
    for (yv, w) in y.iter_mut().zip(&sym.w_o[m]) {
        *yv += w;
    }
    y
}

/// One channel use of the combined observing signal for link `k`, split
/// into its components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserveSample {
    /// `sqrt(rho_UT) sum_m (1 - a_m) hat_g^H g` for this channel draw.
    pub gain: Cplx,
    /// `gain * s_k`.
    pub desired: Cplx,
    pub ui: Cplx,
    pub mi: Cplx,
    pub an: Cplx,
    /// `r_k` formed by combining the received vectors directly.
    pub r: Cplx,
}

impl ObserveSample {
    pub fn reconstruction_error(&self) -> f64 {
        (self.r - (self.desired + self.ui + self.mi + self.an)).norm()
    }
}

pub fn observe_sample(
    k: usize,
    a: &ModeAssignment,
    theta: &PowerAllocation,
    params: &SimParams,
    draw: &SmallScaleDraw,
    sym: &Symbols,
) -> ObserveSample {
    let n = draw.antennas;
    let zero = Cplx::new(0.0, 0.0);
    let sq_ut = Float::sqrt(params.rho_ut);
    let sq_j = Float::sqrt(params.rho_j);
    let mut out = ObserveSample {
        gain: zero,
        desired: zero,
        ui: zero,
        mi: zero,
        an: zero,
        r: zero,
    };
    for m in a.observers() {
        let hat = &draw.hat_g_o[m][k];
        out.r += dot_h(hat, &observed_signal(m, a, theta, params, draw, sym));
        out.gain += dot_h(hat, &draw.g_o[m][k]) * sq_ut;
        for (l, s) in sym.s_ut.iter().enumerate() {
            if l != k {
                out.ui += dot_h(hat, &draw.g_o[m][l]) * sq_ut * s;
            }
        }
        for i in a.jammers() {
            let f = &draw.f[m][i];
            for (l, s) in sym.s_j.iter().enumerate() {
                let hj = &draw.hat_g_j[i][l];
                let mut q = zero;
                for (r, h) in hat.iter().enumerate() {
                    let fv: Cplx = (0..n).map(|c| f[r * n + c] * hj[c].conj()).sum();
                    q += h.conj() * fv;
                }
                out.mi += q * (sq_j * Float::sqrt(theta.theta[i][l])) * s;
            }
        }
        out.an += dot_h(hat, &sym.w_o[m]);
    }
    out.desired = out.gain * sym.s_ut[k];
    out
}

fn check_samples(n: usize) {
    assert!(n >= MIN_SAMPLES, "oracle needs at least {MIN_SAMPLES} samples, got {n}");
}

/// Estimates `E|w_k|^2`, the effective noise variance at UR `k`.
///
/// # Panics
/// If `n < MIN_SAMPLES`.
pub fn mc_effective_noise_variance<R: Rng + ?Sized>(
    k: usize,
    a: &ModeAssignment,
    theta: &PowerAllocation,
    ls: &LargeScale,
    params: &SimParams,
    n: usize,
    rng: &mut R,
) -> OracleEstimate {
    check_samples(n);
    let mut draw = SmallScaleDraw::zeros(ls.num_mns(), ls.num_pairs(), params.antennas);
    let mut sym = Symbols::zeros(ls.num_mns(), ls.num_pairs(), params.antennas);
    let mut acc = Accumulator::default();
    for _ in 0..n {
        draw.resample(ls, rng);
        sym.resample(rng);
        acc.push(effective_noise(k, a, theta, params, &draw, &sym).norm_sqr());
    }
    acc.estimate()
}

/// Monte-Carlo counterparts of [`ObserveTerms`], plus the total received
/// power and the worst mismatch between the literal `r_k` and the sum of its
/// components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObserveEstimates {
    pub ds2: OracleEstimate,
    pub bu: OracleEstimate,
    pub ui: OracleEstimate,
    pub mi: OracleEstimate,
    pub an: OracleEstimate,
    pub total: OracleEstimate,
    pub max_reconstruction_error: f64,
}

impl ObserveEstimates {
    /// Pairs each estimate with its closed form, in the order
    /// `ds2, bu, ui, mi, an, total`.
    pub fn against(&self, closed: &ObserveTerms) -> [(&'static str, OracleEstimate, f64); 6] {
        [
            ("ds2", self.ds2, closed.ds2),
            ("bu", self.bu, closed.bu),
            ("ui", self.ui, closed.ui),
            ("mi", self.mi, closed.mi),
            ("an", self.an, closed.an),
            ("total", self.total, closed.total()),
        ]
    }
}

/// Estimates the five components of the combined observing signal.
///
/// The desired-signal gain is the sample mean of the per-draw gain; the
/// gain-uncertainty term is its sample variance, so no closed form enters.
///
/// # Panics
/// If `n < MIN_SAMPLES`.
pub fn mc_observe_terms<R: Rng + ?Sized>(
    k: usize,
    a: &ModeAssignment,
    theta: &PowerAllocation,
    ls: &LargeScale,
    params: &SimParams,
    n: usize,
    rng: &mut R,
) -> ObserveEstimates {
    check_samples(n);
    let mut draw = SmallScaleDraw::zeros(ls.num_mns(), ls.num_pairs(), params.antennas);
    let mut sym = Symbols::zeros(ls.num_mns(), ls.num_pairs(), params.antennas);
    let mut gains = Vec::with_capacity(n);
    let (mut re, mut im) = (Accumulator::default(), Accumulator::default());
    let (mut ui, mut mi, mut an, mut total) = (
        Accumulator::default(),
        Accumulator::default(),
        Accumulator::default(),
        Accumulator::default(),
    );
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        draw.resample(ls, rng);
        sym.resample(rng);
        let s = observe_sample(k, a, theta, params, &draw, &sym);
        gains.push(s.gain);
        re.push(s.gain.re);
        im.push(s.gain.im);
        ui.push(s.ui.norm_sqr());
        mi.push(s.mi.norm_sqr());
        an.push(s.an.norm_sqr());
        total.push(s.r.norm_sqr());
        worst = worst.max(s.reconstruction_error() / s.r.norm().max(1.0));
    }
    let (re, im) = (re.estimate(), im.estimate());
    let mean = Cplx::new(re.value, im.value);
    let ds_se = Float::sqrt(re.std_error * re.std_error + im.std_error * im.std_error);
    let mut bu = Accumulator::default();
    for g in &gains {
        bu.push((g - mean).norm_sqr());
    }
    let mut bu = bu.estimate();
    if n > 1 {
        // unbiased sample variance
        bu.value *= n as f64 / (n - 1) as f64;
    }
    ObserveEstimates {
        ds2: OracleEstimate {
            value: mean.norm_sqr(),
            std_error: 2.0 * mean.norm() * ds_se,
            n_samples: n,
        },
        bu,
        ui: ui.estimate(),
        mi: mi.estimate(),
        an: an.estimate(),
        total: total.estimate(),
        max_reconstruction_error: worst,
    }
}

/// Empirical `Pr(SINR_O >= SINR_UR)`: draws `|h_kk|^2` from its exponential
/// law and counts the draws where the observing SINR wins.
///
/// # Panics
/// If `n < MIN_SAMPLES`.
pub fn mc_success_probability<R: Rng + ?Sized>(
    k: usize,
    a: &ModeAssignment,
    theta: &PowerAllocation,
    ls: &LargeScale,
    params: &SimParams,
    n: usize,
    rng: &mut R,
) -> OracleEstimate {
    check_samples(n);
    let sinr_o = sinr_observe(k, a, theta, ls, params);
    let noise = xi(k, a, theta, ls, params);
    let mean = ls.beta_u[k][k];
    let mut acc = Accumulator::default();
    for _ in 0..n {
        let e: f64 = Exp1.sample(rng);
        let sinr_ur = params.rho_ut * mean * e / noise;
        acc.push(if sinr_o >= sinr_ur { 1.0 } else { 0.0 });
    }
    acc.estimate()
}

/// Mean of `||g||^4` for `g ~ CN(0, gamma I_N)`.
///
/// # Panics
/// If `n < MIN_SAMPLES`.
pub fn fourth_moment_check<R: Rng + ?Sized>(
    gamma: f64,
    antennas: usize,
    n: usize,
    rng: &mut R,
) -> OracleEstimate {
    check_samples(n);
    let mut acc = Accumulator::default();
    for _ in 0..n {
        let norm2: f64 = (0..antennas)
            .map(|_| complex_gaussian(gamma, rng).norm_sqr())
            .sum();
        acc.push(norm2 * norm2);
    }
    acc.estimate()
}

/// A deployment drawn from the channel model with a random mode assignment
/// and a random power allocation inside the budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub ls: LargeScale,
    pub a: ModeAssignment,
    pub theta: PowerAllocation,
}

pub fn random_instance<R: Rng + ?Sized>(params: &SimParams, rng: &mut R) -> Result<Instance> {
    let topo = generate_topology(params, rng)?;
    let ls = compute_large_scale(&topo, params, rng)?;
    let (m_count, k_count) = (params.num_mns, params.num_pairs);
    let a = ModeAssignment::from_jamming((0..m_count).map(|_| rng.random_bool(0.5)).collect());
    let mut theta = PowerAllocation::zeros(m_count, k_count);
    for m in 0..m_count {
        let w: Vec<f64> = (0..k_count).map(|_| rng.random::<f64>()).collect();
        let used: f64 = w.iter().zip(&ls.gamma_j[m]).map(|(w, g)| w * g).sum();
        if used <= 0.0 {
            continue;
        }
        let fill = rng.random_range(0.1..=1.0);
        for k in 0..k_count {
            theta.theta[m][k] = fill * w[k] / (used * params.antennas as f64);
        }
    }
    Ok(Instance { ls, a, theta })
}
