//! Oracle suite: closed forms against Monte-Carlo ground truth.

use cfmon_core::oracle::{random_instance, MIN_SAMPLES};
use cfmon_core::{
    fourth_moment_check, mc_effective_noise_variance, mc_observe_terms, mc_success_probability,
    observe_terms, success_probability, xi, OracleEstimate, SimParams,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// Instance shapes `(M, K, N)` cycled through by the suite.
pub const SHAPES: [(usize, usize, usize); 4] = [(4, 2, 2), (3, 3, 2), (4, 3, 1), (2, 1, 2)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub seed: u64,
    pub instances: usize,
    pub draws: usize,
    /// Relative tolerance of every variance-type check.
    pub rel_tol: f64,
    /// Standard errors allowed on top of `rel_tol`.
    pub n_se: f64,
    /// Absolute tolerance of the success-probability check.
    pub prob_tol: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            instances: 20,
            draws: 20_000,
            rel_tol: 0.02,
            n_se: 3.0,
            prob_tol: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    /// Instance index, absent for instance-free checks.
    pub instance: Option<usize>,
    pub link: Option<usize>,
    pub quantity: String,
    pub closed_form: f64,
    pub oracle_mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub pass: bool,
}

impl Check {
    fn new(
        instance: Option<usize>,
        link: Option<usize>,
        quantity: &str,
        closed_form: f64,
        est: OracleEstimate,
        pass: bool,
    ) -> Self {
        Self {
            instance,
            link,
            quantity: quantity.into(),
            closed_form,
            oracle_mean: est.value,
            std_error: est.std_error,
            n_samples: est.n_samples,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub options: SuiteOptions,
    pub checks: Vec<Check>,
    pub passed: usize,
    pub failed: usize,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

fn instance_checks(opts: &SuiteOptions, idx: usize) -> Result<Vec<Check>, HarnessError> {
    let (m, k, n) = SHAPES[idx % SHAPES.len()];
    let params = SimParams {
        num_mns: m,
        num_pairs: k,
        antennas: n,
        ..SimParams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(idx as u64 + 1);
    let inst = random_instance(&params, &mut rng)?;
    let (ls, a, th) = (&inst.ls, &inst.a, &inst.theta);
    let mut checks = Vec::new();
    let at = Some(idx);
    for link in 0..k {
        let est = mc_effective_noise_variance(link, a, th, ls, &params, opts.draws, &mut rng);
        let closed = xi(link, a, th, ls, &params);
        let pass = est.agrees(closed, opts.rel_tol, opts.n_se);
        checks.push(Check::new(at, Some(link), "xi", closed, est, pass));

        let terms = mc_observe_terms(link, a, th, ls, &params, opts.draws, &mut rng);
        for (name, e, c) in terms.against(&observe_terms(link, a, th, ls, &params)) {
            let pass = e.agrees(c, opts.rel_tol, opts.n_se);
            checks.push(Check::new(at, Some(link), name, c, e, pass));
        }
        let recon = OracleEstimate {
            value: terms.max_reconstruction_error,
            std_error: 0.0,
            n_samples: opts.draws,
        };
        checks.push(Check::new(at, Some(link), "r_reconstruction", 0.0, recon, recon.value < 1e-9));

        let est = mc_success_probability(link, a, th, ls, &params, opts.draws, &mut rng);
        let closed = success_probability(link, a, th, ls, &params);
        let pass = (est.value - closed).abs() <= opts.prob_tol;
        checks.push(Check::new(at, Some(link), "success_prob", closed, est, pass));
    }
    Ok(checks)
}

pub fn run_suite(opts: &SuiteOptions) -> Result<ValidationReport, HarnessError> {
    if opts.draws < MIN_SAMPLES {
        return Err(HarnessError::Config(format!(
            "oracle needs at least {MIN_SAMPLES} draws"
        )));
    }
    let per_instance: Vec<Vec<Check>> = (0..opts.instances)
        .into_par_iter()
        .map(|i| instance_checks(opts, i))
        .collect::<Result<_, _>>()?;
    let mut checks: Vec<Check> = per_instance.into_iter().flatten().collect();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for (gamma, n) in [(1.0, 1usize), (1.0, 2), (0.5, 3)] {
        let est = fourth_moment_check(gamma, n, opts.draws, &mut rng);
        let closed = (n * (n + 1)) as f64 * gamma * gamma;
        let pass = est.agrees(closed, opts.rel_tol, opts.n_se);
        checks.push(Check::new(None, None, &format!("fourth_moment_N{n}"), closed, est, pass));
    }

    let failed = checks.iter().filter(|c| !c.pass).count();
    Ok(ValidationReport {
        options: opts.clone(),
        passed: checks.len() - failed,
        failed,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let opts = SuiteOptions {
            seed: 3,
            instances: 4,
            draws: 5_000,
            n_se: 4.0,
            ..SuiteOptions::default()
        };
        let report = run_suite(&opts).unwrap();
        let bad: Vec<&Check> = report.checks.iter().filter(|c| !c.pass).collect();
        assert!(report.ok(), "{bad:#?}");
        assert_eq!(report.passed, report.checks.len());
    }

    #[test]
    fn rejects_tiny_sample_counts() {
        let opts = SuiteOptions {
            draws: 10,
            ..SuiteOptions::default()
        };
        assert!(matches!(run_suite(&opts), Err(HarnessError::Config(_))));
    }
}
