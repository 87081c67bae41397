//! Monte-Carlo sweeps over deployments and schemes.

use std::time::Instant;

use cfmon_core::channel::{db_to_linear, Point, Topology};
use cfmon_core::{
    bisection_with, compute_large_scale, equal_power, generate_topology, greedy_assign,
    random_assign, BisectionOptions, BisectionResult, GreedyTrace, LargeScale, ModeAssignment,
    MonitoringReport, PowerAllocation, PowerRule, SimParams,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, GreedyPower, Scheme, SolverConfig};

/// Random sub-streams of one trial.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub enum Stream {
    Topology = 0,
    LargeScale = 1,
    RandomModes = 2,
    Colocated = 3,
}

/// Seed of trial `trial`; depends only on the master seed and the index.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(trial as u64);
    rng.next_u64()
}

pub fn stream_rng(trial_seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    rng.set_stream(stream as u64);
    rng
}

/// One scheme evaluated on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: Scheme,
    /// Name of the swept parameter.
    pub sweep: String,
    pub value: usize,
    pub trial: usize,
    pub trial_seed: u64,
    #[serde(rename = "M")]
    pub num_mns: usize,
    #[serde(rename = "K")]
    pub num_pairs: usize,
    #[serde(rename = "N")]
    pub antennas: usize,
    pub min_success_prob: Option<f64>,
    pub success_probs: Vec<f64>,
    pub num_jamming: Option<usize>,
    pub greedy_iterations: Option<usize>,
    pub bisection_iterations: Option<usize>,
    pub wall_time_ms: Option<f64>,
    pub error: Option<String>,
}

/// Everything one scheme produced on one trial, for the trace files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeOutcome {
    pub scheme: Scheme,
    pub assignment: ModeAssignment,
    pub theta: PowerAllocation,
    pub report: MonitoringReport,
    pub greedy: Option<GreedyTrace>,
    pub bisection: Option<BisectionResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTrace {
    pub sweep: String,
    pub value: usize,
    pub trial: usize,
    pub trial_seed: u64,
    pub outcomes: Vec<SchemeOutcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub rows: Vec<ResultRow>,
    pub trace: TrialTrace,
}

fn bisection_options(solver: &SolverConfig) -> BisectionOptions {
    BisectionOptions {
        eps: solver.eps,
        target: solver.target,
        ..BisectionOptions::default()
    }
}

/// Statistics of the co-located deployment: the UT/UR positions of
/// `topology`, one array of `M` MNs at the area center. Every co-located MN
/// sees the same MN-to-user gains (one shadowing draw); `beta_U` is taken
/// from the cell-free statistics so that both deployments share the
/// untrusted links.
pub fn colocated_large_scale<R: rand::Rng + ?Sized>(
    topology: &Topology,
    cell_free: &LargeScale,
    params: &SimParams,
    rng: &mut R,
) -> cfmon_core::Result<LargeScale> {
    let center = Point::new(params.area_side / 2.0, params.area_side / 2.0);
    let site = Topology {
        mn_pos: vec![center],
        ut_pos: topology.ut_pos.clone(),
        ur_pos: topology.ur_pos.clone(),
    };
    let one = compute_large_scale(&site, params, rng)?;
    let m = topology.mn_pos.len();
    let rep = |g: &Vec<Vec<f64>>| vec![g[0].clone(); m];
    Ok(LargeScale {
        beta_j: rep(&one.beta_j),
        beta_o: rep(&one.beta_o),
        beta_u: cell_free.beta_u.clone(),
        beta_mm: vec![vec![0.0; m]; m],
        gamma_j: rep(&one.gamma_j),
        gamma_o: rep(&one.gamma_o),
    })
}

/// Greedy modes and max-min power at the co-located site, where every
/// off-diagonal MN-to-MN gain is the residual self-interference `si_level`
/// (linear).
pub fn colocated_baseline(
    ls_center: &LargeScale,
    params: &SimParams,
    si_level: f64,
    solver: &SolverConfig,
) -> cfmon_core::Result<SchemeOutcome> {
    let mut ls = ls_center.clone();
    for (i, row) in ls.beta_mm.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = if i == j { 0.0 } else { si_level };
        }
    }
    let trace = greedy_assign(&ls, params, solver.e_min, &PowerRule::Equal)?;
    optimized(Scheme::Colocated, trace.final_assignment.clone(), Some(trace), &ls, params, solver)
}

fn optimized(
    scheme: Scheme,
    a: ModeAssignment,
    greedy: Option<GreedyTrace>,
    ls: &LargeScale,
    params: &SimParams,
    solver: &SolverConfig,
) -> cfmon_core::Result<SchemeOutcome> {
    let res = bisection_with(&a, ls, params, &bisection_options(solver))?;
    Ok(SchemeOutcome {
        scheme,
        report: MonitoringReport::evaluate(&a, &res.theta_opt, ls, params),
        theta: res.theta_opt.clone(),
        assignment: a,
        greedy,
        bisection: Some(res),
    })
}

fn equal(
    scheme: Scheme,
    a: ModeAssignment,
    greedy: Option<GreedyTrace>,
    ls: &LargeScale,
    params: &SimParams,
) -> cfmon_core::Result<SchemeOutcome> {
    let theta = equal_power(&a, ls, params)?;
    Ok(SchemeOutcome {
        scheme,
        report: MonitoringReport::evaluate(&a, &theta, ls, params),
        theta,
        assignment: a,
        greedy,
        bisection: None,
    })
}

/// Evaluates every scheme of `cfg` on one trial. All schemes share the
/// topology and large-scale draw.
pub fn run_trial(cfg: &ExperimentConfig, value: usize, trial: usize) -> TrialResult {
    let start = Instant::now();
    let seed = trial_seed(cfg.seed, trial);
    let params = SimParams {
        seed,
        ..cfg.params_at(value)
    };
    let outcomes = evaluate_schemes(&cfg.schemes, &params, &cfg.solver, seed);
    let elapsed = start.elapsed().as_secs_f64() * 1e3;

    let trace = TrialTrace {
        sweep: cfg.sweep.to_string(),
        value,
        trial,
        trial_seed: seed,
        outcomes: outcomes.iter().filter_map(|o| o.as_ref().ok().cloned()).collect(),
    };
    let rows = cfg
        .schemes
        .iter()
        .zip(&outcomes)
        .map(|(scheme, out)| {
            let mut row = ResultRow {
                scheme: *scheme,
                sweep: cfg.sweep.to_string(),
                value,
                trial,
                trial_seed: seed,
                num_mns: params.num_mns,
                num_pairs: params.num_pairs,
                antennas: params.antennas,
                min_success_prob: None,
                success_probs: Vec::new(),
                num_jamming: None,
                greedy_iterations: None,
                bisection_iterations: None,
                wall_time_ms: cfg.output.record_timing.then_some(elapsed),
                error: None,
            };
            match out {
                Ok(o) => {
                    row.min_success_prob = Some(o.report.min_success_prob);
                    row.success_probs = o.report.success_prob.clone();
                    row.num_jamming = Some(o.assignment.num_jamming());
                    row.greedy_iterations = o.greedy.as_ref().map(|g| g.iterations.len());
                    row.bisection_iterations = o.bisection.as_ref().map(|b| b.iterations);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect();
    TrialResult { rows, trace }
}

/// Runs `schemes` on the deployment drawn from `seed`.
pub fn evaluate_schemes(
    schemes: &[Scheme],
    params: &SimParams,
    solver: &SolverConfig,
    seed: u64,
) -> Vec<cfmon_core::Result<SchemeOutcome>> {
    let setup = (|| {
        let topo = generate_topology(params, &mut stream_rng(seed, Stream::Topology))?;
        let ls = compute_large_scale(&topo, params, &mut stream_rng(seed, Stream::LargeScale))?;
        Ok::<_, cfmon_core::Error>((topo, ls))
    })();
    let (topo, ls) = match setup {
        Ok(v) => v,
        Err(e) => return schemes.iter().map(|_| Err(e.clone())).collect(),
    };

    let ppa_rule = match solver.greedy_power {
        GreedyPower::Equal => PowerRule::Equal,
        GreedyPower::Optimized => PowerRule::Optimized(bisection_options(solver)),
    };
    let uses = |s: Scheme| schemes.contains(&s);
    let greedy_epa = (uses(Scheme::EpaGreedy) || (uses(Scheme::PpaGreedy) && ppa_rule == PowerRule::Equal))
        .then(|| greedy_assign(&ls, params, solver.e_min, &PowerRule::Equal));
    let greedy_ppa = match ppa_rule {
        PowerRule::Equal => greedy_epa.clone(),
        rule => uses(Scheme::PpaGreedy).then(|| greedy_assign(&ls, params, solver.e_min, &rule)),
    };
    let random = random_assign(
        params.num_mns,
        solver.p_jam,
        &mut stream_rng(seed, Stream::RandomModes),
    );

    schemes
        .iter()
        .map(|scheme| match scheme {
            Scheme::PpaGreedy => {
                let trace = greedy_ppa.clone().expect("greedy computed")?;
                optimized(*scheme, trace.final_assignment.clone(), Some(trace), &ls, params, solver)
            }
            Scheme::EpaGreedy => {
                let trace = greedy_epa.clone().expect("greedy computed")?;
                equal(*scheme, trace.final_assignment.clone(), Some(trace), &ls, params)
            }
            Scheme::PpaRandom => optimized(*scheme, random.clone(), None, &ls, params, solver),
            Scheme::EpaRandom => equal(*scheme, random.clone(), None, &ls, params),
            Scheme::Colocated => {
                let center = colocated_large_scale(
                    &topo,
                    &ls,
                    params,
                    &mut stream_rng(seed, Stream::Colocated),
                )?;
                colocated_baseline(&center, params, db_to_linear(solver.si_level_db), solver)
            }
        })
        .collect()
}

/// Runs every sweep value and trial on the current rayon pool. Results are
/// ordered by (value index, trial, scheme order), independent of scheduling.
pub fn run_experiment_traced(cfg: &ExperimentConfig) -> Vec<TrialResult> {
    let jobs: Vec<(usize, usize)> = cfg
        .values
        .iter()
        .flat_map(|v| (0..cfg.trials).map(move |t| (*v, t)))
        .collect();
    jobs.par_iter().map(|(v, t)| run_trial(cfg, *v, *t)).collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Vec<ResultRow> {
    run_experiment_traced(cfg)
        .into_iter()
        .flat_map(|t| t.rows)
        .collect()
}

/// Mean and standard error of `min_success_prob` for one scheme and value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scheme: Scheme,
    pub value: usize,
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
    pub failed: usize,
}

pub fn summarize(rows: &[ResultRow]) -> Vec<Summary> {
    let mut keys: Vec<(usize, Scheme)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.value, r.scheme)) {
            keys.push((r.value, r.scheme));
        }
    }
    keys.into_iter()
        .map(|(value, scheme)| {
            let group: Vec<&ResultRow> =
                rows.iter().filter(|r| r.value == value && r.scheme == scheme).collect();
            let vals: Vec<f64> = group.iter().filter_map(|r| r.min_success_prob).collect();
            let n = vals.len() as f64;
            let mean = if vals.is_empty() { f64::NAN } else { vals.iter().sum::<f64>() / n };
            let var = if vals.len() > 1 {
                vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            Summary {
                scheme,
                value,
                mean,
                std_error: (var / n.max(1.0)).sqrt(),
                trials: vals.len(),
                failed: group.len() - vals.len(),
            }
        })
        .collect()
}
