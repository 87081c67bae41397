//! Versioned TOML experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};

use cfmon_core::channel::{noise_normalized, DEFAULT_NOISE_DBM, DEFAULT_PILOT_SYMBOLS};
use cfmon_core::{BisectionTarget, EstimationModel, SimParams, DEFAULT_E_MIN};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

pub const CONFIG_VERSION: u32 = 1;
pub const DEFAULT_TRIALS: usize = 200;
pub const DEFAULT_SI_LEVEL_DB: f64 = -80.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SweepAxis {
    M,
    K,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::M => "M",
            SweepAxis::K => "K",
        })
    }
}

/// Mode-assignment and power-control combination evaluated per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    PpaGreedy,
    EpaGreedy,
    PpaRandom,
    EpaRandom,
    /// Every MN at the area center, greedy modes and optimized power.
    Colocated,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::PpaGreedy,
        Scheme::EpaGreedy,
        Scheme::PpaRandom,
        Scheme::EpaRandom,
        Scheme::Colocated,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Scheme::PpaGreedy => "ppa-greedy",
            Scheme::EpaGreedy => "epa-greedy",
            Scheme::PpaRandom => "ppa-random",
            Scheme::EpaRandom => "epa-random",
            Scheme::Colocated => "colocated",
        }
    }

    pub fn optimized_power(self) -> bool {
        matches!(self, Scheme::PpaGreedy | Scheme::PpaRandom | Scheme::Colocated)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimationConfig {
    /// LMMSE estimates from `pilot_symbols` pilots sent at UT power.
    Lmmse { pilot_symbols: f64 },
    Fraction { kappa: f64 },
    Perfect,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig::Lmmse {
            pilot_symbols: DEFAULT_PILOT_SYMBOLS,
        }
    }
}

/// Physical parameters; powers in dBm, converted once in [`to_sim_params`].
///
/// [`to_sim_params`]: ParamsConfig::to_sim_params
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(rename = "M")]
    pub num_mns: usize,
    #[serde(rename = "K")]
    pub num_pairs: usize,
    #[serde(rename = "N")]
    pub antennas: usize,
    pub jammer_power_dbm: f64,
    pub ut_power_dbm: f64,
    pub noise_dbm: f64,
    pub area_side: f64,
    pub min_mn_spacing: f64,
    pub pair_dist_range: [f64; 2],
    #[serde(rename = "shadow_sigma_dB")]
    pub shadow_sigma_db: f64,
    pub shadow_decorr_m: f64,
    pub estimation: EstimationConfig,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        let p = SimParams::default();
        Self {
            num_mns: p.num_mns,
            num_pairs: p.num_pairs,
            antennas: p.antennas,
            jammer_power_dbm: 30.0,
            ut_power_dbm: 10.0 * 250f64.log10(),
            noise_dbm: DEFAULT_NOISE_DBM,
            area_side: p.area_side,
            min_mn_spacing: p.min_mn_spacing,
            pair_dist_range: p.pair_dist_range,
            shadow_sigma_db: p.shadow_sigma_db,
            shadow_decorr_m: p.shadow_decorr_m,
            estimation: EstimationConfig::default(),
        }
    }
}

impl ParamsConfig {
    pub fn to_sim_params(&self) -> SimParams {
        let rho_ut = noise_normalized(self.ut_power_dbm, self.noise_dbm);
        let estimation_model = match self.estimation {
            EstimationConfig::Lmmse { pilot_symbols } => EstimationModel::Lmmse {
                tau_p: pilot_symbols * rho_ut,
            },
            EstimationConfig::Fraction { kappa } => EstimationModel::Fraction { kappa },
            EstimationConfig::Perfect => EstimationModel::PERFECT,
        };
        SimParams {
            num_mns: self.num_mns,
            num_pairs: self.num_pairs,
            antennas: self.antennas,
            rho_j: noise_normalized(self.jammer_power_dbm, self.noise_dbm),
            rho_ut,
            area_side: self.area_side,
            min_mn_spacing: self.min_mn_spacing,
            pair_dist_range: self.pair_dist_range,
            shadow_sigma_db: self.shadow_sigma_db,
            shadow_decorr_m: self.shadow_decorr_m,
            estimation_model,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Minimum improvement for the greedy search to accept a move.
    pub e_min: f64,
    /// Relative bisection accuracy.
    pub eps: f64,
    pub target: BisectionTarget,
    /// Jamming probability of the random assignment.
    pub p_jam: f64,
    /// Residual self-interference gain between co-located MNs, dB.
    #[serde(rename = "si_level_dB")]
    pub si_level_db: f64,
    /// Power rule used to score greedy candidates.
    pub greedy_power: GreedyPower,
}

/// Power allocation inside the greedy search. The final power of the
/// PPA schemes is always optimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GreedyPower {
    #[default]
    Equal,
    /// Bisection for every candidate; slow, applies to the PPA schemes only.
    Optimized,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            e_min: DEFAULT_E_MIN,
            eps: 1e-3,
            target: BisectionTarget::default(),
            p_jam: 0.5,
            si_level_db: DEFAULT_SI_LEVEL_DB,
            greedy_power: GreedyPower::Equal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Fill the `wall_time_ms` column (makes output run-dependent).
    pub record_timing: bool,
    /// Write per-trial greedy and bisection traces under `trace/`.
    pub write_traces: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            record_timing: false,
            write_traces: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub sweep: SweepAxis,
    pub values: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_schemes() -> Vec<Scheme> {
    Scheme::ALL.to_vec()
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentConfig {
    pub fn new(sweep: SweepAxis, values: Vec<usize>) -> Self {
        Self {
            version: CONFIG_VERSION,
            sweep,
            values,
            trials: DEFAULT_TRIALS,
            seed: 0,
            schemes: default_schemes(),
            out: default_out(),
            params: ParamsConfig::default(),
            solver: SolverConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Parameters of sweep point `value`.
    pub fn params_at(&self, value: usize) -> SimParams {
        let mut p = self.params.to_sim_params();
        match self.sweep {
            SweepAxis::M => p.num_mns = value,
            SweepAxis::K => p.num_pairs = value,
        }
        p
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.version != CONFIG_VERSION {
            return bad(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            ));
        }
        if self.values.is_empty() {
            return bad("`values` must not be empty".into());
        }
        if self.trials == 0 {
            return bad("`trials` must be at least 1".into());
        }
        if self.schemes.is_empty() {
            return bad("`schemes` must not be empty".into());
        }
        let s = &self.solver;
        if !(s.e_min >= 0.0) || !(s.eps > 0.0 && s.eps < 1.0) || !(0.0..=1.0).contains(&s.p_jam) {
            return bad("solver needs e_min >= 0, 0 < eps < 1 and 0 <= p_jam <= 1".into());
        }
        if !s.si_level_db.is_finite() {
            return bad("si_level_dB must be finite".into());
        }
        for v in &self.values {
            self.params_at(*v)
                .validate()
                .map_err(|e| HarnessError::Config(format!("{} = {v}: {e}", self.sweep)))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ExperimentConfig::from_toml("version = 1\nsweep = \"M\"\nvalues = [5]\n").unwrap();
        assert_eq!(cfg.trials, DEFAULT_TRIALS);
        assert_eq!(cfg.schemes, Scheme::ALL.to_vec());
        let p = cfg.params_at(5);
        assert_eq!(p.num_mns, 5);
        let reference = SimParams {
            num_mns: 5,
            ..SimParams::default()
        };
        assert!((p.rho_j / reference.rho_j - 1.0).abs() < 1e-12);
        assert!((p.rho_ut / reference.rho_ut - 1.0).abs() < 1e-12);
        assert_eq!(p.estimation_model, reference.estimation_model);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = ExperimentConfig::new(SweepAxis::K, vec![5, 10, 15]);
        cfg.schemes = vec![Scheme::PpaGreedy, Scheme::Colocated];
        cfg.params.estimation = EstimationConfig::Fraction { kappa: 0.5 };
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "version = 2\nsweep = \"M\"\nvalues = [5]",
            "version = 1\nsweep = \"M\"\nvalues = []",
            "version = 1\nsweep = \"M\"\nvalues = [5]\ntrials = 0",
            "version = 1\nsweep = \"N\"\nvalues = [5]",
            "version = 1\nsweep = \"M\"\nvalues = [0]",
            "version = 1\nsweep = \"M\"\nvalues = [5]\nbogus = 1",
            "version = 1\nsweep = \"M\"\nvalues = [5]\n[solver]\neps = 0.0",
        ] {
            assert!(
                matches!(ExperimentConfig::from_toml(text), Err(HarnessError::Config(_))),
                "{text}"
            );
        }
    }
}
