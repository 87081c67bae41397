//! Topology generation, large-scale statistics and small-scale channel draws.
//!
//! Monitoring nodes, untrusted transmitters and untrusted receivers live on a
//! square torus of side `area_side` meters. Large-scale gains combine the
//! log-distance model `-30.5 - 36.7 log10(d)` with
//! log-normal shadowing; the shadowing seen by one MN is spatially correlated
//! across the user points it serves and independent across MNs.

mod shadowing;
mod small_scale;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Grid, Result};

pub use shadowing::{sample_correlated_shadowing, shadowing_covariance, ShadowingFactor};
pub use small_scale::{complex_gaussian, sample_small_scale, Cplx, SmallScaleDraw};

/// Rejection-sampling budget for every placed entity.
pub const PLACEMENT_ATTEMPTS: usize = 10_000;

/// Distances below this are clamped before evaluating path loss.
pub const MIN_PATH_LOSS_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// How the variance of a channel estimate follows from the large-scale gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimationModel {
    /// `gamma = tp * beta^2 / (tp * beta + 1)` where `tp` is the
    /// noise-normalized pilot energy (pilot length times pilot power).
    Lmmse { tau_p: f64 },
    /// `gamma = kappa * beta` with `kappa` in `(0, 1]`.
    Fraction { kappa: f64 },
}

impl EstimationModel {
    pub const PERFECT: Self = EstimationModel::Fraction { kappa: 1.0 };
}

/// Converts a transmit power to a ratio against the noise floor.
pub fn noise_normalized(power_dbm: f64, noise_dbm: f64) -> f64 {
    db_to_linear(power_dbm - noise_dbm)
}

pub fn db_to_linear(db: f64) -> f64 {
    Float::powf(10.0, db / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * Float::log10(watts * 1e3)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    #[serde(rename = "M")]
    pub num_mns: usize,
    #[serde(rename = "K")]
    pub num_pairs: usize,
    #[serde(rename = "N")]
    pub antennas: usize,
    /// Maximum jamming power of one MN, noise normalized.
    pub rho_j: f64,
    /// Transmit power of one UT, noise normalized.
    pub rho_ut: f64,
    pub area_side: f64,
    pub min_mn_spacing: f64,
    pub pair_dist_range: [f64; 2],
    #[serde(rename = "shadow_sigma_dB")]
    pub shadow_sigma_db: f64,
    pub shadow_decorr_m: f64,
    pub estimation_model: EstimationModel,
    pub seed: u64,
}

/// Noise floor of the reference deployment, dBm.
pub const DEFAULT_NOISE_DBM: f64 = -92.0;
/// Number of pilot symbols behind the default LMMSE estimate quality.
pub const DEFAULT_PILOT_SYMBOLS: f64 = 10.0;

impl Default for SimParams {
    /// The reference deployment: 1 km torus, N = 2, 1 W MNs, 250 mW UTs,
    /// noise floor at -92 dBm.
    fn default() -> Self {
        let rho_ut = noise_normalized(watts_to_dbm(0.25), DEFAULT_NOISE_DBM);
        Self {
            num_mns: 30,
            num_pairs: 10,
            antennas: 2,
            rho_j: noise_normalized(watts_to_dbm(1.0), DEFAULT_NOISE_DBM),
            rho_ut,
            area_side: 1000.0,
            min_mn_spacing: 80.0,
            pair_dist_range: [80.0, 160.0],
            shadow_sigma_db: 4.0,
            shadow_decorr_m: 9.0,
            estimation_model: EstimationModel::Lmmse {
                tau_p: DEFAULT_PILOT_SYMBOLS * rho_ut,
            },
            seed: 0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.into()));
        if self.num_mns == 0 || self.num_pairs == 0 || self.antennas == 0 {
            return bad("M, K and N must all be at least 1");
        }
        if !(self.rho_j > 0.0 && self.rho_ut > 0.0) {
            return bad("rho_J and rho_UT must be positive");
        }
        self.validate_geometry()?;
        match self.estimation_model {
            EstimationModel::Lmmse { tau_p } if !(tau_p > 0.0) => bad("tau_p must be positive"),
            EstimationModel::Fraction { kappa } if !(kappa > 0.0 && kappa <= 1.0) => {
                bad("kappa must lie in (0, 1]")
            }
            _ => Ok(()),
        }
    }

    fn validate_geometry(&self) -> Result<()> {
        let [lo, hi] = self.pair_dist_range;
        if !(self.area_side > 0.0) {
            return Err(Error::InvalidParams("area_side must be positive".into()));
        }
        if !(lo >= 0.0 && lo <= hi) {
            return Err(Error::InvalidParams(
                "pair_dist_range must satisfy 0 <= min <= max".into(),
            ));
        }
        if !(self.shadow_sigma_db >= 0.0 && self.shadow_decorr_m > 0.0) {
            return Err(Error::InvalidParams("invalid shadowing parameters".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub mn_pos: Vec<Point>,
    pub ut_pos: Vec<Point>,
    pub ur_pos: Vec<Point>,
}

/// Large-scale gains and estimate variances for every link class.
///
/// Indexing: `beta_j[m][k]` is MN `m` to UR `k`, `beta_o[m][k]` is MN `m` to
/// UT `k`, `beta_u[l][k]` is UT `l` to UR `k`, `beta_mm[m][i]` is MN `m` to MN
/// `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargeScale {
    #[serde(rename = "beta_J")]
    pub beta_j: Grid,
    #[serde(rename = "beta_O")]
    pub beta_o: Grid,
    #[serde(rename = "beta_U")]
    pub beta_u: Grid,
    #[serde(rename = "beta_MM")]
    pub beta_mm: Grid,
    #[serde(rename = "gamma_J")]
    pub gamma_j: Grid,
    #[serde(rename = "gamma_O")]
    pub gamma_o: Grid,
}

impl LargeScale {
    pub fn num_mns(&self) -> usize {
        self.beta_j.len()
    }

    pub fn num_pairs(&self) -> usize {
        self.beta_u.len()
    }

    /// Checks shapes, signs, the zero MN self-gain and `gamma <= beta`.
    pub fn validate(&self) -> Result<()> {
        let m = self.num_mns();
        let k = self.num_pairs();
        let shape_ok = |g: &Grid, rows: usize, cols: usize| {
            g.len() == rows && g.iter().all(|r| r.len() == cols)
        };
        if !(shape_ok(&self.beta_j, m, k)
            && shape_ok(&self.beta_o, m, k)
            && shape_ok(&self.gamma_j, m, k)
            && shape_ok(&self.gamma_o, m, k)
            && shape_ok(&self.beta_u, k, k)
            && shape_ok(&self.beta_mm, m, m))
        {
            return Err(Error::InvalidParams("inconsistent large-scale shapes".into()));
        }
        let all = [
            &self.beta_j,
            &self.beta_o,
            &self.beta_u,
            &self.beta_mm,
            &self.gamma_j,
            &self.gamma_o,
        ];
        if all
            .iter()
            .flat_map(|g| g.iter().flatten())
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(Error::InvalidParams("large-scale entries must be finite and >= 0".into()));
        }
        if (0..m).any(|i| self.beta_mm[i][i] != 0.0) {
            return Err(Error::InvalidParams("beta_MM diagonal must be zero".into()));
        }
        for (beta, gamma) in [(&self.beta_j, &self.gamma_j), (&self.beta_o, &self.gamma_o)] {
            for (br, gr) in beta.iter().zip(gamma) {
                if br.iter().zip(gr).any(|(b, g)| g > b) {
                    return Err(Error::InvalidParams("gamma must not exceed beta".into()));
                }
            }
        }
        Ok(())
    }
}

/// Torus distance: the shortest of the nine images of `q` around `p`.
pub fn wrap_distance(p: Point, q: Point, area_side: f64) -> f64 {
    let mut best = f64::INFINITY;
    for sx in [-1.0, 0.0, 1.0] {
        for sy in [-1.0, 0.0, 1.0] {
            let dx = q.x + sx * area_side - p.x;
            let dy = q.y + sy * area_side - p.y;
            best = best.min(Float::hypot(dx, dy));
        }
    }
    best
}

fn wrap_coord(v: f64, side: f64) -> f64 {
    let w = num_traits::Euclid::rem_euclid(&v, &side);
    // rem_euclid can round up to `side` for tiny negative inputs
    if w >= side {
        0.0
    } else {
        w
    }
}

fn uniform_point<R: Rng + ?Sized>(side: f64, rng: &mut R) -> Point {
    Point::new(
        rng.random::<f64>() * side,
        rng.random::<f64>() * side,
    )
}

/// Places MNs by rejection sampling under the minimum spacing, then UT/UR
/// pairs with each UR uniform over the annulus `pair_dist_range` around its
/// UT.
pub fn generate_topology<R: Rng + ?Sized>(params: &SimParams, rng: &mut R) -> Result<Topology> {
    params.validate_geometry()?;
    if params.num_mns == 0 {
        return Err(Error::InvalidParams("M must be at least 1".into()));
    }
    let side = params.area_side;

    let mut mn_pos: Vec<Point> = Vec::with_capacity(params.num_mns);
    for m in 0..params.num_mns {
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let p = uniform_point(side, rng);
            if mn_pos
                .iter()
                .all(|q| wrap_distance(p, *q, side) >= params.min_mn_spacing)
            {
                mn_pos.push(p);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::PlacementExhausted {
                entity: format!("MN {m}"),
                attempts: PLACEMENT_ATTEMPTS,
            });
        }
    }

    let [lo, hi] = params.pair_dist_range;
    let mut ut_pos = Vec::with_capacity(params.num_pairs);
    let mut ur_pos = Vec::with_capacity(params.num_pairs);
    for k in 0..params.num_pairs {
        let ut = uniform_point(side, rng);
        let mut ur = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let r = Float::sqrt(lo * lo + rng.random::<f64>() * (hi * hi - lo * lo));
            let phi = rng.random::<f64>() * core::f64::consts::TAU;
            let q = Point::new(
                wrap_coord(ut.x + r * Float::cos(phi), side),
                wrap_coord(ut.y + r * Float::sin(phi), side),
            );
            let d = wrap_distance(ut, q, side);
            if d >= lo - 1e-9 && d <= hi + 1e-9 {
                ur = Some(q);
                break;
            }
        }
        let ur = ur.ok_or_else(|| Error::PlacementExhausted {
            entity: format!("UR {k}"),
            attempts: PLACEMENT_ATTEMPTS,
        })?;
        ut_pos.push(ut);
        ur_pos.push(ur);
    }

    Ok(Topology {
        mn_pos,
        ut_pos,
        ur_pos,
    })
}

/// Path loss in dB at distance `d` meters (clamped below at 1 m).
pub fn path_loss_db(d: f64) -> f64 {
    -30.5 - 36.7 * Float::log10(d.max(MIN_PATH_LOSS_DISTANCE_M))
}

pub fn estimation_quality(beta: f64, model: EstimationModel) -> f64 {
    let gamma = match model {
        EstimationModel::Lmmse { tau_p } => {
            if tau_p.is_infinite() {
                beta
            } else {
                tau_p * beta * beta / (tau_p * beta + 1.0)
            }
        }
        EstimationModel::Fraction { kappa } => kappa * beta,
    };
    gamma.clamp(0.0, beta)
}

fn gain(distance: f64, shadow_db: f64) -> f64 {
    db_to_linear(path_loss_db(distance) + shadow_db)
}

/// Fills every large-scale table for `topology`.
///
/// MN-to-user shadowing is drawn jointly over all 2K user points (UTs first,
/// then URs) with the correlated model; UT-to-UR and MN-to-MN links get
/// independent shadowing with the same standard deviation.
pub fn compute_large_scale<R: Rng + ?Sized>(
    topology: &Topology,
    params: &SimParams,
    rng: &mut R,
) -> Result<LargeScale> {
    let side = params.area_side;
    let m_count = topology.mn_pos.len();
    let k_count = topology.ut_pos.len();
    let sigma = params.shadow_sigma_db;

    let user_points: Vec<Point> = topology
        .ut_pos
        .iter()
        .chain(topology.ur_pos.iter())
        .copied()
        .collect();
    let factor = if k_count > 0 {
        Some(ShadowingFactor::new(
            &user_points,
            side,
            sigma,
            params.shadow_decorr_m,
        )?)
    } else {
        None
    };

    let mut beta_o = vec![vec![0.0; k_count]; m_count];
    let mut beta_j = vec![vec![0.0; k_count]; m_count];
    for (m, mn) in topology.mn_pos.iter().enumerate() {
        let Some(factor) = &factor else { break };
        let shadow = factor.sample(rng);
        for k in 0..k_count {
            beta_o[m][k] = gain(wrap_distance(*mn, topology.ut_pos[k], side), shadow[k]);
            beta_j[m][k] = gain(
                wrap_distance(*mn, topology.ur_pos[k], side),
                shadow[k_count + k],
            );
        }
    }

    let mut normal = || -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        sigma * z
    };

    let mut beta_u = vec![vec![0.0; k_count]; k_count];
    for (l, ut) in topology.ut_pos.iter().enumerate() {
        for (k, ur) in topology.ur_pos.iter().enumerate() {
            beta_u[l][k] = gain(wrap_distance(*ut, *ur, side), normal());
        }
    }

    let mut beta_mm = vec![vec![0.0; m_count]; m_count];
    for m in 0..m_count {
        for i in (m + 1)..m_count {
            let g = gain(
                wrap_distance(topology.mn_pos[m], topology.mn_pos[i], side),
                normal(),
            );
            beta_mm[m][i] = g;
            beta_mm[i][m] = g;
        }
    }

    let gamma_of = |beta: &Grid| -> Grid {
        beta.iter()
            .map(|row| {
                row.iter()
                    .map(|b| estimation_quality(*b, params.estimation_model))
                    .collect()
            })
            .collect()
    };
    let gamma_j = gamma_of(&beta_j);
    let gamma_o = gamma_of(&beta_o);

    Ok(LargeScale {
        beta_j,
        beta_o,
        beta_u,
        beta_mm,
        gamma_j,
        gamma_o,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn wrap_distance_examples() {
        let o = Point::new(0.0, 0.0);
        assert_eq!(wrap_distance(o, o, 1000.0), 0.0);
        assert_relative_eq!(wrap_distance(o, Point::new(999.0, 0.0), 1000.0), 1.0, epsilon = 1e-9);
        assert_relative_eq!(
            wrap_distance(o, Point::new(500.0, 500.0), 1000.0),
            500.0 * core::f64::consts::SQRT_2,
            epsilon = 1e-9
        );
    }

    #[test]
    fn path_loss_examples() {
        assert_relative_eq!(path_loss_db(1.0), -30.5, epsilon = 1e-12);
        assert_relative_eq!(path_loss_db(10.0), -67.2, epsilon = 1e-12);
        assert_relative_eq!(path_loss_db(100.0), -103.9, epsilon = 1e-12);
        // clamped below 1 m
        assert_eq!(path_loss_db(0.0), path_loss_db(1.0));
        assert_eq!(path_loss_db(0.25), -30.5);
    }

    #[test]
    fn estimation_examples() {
        assert_eq!(estimation_quality(0.5, EstimationModel::PERFECT), 0.5);
        let g = estimation_quality(0.01, EstimationModel::Lmmse { tau_p: 100.0 });
        assert_relative_eq!(g, 0.005, epsilon = 1e-15);
        let g = estimation_quality(0.01, EstimationModel::Lmmse { tau_p: 1e15 });
        assert_relative_eq!(g, 0.01, max_relative = 1e-10);
        assert_eq!(
            estimation_quality(0.3, EstimationModel::Lmmse { tau_p: f64::INFINITY }),
            0.3
        );
    }

    #[test]
    fn gain_at_reference_distance() {
        assert_relative_eq!(gain(1.0, 0.0), Float::powf(10.0, -3.05), max_relative = 1e-12);
    }

    #[test]
    fn noise_normalized_powers() {
        let p = SimParams::default();
        assert_relative_eq!(p.rho_j, Float::powf(10.0, 12.2), max_relative = 1e-12);
        assert_relative_eq!(p.rho_ut, 0.25 * Float::powf(10.0, 12.2), max_relative = 1e-12);
    }

    #[test]
    fn single_mn_without_pairs() {
        let params = SimParams {
            num_mns: 1,
            num_pairs: 0,
            ..SimParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let topo = generate_topology(&params, &mut rng).unwrap();
        assert_eq!(topo.mn_pos.len(), 1);
        assert!(topo.ut_pos.is_empty() && topo.ur_pos.is_empty());
    }

    #[test]
    fn spacing_and_pair_distance_hold() {
        let params = SimParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let topo = generate_topology(&params, &mut rng).unwrap();
        for (i, p) in topo.mn_pos.iter().enumerate() {
            for q in &topo.mn_pos[i + 1..] {
                assert!(wrap_distance(*p, *q, 1000.0) >= 80.0);
            }
        }
        for (ut, ur) in topo.ut_pos.iter().zip(&topo.ur_pos) {
            let d = wrap_distance(*ut, *ur, 1000.0);
            assert!((80.0 - 1e-9..=160.0 + 1e-9).contains(&d), "{d}");
        }
        for p in topo.mn_pos.iter().chain(&topo.ut_pos).chain(&topo.ur_pos) {
            assert!((0.0..1000.0).contains(&p.x) && (0.0..1000.0).contains(&p.y));
        }
    }

    #[test]
    fn over_constrained_geometry_is_reported() {
        let params = SimParams {
            num_mns: 200,
            area_side: 100.0,
            ..SimParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            generate_topology(&params, &mut rng),
            Err(Error::PlacementExhausted { .. })
        ));
    }

    #[test]
    fn large_scale_invariants_and_reproducibility() {
        let params = SimParams {
            num_mns: 12,
            num_pairs: 4,
            ..SimParams::default()
        };
        let build = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let topo = generate_topology(&params, &mut rng).unwrap();
            let ls = compute_large_scale(&topo, &params, &mut rng).unwrap();
            (topo, ls)
        };
        let (t1, ls) = build(5);
        let (t2, ls2) = build(5);
        assert_eq!(t1, t2);
        assert_eq!(ls, ls2);
        ls.validate().unwrap();
        for m in 0..12 {
            assert_eq!(ls.beta_mm[m][m], 0.0);
            for i in 0..12 {
                if i != m {
                    assert!(ls.beta_mm[m][i] > 0.0);
                    assert_eq!(ls.beta_mm[m][i], ls.beta_mm[i][m]);
                }
            }
            for k in 0..4 {
                assert!(ls.beta_j[m][k] > 0.0 && ls.beta_o[m][k] > 0.0);
                assert!(ls.gamma_j[m][k] <= ls.beta_j[m][k]);
                assert!(ls.gamma_o[m][k] <= ls.beta_o[m][k]);
            }
        }
    }

    #[test]
    fn perfect_csi_gamma_equals_beta() {
        let params = SimParams {
            num_mns: 5,
            num_pairs: 2,
            estimation_model: EstimationModel::PERFECT,
            ..SimParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let topo = generate_topology(&params, &mut rng).unwrap();
        let ls = compute_large_scale(&topo, &params, &mut rng).unwrap();
        assert_eq!(ls.gamma_j, ls.beta_j);
        assert_eq!(ls.gamma_o, ls.beta_o);
    }

    #[test]
    fn rejects_bad_params() {
        for p in [
            SimParams { antennas: 0, ..SimParams::default() },
            SimParams { pair_dist_range: [200.0, 100.0], ..SimParams::default() },
            SimParams { rho_j: 0.0, ..SimParams::default() },
        ] {
            assert!(p.validate().is_err());
        }
        assert!(SimParams::default().validate().is_ok());
    }
}
