use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{wrap_distance, Point};
use crate::{Error, Grid, Result};

/// Eigenvalues below `-EIGEN_TOLERANCE` count as clipped mass.
pub const EIGEN_TOLERANCE: f64 = 1e-10;
/// Largest share of eigenvalue mass that may be clipped away.
pub const MAX_CLIPPED_MASS: f64 = 0.01;

/// `sigma^2 * 2^(-d / decorr)` over all point pairs, `d` the torus distance.
pub fn shadowing_covariance(
    points: &[Point],
    area_side: f64,
    sigma_db: f64,
    decorr_m: f64,
) -> DMatrix<f64> {
    let n = points.len();
    let var = sigma_db * sigma_db;
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            var
        } else {
            let d = wrap_distance(points[i], points[j], area_side);
            var * Float::powf(2.0, -d / decorr_m)
        }
    })
}

/// Square-root factor `L` of the shadowing covariance, `C ~= L L^T`.
#[derive(Debug, Clone)]
pub struct ShadowingFactor {
    factor: DMatrix<f64>,
    clipped_fraction: f64,
}

impl ShadowingFactor {
    pub fn new(points: &[Point], area_side: f64, sigma_db: f64, decorr_m: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParams(
                "shadowing needs at least one receiving point".into(),
            ));
        }
        let cov = shadowing_covariance(points, area_side, sigma_db, decorr_m);
        Self::from_covariance(cov)
    }

    /// Eigen-factorizes `cov`, clipping negative eigenvalues to zero.
    pub fn from_covariance(cov: DMatrix<f64>) -> Result<Self> {
        let eig = SymmetricEigen::new(cov);
        let total: f64 = eig.eigenvalues.iter().map(|l| l.abs()).sum();
        let clipped: f64 = eig
            .eigenvalues
            .iter()
            .filter(|l| **l < -EIGEN_TOLERANCE)
            .map(|l| -l)
            .sum();
        let clipped_fraction = if total > 0.0 { clipped / total } else { 0.0 };
        if clipped_fraction > MAX_CLIPPED_MASS {
            return Err(Error::CovarianceNotFactorable { clipped_fraction });
        }
        let roots = DVector::from_iterator(
            eig.eigenvalues.len(),
            eig.eigenvalues.iter().map(|l| Float::sqrt(l.max(0.0))),
        );
        let mut factor = eig.eigenvectors;
        for (mut col, r) in factor.column_iter_mut().zip(roots.iter()) {
            col *= *r;
        }
        Ok(Self {
            factor,
            clipped_fraction,
        })
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn clipped_fraction(&self) -> f64 {
        self.clipped_fraction
    }

    /// Reconstructed covariance `L L^T`.
    pub fn covariance(&self) -> DMatrix<f64> {
        &self.factor * self.factor.transpose()
    }

    /// One zero-mean correlated draw, in dB.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z = DVector::from_iterator(
            self.dim(),
            (0..self.dim()).map(|_| StandardNormal.sample(rng)),
        );
        (&self.factor * z).iter().copied().collect()
    }
}

/// Draws `rows` independent shadowing vectors (one per MN) over `points`.
pub fn sample_correlated_shadowing<R: Rng + ?Sized>(
    points: &[Point],
    area_side: f64,
    sigma_db: f64,
    decorr_m: f64,
    rows: usize,
    rng: &mut R,
) -> Result<Grid> {
    let factor = ShadowingFactor::new(points, area_side, sigma_db, decorr_m)?;
    Ok((0..rows).map(|_| factor.sample(rng)).collect())
}
