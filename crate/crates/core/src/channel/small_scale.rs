use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::LargeScale;

pub type Cplx = Complex<f64>;

/// Draws `CN(0, var)`.
pub fn complex_gaussian<R: Rng + ?Sized>(var: f64, rng: &mut R) -> Cplx {
    let s = Float::sqrt(var * 0.5);
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Cplx::new(re * s, im * s)
}

/// One realization of every small-scale channel.
///
/// Vectors are `N` long; `f[m][i]` is the `N x N` MN-to-MN matrix stored
/// row-major, identically zero for `m == i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallScaleDraw {
    pub antennas: usize,
    pub g_j: Vec<Vec<Vec<Cplx>>>,
    pub g_o: Vec<Vec<Vec<Cplx>>>,
    pub hat_g_j: Vec<Vec<Vec<Cplx>>>,
    pub hat_g_o: Vec<Vec<Vec<Cplx>>>,
    pub h_u: Vec<Vec<Cplx>>,
    pub f: Vec<Vec<Vec<Cplx>>>,
}

impl SmallScaleDraw {
    pub fn zeros(num_mns: usize, num_pairs: usize, antennas: usize) -> Self {
        let vecs = vec![vec![vec![Cplx::new(0.0, 0.0); antennas]; num_pairs]; num_mns];
        Self {
            antennas,
            g_j: vecs.clone(),
            g_o: vecs.clone(),
            hat_g_j: vecs.clone(),
            hat_g_o: vecs,
            h_u: vec![vec![Cplx::new(0.0, 0.0); num_pairs]; num_pairs],
            f: vec![vec![vec![Cplx::new(0.0, 0.0); antennas * antennas]; num_mns]; num_mns],
        }
    }

    /// Redraws every channel in place (no reallocation).
    pub fn resample<R: Rng + ?Sized>(&mut self, ls: &LargeScale, rng: &mut R) {
        let links = [
            (&ls.gamma_j, &ls.beta_j, &mut self.hat_g_j, &mut self.g_j),
            (&ls.gamma_o, &ls.beta_o, &mut self.hat_g_o, &mut self.g_o),
        ];
        for (gamma, beta, hat, full) in links {
            for (m, row) in hat.iter_mut().enumerate() {
                for (k, est) in row.iter_mut().enumerate() {
                    let err_var = (beta[m][k] - gamma[m][k]).max(0.0);
                    for (e, g) in est.iter_mut().zip(full[m][k].iter_mut()) {
                        *e = complex_gaussian(gamma[m][k], rng);
                        let err = if err_var > 0.0 {
                            complex_gaussian(err_var, rng)
                        } else {
                            Cplx::new(0.0, 0.0)
                        };
                        *g = *e + err;
                    }
                }
            }
        }
        for (l, row) in self.h_u.iter_mut().enumerate() {
            for (k, h) in row.iter_mut().enumerate() {
                *h = complex_gaussian(ls.beta_u[l][k], rng);
            }
        }
        for (m, row) in self.f.iter_mut().enumerate() {
            for (i, mat) in row.iter_mut().enumerate() {
                if m == i {
                    continue;
                }
                for v in mat.iter_mut() {
                    *v = complex_gaussian(ls.beta_mm[m][i], rng);
                }
            }
        }
    }

    /// Estimation error `g - hat_g` of the jamming channel MN `m` to UR `k`.
    pub fn error_j(&self, m: usize, k: usize) -> Vec<Cplx> {
        self.g_j[m][k]
            .iter()
            .zip(&self.hat_g_j[m][k])
            .map(|(g, h)| g - h)
            .collect()
    }
}

pub fn sample_small_scale<R: Rng + ?Sized>(
    ls: &LargeScale,
    antennas: usize,
    rng: &mut R,
) -> SmallScaleDraw {
    let mut draw = SmallScaleDraw::zeros(ls.num_mns(), ls.num_pairs(), antennas);
    draw.resample(ls, rng);
    draw
}
