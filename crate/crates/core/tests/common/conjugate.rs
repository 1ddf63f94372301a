//! Gaussian linear model with known noise and a Gaussian prior on the two
//! coefficients: the marginal likelihood is available in closed form.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::seeded;

const NOISE_SD: f64 = 1.0;
const PRIOR_SD: f64 = 2.0;

pub struct Toy {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
}

fn mvn_log_density(v: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let n = v.len() as f64;
    let chol = cov.clone().cholesky().unwrap();
    let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    -0.5 * (n * (2.0 * std::f64::consts::PI).ln() + log_det + v.dot(&chol.solve(v)))
}

impl Toy {
    pub fn new(seed: u64, n: usize) -> Self {
        let mut rng = seeded(seed);
        let x = DMatrix::from_fn(n, 2, |_, c| if c == 0 { 1.0 } else { rng.random_range(-1.0..1.0) });
        let beta = DVector::from_vec(vec![0.7, -1.3]);
        let noise = DVector::from_fn(n, |_, _| NOISE_SD * rng.sample::<f64, _>(StandardNormal));
        let y = &x * beta + noise;
        Self { x, y }
    }

    pub fn log_lik(&self, beta: &[f64]) -> f64 {
        let r = &self.y - &self.x * DVector::from_column_slice(beta);
        let n = self.y.len() as f64;
        -0.5 * n * (2.0 * std::f64::consts::PI * NOISE_SD * NOISE_SD).ln() - 0.5 * r.dot(&r) / (NOISE_SD * NOISE_SD)
    }

    pub fn log_prior(beta: &[f64]) -> f64 {
        beta.iter()
            .map(|b| -0.5 * (2.0 * std::f64::consts::PI * PRIOR_SD * PRIOR_SD).ln() - 0.5 * b * b / (PRIOR_SD * PRIOR_SD))
            .sum()
    }

    /// `y ~ N(0, σ²I + τ² X Xᵀ)`.
    pub fn analytic_log_evidence(&self) -> f64 {
        let n = self.y.len();
        let cov = DMatrix::identity(n, n) * NOISE_SD * NOISE_SD + (&self.x * self.x.transpose()) * PRIOR_SD * PRIOR_SD;
        mvn_log_density(&self.y, &cov)
    }

    /// Exact posterior draws.
    pub fn posterior_draws(&self, m: usize, seed: u64) -> Vec<Vec<f64>> {
        let precision = self.x.transpose() * &self.x / (NOISE_SD * NOISE_SD)
            + DMatrix::identity(2, 2) / (PRIOR_SD * PRIOR_SD);
        let cov = precision.clone().try_inverse().unwrap();
        let mean = &cov * (self.x.transpose() * &self.y) / (NOISE_SD * NOISE_SD);
        let l = cov.cholesky().unwrap().l();
        let mut rng = seeded(seed);
        (0..m)
            .map(|_| {
                let z = DVector::from_fn(2, |_, _| rng.sample::<f64, _>(StandardNormal));
                (&mean + &l * z).iter().copied().collect()
            })
            .collect()
    }
}
