//! Accuracy criteria: integrated squared errors of the regression function
//! and error density, out-of-sample forecast scores and prediction intervals
//! from the kernel-form error distribution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{check_bandwidth, Error, Result};
use crate::kernel::{error_density, ResidualSet};

pub const DEFAULT_GRID_POINTS: usize = 1000;

/// Evaluation locations inside a box, each carrying the quadrature weight
/// `volume / m`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationGrid {
    pub points: Vec<Vec<f64>>,
    pub support_lo: Vec<f64>,
    pub support_hi: Vec<f64>,
}

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % b) as f64 * inv;
        i /= b;
        inv /= base as f64;
    }
    out
}

impl EvaluationGrid {
    /// Equispaced `a₀ = x₁ < … < x_m = a₁`.
    pub fn uniform_1d(a0: f64, a1: f64, m: usize) -> Result<Self> {
        if m < 2 || !(a1 > a0) {
            return Err(Error::InvalidInput(format!("grid needs m >= 2 and a1 > a0 (got m={m}, [{a0}, {a1}])")));
        }
        let points = (0..m).map(|j| vec![a0 + (a1 - a0) * j as f64 / (m - 1) as f64]).collect();
        Ok(Self { points, support_lo: vec![a0], support_hi: vec![a1] })
    }

    /// Halton points with a seeded random shift modulo one (Cranley-Patterson
    /// rotation), mapped into the box.
    pub fn quasi_random(lo: &[f64], hi: &[f64], m: usize, seed: u64) -> Result<Self> {
        let d = lo.len();
        if m < 2 || d == 0 || d != hi.len() || d > PRIMES.len() || lo.iter().zip(hi).any(|(a, b)| !(b > a)) {
            return Err(Error::InvalidInput("invalid quasi-random grid specification".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        let points = (1..=m as u64)
            .map(|i| {
                (0..d)
                    .map(|k| {
                        let u = (radical_inverse(i, PRIMES[k]) + shift[k]).fract();
                        lo[k] + u * (hi[k] - lo[k])
                    })
                    .collect()
            })
            .collect();
        Ok(Self { points, support_lo: lo.to_vec(), support_hi: hi.to_vec() })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn cell_weight(&self) -> f64 {
        let volume: f64 = self.support_lo.iter().zip(&self.support_hi).map(|(a, b)| b - a).product();
        volume / self.points.len() as f64
    }
}

/// `vol/m · Σ_j [m̂(x_j) − m(x_j)]²` over the grid.
pub fn ise_regression<E, T>(estimate: E, truth: T, grid: &EvaluationGrid) -> Result<f64>
where
    E: Fn(&[f64]) -> f64 + Sync,
    T: Fn(&[f64]) -> f64 + Sync,
{
    let sq: Vec<f64> = grid
        .points
        .par_iter()
        .map(|x| (estimate(x) - truth(x)).powi(2))
        .collect();
    if let Some(index) = sq.iter().position(|v| !v.is_finite()) {
        return Err(Error::Evaluation { index, reason: format!("non-finite estimate at {:?}", grid.points[index]) });
    }
    Ok(grid.cell_weight() * sq.iter().sum::<f64>())
}

/// ISE between the kernel-form density of `e` with bandwidth `b` and a true
/// error density, on 1000 points spanning `±4 σ_max`.
pub fn ise_density<T>(e: &ResidualSet, b: f64, truth_density: T, sigma_max: f64) -> Result<f64>
where
    T: Fn(f64) -> f64 + Sync,
{
    check_bandwidth(b)?;
    let grid = EvaluationGrid::uniform_1d(-4.0 * sigma_max, 4.0 * sigma_max, DEFAULT_GRID_POINTS)?;
    ise_regression(|z| error_density(e, b, z[0]).unwrap_or(f64::NAN), |z| truth_density(z[0]), &grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastScore {
    pub msfe: f64,
    pub mafe: f64,
    /// Percent; `None` when some actual value is zero.
    pub mape: Option<f64>,
}

pub fn forecast_scores(actuals: &[f64], forecasts: &[f64]) -> Result<ForecastScore> {
    if actuals.is_empty() || actuals.len() != forecasts.len() {
        return Err(Error::InvalidInput(format!(
            "need equal, non-zero lengths (got {} actuals, {} forecasts)",
            actuals.len(),
            forecasts.len()
        )));
    }
    let m = actuals.len() as f64;
    let err: Vec<f64> = actuals.iter().zip(forecasts).map(|(y, f)| y - f).collect();
    let msfe = err.iter().map(|e| e * e).sum::<f64>() / m;
    let mafe = err.iter().map(|e| e.abs()).sum::<f64>() / m;
    let mape = actuals
        .iter()
        .all(|&y| y != 0.0)
        .then(|| err.iter().zip(actuals).map(|(e, y)| (e / y).abs()).sum::<f64>() / m * 100.0);
    Ok(ForecastScore { msfe, mafe, mape })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionInterval {
    pub lower: f64,
    pub upper: f64,
    pub nominal: f64,
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Grid and CDF `F(z) = n⁻¹ Σ Φ((z − e_i)/b)` over `[min e − 6b, max e + 6b]`.
pub fn error_cdf_grid(e: &ResidualSet, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_bandwidth(b)?;
    let v = e.values();
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min) - 6.0 * b;
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 6.0 * b;
    let m = DEFAULT_GRID_POINTS;
    let z: Vec<f64> = (0..m).map(|j| lo + (hi - lo) * j as f64 / (m - 1) as f64).collect();
    let n = v.len() as f64;
    let cdf = z
        .par_iter()
        .map(|&zj| v.iter().map(|ei| std_normal_cdf((zj - ei) / b)).sum::<f64>() / n)
        .collect();
    Ok((z, cdf))
}

/// Point forecast plus the grid points whose CDF values are closest to the
/// `α/2` and `1 − α/2` levels.
pub fn prediction_interval(e: &ResidualSet, b: f64, point_forecast: f64, alpha: f64) -> Result<PredictionInterval> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha {alpha} outside (0, 1)")));
    }
    let (z, cdf) = error_cdf_grid(e, b)?;
    let closest = |level: f64| {
        cdf.iter()
            .enumerate()
            .min_by(|a, b| (a.1 - level).abs().total_cmp(&(b.1 - level).abs()))
            .map(|(j, _)| z[j])
            .unwrap()
    };
    let lower = closest(alpha / 2.0);
    let upper = closest(1.0 - alpha / 2.0);
    debug_assert!(lower <= upper);
    Ok(PredictionInterval {
        lower: point_forecast + lower,
        upper: point_forecast + upper,
        nominal: 1.0 - alpha,
    })
}

/// Monte Carlo MISE: the mean of replication ISEs.
pub fn mise_aggregate(ise_values: &[f64]) -> Result<f64> {
    if ise_values.is_empty() {
        return Err(Error::InvalidInput("no ISE values".into()));
    }
    Ok(ise_values.iter().sum::<f64>() / ise_values.len() as f64)
}
