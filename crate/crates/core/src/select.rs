//! Frequentist bandwidth baselines: normal-reference rules of thumb, least
//! squares cross-validation for the regression bandwidths and leave-one-out
//! likelihood cross-validation for the residual density bandwidth.

use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_bandwidth, Error, Result};
use crate::kernel::{residuals_loo, Dataset, Estimator, ResidualSet};
use crate::optimize::{golden_section_max, nelder_mead};

/// Linear-interpolation sample quantile (type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Sample standard deviation with the `n − 1` divisor.
pub fn sample_sd(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// `min{s, IQR/1.34}`, falling back to `s` when the interquartile range is zero.
/// `None` when the sample has no spread at all.
pub fn robust_scale(v: &[f64]) -> Option<f64> {
    let s = sample_sd(v);
    if !(s > 0.0) || !s.is_finite() {
        return None;
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    if iqr > 0.0 {
        Some(s.min(iqr / 1.34))
    } else {
        Some(s)
    }
}

/// Normal-reference bandwidth `σ_k [4/((d+2)n)]^{1/(d+4)}` for each regressor.
pub fn rot_regression_bandwidth(data: &Dataset) -> Result<Vec<f64>> {
    let n = data.n() as f64;
    let d = data.d() as f64;
    let factor = (4.0 / ((d + 2.0) * n)).powf(1.0 / (d + 4.0));
    (0..data.d())
        .map(|k| {
            robust_scale(&data.column(k))
                .map(|sigma| sigma * factor)
                .ok_or(Error::DegenerateRegressor { column: k })
        })
        .collect()
}

/// Least-squares cross-validation criterion `Σ_j (y_j − m̂₋ⱼ(x_j))²`.
/// Vanishing windows and singular local designs map to `+∞`.
pub fn cv_objective(data: &Dataset, h: &[f64], estimator: Estimator) -> Result<f64> {
    if h.len() != data.d() {
        return Err(Error::InvalidInput(format!(
            "{} bandwidths for {} regressors",
            h.len(),
            data.d()
        )));
    }
    h.iter().try_for_each(|&v| check_bandwidth(v))?;
    match residuals_loo(data, h, estimator) {
        Ok(e) => Ok(e.values().iter().map(|v| v * v).sum()),
        Err(Error::DegenerateWindow { .. } | Error::RankDeficient { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// Multistart simplex search settings for [`cv_minimize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Multipliers of the rule-of-thumb bandwidth used as start points per coordinate.
    pub start_factors: Vec<f64>,
    pub max_starts: usize,
    /// Simplex diameter tolerance on log h.
    pub xtol: f64,
    pub max_evals_per_start: usize,
    /// Search box is `[rot / box_factor, rot * box_factor]` per coordinate.
    pub box_factor: f64,
    pub initial_step: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            start_factors: vec![0.5, 1.0, 2.0],
            max_starts: 9,
            xtol: 1e-6,
            max_evals_per_start: 500,
            box_factor: 100.0,
            initial_step: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorResult {
    pub h: Vec<f64>,
    pub objective_value: Option<f64>,
    pub evaluations: usize,
    pub converged: bool,
    pub warning: Option<String>,
}

/// Start points as index tuples into `start_factors`. The full grid is used
/// when it fits in `max_starts`; otherwise a Latin-hypercube subset in which
/// every level of every coordinate appears equally often.
fn start_levels(levels: usize, d: usize, max_starts: usize) -> Vec<Vec<usize>> {
    let full = levels.checked_pow(d as u32).unwrap_or(usize::MAX);
    if full <= max_starts {
        return (0..full)
            .map(|mut p| {
                (0..d)
                    .map(|_| {
                        let l = p % levels;
                        p /= levels;
                        l
                    })
                    .collect()
            })
            .collect();
    }
    let m = max_starts.max(1);
    (0..m)
        .map(|p| {
            let (a, b) = (p / levels, p % levels);
            (0..d).map(|k| (a + k * b + k / levels) % levels).collect()
        })
        .collect()
}

/// Minimises [`cv_objective`] over log-bandwidths with multistart Nelder-Mead
/// seeded at multiples of the rule-of-thumb bandwidth.
pub fn cv_minimize(data: &Dataset, estimator: Estimator, search: &SearchConfig) -> Result<SelectorResult> {
    if search.max_starts == 0 || search.max_evals_per_start == 0 || search.start_factors.is_empty() {
        return Err(Error::InvalidInput("search budget must be at least one start and one evaluation".into()));
    }
    let rot = rot_regression_bandwidth(data)?;
    let d = data.d();
    let log_rot: Vec<f64> = rot.iter().map(|h| h.ln()).collect();
    let log_box = search.box_factor.ln();
    let starts = start_levels(search.start_factors.len(), d, search.max_starts);

    let outcomes: Vec<(Vec<f64>, f64, usize, bool)> = starts
        .par_iter()
        .map(|levels| {
            let x0: Vec<f64> = levels
                .iter()
                .zip(&log_rot)
                .map(|(&l, lr)| lr + search.start_factors[l].ln())
                .collect();
            let best = Mutex::new((x0.clone(), f64::INFINITY));
            let r = nelder_mead(
                |lh| {
                    if lh.iter().zip(&log_rot).any(|(x, c)| (x - c).abs() > log_box) {
                        return f64::INFINITY;
                    }
                    let h: Vec<f64> = lh.iter().map(|v| v.exp()).collect();
                    let v = cv_objective(data, &h, estimator).unwrap_or(f64::INFINITY);
                    let mut b = best.lock().unwrap();
                    if v < b.1 {
                        *b = (lh.to_vec(), v);
                    }
                    v
                },
                &x0,
                search.initial_step,
                search.xtol,
                search.max_evals_per_start,
            );
            let (x, v) = best.into_inner().unwrap();
            (x, v, r.evaluations, r.converged)
        })
        .collect();

    let evaluations = outcomes.iter().map(|o| o.2).sum();
    let best = outcomes
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| lex_cmp(&a.0, &b.0)))
        .unwrap();
    if !best.1.is_finite() {
        return Err(Error::SelectorFailure(
            "cross-validation fails to choose meaningful bandwidths: every start is degenerate".into(),
        ));
    }
    let on_boundary: Vec<usize> = best
        .0
        .iter()
        .zip(&log_rot)
        .enumerate()
        .filter(|(_, (x, c))| log_box - (*x - *c).abs() < 1e-2)
        .map(|(k, _)| k)
        .collect();
    let warning = (!on_boundary.is_empty()).then(|| {
        format!(
            "cross-validation optimum lies on the search-box boundary (factor {} from rule of thumb) \
             for regressor(s) {:?}; the selected bandwidths are not meaningful",
            search.box_factor, on_boundary
        )
    });
    Ok(SelectorResult {
        h: best.0.iter().map(|v| v.exp()).collect(),
        objective_value: Some(best.1),
        evaluations,
        converged: best.3 && warning.is_none(),
        warning,
    })
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Normal-reference bandwidth for the density of the residuals.
pub fn rot_density_bandwidth(e: &ResidualSet) -> Result<f64> {
    if e.len() < 2 {
        return Err(Error::DegenerateResiduals("need at least two residuals".into()));
    }
    let n = e.len() as f64;
    robust_scale(e.values())
        .map(|s| s * (4.0 / (3.0 * n)).powf(0.2))
        .ok_or_else(|| Error::DegenerateResiduals("residuals have zero spread".into()))
}

/// Leave-one-out log-likelihood of the residual KDE with the `n − 1` divisor.
pub fn likelihood_cv_objective(e: &ResidualSet, b: f64) -> f64 {
    let v = e.values();
    let n = v.len();
    let terms: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let s: f64 = v
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &ej)| crate::kernel::gaussian_kernel((v[i] - ej) / b))
                .sum();
            (s / ((n - 1) as f64 * b)).ln()
        })
        .collect();
    terms.iter().sum()
}

const LCV_GRID: usize = 200;
const LCV_BRACKET: f64 = 100.0;

/// Maximises [`likelihood_cv_objective`] over `b ∈ [0.01, 100] × rot`: a
/// 200-point log grid locates the best cell, golden-section search refines it.
pub fn likelihood_cv_density_bandwidth(e: &ResidualSet) -> Result<f64> {
    let rot = rot_density_bandwidth(e)?;
    let lo = (rot / LCV_BRACKET).ln();
    let hi = (rot * LCV_BRACKET).ln();
    let grid: Vec<f64> = (0..LCV_GRID)
        .map(|k| lo + (hi - lo) * k as f64 / (LCV_GRID - 1) as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&lb| likelihood_cv_objective(e, lb.exp())).collect();
    let (k, &best) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .unwrap();
    if !best.is_finite() {
        return Err(Error::DegenerateResiduals("likelihood cross-validation is undefined".into()));
    }
    let a = grid[k.saturating_sub(1)];
    let c = grid[(k + 1).min(LCV_GRID - 1)];
    let (lb, v, _) = golden_section_max(|lb| likelihood_cv_objective(e, lb.exp()), a, c, 1e-6);
    Ok(if v >= best { lb.exp() } else { grid[k].exp() })
}
