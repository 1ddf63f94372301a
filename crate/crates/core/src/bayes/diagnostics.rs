use serde::{Deserialize, Serialize};

use super::sampler::PosteriorChain;
use crate::error::{Error, Result};
use crate::select::quantile_sorted;

pub const BATCHES: usize = 100;

/// One row of the posterior summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub credible_low: f64,
    pub credible_high: f64,
    pub batch_mean_sd: f64,
    /// `None` when the autocorrelations are undefined (constant chain).
    pub sif: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub params: Vec<ParamSummary>,
    pub draws: usize,
    /// Draws left out of the batch-means estimate so all batches are equal.
    pub batch_truncated: usize,
    pub acceptance_h: f64,
    pub acceptance_b: f64,
}

/// Integrated autocorrelation time `1 + 2 Σ ρ̂_k`, truncated by Geyer's
/// initial positive sequence (sums of adjacent autocovariance pairs are
/// accumulated while positive).
pub fn integrated_autocorrelation_time(x: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 4 || x.iter().all(|&v| v == x[0]) {
        return None;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let acov = |k: usize| c[..n - k].iter().zip(&c[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let g0 = acov(0);
    if !(g0 > 0.0) {
        return None;
    }
    let mut sum = 0.0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = acov(2 * m) + acov(2 * m + 1);
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        m += 1;
    }
    Some((2.0 * sum - g0) / g0)
}

/// Standard error of the mean from `batches` equal batches; trailing draws
/// that do not fill a batch are dropped and counted.
pub fn batch_mean_sd(x: &[f64], batches: usize) -> (f64, usize) {
    let size = x.len() / batches;
    if size == 0 {
        return (f64::NAN, x.len());
    }
    let used = size * batches;
    let means: Vec<f64> = x[..used].chunks(size).map(|c| c.iter().sum::<f64>() / size as f64).collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    ((var / batches as f64).sqrt(), x.len() - used)
}

pub fn summarize_series(name: &str, x: &[f64]) -> ParamSummary {
    let n = x.len() as f64;
    let constant = x.iter().all(|&v| v == x[0]);
    let mean = if constant { x[0] } else { x.iter().sum::<f64>() / n };
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (bm, _) = batch_mean_sd(x, BATCHES);
    ParamSummary {
        name: name.to_string(),
        mean,
        sd,
        credible_low: quantile_sorted(&sorted, 0.025),
        credible_high: quantile_sorted(&sorted, 0.975),
        batch_mean_sd: bm,
        sif: integrated_autocorrelation_time(x),
    }
}

/// Per-parameter posterior mean, sd, equal-tailed 95% interval, batch-mean
/// sd and SIF.
pub fn summarize_chain(chain: &PosteriorChain) -> Result<PosteriorSummary> {
    if chain.len() < BATCHES {
        return Err(Error::InvalidInput(format!(
            "summaries need at least {BATCHES} draws, chain has {}",
            chain.len()
        )));
    }
    let names = chain.parameter_names();
    let params = names
        .iter()
        .enumerate()
        .map(|(k, name)| summarize_series(name, &chain.column(k)))
        .collect();
    let (acceptance_h, acceptance_b) = chain.acceptance_rates();
    Ok(PosteriorSummary {
        params,
        draws: chain.len(),
        batch_truncated: chain.len() % BATCHES,
        acceptance_h,
        acceptance_b,
    })
}
