//! Implied-volatility regression on (futures price, strike, maturity) and
//! Black-Scholes state-price densities built from the fitted volatility.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{sample_posterior, PriorSpec, SamplerConfig};
use crate::error::{Error, Result};
use crate::kernel::{Dataset, Estimator};
use crate::select::{cv_minimize, rot_regression_bandwidth, SearchConfig};

/// Trading days per year.
pub const TRADING_DAYS: f64 = 252.0;

/// Log-standard deviations covered on each side of the log-mean.
pub const GRID_SPAN_SD: f64 = 8.0;

pub const DEFAULT_SPD_POINTS: usize = 2001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionRecord {
    pub futures_price: f64,
    pub strike: f64,
    /// Years to maturity.
    pub maturity: f64,
    pub implied_vol: f64,
    pub rate: f64,
    pub dividend_yield: f64,
    pub spot: f64,
}

impl OptionRecord {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("futures_price", self.futures_price),
            ("strike", self.strike),
            ("maturity", self.maturity),
            ("implied_vol", self.implied_vol),
            ("spot", self.spot),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidData(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !self.rate.is_finite() || !self.dividend_yield.is_finite() {
            return Err(Error::InvalidData("rate and dividend_yield must be finite".into()));
        }
        Ok(())
    }

    /// Regressor vector `(F, X, maturity in trading days)`.
    pub fn regressors(&self) -> [f64; 3] {
        [self.futures_price, self.strike, self.maturity * TRADING_DAYS]
    }
}

/// Regression data: implied vol on `(F, X, maturity days)`.
pub fn records_dataset(records: &[OptionRecord]) -> Result<Dataset> {
    if records.is_empty() {
        return Err(Error::InvalidData("no option records".into()));
    }
    for r in records {
        r.validate()?;
    }
    let y = records.iter().map(|r| r.implied_vol).collect();
    let x = records.iter().flat_map(|r| r.regressors()).collect();
    Dataset::from_flat(y, x, 3)
}

/// Point at which the volatility surface is read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolQuery {
    pub futures_price: f64,
    pub strike: f64,
    /// Years to maturity.
    pub maturity: f64,
}

impl VolQuery {
    fn regressors(&self) -> [f64; 3] {
        [self.futures_price, self.strike, self.maturity * TRADING_DAYS]
    }
}

/// Kernel-weighted average of implied vols, `Σ K_h(z − z_j) σ̃_j / Σ K_h(z − z_j)`.
pub fn nw_implied_vol(records: &[OptionRecord], h: &[f64], query: &VolQuery) -> Result<f64> {
    implied_vol(records, h, query, Estimator::LocalConstant)
}

pub fn implied_vol(records: &[OptionRecord], h: &[f64], query: &VolQuery, estimator: Estimator) -> Result<f64> {
    if h.len() != 3 {
        return Err(Error::InvalidInput(format!("expected 3 bandwidths, got {}", h.len())));
    }
    let data = records_dataset(records)?;
    estimator.fit_at(&data, h, &query.regressors())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpdCurve {
    pub s_grid: Vec<f64>,
    pub density: Vec<f64>,
    /// Years to maturity.
    pub maturity: f64,
}

impl SpdCurve {
    /// Trapezoid mass over the grid.
    pub fn mass(&self) -> f64 {
        trapezoid(&self.s_grid, &self.density)
    }

    pub fn maturity_days(&self) -> f64 {
        self.maturity * TRADING_DAYS
    }
}

pub fn trapezoid(x: &[f64], f: &[f64]) -> f64 {
    x.windows(2).zip(f.windows(2)).map(|(xw, fw)| 0.5 * (xw[1] - xw[0]) * (fw[0] + fw[1])).sum()
}

/// Market inputs shared by every maturity of a pipeline run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketPoint {
    pub futures_price: f64,
    pub strike: f64,
    pub spot: f64,
    pub rate: f64,
    pub dividend_yield: f64,
}

fn lognormal_params(sigma: f64, spot: f64, maturity: f64, rate: f64, dividend: f64) -> Result<(f64, f64)> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidInput(format!("volatility must be positive, got {sigma}")));
    }
    if !(spot > 0.0 && spot.is_finite()) {
        return Err(Error::InvalidInput(format!("spot must be positive, got {spot}")));
    }
    if !(maturity > 0.0 && maturity.is_finite()) {
        return Err(Error::InvalidInput(format!("maturity must be positive, got {maturity}")));
    }
    let mu = spot.ln() + (rate - dividend - 0.5 * sigma * sigma) * maturity;
    Ok((mu, sigma * maturity.sqrt()))
}

/// Log-uniform grid covering `±8` log-sds around the log-mean.
pub fn default_s_grid(sigma: f64, spot: f64, maturity: f64, rate: f64, dividend: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::InvalidInput("grid needs at least 2 points".into()));
    }
    let (mu, sd) = lognormal_params(sigma, spot, maturity, rate, dividend)?;
    let (lo, hi) = (mu - GRID_SPAN_SD * sd, mu + GRID_SPAN_SD * sd);
    Ok((0..points).map(|j| (lo + (hi - lo) * j as f64 / (points - 1) as f64).exp()).collect())
}

/// Black-Scholes state-price density of `S_T`: lognormal with log-mean
/// `ln S_t + (γ − δ − σ̂²/2)λ` and log-sd `σ̂√λ`.
pub fn bs_spd(sigma_hat: f64, spot: f64, maturity: f64, rate: f64, dividend: f64, s_grid: &[f64]) -> Result<SpdCurve> {
    let (mu, sd) = lognormal_params(sigma_hat, spot, maturity, rate, dividend)?;
    if let Some(bad) = s_grid.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::InvalidInput(format!("grid values must be positive, got {bad}")));
    }
    let norm = 1.0 / (sd * (2.0 * PI).sqrt());
    let density = s_grid
        .iter()
        .map(|&s| {
            let z = (s.ln() - mu) / sd;
            norm / s * (-0.5 * z * z).exp()
        })
        .collect();
    Ok(SpdCurve { s_grid: s_grid.to_vec(), density, maturity })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source", content = "h")]
pub enum BandwidthSource {
    Bayes,
    Rot,
    Cv,
    Explicit(Vec<f64>),
}

impl BandwidthSource {
    pub fn tag(&self) -> &'static str {
        match self {
            BandwidthSource::Bayes => "bayes",
            BandwidthSource::Rot => "rot",
            BandwidthSource::Cv => "cv",
            BandwidthSource::Explicit(_) => "explicit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpdConfig {
    /// Mean estimator for the volatility surface.
    pub estimator: Estimator,
    pub grid_points: usize,
    pub sampler: SamplerConfig,
    pub prior: PriorSpec,
    pub search: SearchConfig,
}

impl Default for SpdConfig {
    fn default() -> Self {
        Self {
            estimator: Estimator::LocalConstant,
            grid_points: DEFAULT_SPD_POINTS,
            sampler: SamplerConfig::default(),
            prior: PriorSpec::default(),
            search: SearchConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthProvenance {
    pub source: String,
    pub estimator: Estimator,
    pub h: Vec<f64>,
    /// Error-density bandwidth, when sampled jointly.
    pub b: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpdResult {
    pub provenance: BandwidthProvenance,
    /// Fitted volatility at each maturity, in request order.
    pub sigma_hat: Vec<f64>,
    pub curves: Vec<SpdCurve>,
}

fn tagged(tag: &str, e: Error) -> Error {
    Error::SelectorFailure(format!("{tag}: {e}"))
}

/// Resolves the bandwidth vector for the implied-vol regression.
pub fn resolve_bandwidths(
    data: &Dataset,
    source: &BandwidthSource,
    cfg: &SpdConfig,
) -> Result<BandwidthProvenance> {
    let tag = source.tag();
    let (h, b, seed) = match source {
        BandwidthSource::Explicit(h) => {
            if h.len() != 3 || h.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::InvalidInput(format!("explicit bandwidths must be 3 positive values, got {h:?}")));
            }
            (h.clone(), None, None)
        }
        BandwidthSource::Rot => (rot_regression_bandwidth(data).map_err(|e| tagged(tag, e))?, None, None),
        BandwidthSource::Cv => {
            let sel = cv_minimize(data, cfg.estimator, &cfg.search).map_err(|e| tagged(tag, e))?;
            if !sel.converged {
                return Err(Error::SelectorFailure(format!(
                    "{tag}: {}",
                    sel.warning.unwrap_or_else(|| "search did not converge".into())
                )));
            }
            (sel.h, None, None)
        }
        BandwidthSource::Bayes => {
            let chain = sample_posterior(data, &cfg.prior, &cfg.sampler, cfg.estimator).map_err(|e| tagged(tag, e))?;
            let mean = chain.bandwidth_estimate()?;
            (mean.h, Some(mean.b), Some(cfg.sampler.seed))
        }
    };
    Ok(BandwidthProvenance { source: tag.to_string(), estimator: cfg.estimator, h, b, seed })
}

/// Fits the volatility surface once, then emits one normalised SPD curve per
/// maturity (given in years) at the shared market point.
pub fn spd_pipeline(
    records: &[OptionRecord],
    source: &BandwidthSource,
    maturities: &[f64],
    market: &MarketPoint,
    cfg: &SpdConfig,
) -> Result<SpdResult> {
    if maturities.is_empty() {
        return Err(Error::InvalidInput("no maturities requested".into()));
    }
    let data = records_dataset(records)?;
    let provenance = resolve_bandwidths(&data, source, cfg)?;
    let per: Vec<(f64, SpdCurve)> = maturities
        .par_iter()
        .map(|&lambda| {
            let q = VolQuery { futures_price: market.futures_price, strike: market.strike, maturity: lambda };
            let sigma = cfg.estimator.fit_at(&data, &provenance.h, &q.regressors())?;
            let grid = default_s_grid(sigma, market.spot, lambda, market.rate, market.dividend_yield, cfg.grid_points)?;
            let curve = bs_spd(sigma, market.spot, lambda, market.rate, market.dividend_yield, &grid)?;
            Ok((sigma, curve))
        })
        .collect::<Result<_>>()?;
    let (sigma_hat, curves) = per.into_iter().unzip();
    Ok(SpdResult { provenance, sigma_hat, curves })
}

/// Synthetic option panel with a quadratic smile in log-moneyness and a
/// mild term structure. Each simulated date draws a fresh spot around
/// `spot`; strikes span ±20% of the futures price.
pub fn synthetic_smile(
    dates: usize,
    strikes_per_maturity: usize,
    maturities_days: &[f64],
    spot: f64,
    seed: u64,
) -> Result<Vec<OptionRecord>> {
    if dates == 0 || strikes_per_maturity < 2 || maturities_days.is_empty() || !(spot > 0.0) {
        return Err(Error::InvalidInput("invalid synthetic smile specification".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spot_shock = Normal::new(0.0, 0.02).expect("valid sd");
    let vol_noise = Normal::new(0.0, 0.004).expect("valid sd");
    let (rate, dividend) = (0.03, 0.01);
    let mut out = Vec::with_capacity(dates * strikes_per_maturity * maturities_days.len());
    for _ in 0..dates {
        let shock: f64 = spot_shock.sample(&mut rng);
        let s_t = spot * shock.exp();
        for &days in maturities_days {
            let lambda = days / TRADING_DAYS;
            let f = s_t * ((rate - dividend) * lambda).exp();
            for k in 0..strikes_per_maturity {
                let jitter: f64 = rng.random_range(-0.01..0.01);
                let x = f * (0.8 + 0.4 * k as f64 / (strikes_per_maturity - 1) as f64 + jitter);
                let m = (x / f).ln();
                let vol = 0.18 - 0.25 * m + 1.5 * m * m + 0.02 * (days / 30.0).sqrt() + vol_noise.sample(&mut rng);
                out.push(OptionRecord {
                    futures_price: f,
                    strike: x,
                    maturity: lambda,
                    implied_vol: vol.max(0.01),
                    rate,
                    dividend_yield: dividend,
                    spot: s_t,
                });
            }
        }
    }
    Ok(out)
}
