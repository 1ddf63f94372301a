//! Log marginal likelihoods from posterior draws (Chib's identity with a
//! kernel estimate of the posterior ordinate, and Geweke's modified harmonic
//! mean) plus Bayes factors and their Kass-Raftery reading.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::bayes::{log_pseudo_likelihood, PosteriorChain, PriorSpec};
use crate::error::{Error, Result};
use crate::kernel::{BandwidthSet, Dataset, Estimator};
use crate::select::robust_scale;

/// Default truncation mass of the Geweke weighting density.
pub const GEWEKE_MASS: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceReport {
    pub lml_chib: f64,
    pub lml_geweke: f64,
    pub estimator: Estimator,
    pub theta_star: BandwidthSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChibEstimate {
    pub log_evidence: f64,
    /// Evaluation point (mean of the draws).
    pub theta_star: Vec<f64>,
    pub log_likelihood: f64,
    pub log_prior: f64,
    pub log_posterior_ordinate: f64,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn validate_draws(draws: &[Vec<f64>]) -> Result<usize> {
    let dim = draws.first().map(Vec::len).ok_or_else(|| Error::InvalidInput("empty chain".into()))?;
    if dim == 0 || draws.iter().any(|r| r.len() != dim || r.iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidInput("draws must be finite rows of equal length".into()));
    }
    Ok(dim)
}

/// Log of a product-Gaussian kernel density estimate of the draws at `point`,
/// with normal-reference bandwidths per coordinate.
pub fn log_posterior_ordinate(draws: &[Vec<f64>], point: &[f64]) -> Result<f64> {
    let dim = validate_draws(draws)?;
    let m = draws.len() as f64;
    let factor = (4.0 / ((dim as f64 + 2.0) * m)).powf(1.0 / (dim as f64 + 4.0));
    let bandwidths = (0..dim)
        .map(|k| {
            let col: Vec<f64> = draws.iter().map(|r| r[k]).collect();
            robust_scale(&col).map(|s| s * factor).ok_or_else(|| {
                Error::EvidenceUndefined(format!("posterior draws of parameter {k} do not vary"))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let log_norm = -0.5 * dim as f64 * (2.0 * std::f64::consts::PI).ln()
        - bandwidths.iter().map(|h| h.ln()).sum::<f64>()
        - m.ln();
    let exponents: Vec<f64> = draws
        .iter()
        .map(|r| {
            -0.5 * r
                .iter()
                .zip(point)
                .zip(&bandwidths)
                .map(|((x, p), h)| ((p - x) / h).powi(2))
                .sum::<f64>()
        })
        .collect();
    let top = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top < -700.0 {
        return Err(Error::EvidenceUndefined(
            "posterior kernel density underflows at the evaluation point; run a longer chain".into(),
        ));
    }
    Ok(log_norm + log_sum_exp(&exponents))
}

/// `log p(y) = log L(θ*) + log π(θ*) − log π̂(θ*|y)` at the mean of the draws.
/// All three terms must refer to the same coordinates as `draws`.
pub fn chib_log_evidence<L, P>(draws: &[Vec<f64>], log_lik: L, log_prior: P) -> Result<ChibEstimate>
where
    L: Fn(&[f64]) -> f64,
    P: Fn(&[f64]) -> f64,
{
    let dim = validate_draws(draws)?;
    let m = draws.len() as f64;
    let theta_star: Vec<f64> = (0..dim).map(|k| draws.iter().map(|r| r[k]).sum::<f64>() / m).collect();
    let ordinate = log_posterior_ordinate(draws, &theta_star)?;
    let ll = log_lik(&theta_star);
    let lp = log_prior(&theta_star);
    let log_evidence = ll + lp - ordinate;
    if !log_evidence.is_finite() {
        return Err(Error::EvidenceUndefined(format!(
            "non-finite terms at the posterior mean (log lik {ll}, log prior {lp})"
        )));
    }
    Ok(ChibEstimate {
        log_evidence,
        theta_star,
        log_likelihood: ll,
        log_prior: lp,
        log_posterior_ordinate: ordinate,
    })
}

/// Modified harmonic mean: `1/p(y) ≈ mean_i f(θ_i) / [L(θ_i) π(θ_i)]` with
/// `f` the Gaussian fitted to the draws, truncated to its `mass` ellipsoid
/// and renormalised. `log_kernel[i]` is `log L(θ_i) + log π(θ_i)`.
pub fn geweke_log_evidence(draws: &[Vec<f64>], log_kernel: &[f64], mass: f64) -> Result<f64> {
    let dim = validate_draws(draws)?;
    if log_kernel.len() != draws.len() {
        return Err(Error::InvalidInput("one log kernel value per draw is required".into()));
    }
    if !(mass > 0.0 && mass < 1.0) {
        return Err(Error::InvalidInput(format!("truncation mass {mass} outside (0, 1)")));
    }
    let m = draws.len();
    let mean = DVector::from_iterator(dim, (0..dim).map(|k| draws.iter().map(|r| r[k]).sum::<f64>() / m as f64));
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for r in draws {
        let c = DVector::from_column_slice(r) - &mean;
        cov += &c * c.transpose();
    }
    cov /= (m - 1) as f64;
    let chol = cov.clone().cholesky().ok_or_else(|| {
        Error::EvidenceUndefined("posterior covariance of the draws is singular".into())
    })?;
    let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();

    let chi2 = ChiSquared::new(dim as f64).map_err(|e| Error::InternalInvariant(e.to_string()))?;
    let radius = chi2.inverse_cdf(mass);
    let realised = chi2.cdf(radius);
    if (realised - mass).abs() > 1e-6 {
        return Err(Error::InternalInvariant(format!(
            "truncation ellipsoid holds mass {realised}, expected {mass}"
        )));
    }

    let log_f0 = -0.5 * dim as f64 * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det - mass.ln();
    let mut terms = Vec::with_capacity(m);
    for (r, &lk) in draws.iter().zip(log_kernel) {
        let c = DVector::from_column_slice(r) - &mean;
        let q = c.dot(&chol.solve(&c));
        if q <= radius {
            if !lk.is_finite() {
                return Err(Error::EvidenceUndefined("non-finite log kernel inside the ellipsoid".into()));
            }
            terms.push(log_f0 - 0.5 * q - lk);
        }
    }
    if (terms.len() as f64) < 0.01 * m as f64 {
        return Err(Error::UnstableEstimate(format!(
            "only {} of {m} draws fall inside the truncation ellipsoid",
            terms.len()
        )));
    }
    Ok(-(log_sum_exp(&terms) - (m as f64).ln()))
}

fn check_chain(data: &Dataset, chain: &PosteriorChain) -> Result<()> {
    if chain.is_empty() {
        return Err(Error::InvalidInput("empty chain".into()));
    }
    if chain.n != data.n() || chain.d != data.d() {
        return Err(Error::InvalidInput(format!(
            "chain was sampled for n={} d={}, data has n={} d={}",
            chain.n,
            chain.d,
            data.n(),
            data.d()
        )));
    }
    Ok(())
}

/// Chib's log marginal likelihood for a bandwidth posterior. The kernel
/// estimate, the prior and θ* all live in the prior family's working
/// coordinates, so the change-of-variables Jacobian cancels.
pub fn lml_chib(data: &Dataset, chain: &PosteriorChain, spec: &PriorSpec, estimator: Estimator) -> Result<ChibEstimate> {
    check_chain(data, chain)?;
    let draws = chain.working_draws()?;
    let n = data.n();
    chib_log_evidence(
        &draws,
        |w| match spec.from_working(w, n) {
            Ok(bw) => log_pseudo_likelihood(data, &bw.h, bw.b, estimator).value,
            Err(_) => f64::NEG_INFINITY,
        },
        |w| spec.log_density_working(w),
    )
}

/// Geweke's log marginal likelihood for a bandwidth posterior, reusing the
/// per-draw pseudo-likelihoods stored in the chain.
pub fn lml_geweke(data: &Dataset, chain: &PosteriorChain, spec: &PriorSpec, mass: f64) -> Result<f64> {
    check_chain(data, chain)?;
    let draws = chain.working_draws()?;
    let log_kernel: Vec<f64> = draws
        .iter()
        .zip(&chain.log_lik)
        .map(|(w, ll)| ll + spec.log_density_working(w))
        .collect();
    geweke_log_evidence(&draws, &log_kernel, mass)
}

/// Both evidence estimates for one fitted chain.
pub fn evidence_report(data: &Dataset, chain: &PosteriorChain) -> Result<EvidenceReport> {
    let chib = lml_chib(data, chain, &chain.prior, chain.estimator)?;
    let geweke = lml_geweke(data, chain, &chain.prior, GEWEKE_MASS)?;
    Ok(EvidenceReport {
        lml_chib: chib.log_evidence,
        lml_geweke: geweke,
        estimator: chain.estimator,
        theta_star: chain.prior.from_working(&chib.theta_star, data.n())?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Favoured {
    First,
    Second,
}

/// Bayes factor oriented so that `value ≥ 1` favours `favoured`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesFactor {
    /// `lml_a − lml_b`, unoriented.
    pub log_bf: f64,
    pub favoured: Favoured,
    /// `exp(|lml_a − lml_b|)`; infinite when it overflows.
    pub value: f64,
    pub overflow: bool,
}

pub fn bayes_factor(lml_a: f64, lml_b: f64) -> BayesFactor {
    let log_bf = lml_a - lml_b;
    let favoured = if log_bf >= 0.0 { Favoured::First } else { Favoured::Second };
    let value = log_bf.abs().exp();
    BayesFactor { log_bf, favoured, value, overflow: value.is_infinite() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceBand {
    Insignificant,
    Positive,
    Strong,
    VeryStrong,
}

impl EvidenceBand {
    pub fn label(self) -> &'static str {
        match self {
            EvidenceBand::Insignificant => "insignificant",
            EvidenceBand::Positive => "positive",
            EvidenceBand::Strong => "strong",
            EvidenceBand::VeryStrong => "very strong",
        }
    }
}

/// Kass-Raftery bands; boundaries resolve to the stronger band.
pub fn interpret_bf(bf: f64) -> Result<EvidenceBand> {
    if !(bf >= 1.0) {
        return Err(Error::Orientation(bf));
    }
    Ok(if bf < 3.0 {
        EvidenceBand::Insignificant
    } else if bf < 20.0 {
        EvidenceBand::Positive
    } else if bf < 150.0 {
        EvidenceBand::Strong
    } else {
        EvidenceBand::VeryStrong
    })
}
