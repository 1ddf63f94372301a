use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::likelihood::ResidualState;
use super::prior::PriorSpec;
use crate::error::{Error, Result};
use crate::kernel::{BandwidthSet, Dataset, Estimator};
use crate::select::{rot_density_bandwidth, rot_regression_bandwidth, sample_sd};

/// Starting point of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    /// Rule-of-thumb regression bandwidths and the rule-of-thumb density
    /// bandwidth of their leave-one-out residuals.
    Rot,
    Explicit(BandwidthSet),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub burn_in: usize,
    pub draws: usize,
    pub seed: u64,
    pub target_accept_h: f64,
    pub target_accept_b: f64,
    pub init: InitStrategy,
    /// Robbins-Monro gain constant for the log step sizes.
    pub adapt_constant: f64,
    /// Initial random-walk scales on the working coordinates.
    pub initial_step_h: f64,
    pub initial_step_b: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            burn_in: 1000,
            draws: 10_000,
            seed: 0,
            target_accept_h: 0.234,
            target_accept_b: 0.44,
            init: InitStrategy::Rot,
            adapt_constant: 1.0,
            initial_step_h: 0.5,
            initial_step_b: 0.5,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.draws < 100 {
            return Err(Error::InvalidInput(format!("draws must be >= 100, got {}", self.draws)));
        }
        for (name, p) in [("target_accept_h", self.target_accept_h), ("target_accept_b", self.target_accept_b)] {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidInput(format!("{name} must lie in (0, 1), got {p}")));
            }
        }
        if !(self.adapt_constant > 0.0) || !(self.initial_step_h > 0.0) || !(self.initial_step_b > 0.0) {
            return Err(Error::InvalidInput("adaptation constant and step sizes must be > 0".into()));
        }
        Ok(())
    }
}

/// Recorded post-burn-in draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorChain {
    pub n: usize,
    pub d: usize,
    pub prior: PriorSpec,
    pub estimator: Estimator,
    /// One row per recorded draw: `h_1..h_d, b` on the natural scale.
    pub samples: Vec<Vec<f64>>,
    pub accept_h: Vec<bool>,
    pub accept_b: Vec<bool>,
    /// `(step_h, step_b)` in force at every iteration, burn-in included.
    pub step_log: Vec<(f64, f64)>,
    /// Log posterior (pseudo-likelihood + native log prior) of each draw.
    pub log_post: Vec<f64>,
    /// Log pseudo-likelihood of each draw.
    pub log_lik: Vec<f64>,
}

impl PosteriorChain {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn parameter_names(&self) -> Vec<String> {
        (1..=self.d).map(|k| format!("h{k}")).chain(std::iter::once("b".to_string())).collect()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.samples.iter().map(|r| r[k]).collect()
    }

    /// Draws mapped to the prior family's working coordinates.
    pub fn working_draws(&self) -> Result<Vec<Vec<f64>>> {
        self.samples
            .iter()
            .map(|r| {
                let bw = BandwidthSet::new(r[..self.d].to_vec(), r[self.d])?;
                Ok(self.prior.to_working(&bw, self.n))
            })
            .collect()
    }

    pub fn acceptance_rates(&self) -> (f64, f64) {
        let rate = |v: &[bool]| v.iter().filter(|&&a| a).count() as f64 / v.len().max(1) as f64;
        (rate(&self.accept_h), rate(&self.accept_b))
    }

    /// Point estimate from the ergodic averages of the squared bandwidths:
    /// `(mean h_k²)^{1/2}`, `(mean b²)^{1/2}`.
    pub fn bandwidth_estimate(&self) -> Result<BandwidthSet> {
        let m = self.samples.len() as f64;
        let est: Vec<f64> = (0..=self.d)
            .map(|k| (self.samples.iter().map(|r| r[k] * r[k]).sum::<f64>() / m).sqrt())
            .collect();
        BandwidthSet::new(est[..self.d].to_vec(), est[self.d])
    }

    /// Posterior mean of the natural-scale bandwidths.
    pub fn posterior_mean(&self) -> Result<BandwidthSet> {
        let m = self.samples.len() as f64;
        let mean: Vec<f64> = (0..=self.d)
            .map(|k| self.samples.iter().map(|r| r[k]).sum::<f64>() / m)
            .collect();
        BandwidthSet::new(mean[..self.d].to_vec(), mean[self.d])
    }
}

/// Sampler state at one working point.
struct State {
    w: Vec<f64>,
    bw: BandwidthSet,
    residuals: ResidualState,
    log_lik: f64,
    log_prior_native: f64,
    target: f64,
}

fn evaluate(
    data: &Dataset,
    spec: &PriorSpec,
    estimator: Estimator,
    w: Vec<f64>,
    residuals: Option<&ResidualState>,
) -> Option<State> {
    let n = data.n();
    let bw = spec.from_working(&w, n).ok()?;
    let native = spec.native(&bw, n);
    let log_prior_native = spec.log_density_native(&native);
    if !log_prior_native.is_finite() {
        return None;
    }
    let residuals = match residuals {
        Some(r) => r.clone(),
        None => ResidualState::compute(data, &bw.h, estimator).ok()?,
    };
    let log_lik = residuals.log_likelihood(bw.b);
    let target = log_lik + log_prior_native + spec.log_jacobian(&w);
    target.is_finite().then_some(State { w, bw, residuals, log_lik, log_prior_native, target })
}

fn initial_bandwidths(data: &Dataset, estimator: Estimator, init: &InitStrategy) -> Result<BandwidthSet> {
    match init {
        InitStrategy::Explicit(bw) => {
            if bw.h.len() != data.d() {
                return Err(Error::Initialization(format!(
                    "initial bandwidths have dimension {}, data has {}",
                    bw.h.len(),
                    data.d()
                )));
            }
            Ok(bw.clone())
        }
        InitStrategy::Rot => {
            let h = rot_regression_bandwidth(data).map_err(|e| Error::Initialization(e.to_string()))?;
            let b = ResidualState::compute(data, &h, estimator)
                .ok()
                .and_then(|s| rot_density_bandwidth(&s.residuals).ok())
                .unwrap_or_else(|| {
                    let sd = sample_sd(data.y());
                    if sd > 0.0 {
                        sd * (data.n() as f64).powf(-0.2)
                    } else {
                        1.0
                    }
                });
            BandwidthSet::new(h, b).map_err(|e| Error::Initialization(e.to_string()))
        }
    }
}

/// Adaptive random-walk Metropolis over `(h, b)` in the prior family's
/// working coordinates.
///
/// Each iteration updates the `d` regression coordinates jointly with an
/// isotropic Gaussian proposal, then the density bandwidth with a scalar
/// proposal. During burn-in each block's log step size follows the
/// Robbins-Monro recursion
/// `log σ ← log σ + c (accepted − p*) / (p*(1 − p*) · t)`,
/// which drives the acceptance rate to `p*`; the kernel is frozen for the
/// recorded draws.
pub fn sample_posterior(
    data: &Dataset,
    spec: &PriorSpec,
    cfg: &SamplerConfig,
    estimator: Estimator,
) -> Result<PosteriorChain> {
    cfg.validate()?;
    spec.validate(data.d())?;
    let n = data.n();
    let d = data.d();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let start = initial_bandwidths(data, estimator, &cfg.init)?;
    let mut w0 = spec.to_working(&start, n);
    if let PriorSpec::BetaExponent { .. } = spec {
        // keep the logits away from the exponent bounds
        for v in &mut w0 {
            *v = v.clamp(-4.6, 4.6);
        }
    }
    let mut state = evaluate(data, spec, estimator, w0.clone(), None);
    let mut attempt = 0;
    while state.is_none() && attempt < 10 {
        attempt += 1;
        let jittered: Vec<f64> = w0.iter().map(|v| v + 0.5 * rng.sample::<f64, _>(StandardNormal)).collect();
        state = evaluate(data, spec, estimator, jittered, None);
    }
    let mut state = state.ok_or_else(|| {
        Error::Initialization(format!(
            "no finite log posterior at {:?} or 10 jittered restarts",
            start
        ))
    })?;

    let total = cfg.burn_in + cfg.draws;
    let mut log_step_h = cfg.initial_step_h.ln();
    let mut log_step_b = cfg.initial_step_b.ln();
    let gain_h = cfg.adapt_constant / (cfg.target_accept_h * (1.0 - cfg.target_accept_h));
    let gain_b = cfg.adapt_constant / (cfg.target_accept_b * (1.0 - cfg.target_accept_b));

    let mut chain = PosteriorChain {
        n,
        d,
        prior: spec.clone(),
        estimator,
        samples: Vec::with_capacity(cfg.draws),
        accept_h: Vec::with_capacity(cfg.draws),
        accept_b: Vec::with_capacity(cfg.draws),
        step_log: Vec::with_capacity(total),
        log_post: Vec::with_capacity(cfg.draws),
        log_lik: Vec::with_capacity(cfg.draws),
    };

    for t in 1..=total {
        let step_h = log_step_h.exp();
        let step_b = log_step_b.exp();
        chain.step_log.push((step_h, step_b));

        // regression block
        let mut w = state.w.clone();
        for v in &mut w[..d] {
            *v += step_h * rng.sample::<f64, _>(StandardNormal);
        }
        let u: f64 = rng.random();
        let acc_h = match evaluate(data, spec, estimator, w, None) {
            Some(prop) if u.ln() < prop.target - state.target => {
                state = prop;
                true
            }
            _ => false,
        };

        // density block
        let mut w = state.w.clone();
        w[d] += step_b * rng.sample::<f64, _>(StandardNormal);
        let u: f64 = rng.random();
        let acc_b = match evaluate(data, spec, estimator, w, Some(&state.residuals)) {
            Some(prop) if u.ln() < prop.target - state.target => {
                state = prop;
                true
            }
            _ => false,
        };

        if !state.target.is_finite() {
            return Err(Error::InternalInvariant(format!(
                "non-finite log posterior at accepted state {:?} (iteration {t})",
                state.bw
            )));
        }

        if t <= cfg.burn_in {
            let denom = t as f64;
            log_step_h += gain_h * ((acc_h as u8 as f64) - cfg.target_accept_h) / denom;
            log_step_b += gain_b * ((acc_b as u8 as f64) - cfg.target_accept_b) / denom;
        } else {
            if state.bw.h.iter().any(|&h| !(h > 0.0)) || !(state.bw.b > 0.0) {
                return Err(Error::InternalInvariant(format!("non-positive bandwidth {:?}", state.bw)));
            }
            let mut row = state.bw.h.clone();
            row.push(state.bw.b);
            chain.samples.push(row);
            chain.accept_h.push(acc_h);
            chain.accept_b.push(acc_b);
            chain.log_lik.push(state.log_lik);
            chain.log_post.push(state.log_lik + state.log_prior_native);
        }
    }
    Ok(chain)
}
