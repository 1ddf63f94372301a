use rayon::prelude::*;

use super::prior::{log_prior, PriorSpec};
use crate::error::{check_bandwidth, Error};
use crate::kernel::{
    build_exclusion_index, loo_sum, residuals_loo, BandwidthSet, Dataset, Estimator, ExclusionIndex,
    ResidualSet,
};

/// Log pseudo-likelihood value; `−∞` when the residuals or windows are
/// degenerate, with the cause kept in `degenerate`.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLogLik {
    pub value: f64,
    pub degenerate: Option<Error>,
}

impl PseudoLogLik {
    fn failed(cause: Error) -> Self {
        Self { value: f64::NEG_INFINITY, degenerate: Some(cause) }
    }
}

/// `Σ_i log[(n − n_i)⁻¹ Σ_{j∈J_i} b⁻¹ φ((e_i − e_j)/b)]` for fixed residuals.
/// The per-i terms are computed in parallel and summed in index order.
pub fn residual_log_likelihood(e: &ResidualSet, idx: &ExclusionIndex, b: f64) -> f64 {
    if check_bandwidth(b).is_err() {
        return f64::NEG_INFINITY;
    }
    let v = e.values();
    let n = v.len();
    let terms: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let kept = (n - idx.n_excluded(i)) as f64;
            (loo_sum(v, idx.excluded(i), b, i) / (b * kept)).ln()
        })
        .collect();
    terms.iter().sum()
}

/// Residuals and exclusion sets for one regression bandwidth vector; lets the
/// sampler re-evaluate the likelihood for new `b` without refitting.
#[derive(Debug, Clone)]
pub struct ResidualState {
    pub residuals: ResidualSet,
    pub exclusion: ExclusionIndex,
}

impl ResidualState {
    pub fn compute(data: &Dataset, h: &[f64], estimator: Estimator) -> Result<Self, Error> {
        let residuals = residuals_loo(data, h, estimator)?;
        let exclusion = build_exclusion_index(&residuals)?;
        Ok(Self { residuals, exclusion })
    }

    pub fn log_likelihood(&self, b: f64) -> f64 {
        residual_log_likelihood(&self.residuals, &self.exclusion, b)
    }
}

/// Pseudo-likelihood of `(h, b)`: leave-one-out residuals from `estimator`,
/// scored by their tie-excluded kernel-form density.
pub fn log_pseudo_likelihood(data: &Dataset, h: &[f64], b: f64, estimator: Estimator) -> PseudoLogLik {
    if let Err(e) = check_bandwidth(b) {
        return PseudoLogLik::failed(e);
    }
    match ResidualState::compute(data, h, estimator) {
        Ok(state) => PseudoLogLik { value: state.log_likelihood(b), degenerate: None },
        Err(e) => PseudoLogLik::failed(e),
    }
}

/// Unnormalised log posterior: pseudo-likelihood plus log prior.
pub fn log_posterior(data: &Dataset, bw: &BandwidthSet, spec: &PriorSpec, estimator: Estimator) -> f64 {
    let lp = log_prior(bw, spec, data.n());
    if lp == f64::NEG_INFINITY {
        return lp;
    }
    log_pseudo_likelihood(data, &bw.h, bw.b, estimator).value + lp
}
