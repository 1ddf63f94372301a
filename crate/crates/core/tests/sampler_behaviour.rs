mod common;

use common::*;
use kernbayes::bayes::{
    chain_from_csv, chain_to_csv, sample_posterior, summarize_chain, ChainMeta, InitStrategy, PriorSpec, SamplerConfig,
};
use kernbayes::sim::{generate, Design, DgpSpec, ErrorLaw};
use kernbayes::{BandwidthSet, Dataset, Estimator};

fn small_m1(n: usize, seed: u64) -> Dataset {
    generate(&DgpSpec { design: Design::M1, error: ErrorLaw::GaussianHalf, n, seed }).unwrap().data
}

fn cfg(burn_in: usize, draws: usize, seed: u64) -> SamplerConfig {
    SamplerConfig { burn_in, draws, seed, ..SamplerConfig::default() }
}

#[test]
fn seeded_chains_are_reproducible() {
    let data = small_m1(60, 1);
    let a = sample_posterior(&data, &PriorSpec::default(), &cfg(200, 300, 5), Estimator::LocalLinear).unwrap();
    let b = sample_posterior(&data, &PriorSpec::default(), &cfg(200, 300, 5), Estimator::LocalLinear).unwrap();
    let c = sample_posterior(&data, &PriorSpec::default(), &cfg(200, 300, 6), Estimator::LocalLinear).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.samples, c.samples);
}

#[test]
fn adaptation_stops_after_burn_in() {
    let data = small_m1(60, 2);
    let chain = sample_posterior(&data, &PriorSpec::default(), &cfg(300, 400, 1), Estimator::LocalLinear).unwrap();
    assert_eq!(chain.step_log.len(), 700);
    assert_eq!(chain.len(), 400);
    let frozen = chain.step_log[300];
    assert!(chain.step_log[300..].iter().all(|s| *s == frozen));
    assert!(chain.step_log[..300].windows(2).any(|w| w[0] != w[1]));
    for row in &chain.samples {
        assert!(row.iter().all(|v| v.is_finite() && *v > 0.0));
    }
    assert!(chain.log_post.iter().all(|v| v.is_finite()));
}

#[test]
fn every_prior_family_samples() {
    let data = small_m1(50, 3);
    for spec in [PriorSpec::default(), PriorSpec::exponential(1.0), PriorSpec::beta_exponent(1, 2.0, 2.0)] {
        let chain = sample_posterior(&data, &spec, &cfg(200, 200, 2), Estimator::LocalConstant).unwrap();
        let (ah, ab) = chain.acceptance_rates();
        assert!(ah > 0.0 && ah < 1.0 && ab > 0.0 && ab < 1.0, "{spec:?}: {ah} {ab}");
    }
}

#[test]
fn explicit_start_with_wrong_dimension_is_rejected() {
    let data = small_m1(50, 4);
    let mut c = cfg(10, 100, 0);
    c.init = InitStrategy::Explicit(BandwidthSet::new(vec![0.1, 0.1], 0.2).unwrap());
    assert!(sample_posterior(&data, &PriorSpec::default(), &c, Estimator::LocalLinear).is_err());
}

#[test]
fn archived_chain_regenerates_identical_summaries() {
    let data = small_m1(60, 5);
    let sampler = cfg(100, 300, 9);
    let chain = sample_posterior(&data, &PriorSpec::default(), &sampler, Estimator::LocalLinear).unwrap();
    let meta = ChainMeta::new(&chain, &sampler);
    let back = chain_from_csv(&chain_to_csv(&chain), &ChainMeta::from_json(&meta.to_json()).unwrap()).unwrap();
    assert_eq!(back, chain);
    assert_eq!(summarize_chain(&back).unwrap(), summarize_chain(&chain).unwrap());
}

/// Inverse-gamma log density on a squared rate-free constant, expressed per
/// unit of its logarithm.
fn log_ig_per_log(x: f64, alpha: f64, beta: f64) -> f64 {
    alpha * beta.ln() - statrs::function::gamma::ln_gamma(alpha) - alpha * x.ln() - beta / x
}

#[test]
fn chain_moments_match_grid_posterior() {
    // Posterior over (log h, log b) by brute-force quadrature on a grid.
    let n = 50;
    let data = small_m1(n, 11);
    let y = data.y().to_vec();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| data.row(i).to_vec()).collect();
    let rate_h = (n as f64).powf(1.0 / 5.0);
    let rate_b = (n as f64).powf(1.0 / 5.0);
    let (alpha, beta) = (1.0, 0.05);

    let gh: Vec<f64> = (0..120).map(|k| (0.01f64).ln() + ((2.0f64).ln() - (0.01f64).ln()) * k as f64 / 119.0).collect();
    let gb: Vec<f64> = (0..120).map(|k| (0.01f64).ln() + ((3.0f64).ln() - (0.01f64).ln()) * k as f64 / 119.0).collect();
    let mut logp = Vec::with_capacity(gh.len() * gb.len());
    for &lh in &gh {
        let e = loo_residuals_reference(&y, &rows, &[lh.exp()], true);
        for &lb in &gb {
            let h0sq = (lh.exp() * rate_h).powi(2);
            let b0sq = (lb.exp() * rate_b).powi(2);
            logp.push(
                brute_force_log_likelihood(&e, lb.exp())
                    + log_ig_per_log(h0sq, alpha, beta)
                    + log_ig_per_log(b0sq, alpha, beta),
            );
        }
    }
    let top = logp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logp.iter().map(|v| (v - top).exp()).collect();
    let z: f64 = w.iter().sum();
    let (mut mh, mut mb) = (0.0, 0.0);
    for (i, &lh) in gh.iter().enumerate() {
        for (j, &lb) in gb.iter().enumerate() {
            let p = w[i * gb.len() + j] / z;
            mh += p * lh;
            mb += p * lb;
        }
    }

    let chain = sample_posterior(&data, &PriorSpec::default(), &cfg(2000, 40_000, 17), Estimator::LocalLinear).unwrap();
    let log_h: Vec<f64> = chain.column(0).iter().map(|v| v.ln()).collect();
    let log_b: Vec<f64> = chain.column(1).iter().map(|v| v.ln()).collect();
    for (name, draws, want) in [("log h", log_h, mh), ("log b", log_b, mb)] {
        let s = kernbayes::bayes::diagnostics::summarize_series(name, &draws);
        let tol = 5.0 * s.batch_mean_sd + 0.01;
        assert!((s.mean - want).abs() < tol, "{name}: chain {} vs grid {want} (tol {tol})", s.mean);
    }
}
