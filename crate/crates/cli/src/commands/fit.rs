use std::path::Path;

use kernbayes::bayes::{chain_to_csv, sample_posterior, summarize_chain, ChainMeta, PosteriorChain};
use kernbayes::Estimator;
use serde_json::json;

use super::RunLog;
use crate::args::Common;
use crate::config::RunConfig;
use crate::data::read_regression;
use crate::error::CliResult;
use crate::output::{num, opt_num, OutDir};

pub const REPORT_HEADER: &str = "parameter,estimate,CI low,CI high,sd,batch-mean sd,SIF";

/// One row per bandwidth: point estimate, 95% credible interval, posterior
/// sd, batch-mean sd and SIF.
pub fn report_csv(chain: &PosteriorChain) -> CliResult<String> {
    let summary = summarize_chain(chain)?;
    let est = chain.bandwidth_estimate()?;
    let estimates: Vec<f64> = est.h.iter().copied().chain([est.b]).collect();
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for (p, e) in summary.params.iter().zip(&estimates) {
        out.push_str(&[
            p.name.clone(),
            num(*e),
            num(p.credible_low),
            num(p.credible_high),
            num(p.sd),
            num(p.batch_mean_sd),
            opt_num(p.sif),
        ]
        .join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn run(data_path: &Path, common: &Common) -> CliResult<()> {
    let cfg = RunConfig::from_common(common)?;
    let log = RunLog::start("fit", &[data_path], &cfg);
    let seed = cfg.seed(common)?;
    let data = read_regression(data_path)?;
    let estimator = cfg.estimator(common, Estimator::LocalLinear)?;
    let prior = cfg.prior(common, data.d())?;
    let sampler = cfg.sampler(seed);
    let out = OutDir::create(common)?;

    let chain = sample_posterior(&data, &prior, &sampler, estimator)?;
    let report = report_csv(&chain)?;
    out.write("chain.csv", &chain_to_csv(&chain))?;
    out.write("chain_meta.json", &ChainMeta::new(&chain, &sampler).to_json())?;
    out.write("report.csv", &report)?;
    let (acc_h, acc_b) = chain.acceptance_rates();
    log.finish(
        &out,
        Some(seed),
        json!({
            "n": data.n(),
            "d": data.d(),
            "estimator": estimator,
            "prior": prior,
            "sampler": sampler,
            "acceptance_h": acc_h,
            "acceptance_b": acc_b,
        }),
    )?;
    print!("{report}");
    Ok(())
}
