use std::path::Path;

use kernbayes::bayes::sample_posterior;
use kernbayes::evidence::{bayes_factor, evidence_report, interpret_bf, EvidenceReport, Favoured};
use kernbayes::{Dataset, Estimator};
use serde_json::json;

use super::RunLog;
use crate::args::Common;
use crate::config::RunConfig;
use crate::error::{Category, CliError, CliResult};
use crate::output::{num, OutDir};
use crate::data::read_regression;

fn one(data: &Dataset, estimator: Estimator, cfg: &RunConfig, common: &Common, seed: u64) -> CliResult<EvidenceReport> {
    let chain = sample_posterior(data, &cfg.prior(common, data.d())?, &cfg.sampler(seed), estimator)?;
    Ok(evidence_report(data, &chain)?)
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Chib and Geweke log marginal likelihoods for both estimators and the
/// local linear vs local constant Bayes factor under each. A failed chain is
/// reported in its rows; the command then exits as a selector failure.
pub fn run(data_path: &Path, common: &Common) -> CliResult<()> {
    let cfg = RunConfig::from_common(common)?;
    let log = RunLog::start("evidence", &[data_path], &cfg);
    let seed = cfg.seed(common)?;
    let data = read_regression(data_path)?;
    let out = OutDir::create(common)?;

    let fits: Vec<(Estimator, CliResult<EvidenceReport>)> = [Estimator::LocalLinear, Estimator::LocalConstant]
        .into_iter()
        .map(|est| (est, one(&data, est, &cfg, common, seed)))
        .collect();

    let mut lml = String::from("estimator,method,log_marginal_likelihood,note\n");
    for (est, r) in &fits {
        match r {
            Ok(rep) => {
                lml.push_str(&format!("{},chib,{},\n", est.tag(), num(rep.lml_chib)));
                lml.push_str(&format!("{},geweke,{},\n", est.tag(), num(rep.lml_geweke)));
            }
            Err(e) => {
                for m in ["chib", "geweke"] {
                    lml.push_str(&format!("{},{m},,{}\n", est.tag(), quote(&e.message)));
                }
            }
        }
    }
    let mut bf = String::from("method,log_bf_ll_vs_lc,favoured,bayes_factor,band\n");
    if let (Ok(ll), Ok(lc)) = (&fits[0].1, &fits[1].1) {
        for (m, a, b) in [("chib", ll.lml_chib, lc.lml_chib), ("geweke", ll.lml_geweke, lc.lml_geweke)] {
            let f = bayes_factor(a, b);
            let favoured = match f.favoured {
                Favoured::First => Estimator::LocalLinear.tag(),
                Favoured::Second => Estimator::LocalConstant.tag(),
            };
            let band = interpret_bf(f.value)?.label();
            bf.push_str(&format!("{m},{},{favoured},{},{band}\n", num(f.log_bf), num(f.value)));
        }
    }
    out.write("evidence.csv", &lml)?;
    out.write("bayes_factor.csv", &bf)?;
    let theta: Vec<_> = fits
        .iter()
        .map(|(est, r)| json!({ "estimator": est, "theta_star": r.as_ref().ok().map(|rep| &rep.theta_star) }))
        .collect();
    log.finish(
        &out,
        Some(seed),
        json!({ "prior": cfg.prior(common, data.d())?, "sampler": cfg.sampler(seed), "geweke_mass": kernbayes::evidence::GEWEKE_MASS, "fits": theta }),
    )?;
    print!("{lml}{bf}");
    let failed: Vec<String> = fits
        .iter()
        .filter_map(|(est, r)| r.as_ref().err().map(|e| format!("{}: {}", est.tag(), e.message)))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::new(Category::SelectorFailed, failed.join("; ")))
    }
}

