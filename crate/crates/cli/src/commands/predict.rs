use std::path::Path;

use kernbayes::bayes::sample_posterior;
use kernbayes::kernel::residuals_loo;
use kernbayes::metrics::{forecast_scores, prediction_interval};
use kernbayes::select::{cv_minimize, likelihood_cv_density_bandwidth, rot_density_bandwidth, rot_regression_bandwidth};
use kernbayes::{Dataset, Estimator};
use serde_json::json;

use super::RunLog;
use crate::args::{BandwidthMethod, Common};
use crate::config::RunConfig;
use crate::data::{read_regression, read_test};
use crate::error::{Category, CliError, CliResult};
use crate::output::{num, opt_num, OutDir};

pub const DEFAULT_ALPHA: f64 = 0.05;

struct Bandwidths {
    h: Vec<f64>,
    /// `None` until a density bandwidth is chosen from the residuals.
    b: Option<f64>,
    seed: Option<u64>,
}

fn bandwidths(data: &Dataset, method: BandwidthMethod, estimator: Estimator, cfg: &RunConfig, common: &Common) -> CliResult<Bandwidths> {
    Ok(match method {
        BandwidthMethod::Bayes => {
            let seed = cfg.seed(common)?;
            let chain = sample_posterior(data, &cfg.prior(common, data.d())?, &cfg.sampler(seed), estimator)?;
            let est = chain.bandwidth_estimate()?;
            Bandwidths { h: est.h, b: Some(est.b), seed: Some(seed) }
        }
        BandwidthMethod::Rot => Bandwidths { h: rot_regression_bandwidth(data)?, b: None, seed: None },
        BandwidthMethod::Cv => {
            let sel = cv_minimize(data, estimator, &cfg.search())?;
            if !sel.converged {
                return Err(CliError::new(
                    Category::SelectorFailed,
                    sel.warning.unwrap_or_else(|| "cross-validation search did not converge".into()),
                ));
            }
            Bandwidths { h: sel.h, b: None, seed: None }
        }
        BandwidthMethod::Explicit => {
            let h = cfg
                .bandwidths
                .clone()
                .ok_or_else(|| CliError::usage("required for --method explicit").at("config field `bandwidths`"))?;
            if h.len() != data.d() {
                return Err(CliError::usage(format!("expected {} values, got {}", data.d(), h.len())).at("config field `bandwidths`"));
            }
            let b = cfg.require("density_bandwidth", cfg.density_bandwidth)?;
            Bandwidths { h, b: Some(b), seed: None }
        }
    })
}

/// Full-sample forecasts at the test points with kernel-form prediction
/// intervals, plus MSFE/MAFE/MAPE.
pub fn run(train_path: &Path, test_path: &Path, method: BandwidthMethod, common: &Common) -> CliResult<()> {
    let cfg = RunConfig::from_common(common)?;
    let log = RunLog::start("predict", &[train_path, test_path], &cfg);
    let train = read_regression(train_path)?;
    let (y_test, x_test) = read_test(test_path, train.d())?;
    let estimator = cfg.estimator(common, Estimator::LocalLinear)?;
    let alpha = cfg.alpha.unwrap_or(DEFAULT_ALPHA);
    let out = OutDir::create(common)?;

    let bw = bandwidths(&train, method, estimator, &cfg, common)?;
    let e = residuals_loo(&train, &bw.h, estimator)?;
    let b = match (cfg.density_bandwidth, bw.b, method) {
        (Some(b), _, BandwidthMethod::Rot | BandwidthMethod::Cv) => b,
        (_, Some(b), _) => b,
        (_, None, BandwidthMethod::Cv) => likelihood_cv_density_bandwidth(&e)?,
        (_, None, _) => rot_density_bandwidth(&e)?,
    };
    // the interval offsets do not depend on the point forecast
    let offsets = prediction_interval(&e, b, 0.0, alpha)?;

    let mut forecasts = Vec::with_capacity(y_test.len());
    let mut csv = String::from("index,y,forecast,lower,upper\n");
    for (i, (y, x)) in y_test.iter().zip(&x_test).enumerate() {
        let f = estimator.fit_at(&train, &bw.h, x).map_err(|err| CliError::from(err).at(format!("test row {}", i + 1)))?;
        forecasts.push(f);
        csv.push_str(&format!("{},{},{},{},{}\n", i + 1, num(*y), num(f), num(f + offsets.lower), num(f + offsets.upper)));
    }
    let score = forecast_scores(&y_test, &forecasts)?;
    let tag = match method {
        BandwidthMethod::Bayes => "bayes",
        BandwidthMethod::Rot => "rot",
        BandwidthMethod::Cv => "cv",
        BandwidthMethod::Explicit => "explicit",
    };
    let summary = format!("method,MSFE,MAFE,MAPE\n{tag},{},{},{}\n", num(score.msfe), num(score.mafe), opt_num(score.mape));
    out.write("forecasts.csv", &csv)?;
    out.write("summary.csv", &summary)?;
    log.finish(
        &out,
        bw.seed,
        json!({ "method": tag, "estimator": estimator, "h": bw.h, "b": b, "alpha": alpha }),
    )?;
    print!("{summary}");
    Ok(())
}
