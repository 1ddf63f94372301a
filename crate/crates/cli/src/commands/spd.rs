use std::path::Path;

use kernbayes::spd::{spd_pipeline, BandwidthSource, MarketPoint, SpdConfig, DEFAULT_SPD_POINTS, TRADING_DAYS};
use kernbayes::Estimator;
use serde::Serialize;

use crate::args::{BandwidthMethod, Common};
use crate::config::RunConfig;
use crate::data::read_options;
use crate::error::{CliError, CliResult};
use crate::output::{num, to_json, OutDir};

use super::RunLog;

pub const DEFAULT_MATURITIES_DAYS: [f64; 2] = [2.0, 10.0];

#[derive(Serialize)]
struct Provenance<'a> {
    bandwidths: &'a kernbayes::spd::BandwidthProvenance,
    market: MarketPoint,
    maturities_days: &'a [f64],
    sigma_hat: &'a [f64],
    files: Vec<String>,
}

fn file_name(days: f64) -> String {
    format!("spd_{days}d.csv")
}

/// One density file per maturity plus `provenance.json`. Market inputs not
/// set in the config default to an at-the-money point on the last record.
pub fn run(options_path: &Path, method: BandwidthMethod, common: &Common) -> CliResult<()> {
    let cfg = RunConfig::from_common(common)?;
    let log = RunLog::start("spd", &[options_path], &cfg);
    let records = read_options(options_path)?;
    let last = records.last().copied().expect("read_options rejects empty panels");
    let futures_price = cfg.futures_price.unwrap_or(last.futures_price);
    let market = MarketPoint {
        futures_price,
        strike: cfg.strike.unwrap_or(futures_price),
        spot: cfg.spot.unwrap_or(last.spot),
        rate: cfg.rate.unwrap_or(last.rate),
        dividend_yield: cfg.dividend_yield.unwrap_or(last.dividend_yield),
    };
    let days = cfg.maturities_days.clone().unwrap_or_else(|| DEFAULT_MATURITIES_DAYS.to_vec());
    let mut names: Vec<String> = days.iter().map(|d| file_name(*d)).collect();
    names.sort();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::usage("maturities must be distinct").at("config field `maturities_days`"));
    }
    let source = match method {
        BandwidthMethod::Bayes => BandwidthSource::Bayes,
        BandwidthMethod::Rot => BandwidthSource::Rot,
        BandwidthMethod::Cv => BandwidthSource::Cv,
        BandwidthMethod::Explicit => BandwidthSource::Explicit(
            cfg.bandwidths
                .clone()
                .ok_or_else(|| CliError::usage("required for --method explicit").at("config field `bandwidths`"))?,
        ),
    };
    let seed = match source {
        BandwidthSource::Bayes => Some(cfg.seed(common)?),
        _ => common.seed.or(cfg.seed),
    };
    let spd_cfg = SpdConfig {
        estimator: cfg.estimator(common, Estimator::LocalConstant)?,
        grid_points: cfg.grid_points.unwrap_or(DEFAULT_SPD_POINTS),
        sampler: cfg.sampler(seed.unwrap_or(0)),
        prior: cfg.prior(common, 3)?,
        search: cfg.search(),
    };
    let out = OutDir::create(common)?;
    let years: Vec<f64> = days.iter().map(|d| d / TRADING_DAYS).collect();
    let result = spd_pipeline(&records, &source, &years, &market, &spd_cfg)?;

    let mut files = Vec::new();
    for (d, curve) in days.iter().zip(&result.curves) {
        let mut csv = String::from("maturity_days,s_grid,density\n");
        let tag = num(*d);
        for (s, f) in curve.s_grid.iter().zip(&curve.density) {
            csv.push_str(&format!("{tag},{},{}\n", num(*s), num(*f)));
        }
        let name = file_name(*d);
        out.write(&name, &csv)?;
        files.push(name);
    }
    let prov = Provenance {
        bandwidths: &result.provenance,
        market,
        maturities_days: &days,
        sigma_hat: &result.sigma_hat,
        files: files.clone(),
    };
    out.write("provenance.json", &to_json(&prov))?;
    log.finish(&out, result.provenance.seed, serde_json::to_value(&spd_cfg).expect("serialisable"))?;
    for (f, s) in files.iter().zip(&result.sigma_hat) {
        println!("{f} sigma_hat={}", num(*s));
    }
    Ok(())
}
