//! Flat key-value run configuration (TOML syntax). Every key is optional;
//! unknown keys and mistyped values are rejected with the field name.

use std::path::Path;

use kernbayes::bayes::{PriorSpec, SamplerConfig};
use kernbayes::select::SearchConfig;
use kernbayes::sim::{Design, ErrorLaw, Method};
use kernbayes::Estimator;
use serde::{Deserialize, Serialize};

use crate::args::{Common, EstimatorArg, PriorArg};
use crate::error::{CliError, CliResult};

pub const DEFAULT_DRAWS: usize = 2000;
pub const DEFAULT_BURN_IN: usize = 1000;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub estimator: Option<String>,

    pub burn_in: Option<usize>,
    pub draws: Option<usize>,
    pub target_accept_h: Option<f64>,
    pub target_accept_b: Option<f64>,

    pub prior: Option<String>,
    pub alpha_b: Option<f64>,
    pub beta_b: Option<f64>,
    pub alpha_h: Option<f64>,
    pub beta_h: Option<f64>,
    pub tau: Option<f64>,
    pub psi: Option<f64>,
    pub kappa: Option<f64>,

    pub box_factor: Option<f64>,
    pub max_starts: Option<usize>,

    pub design: Option<String>,
    pub error: Option<String>,
    pub n: Option<usize>,
    pub replications: Option<usize>,
    pub methods: Option<Vec<String>>,
    pub evidence: Option<bool>,
    pub include_runtime: Option<bool>,

    pub alpha: Option<f64>,
    pub bandwidths: Option<Vec<f64>>,
    pub density_bandwidth: Option<f64>,

    pub maturities_days: Option<Vec<f64>>,
    pub futures_price: Option<f64>,
    pub strike: Option<f64>,
    pub spot: Option<f64>,
    pub rate: Option<f64>,
    pub dividend_yield: Option<f64>,
    pub grid_points: Option<usize>,
}

fn field(name: &str) -> String {
    format!("config field `{name}`")
}

fn positive(name: &str, v: Option<f64>) -> CliResult<Option<f64>> {
    match v {
        Some(x) if !(x.is_finite() && x > 0.0) => Err(CliError::usage(format!("must be finite and > 0, got {x}")).at(field(name))),
        _ => Ok(v),
    }
}

fn probability(name: &str, v: Option<f64>) -> CliResult<Option<f64>> {
    match v {
        Some(x) if !(x > 0.0 && x < 1.0) => Err(CliError::usage(format!("must lie in (0, 1), got {x}")).at(field(name))),
        _ => Ok(v),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::usage(e.message().to_string()).at(match e.span() {
            Some(span) => format!("config at byte {}", span.start),
            None => "config".to_string(),
        }))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config: {e}")).at(path.display().to_string()))?;
        Self::parse(&text).map_err(|e| match e.location {
            Some(loc) => CliError { location: Some(format!("{}: {loc}", path.display())), ..e },
            None => e.at(path.display().to_string()),
        })
    }

    /// Config file named by `--config`, or an empty one.
    pub fn from_common(common: &Common) -> CliResult<Self> {
        match &common.config {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }

    fn validate(&self) -> CliResult<()> {
        for (name, v) in [
            ("alpha_b", self.alpha_b),
            ("beta_b", self.beta_b),
            ("alpha_h", self.alpha_h),
            ("beta_h", self.beta_h),
            ("tau", self.tau),
            ("psi", self.psi),
            ("kappa", self.kappa),
            ("density_bandwidth", self.density_bandwidth),
            ("futures_price", self.futures_price),
            ("strike", self.strike),
            ("spot", self.spot),
        ] {
            positive(name, v)?;
        }
        for (name, v) in [("target_accept_h", self.target_accept_h), ("target_accept_b", self.target_accept_b), ("alpha", self.alpha)] {
            probability(name, v)?;
        }
        if let Some(f) = self.box_factor {
            if !(f > 1.0 && f.is_finite()) {
                return Err(CliError::usage(format!("must be finite and > 1, got {f}")).at(field("box_factor")));
            }
        }
        if let Some(d) = self.draws {
            if d < 100 {
                return Err(CliError::usage(format!("must be >= 100, got {d}")).at(field("draws")));
            }
        }
        if self.replications == Some(0) {
            return Err(CliError::usage("must be >= 1").at(field("replications")));
        }
        if self.max_starts == Some(0) {
            return Err(CliError::usage("must be >= 1").at(field("max_starts")));
        }
        if let Some(g) = self.grid_points {
            if g < 2 {
                return Err(CliError::usage(format!("must be >= 2, got {g}")).at(field("grid_points")));
            }
        }
        for (name, v) in [("bandwidths", &self.bandwidths), ("maturities_days", &self.maturities_days)] {
            if let Some(v) = v {
                if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                    return Err(CliError::usage("must be a non-empty list of positive numbers").at(field(name)));
                }
            }
        }
        for (name, v) in [("rate", self.rate), ("dividend_yield", self.dividend_yield)] {
            if let Some(x) = v {
                if !x.is_finite() {
                    return Err(CliError::usage("must be finite").at(field(name)));
                }
            }
        }
        if let Some(e) = &self.estimator {
            parse_estimator(e)?;
        }
        if let Some(p) = &self.prior {
            parse_prior(p)?;
        }
        if let Some(d) = &self.design {
            d.parse::<Design>().map_err(|e| CliError::usage(e.to_string()).at(field("design")))?;
        }
        if let Some(e) = &self.error {
            e.parse::<ErrorLaw>().map_err(|e| CliError::usage(e.to_string()).at(field("error")))?;
        }
        if let Some(ms) = &self.methods {
            parse_methods(ms).map_err(|e| e.at(field("methods")))?;
        }
        Ok(())
    }

    /// Seed from the flag, else the config; mandatory for stochastic commands.
    pub fn seed(&self, common: &Common) -> CliResult<u64> {
        common
            .seed
            .or(self.seed)
            .ok_or_else(|| CliError::usage("a seed is required (pass --seed or set `seed` in the config)"))
    }

    pub fn estimator(&self, common: &Common, default: Estimator) -> CliResult<Estimator> {
        match (common.estimator, &self.estimator) {
            (Some(EstimatorArg::Ll), _) => Ok(Estimator::LocalLinear),
            (Some(EstimatorArg::Lc), _) => Ok(Estimator::LocalConstant),
            (None, Some(s)) => parse_estimator(s),
            (None, None) => Ok(default),
        }
    }

    pub fn prior(&self, common: &Common, d: usize) -> CliResult<PriorSpec> {
        let family = match (common.prior, &self.prior) {
            (Some(p), _) => p,
            (None, Some(s)) => parse_prior(s)?,
            (None, None) => PriorArg::Ig,
        };
        let spec = match family {
            PriorArg::Ig => PriorSpec::InverseGamma {
                alpha_b: self.alpha_b.unwrap_or(1.0),
                beta_b: self.beta_b.unwrap_or(0.05),
                alpha_h: self.alpha_h.unwrap_or(1.0),
                beta_h: self.beta_h.unwrap_or(0.05),
            },
            PriorArg::Exp => PriorSpec::exponential(self.tau.unwrap_or(1.0)),
            PriorArg::Beta => PriorSpec::beta_exponent(d, self.psi.unwrap_or(1.0), self.kappa.unwrap_or(1.0)),
        };
        spec.validate(d)?;
        Ok(spec)
    }

    pub fn sampler(&self, seed: u64) -> SamplerConfig {
        let base = SamplerConfig::default();
        SamplerConfig {
            burn_in: self.burn_in.unwrap_or(DEFAULT_BURN_IN),
            draws: self.draws.unwrap_or(DEFAULT_DRAWS),
            seed,
            target_accept_h: self.target_accept_h.unwrap_or(base.target_accept_h),
            target_accept_b: self.target_accept_b.unwrap_or(base.target_accept_b),
            ..base
        }
    }

    pub fn search(&self) -> SearchConfig {
        let base = SearchConfig::default();
        SearchConfig {
            box_factor: self.box_factor.unwrap_or(base.box_factor),
            max_starts: self.max_starts.unwrap_or(base.max_starts),
            ..base
        }
    }

    pub fn require<T: Copy>(&self, name: &str, v: Option<T>) -> CliResult<T> {
        v.ok_or_else(|| CliError::usage("required but missing").at(field(name)))
    }
}

fn parse_estimator(s: &str) -> CliResult<Estimator> {
    match s.trim().to_ascii_lowercase().as_str() {
        "ll" | "local_linear" => Ok(Estimator::LocalLinear),
        "lc" | "local_constant" | "nw" => Ok(Estimator::LocalConstant),
        other => Err(CliError::usage(format!("unknown estimator '{other}' (expected ll or lc)")).at(field("estimator"))),
    }
}

fn parse_prior(s: &str) -> CliResult<PriorArg> {
    match s.trim().to_ascii_lowercase().as_str() {
        "ig" | "inverse_gamma" => Ok(PriorArg::Ig),
        "exp" | "exponential" => Ok(PriorArg::Exp),
        "beta" | "beta_exponent" => Ok(PriorArg::Beta),
        other => Err(CliError::usage(format!("unknown prior '{other}' (expected ig, exp or beta)")).at(field("prior"))),
    }
}

pub fn parse_methods(names: &[String]) -> CliResult<Vec<Method>> {
    if names.is_empty() {
        return Err(CliError::usage("no methods given"));
    }
    let mut out = Vec::new();
    for name in names {
        let m = name.parse::<Method>().map_err(|e| CliError::usage(e.to_string()))?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_and_bad_types_name_the_field() {
        let e = RunConfig::parse("seed = 1\nreplicatons = 3\n").unwrap_err();
        assert!(e.message.contains("replicatons"), "{e}");
        let e = RunConfig::parse("n = \"many\"\n").unwrap_err();
        assert!(e.to_string().contains('n'), "{e}");
        let e = RunConfig::parse("draws = 20\n").unwrap_err();
        assert_eq!(e.location.as_deref(), Some("config field `draws`"));
        let e = RunConfig::parse("methods = [\"rot\", \"kde\"]\n").unwrap_err();
        assert_eq!(e.location.as_deref(), Some("config field `methods`"));
        let e = RunConfig::parse("alpha = 1.5\n").unwrap_err();
        assert_eq!(e.location.as_deref(), Some("config field `alpha`"));
    }

    #[test]
    fn flags_override_the_file() {
        let cfg = RunConfig::parse("seed = 3\nestimator = \"lc\"\nprior = \"exp\"\ntau = 2.0\n").unwrap();
        let none = Common::default();
        assert_eq!(cfg.seed(&none).unwrap(), 3);
        assert_eq!(cfg.estimator(&none, Estimator::LocalLinear).unwrap(), Estimator::LocalConstant);
        assert_eq!(cfg.prior(&none, 1).unwrap(), PriorSpec::exponential(2.0));
        let flags = Common { seed: Some(9), estimator: Some(EstimatorArg::Ll), prior: Some(PriorArg::Ig), ..Common::default() };
        assert_eq!(cfg.seed(&flags).unwrap(), 9);
        assert_eq!(cfg.estimator(&flags, Estimator::LocalConstant).unwrap(), Estimator::LocalLinear);
        assert_eq!(cfg.prior(&flags, 1).unwrap(), PriorSpec::default());
    }

    #[test]
    fn missing_seed_is_a_usage_error() {
        let e = RunConfig::default().seed(&Common::default()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
