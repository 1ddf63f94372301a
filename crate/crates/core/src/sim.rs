//! Monte Carlo designs: data generation from the two test regression
//! functions, replication loops over bandwidth selectors and tidy output.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{sample_posterior, InitStrategy, PriorSpec, SamplerConfig};
use crate::error::{Error, Result};
use crate::evidence::evidence_report;
use crate::kernel::{gaussian_kernel, residuals_loo, Dataset, Estimator, ResidualSet};
use crate::metrics::{ise_density, ise_regression, EvaluationGrid, DEFAULT_GRID_POINTS};
use crate::select::{
    cv_minimize, likelihood_cv_density_bandwidth, quantile_sorted, rot_density_bandwidth, rot_regression_bandwidth,
    SearchConfig,
};

pub const MIN_SAMPLE_SIZE: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    /// `cos 2πx + sin 2πx` on one regressor.
    M1,
    /// `sin 2πx₁ + cos 2πx₂ + 4(1 − x₃²)` on three regressors.
    M2,
}

impl Design {
    pub fn d(self) -> usize {
        match self {
            Design::M1 => 1,
            Design::M2 => 3,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Design::M1 => "m1",
            Design::M2 => "m2",
        }
    }

    pub fn mean(self, x: &[f64]) -> f64 {
        match self {
            Design::M1 => (2.0 * PI * x[0]).cos() + (2.0 * PI * x[0]).sin(),
            Design::M2 => (2.0 * PI * x[0]).sin() + (2.0 * PI * x[1]).cos() + 4.0 * (1.0 - x[2] * x[2]),
        }
    }
}

impl FromStr for Design {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m1" => Ok(Design::M1),
            "m2" => Ok(Design::M2),
            other => Err(Error::InvalidInput(format!("unknown design '{other}' (expected m1 or m2)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorLaw {
    /// N(0, 0.5²).
    GaussianHalf,
    /// 0.7 N(0, 0.4²) + 0.3 N(0, 0.8²).
    Mixture,
}

const MIXTURE: [(f64, f64); 2] = [(0.7, 0.4), (0.3, 0.8)];

impl ErrorLaw {
    pub fn tag(self) -> &'static str {
        match self {
            ErrorLaw::GaussianHalf => "gaussian_half",
            ErrorLaw::Mixture => "mixture",
        }
    }

    pub fn density(self, z: f64) -> f64 {
        match self {
            ErrorLaw::GaussianHalf => gaussian_kernel(z / 0.5) / 0.5,
            ErrorLaw::Mixture => MIXTURE.iter().map(|(w, s)| w * gaussian_kernel(z / s) / s).sum(),
        }
    }

    /// Largest component standard deviation.
    pub fn sigma_max(self) -> f64 {
        match self {
            ErrorLaw::GaussianHalf => 0.5,
            ErrorLaw::Mixture => 0.8,
        }
    }

    pub fn variance(self) -> f64 {
        match self {
            ErrorLaw::GaussianHalf => 0.25,
            ErrorLaw::Mixture => MIXTURE.iter().map(|(w, s)| w * s * s).sum(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        let sd = match self {
            ErrorLaw::GaussianHalf => 0.5,
            ErrorLaw::Mixture => {
                if rng.random::<f64>() < MIXTURE[0].0 {
                    MIXTURE[0].1
                } else {
                    MIXTURE[1].1
                }
            }
        };
        Normal::new(0.0, sd).expect("positive sd").sample(rng)
    }
}

impl FromStr for ErrorLaw {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian_half" | "gaussian" => Ok(ErrorLaw::GaussianHalf),
            "mixture" => Ok(ErrorLaw::Mixture),
            other => Err(Error::InvalidInput(format!(
                "unknown error law '{other}' (expected gaussian_half or mixture)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub design: Design,
    pub error: ErrorLaw,
    pub n: usize,
    pub seed: u64,
}

impl DgpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < MIN_SAMPLE_SIZE {
            return Err(Error::InvalidInput(format!("n must be >= {MIN_SAMPLE_SIZE}, got {}", self.n)));
        }
        Ok(())
    }
}

/// A simulated sample with its generating truth.
#[derive(Debug, Clone)]
pub struct Generated {
    pub data: Dataset,
    pub design: Design,
    pub error: ErrorLaw,
}

impl Generated {
    pub fn truth_mean(&self, x: &[f64]) -> f64 {
        self.design.mean(x)
    }

    pub fn truth_density(&self, z: f64) -> f64 {
        self.error.density(z)
    }
}

fn draw_sample<R: Rng + ?Sized>(design: Design, error: ErrorLaw, n: usize, rng: &mut R) -> Result<Dataset> {
    let d = design.d();
    let mut y = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n * d);
    for _ in 0..n {
        let row: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        y.push(design.mean(&row) + error.sample(rng));
        x.extend(row);
    }
    Dataset::from_flat(y, x, d)
}

/// Draws `x ~ U(0,1)^d`, `y = m(x) + ε` with the seed's main stream.
pub fn generate(spec: &DgpSpec) -> Result<Generated> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let data = draw_sample(spec.design, spec.error, spec.n, &mut rng)?;
    Ok(Generated { data, design: spec.design, error: spec.error })
}

/// Generator for replication `r`: stream `r + 1` of the seeded ChaCha
/// generator, so replications are independent of execution order.
pub fn replication_rng(seed: u64, r: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64 + 1);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rot,
    Cv,
    BayesLl,
    BayesLc,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Rot, Method::Cv, Method::BayesLl, Method::BayesLc];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Rot => "rot",
            Method::Cv => "cv",
            Method::BayesLl => "bayes_ll",
            Method::BayesLc => "bayes_lc",
        }
    }

    pub fn estimator(self) -> Estimator {
        match self {
            Method::BayesLc => Estimator::LocalConstant,
            _ => Estimator::LocalLinear,
        }
    }

    pub fn is_bayes(self) -> bool {
        matches!(self, Method::BayesLl | Method::BayesLc)
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidInput(format!("unknown method '{s}' (expected rot, cv, bayes_ll or bayes_lc)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub replications: usize,
    pub sampler: SamplerConfig,
    pub prior: PriorSpec,
    pub search: SearchConfig,
    /// Compute the Chib and Geweke evidence for every Bayes cell.
    pub evidence: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            replications: 100,
            sampler: SamplerConfig { draws: 2000, ..SamplerConfig::default() },
            prior: PriorSpec::default(),
            search: SearchConfig::default(),
            evidence: false,
        }
    }
}

/// Error-density ISE for one density bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityResult {
    /// `rot`, `lcv` for the two-step baselines, `joint` for Bayes.
    pub pairing: String,
    pub b: f64,
    pub ise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub h: Vec<f64>,
    pub ise_regression: f64,
    pub densities: Vec<DensityResult>,
    /// `(Chib, Geweke)` log marginal likelihoods.
    pub evidence: Option<(f64, f64)>,
    pub warning: Option<String>,
    pub runtime_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub replication: usize,
    pub method: Method,
    pub outcome: std::result::Result<CellMetrics, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: DgpSpec,
    pub methods: Vec<Method>,
    pub replications: usize,
    /// Ordered by replication, then by method as listed in the config.
    pub cells: Vec<Cell>,
}

/// One median row of the experiment summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub metric: String,
    pub median: f64,
    pub successes: usize,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    quantile_sorted(v, 0.5)
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

impl ExperimentResult {
    pub fn successes(&self, method: Method) -> impl Iterator<Item = &CellMetrics> + '_ {
        self.cells
            .iter()
            .filter(move |c| c.method == method)
            .filter_map(|c| c.outcome.as_ref().ok())
    }

    pub fn ise_values(&self, method: Method) -> Vec<f64> {
        self.successes(method).map(|m| m.ise_regression).collect()
    }

    pub fn median_ise(&self, method: Method) -> Option<f64> {
        let mut v = self.ise_values(method);
        (!v.is_empty()).then(|| median(&mut v))
    }

    fn metric_rows(m: &CellMetrics, include_runtime: bool) -> Vec<(String, f64)> {
        let mut rows = vec![("ise_regression".to_string(), m.ise_regression)];
        for dr in &m.densities {
            let suffix = if dr.pairing == "joint" { String::new() } else { format!("_{}", dr.pairing) };
            rows.push((format!("ise_density{suffix}"), dr.ise));
        }
        for (k, h) in m.h.iter().enumerate() {
            rows.push((format!("h{}", k + 1), *h));
        }
        for dr in &m.densities {
            let suffix = if dr.pairing == "joint" { String::new() } else { format!("_{}", dr.pairing) };
            rows.push((format!("b{suffix}"), dr.b));
        }
        if let Some((chib, geweke)) = m.evidence {
            rows.push(("lml_chib".to_string(), chib));
            rows.push(("lml_geweke".to_string(), geweke));
        }
        if include_runtime {
            rows.push(("runtime_s".to_string(), m.runtime_secs));
        }
        rows
    }

    /// One row per replication × method × metric. Wall-clock runtimes are
    /// excluded unless requested so that seeded reruns are byte-identical.
    pub fn to_tidy_csv(&self, include_runtime: bool) -> String {
        let mut out = String::from("replication,method,metric,value,note\n");
        for c in &self.cells {
            match &c.outcome {
                Ok(m) => {
                    let note = m.warning.as_deref().map(csv_escape).unwrap_or_default();
                    for (metric, v) in Self::metric_rows(m, include_runtime) {
                        let _ = writeln!(out, "{},{},{},{},{}", c.replication, c.method.tag(), metric, fmt_f64(v), note);
                    }
                }
                Err(msg) => {
                    let _ = writeln!(out, "{},{},failure,NA,{}", c.replication, c.method.tag(), csv_escape(msg));
                }
            }
        }
        out
    }

    /// Medians of every metric per method, over successful replications.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut rows = Vec::new();
        for &method in &self.methods {
            let cells: Vec<&CellMetrics> = self.successes(method).collect();
            let Some(first) = cells.first() else { continue };
            let names: Vec<String> = Self::metric_rows(first, false).into_iter().map(|(k, _)| k).collect();
            for (idx, name) in names.iter().enumerate() {
                let mut v: Vec<f64> = cells
                    .iter()
                    .filter_map(|m| Self::metric_rows(m, false).get(idx).map(|r| r.1))
                    .collect();
                rows.push(SummaryRow { method, metric: name.clone(), median: median(&mut v), successes: v.len() });
            }
        }
        rows
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("method,metric,median,successes\n");
        for r in self.summary() {
            let _ = writeln!(out, "{},{},{},{}", r.method.tag(), r.metric, fmt_f64(r.median), r.successes);
        }
        out
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// ISE evaluation points: 1000 equispaced points on (0,1) for one regressor,
/// 1000 shifted Halton points in the unit cube otherwise.
pub fn ise_grid(design: Design, seed: u64) -> Result<EvaluationGrid> {
    match design.d() {
        1 => EvaluationGrid::uniform_1d(0.0, 1.0, DEFAULT_GRID_POINTS),
        d => EvaluationGrid::quasi_random(&vec![0.0; d], &vec![1.0; d], DEFAULT_GRID_POINTS, seed),
    }
}

fn regression_ise(g: &Generated, h: &[f64], estimator: Estimator, grid: &EvaluationGrid) -> Result<f64> {
    ise_regression(
        |x| estimator.fit_at(&g.data, h, x).unwrap_or(f64::NAN),
        |x| g.truth_mean(x),
        grid,
    )
}

fn density_result(g: &Generated, e: &ResidualSet, pairing: &str, b: f64) -> Result<DensityResult> {
    let ise = ise_density(e, b, |z| g.truth_density(z), g.error.sigma_max())?;
    Ok(DensityResult { pairing: pairing.to_string(), b, ise })
}

fn run_cell(
    g: &Generated,
    method: Method,
    cfg: &ExperimentConfig,
    grid: &EvaluationGrid,
    sampler_seed: u64,
) -> Result<CellMetrics> {
    let start = Instant::now();
    let estimator = method.estimator();
    let mut warning = None;
    let mut evidence = None;
    let (h, densities) = if method.is_bayes() {
        let sampler = SamplerConfig { seed: sampler_seed, init: InitStrategy::Rot, ..cfg.sampler.clone() };
        let chain = sample_posterior(&g.data, &cfg.prior, &sampler, estimator)?;
        let mean = chain.bandwidth_estimate()?;
        if cfg.evidence {
            let rep = evidence_report(&g.data, &chain)?;
            evidence = Some((rep.lml_chib, rep.lml_geweke));
        }
        let e = residuals_loo(&g.data, &mean.h, estimator)?;
        let dens = vec![density_result(g, &e, "joint", mean.b)?];
        (mean.h, dens)
    } else {
        let h = if method == Method::Cv {
            let sel = cv_minimize(&g.data, estimator, &cfg.search)?;
            warning = sel.warning.clone();
            sel.h
        } else {
            rot_regression_bandwidth(&g.data)?
        };
        let e = residuals_loo(&g.data, &h, estimator)?;
        let dens = vec![
            density_result(g, &e, "rot", rot_density_bandwidth(&e)?)?,
            density_result(g, &e, "lcv", likelihood_cv_density_bandwidth(&e)?)?,
        ];
        (h, dens)
    };
    let ise_reg = regression_ise(g, &h, estimator, grid)?;
    Ok(CellMetrics {
        h,
        ise_regression: ise_reg,
        densities,
        evidence,
        warning,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

/// Runs every method on `replications` fresh samples. Cell failures are
/// recorded in place; a method with no successful replication fails the
/// experiment.
pub fn run_experiment(spec: &DgpSpec, cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    spec.validate()?;
    if cfg.replications == 0 {
        return Err(Error::InvalidInput("replications must be >= 1".into()));
    }
    if cfg.methods.is_empty() {
        return Err(Error::InvalidInput("no methods requested".into()));
    }
    if cfg.methods.iter().any(|m| m.is_bayes()) {
        cfg.sampler.validate()?;
        cfg.prior.validate(spec.design.d())?;
    }
    let grid = ise_grid(spec.design, spec.seed)?;
    let per_rep: Vec<Vec<Cell>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(spec.seed, r);
            let sample = draw_sample(spec.design, spec.error, spec.n, &mut rng);
            let seed_base = rng.next_u64();
            cfg.methods
                .iter()
                .enumerate()
                .map(|(k, &method)| {
                    let outcome = match &sample {
                        Ok(data) => {
                            let g = Generated { data: data.clone(), design: spec.design, error: spec.error };
                            run_cell(&g, method, cfg, &grid, seed_base.wrapping_add(k as u64))
                                .map_err(|e| e.to_string())
                        }
                        Err(e) => Err(e.to_string()),
                    };
                    Cell { replication: r, method, outcome }
                })
                .collect()
        })
        .collect();
    let result = ExperimentResult {
        spec: *spec,
        methods: cfg.methods.clone(),
        replications: cfg.replications,
        cells: per_rep.into_iter().flatten().collect(),
    };
    for &m in &result.methods {
        if result.successes(m).next().is_none() {
            let first = result
                .cells
                .iter()
                .find_map(|c| (c.method == m).then(|| c.outcome.as_ref().err().cloned()).flatten())
                .unwrap_or_default();
            return Err(Error::SelectorFailure(format!(
                "method {} failed in all {} replications (first failure: {first})",
                m.tag(),
                cfg.replications
            )));
        }
    }
    Ok(result)
}
