//! Chain persistence: a columnar CSV with one row per recorded draw and a
//! JSON sidecar holding everything needed to rebuild summaries.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::prior::PriorSpec;
use super::sampler::{PosteriorChain, SamplerConfig};
use crate::error::{Error, Result};
use crate::kernel::Estimator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainMeta {
    pub format_version: u32,
    pub seed: u64,
    pub sampler: SamplerConfig,
    pub prior: PriorSpec,
    pub estimator: Estimator,
    pub n: usize,
    pub d: usize,
    pub step_log: Vec<(f64, f64)>,
}

impl ChainMeta {
    pub fn new(chain: &PosteriorChain, sampler: &SamplerConfig) -> Self {
        Self {
            format_version: 1,
            seed: sampler.seed,
            sampler: sampler.clone(),
            prior: chain.prior.clone(),
            estimator: chain.estimator,
            n: chain.n,
            d: chain.d,
            step_log: chain.step_log.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metadata serialises") + "\n"
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidData(format!("chain metadata: {e}")))
    }
}

pub fn chain_header(d: usize) -> String {
    let mut h = String::from("draw");
    for k in 1..=d {
        let _ = write!(h, ",h{k}");
    }
    h.push_str(",b,log_post,log_lik,accept_h,accept_b");
    h
}

pub fn chain_to_csv(chain: &PosteriorChain) -> String {
    let mut out = chain_header(chain.d);
    out.push('\n');
    for (i, row) in chain.samples.iter().enumerate() {
        let _ = write!(out, "{i}");
        for v in row {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(
            out,
            ",{},{},{},{}",
            chain.log_post[i],
            chain.log_lik[i],
            chain.accept_h[i] as u8,
            chain.accept_b[i] as u8
        );
    }
    out
}

/// Rebuilds a chain from its CSV and sidecar.
pub fn chain_from_csv(csv_text: &str, meta: &ChainMeta) -> Result<PosteriorChain> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(csv_text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::InvalidData(format!("chain header: {e}")))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != chain_header(meta.d) {
        return Err(Error::InvalidData(format!(
            "chain header '{header}' does not match d={}",
            meta.d
        )));
    }
    let d = meta.d;
    let mut chain = PosteriorChain {
        n: meta.n,
        d,
        prior: meta.prior.clone(),
        estimator: meta.estimator,
        samples: Vec::new(),
        accept_h: Vec::new(),
        accept_b: Vec::new(),
        step_log: meta.step_log.clone(),
        log_post: Vec::new(),
        log_lik: Vec::new(),
    };
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::InvalidData(format!("chain line {}: {e}", line + 2)))?;
        let num = |k: usize| -> Result<f64> {
            record
                .get(k)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::InvalidData(format!("chain line {}, column {}", line + 2, k + 1)))
        };
        let row = (1..=d + 1).map(num).collect::<Result<Vec<_>>>()?;
        chain.samples.push(row);
        chain.log_post.push(num(d + 2)?);
        chain.log_lik.push(num(d + 3)?);
        chain.accept_h.push(num(d + 4)? != 0.0);
        chain.accept_b.push(num(d + 5)? != 0.0);
    }
    Ok(chain)
}
