use std::path::Path;

use kernbayes::select::{cv_minimize, rot_regression_bandwidth};
use kernbayes::Estimator;
use serde_json::json;

use super::RunLog;
use crate::args::{Common, SelectMethod};
use crate::config::RunConfig;
use crate::data::read_regression;
use crate::error::{Category, CliError, CliResult};
use crate::output::{num, opt_num, OutDir};

fn rows(out: &mut String, pairs: &[(String, String)]) {
    for (k, v) in pairs {
        // warnings may contain commas
        let v = if v.contains(',') || v.contains('"') { format!("\"{}\"", v.replace('"', "\"\"")) } else { v.clone() };
        out.push_str(&format!("{k},{v}\n"));
    }
}

/// `field,value` report. A CV search that ends on the box boundary or fails
/// to converge still writes its report, then exits as a selector failure.
pub fn run(data_path: &Path, method: SelectMethod, common: &Common) -> CliResult<()> {
    let cfg = RunConfig::from_common(common)?;
    let log = RunLog::start("select", &[data_path], &cfg);
    let data = read_regression(data_path)?;
    let out = OutDir::create(common)?;
    let mut report = String::from("field,value\n");
    let mut fields = Vec::new();
    let mut failure = None;
    match method {
        SelectMethod::Rot => {
            let h = rot_regression_bandwidth(&data)?;
            fields.push(("method".to_string(), "rot".to_string()));
            for (k, v) in h.iter().enumerate() {
                fields.push((format!("h{}", k + 1), num(*v)));
            }
        }
        SelectMethod::Cv => {
            let estimator = cfg.estimator(common, Estimator::LocalLinear)?;
            let sel = cv_minimize(&data, estimator, &cfg.search())?;
            fields.push(("method".to_string(), "cv".to_string()));
            fields.push(("estimator".to_string(), estimator.tag().to_string()));
            for (k, v) in sel.h.iter().enumerate() {
                fields.push((format!("h{}", k + 1), num(*v)));
            }
            let boundary = sel.warning.as_deref().is_some_and(|w| w.contains("boundary"));
            fields.push(("objective".to_string(), opt_num(sel.objective_value)));
            fields.push(("evaluations".to_string(), sel.evaluations.to_string()));
            fields.push(("converged".to_string(), sel.converged.to_string()));
            fields.push(("boundary".to_string(), boundary.to_string()));
            fields.push(("warning".to_string(), sel.warning.clone().unwrap_or_default()));
            if !sel.converged || boundary {
                failure = Some(CliError::new(
                    Category::SelectorFailed,
                    sel.warning.unwrap_or_else(|| "cross-validation search did not converge".to_string()),
                ));
            }
        }
    }
    rows(&mut report, &fields);
    let path = out.write("report.csv", &report)?;
    log.finish(&out, None, json!({ "n": data.n(), "d": data.d(), "search": cfg.search() }))?;
    print!("{report}");
    match failure {
        Some(e) => Err(e.at(path.display().to_string())),
        None => Ok(()),
    }
}
