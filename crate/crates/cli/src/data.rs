//! CSV ingestion: comma separated, header required, `.` decimals. Blank,
//! NaN and non-numeric cells are rejected with their line and column.

use std::path::Path;

use kernbayes::spd::{OptionRecord, TRADING_DAYS};
use kernbayes::Dataset;

use crate::error::{CliError, CliResult};

/// Rows of a numeric CSV, each tagged with its 1-based file line.
struct Table {
    header: Vec<String>,
    rows: Vec<(u64, Vec<f64>)>,
}

fn read_table(path: &Path) -> CliResult<Table> {
    let file = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read: {e}")).at(&file))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::data(e.to_string()).at(format!("{file}:1")))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(CliError::data("missing header").at(format!("{file}:1")));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            CliError::data(e.to_string()).at(format!("{file}:{line}"))
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != header.len() {
            return Err(CliError::data(format!("expected {} fields, found {}", header.len(), record.len()))
                .at(format!("{file}:{line}")));
        }
        let mut values = Vec::with_capacity(record.len());
        for (cell, name) in record.iter().zip(&header) {
            let cell = cell.trim();
            let v = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    let what = if cell.is_empty() { "blank cell".to_string() } else { format!("non-numeric cell '{cell}'") };
                    CliError::data(what).at(format!("{file}:{line}, column `{name}`"))
                })?;
            values.push(v);
        }
        rows.push((line, values));
    }
    Ok(Table { header, rows })
}

/// Regression sample with header `y,x1,..,xd`.
pub fn read_regression(path: &Path) -> CliResult<Dataset> {
    let file = path.display().to_string();
    let table = read_table(path)?;
    let d = table.header.len().saturating_sub(1);
    let want: Vec<String> = std::iter::once("y".to_string()).chain((1..=d).map(|k| format!("x{k}"))).collect();
    if d == 0 || table.header != want {
        return Err(CliError::data(format!(
            "header must be `{}`, found `{}`",
            if d == 0 { "y,x1".to_string() } else { want.join(",") },
            table.header.join(",")
        ))
        .at(format!("{file}:1")));
    }
    if table.rows.len() < d + 2 {
        return Err(CliError::data(format!("need at least d+2 = {} rows, found {}", d + 2, table.rows.len())).at(file));
    }
    let y = table.rows.iter().map(|(_, r)| r[0]).collect();
    let rows = table.rows.iter().map(|(_, r)| r[1..].to_vec()).collect();
    Dataset::new(y, rows).map_err(|e| CliError::from(e).at(file))
}

/// Test sample for prediction: same header as the training file; may not be
/// empty.
pub fn read_test(path: &Path, train_d: usize) -> CliResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let file = path.display().to_string();
    let table = read_table(path)?;
    let want: Vec<String> = std::iter::once("y".to_string()).chain((1..=train_d).map(|k| format!("x{k}"))).collect();
    for (k, name) in want.iter().enumerate() {
        match table.header.get(k) {
            Some(h) if h == name => {}
            Some(h) => {
                return Err(CliError::data(format!("column {} is `{h}`, expected `{name}` to match the training file", k + 1))
                    .at(format!("{file}:1, column `{name}`")))
            }
            None => return Err(CliError::data("missing column").at(format!("{file}:1, column `{name}`"))),
        }
    }
    if let Some(extra) = table.header.get(want.len()) {
        return Err(CliError::data("column not present in the training file").at(format!("{file}:1, column `{extra}`")));
    }
    if table.rows.is_empty() {
        return Err(CliError::usage("test file has no rows").at(file));
    }
    let y = table.rows.iter().map(|(_, r)| r[0]).collect();
    let x = table.rows.iter().map(|(_, r)| r[1..].to_vec()).collect();
    Ok((y, x))
}

pub const OPTION_COLUMNS: [&str; 8] =
    ["date", "futures_price", "strike", "maturity_days", "implied_vol", "rate", "dividend_yield", "spot"];

/// Option panel; maturities arrive in trading days and are stored in years.
/// `date` is a numeric day index and is not used by the fit.
pub fn read_options(path: &Path) -> CliResult<Vec<OptionRecord>> {
    let file = path.display().to_string();
    let table = read_table(path)?;
    let mut col = [0usize; 8];
    for (slot, name) in col.iter_mut().zip(OPTION_COLUMNS) {
        *slot = table
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::data("missing column").at(format!("{file}:1, column `{name}`")))?;
    }
    if table.rows.is_empty() {
        return Err(CliError::data("no option records").at(file));
    }
    table
        .rows
        .iter()
        .map(|(line, r)| {
            let rec = OptionRecord {
                futures_price: r[col[1]],
                strike: r[col[2]],
                maturity: r[col[3]] / TRADING_DAYS,
                implied_vol: r[col[4]],
                rate: r[col[5]],
                dividend_yield: r[col[6]],
                spot: r[col[7]],
            };
            rec.validate().map_err(|e| CliError::from(e).at(format!("{file}:{line}")))?;
            Ok(rec)
        })
        .collect()
}
