use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kernbayes::select::rot_regression_bandwidth;
use kernbayes::spd::trapezoid;
use kernbayes::Dataset;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn kernbayes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kernbayes")).args(args).output().expect("binary runs")
}

fn kernbayes_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kernbayes")).args(args).env(key, value).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{}: {e}", dir.join(name).display()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&kernbayes(&["--help"])), 0);
    assert_eq!(code(&kernbayes(&["--version"])), 0);
    assert_eq!(code(&kernbayes(&[])), 2);
}

#[test]
fn fit_on_three_rows_reports_two_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let o = kernbayes(&["fit", s(&fixture("three_rows.csv")), "--config", s(&fixture("fit_small.cfg")), "--out", s(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = read(dir.path(), "report.csv");
    let mut lines = report.lines();
    assert_eq!(lines.next(), Some("parameter,estimate,CI low,CI high,sd,batch-mean sd,SIF"));
    let rows = csv_rows(&report);
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0][0].as_str(), rows[1][0].as_str()), ("h1", "b"));
    for row in &rows {
        let v: Vec<f64> = row[1..6].iter().map(|c| c.parse().unwrap()).collect();
        assert!(v.iter().all(|x| x.is_finite() && *x > 0.0), "{row:?}");
        assert!(v[1] <= v[2], "{row:?}");
    }
    for f in ["chain.csv", "chain_meta.json", "run.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn non_numeric_cell_cites_its_line() {
    let o = kernbayes(&["fit", s(&fixture("bad_cell.csv")), "--seed", "1"]);
    assert_eq!(code(&o), 3);
    let err = stderr(&o);
    assert!(err.starts_with("error[data]"), "{err}");
    assert!(err.contains("bad_cell.csv:7"), "{err}");
    assert!(!err.contains("panicked"));
}

#[test]
fn fit_is_reproducible_and_summaries_rebuild_from_the_archive() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let data = fixture("m1_small.csv");
    for dir in [&a, &b] {
        let o = kernbayes(&["fit", s(&data), "--config", s(&fixture("fit_small.cfg")), "--out", s(dir.path())]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["report.csv", "chain.csv", "chain_meta.json", "run.json"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
    let run: serde_json::Value = serde_json::from_str(&read(a.path(), "run.json")).unwrap();
    assert!(run.get("wall_time_secs").is_none());
    assert_eq!(run["seed"], 5);

    let rebuilt = tempfile::tempdir().unwrap();
    let o = kernbayes(&["summarize", "--archive", s(a.path()), "--out", s(rebuilt.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(read(a.path(), "report.csv"), read(rebuilt.path(), "report.csv"));
}

#[test]
fn seed_flag_overrides_config() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let data = fixture("m1_small.csv");
    let cfg = fixture("fit_small.cfg");
    assert_eq!(code(&kernbayes(&["fit", s(&data), "--config", s(&cfg), "--out", s(a.path())])), 0);
    assert_eq!(code(&kernbayes(&["fit", s(&data), "--config", s(&cfg), "--seed", "6", "--out", s(b.path())])), 0);
    assert_ne!(read(a.path(), "chain.csv"), read(b.path(), "chain.csv"));
}

#[test]
fn rot_selection_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture("split_train.csv");
    let o = kernbayes(&["select", s(&data), "--method", "rot", "--out", s(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&data).unwrap();
    let rows = csv_rows(&text);
    let y = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    let x = rows.iter().map(|r| r[1..].iter().map(|c| c.parse().unwrap()).collect()).collect();
    let want = rot_regression_bandwidth(&Dataset::new(y, x).unwrap()).unwrap();
    let report = csv_rows(&read(dir.path(), "report.csv"));
    for (k, w) in want.iter().enumerate() {
        let got: f64 = report.iter().find(|r| r[0] == format!("h{}", k + 1)).unwrap()[1].parse().unwrap();
        assert_eq!(got.to_bits(), w.to_bits());
    }
}

#[test]
fn cv_boundary_is_a_selector_failure_with_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = kernbayes(&[
        "select",
        s(&fixture("m1_small.csv")),
        "--method",
        "cv",
        "--config",
        s(&fixture("cv_boundary.cfg")),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error[selector-failed]"));
    let report = csv_rows(&read(dir.path(), "report.csv"));
    let field = |k: &str| report.iter().find(|r| r[0] == k).unwrap()[1].clone();
    assert_eq!(field("boundary"), "true");
    assert!(field("warning").contains("not meaningful"));
}

#[test]
fn unknown_method_is_a_usage_error() {
    let o = kernbayes(&["select", s(&fixture("m1_small.csv")), "--method", "kde"]);
    assert_eq!(code(&o), 2);
    let o = kernbayes(&["simulate", "--config", s(&fixture("smoke.cfg")), "--method", "rot,kde"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("kde"));
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "seed = 1\nburnin = 10\n").unwrap();
    let o = kernbayes(&["fit", s(&fixture("m1_small.csv")), "--config", s(&cfg)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("burnin"), "{}", stderr(&o));
    std::fs::write(&cfg, "seed = 1\ndraws = 10\n").unwrap();
    let o = kernbayes(&["fit", s(&fixture("m1_small.csv")), "--config", s(&cfg)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("`draws`"), "{}", stderr(&o));
}

#[test]
fn thread_variable_is_validated() {
    let o = kernbayes_env(&["select", s(&fixture("m1_small.csv")), "--method", "rot", "--out", "/tmp"], "KERNBAYES_THREADS", "zero");
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("KERNBAYES_THREADS"));
}

#[test]
fn simulate_smoke_rows_and_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = kernbayes(&["simulate", "--config", s(&fixture("smoke.cfg")), "--out", s(dir.path())]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let results = read(a.path(), "results.csv");
    assert_eq!(results, read(b.path(), "results.csv"));
    assert_eq!(read(a.path(), "summary.csv"), read(b.path(), "summary.csv"));
    assert_eq!(read(a.path(), "run.json"), read(b.path(), "run.json"));
    assert_eq!(results.lines().next(), Some("replication,method,metric,value,note"));
    let rows = csv_rows(&results);
    assert_eq!(rows.iter().filter(|r| r[2] == "ise_regression").count(), 2 * 4);
    assert_eq!(rows.iter().filter(|r| r[2] == "h1").count(), 2 * 4);
    let summary = read(a.path(), "summary.csv");
    assert_eq!(summary.lines().next(), Some("method,metric,median,successes"));
}

#[test]
fn paper_scale_config_parses() {
    let text = std::fs::read_to_string(fixture("paper_scale.cfg")).unwrap();
    let cfg = kernbayes_cli::config::RunConfig::parse(&text).unwrap();
    assert_eq!(cfg.replications, Some(1000));
    assert_eq!(cfg.draws, Some(10000));
}

#[test]
fn predict_reproduces_affine_truth() {
    let dir = tempfile::tempdir().unwrap();
    let o = kernbayes(&[
        "predict",
        s(&fixture("affine.csv")),
        s(&fixture("affine_test.csv")),
        "--method",
        "rot",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for row in csv_rows(&read(dir.path(), "forecasts.csv")) {
        let v: Vec<f64> = row[1..].iter().map(|c| c.parse().unwrap()).collect();
        let (y, f, lo, hi) = (v[0], v[1], v[2], v[3]);
        assert!((y - f).abs() < 1e-10, "{row:?}");
        assert!(lo <= y && y <= hi, "{row:?}");
        assert!(((lo + hi) / 2.0 - y).abs() < 1e-10, "{row:?}");
    }
}

#[test]
fn predict_split_summary_layout() {
    let dir = tempfile::tempdir().unwrap();
    let o = kernbayes(&[
        "predict",
        s(&fixture("split_train.csv")),
        s(&fixture("split_test.csv")),
        "--config",
        s(&fixture("fit_small.cfg")),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = read(dir.path(), "summary.csv");
    assert_eq!(summary.lines().next(), Some("method,MSFE,MAFE,MAPE"));
    let rows = csv_rows(&summary);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "bayes");
    let v: Vec<f64> = rows[0][1..].iter().map(|c| c.parse().unwrap()).collect();
    assert!(v[1] * v[1] <= v[0] + 1e-15);
    let forecasts = csv_rows(&read(dir.path(), "forecasts.csv"));
    assert_eq!(forecasts.len(), 37);
    let covered = forecasts
        .iter()
        .filter(|r| {
            let v: Vec<f64> = r[1..].iter().map(|c| c.parse().unwrap()).collect();
            v[2] <= v[0] && v[0] <= v[3]
        })
        .count();
    assert!(covered >= 30, "{covered}/37");
}

#[test]
fn predict_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "y,x1\n").unwrap();
    let o = kernbayes(&["predict", s(&fixture("affine.csv")), s(&empty), "--method", "rot"]);
    assert_eq!(code(&o), 2);
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "y,z1\n1,2\n").unwrap();
    let o = kernbayes(&["predict", s(&fixture("affine.csv")), s(&bad), "--method", "rot"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("column `x1`"), "{}", stderr(&o));
}

#[test]
fn evidence_reports_four_values_and_favours_local_linear() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = kernbayes(&["evidence", s(&fixture("m1_small.csv")), "--config", s(&fixture("fit_small.cfg")), "--out", s(dir.path())]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["evidence.csv", "bayes_factor.csv", "run.json"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
    let lml = csv_rows(&read(a.path(), "evidence.csv"));
    assert_eq!(lml.len(), 4);
    assert!(lml.iter().all(|r| r[2].parse::<f64>().unwrap().is_finite()));
    let bf = csv_rows(&read(a.path(), "bayes_factor.csv"));
    assert_eq!(bf.len(), 2);
    for row in &bf {
        assert_eq!(row[2], "local_linear", "{row:?}");
        assert!(row[3].parse::<f64>().unwrap() >= 1.0);
    }
}

fn curve(text: &str) -> (Vec<f64>, Vec<f64>) {
    csv_rows(text).iter().map(|r| (r[1].parse::<f64>().unwrap(), r[2].parse::<f64>().unwrap())).unzip()
}

#[test]
fn spd_explicit_writes_one_normalised_file_per_maturity() {
    let dir = tempfile::tempdir().unwrap();
    let o = kernbayes(&[
        "spd",
        s(&fixture("smile_options.csv")),
        "--method",
        "explicit",
        "--config",
        s(&fixture("spd_explicit.cfg")),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["spd_2d.csv", "spd_10d.csv"] {
        let text = read(dir.path(), f);
        assert_eq!(text.lines().next(), Some("maturity_days,s_grid,density"));
        let (x, y) = curve(&text);
        assert_eq!(x.len(), 2001);
        assert!((trapezoid(&x, &y) - 1.0).abs() < 1e-4);
    }
    let prov: serde_json::Value = serde_json::from_str(&read(dir.path(), "provenance.json")).unwrap();
    assert_eq!(prov["bandwidths"]["source"], "explicit");
    assert_eq!(prov["bandwidths"]["h"], serde_json::json!([1.2887, 6.5582, 12.9901]));
}

#[test]
fn spd_bayes_rerun_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("spd.cfg");
    std::fs::write(&cfg, "seed = 3\nburn_in = 100\ndraws = 150\nmaturities_days = [2]\n").unwrap();
    let outs: Vec<PathBuf> = (0..2).map(|k| dir.path().join(format!("run{k}"))).collect();
    for out in &outs {
        let o = kernbayes(&["spd", s(&fixture("smile_options.csv")), "--config", s(&cfg), "--out", s(out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["spd_2d.csv", "provenance.json", "run.json"] {
        assert_eq!(read(&outs[0], f), read(&outs[1], f), "{f}");
    }
}

#[test]
fn spd_missing_column_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("smile_options.csv")).unwrap();
    let stripped: String = text
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n")
        .collect();
    let p = dir.path().join("no_spot.csv");
    std::fs::write(&p, stripped).unwrap();
    let o = kernbayes(&["spd", s(&p), "--method", "rot"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("column `spot`"), "{}", stderr(&o));
}
