use kernbayes::bayes::SamplerConfig;
use kernbayes::select::SearchConfig;
use kernbayes::sim::{run_experiment, Design, DgpSpec, ErrorLaw, ExperimentConfig, Method};

fn spec(design: Design) -> DgpSpec {
    DgpSpec { design, error: ErrorLaw::Mixture, n: 60, seed: 404 }
}

fn cfg(methods: Vec<Method>, replications: usize) -> ExperimentConfig {
    ExperimentConfig {
        methods,
        replications,
        sampler: SamplerConfig { burn_in: 100, draws: 150, ..SamplerConfig::default() },
        ..ExperimentConfig::default()
    }
}

#[test]
fn replications_do_not_depend_on_the_replication_count() {
    let two = run_experiment(&spec(Design::M1), &cfg(Method::ALL.to_vec(), 2)).unwrap();
    let three = run_experiment(&spec(Design::M1), &cfg(Method::ALL.to_vec(), 3)).unwrap();
    assert_eq!(two.cells.len(), 8);
    assert_eq!(three.cells.len(), 12);
    for (a, b) in two.cells.iter().zip(&three.cells) {
        assert_eq!((a.replication, a.method), (b.replication, b.method));
        match (&a.outcome, &b.outcome) {
            (Ok(x), Ok(y)) => {
                assert_eq!(x.h, y.h);
                assert_eq!(x.ise_regression, y.ise_regression);
                assert_eq!(x.densities, y.densities);
            }
            (x, y) => assert_eq!(x.is_ok(), y.is_ok()),
        }
    }
}

#[test]
fn tidy_rows_per_metric() {
    let reps = 2;
    let methods = Method::ALL.to_vec();
    let r = run_experiment(&spec(Design::M2), &cfg(methods.clone(), reps)).unwrap();
    let csv = r.to_tidy_csv(false);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("replication,method,metric,value,note"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.splitn(5, ',').collect()).collect();
    let count = |metric: &str| rows.iter().filter(|r| r[2] == metric).count();
    assert_eq!(count("ise_regression"), reps * methods.len());
    for k in 1..=3 {
        assert_eq!(count(&format!("h{k}")), reps * methods.len());
    }
    assert_eq!(count("ise_density"), reps * 2);
    assert_eq!(count("ise_density_rot"), reps * 2);
    assert_eq!(count("ise_density_lcv"), reps * 2);
    assert_eq!(count("runtime_s"), 0);
    assert_eq!(r.to_tidy_csv(true).lines().filter(|l| l.contains(",runtime_s,")).count(), reps * methods.len());
    for row in &rows {
        assert!(row[3].parse::<f64>().map(|v| v.is_finite()).unwrap_or(false), "{row:?}");
    }
    let summary = r.summary();
    assert!(summary.iter().any(|s| s.method == Method::BayesLl && s.metric == "ise_regression" && s.successes == reps));
}

#[test]
fn cv_boundary_warnings_stay_in_their_cells() {
    let base = cfg(vec![Method::Rot, Method::Cv, Method::BayesLl], 3);
    let tight = ExperimentConfig { search: SearchConfig { box_factor: 1.05, ..SearchConfig::default() }, ..base.clone() };
    let a = run_experiment(&spec(Design::M1), &base).unwrap();
    let b = run_experiment(&spec(Design::M1), &tight).unwrap();
    let mut warned = 0;
    for (x, y) in a.cells.iter().zip(&b.cells) {
        let (mx, my) = (x.outcome.as_ref().unwrap(), y.outcome.as_ref().unwrap());
        if x.method == Method::Cv {
            if let Some(w) = &my.warning {
                assert!(w.contains("boundary"));
                warned += 1;
            }
        } else {
            assert_eq!(mx.h, my.h);
            assert_eq!(mx.ise_regression, my.ise_regression);
            assert!(my.warning.is_none());
        }
    }
    assert!(warned > 0);
    assert!(b.to_tidy_csv(false).lines().any(|l| l.contains(",cv,") && l.contains("boundary")));
}
