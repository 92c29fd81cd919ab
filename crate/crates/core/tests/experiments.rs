use std::fs;

use livsic_core::experiments::{run_experiment, ExperimentConfig, ExperimentKind};
use livsic_core::Error;

#[test]
fn every_experiment_runs_from_json_and_passes() {
    let configs = [
        r#"{"experiment": "chebyshev", "grid_size": 64, "max_period": 6}"#,
        r#"{"experiment": "renormalization", "a_values": [2.0, 1.54368901, 1.2, 1.6, 1.9], "iterates": 500000}"#,
        r#"{"experiment": "mp_scaling", "p": 1.0, "depth": 4000}"#,
        r#"{"experiment": "corphi_scan", "a_range": [1.75, 2.0], "steps": 6, "max_period": 6, "iterates": 300000}"#,
    ];
    let dir = tempfile::tempdir().unwrap();
    for text in configs {
        let cfg = ExperimentConfig::from_json(text).unwrap();
        let report = run_experiment(&cfg).unwrap();
        assert!(report.passed(), "{}: {:?}", report.name, report.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
        let files = report.write(dir.path()).unwrap();
        for f in files {
            let csv = fs::read_to_string(&f).unwrap();
            let mut lines = csv.lines();
            let header = lines.next().unwrap();
            assert!(lines.all(|l| l.split(',').count() == header.split(',').count()), "{}", f.display());
        }
    }
}

#[test]
fn reports_carry_their_tolerances() {
    let cfg = ExperimentConfig::from_json(r#"{"experiment": "corphi_scan", "a_range": [1.9, 2.0], "steps": 2, "max_period": 4, "iterates": 200000}"#).unwrap();
    let r = run_experiment(&cfg).unwrap();
    assert_eq!(r.table.header.last().unwrap(), "tolerance");
    assert_eq!(r.table.rows[0][4].parse::<f64>().unwrap(), 0.01);
    assert_eq!(r.table.rows[1][4].parse::<f64>().unwrap(), 1e-6);
}

#[test]
fn seeded_runs_are_reproducible() {
    let text = r#"{"experiment": "renormalization", "a_values": [1.6, 1.9], "iterates": 200000, "seed": 5}"#;
    let cfg = ExperimentConfig::from_json(text).unwrap();
    let a = run_experiment(&cfg).unwrap().table.to_csv_string().unwrap();
    let b = run_experiment(&cfg).unwrap().table.to_csv_string().unwrap();
    assert_eq!(a, b);
}

#[test]
fn schema_errors_are_collected() {
    let err = ExperimentConfig::from_json(r#"{"experiment": "mp_scaling", "p": "one", "depht": 3, "alphas": [0.1, "x"]}"#).unwrap_err();
    let Error::Config(list) = err else { panic!("expected a config error") };
    assert_eq!(list.len(), 3, "{list:?}");
    assert_eq!(ExperimentKind::ALL.len(), 4);
}
