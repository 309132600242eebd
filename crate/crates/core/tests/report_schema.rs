use mwl_core::experiment::{run_experiment, ExperimentConfig, REPORT_SCHEMA};
use mwl_core::io::to_json_string;
use mwl_core::walk::Execution;
use serde_json::Value;

fn config(extra_bound: &str) -> ExperimentConfig {
    let text = format!(
        r#"{{
            "version": 1,
            "manifold": {{"family": "sphere", "dim": 1}},
            "sampling": {{"method": "uniform", "n_points": 30, "seed": 3}},
            "walk": {{"K": 4, "trials": 500, "shape": [2, 2], "seed": 5, "observable": "signed"}},
            "bound": {{"n_thetas": 6 {extra_bound}}}
        }}"#
    );
    ExperimentConfig::from_json(&text, "inline").unwrap()
}

fn validator() -> jsonschema::Validator {
    let schema: Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn report_value(cfg: &ExperimentConfig) -> Value {
    let out = run_experiment(cfg, Execution::Parallel).unwrap();
    serde_json::from_str(&to_json_string(&out.report)).unwrap()
}

#[test]
fn report_validates_against_the_shipped_schema() {
    let v = validator();
    for cfg in [config(""), config(r#", "gap_convention": "algebraic_second", "thetas": [0, 40, 80]"#)] {
        let report = report_value(&cfg);
        let errors: Vec<String> = v.iter_errors(&report).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{errors:#?}");
    }
}

#[test]
fn schema_rejects_a_report_missing_its_config() {
    let mut report = report_value(&config(""));
    report.as_object_mut().unwrap().remove("config");
    assert!(!validator().is_valid(&report));
}

#[test]
fn config_echo_reproduces_the_outputs() {
    let cfg = config("");
    let first = run_experiment(&cfg, Execution::Parallel).unwrap();
    let echo = serde_json::to_string(&first.report.config).unwrap();
    let again = run_experiment(&ExperimentConfig::from_json(&echo, "echo").unwrap(), Execution::Sequential).unwrap();
    assert_eq!(first.tail_csv, again.tail_csv);
    assert_eq!(first.bound_csv, again.bound_csv);
}
