mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use common::fixture;
use epiexplain_core::dataset::FeatureRow;
use epiexplain_core::ingest::ingest;
use epiexplain_core::pipeline::{
    build_feature_rows, estimate_regions, label_features, run_pipeline, sha256_file, RunConfig,
    Stage,
};
use epiexplain_core::tables::{read_dataset, render_dataset, render_rt};
use serde_json::Value;

fn quick_config(out: &Path) -> RunConfig {
    RunConfig {
        cases: fixture("cases.csv"),
        measures: fixture("measures.csv"),
        weather: fixture("weather.csv"),
        theta: vec![1.0],
        k: vec![1],
        tree_count: 15,
        eval_seeds: 2,
        output_dir: out.to_path_buf(),
        ..RunConfig::default()
    }
}

fn relative_files(root: &Path) -> BTreeSet<String> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeSet<String>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(&path, root, out);
            } else {
                let rel = path.strip_prefix(root).unwrap();
                out.insert(rel.to_string_lossy().replace('\\', "/"));
            }
        }
    }
    let mut out = BTreeSet::new();
    walk(root, root, &mut out);
    out
}

#[test]
fn scoped_run_writes_exactly_its_panel_and_a_consistent_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_pipeline(&quick_config(dir.path())).unwrap();

    let mut expected: BTreeSet<String> = [
        "rt_series.csv",
        "dataset.csv",
        "models/forest_theta1.model",
        "models/ecpi_theta1.model",
        "explanations.csv",
        "reports/evaluation.csv",
        "reports/evaluation_summary.csv",
        "manifest.json",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for method in ["shap", "ecpi"] {
        for suffix in ["", "_nc0-10", "_nc10-100", "_nc100-inf"] {
            expected.insert(format!("reports/top1_theta1_{method}{suffix}.csv"));
        }
    }
    assert_eq!(relative_files(dir.path()), expected);
    assert_eq!(summary.files.len(), expected.len());
    assert!(summary.files.last().unwrap().ends_with("manifest.json"));

    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], 0);
    assert_eq!(manifest["config"]["tree_count"], 15);
    assert!(manifest["config"].get("output_dir").is_none());
    assert_eq!(manifest["dataset_rows"], summary.dataset_rows);
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), expected.len() - 1);
    for entry in outputs {
        let rel = entry["path"].as_str().unwrap();
        assert_eq!(
            entry["sha256"],
            sha256_file(&dir.path().join(rel)).unwrap(),
            "{rel}"
        );
    }
    for entry in manifest["inputs"].as_array().unwrap() {
        let path = Path::new(entry["path"].as_str().unwrap());
        assert_eq!(entry["sha256"], sha256_file(path).unwrap());
    }

    let rows = read_dataset(&dir.path().join("dataset.csv")).unwrap();
    let labeled = label_features(&rows, 1.0).unwrap();
    let labels = &manifest["labels"][0];
    assert_eq!(labels["below"], labeled.count_below());
    assert_eq!(labels["at_or_above"], labeled.count_at_or_above());

    let explanations = fs::read_to_string(dir.path().join("explanations.csv")).unwrap();
    let explained_rows: BTreeSet<(&str, &str, &str)> = explanations
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0], f[1], f[3])
        })
        .collect();
    let shap_rows = explained_rows.iter().filter(|r| r.2 == "shap").count();
    assert_eq!(shap_rows, labeled.count_below());
}

#[test]
fn stage_functions_reproduce_the_run_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick_config(dir.path());
    run_pipeline(&config).unwrap();

    let inputs = ingest(&config.cases, &config.measures, &config.weather).unwrap();
    let si = config.serial_interval().unwrap();
    let estimates = estimate_regions(
        &inputs.cases,
        &si,
        config.filter_radius,
        config.min_cumulative,
    );
    assert_eq!(
        render_rt(&estimates),
        fs::read_to_string(dir.path().join("rt_series.csv")).unwrap()
    );
    let rows: Vec<FeatureRow> =
        build_feature_rows(&estimates, &inputs.measures, &inputs.weather).unwrap();
    assert_eq!(
        render_dataset(&rows),
        fs::read_to_string(dir.path().join("dataset.csv")).unwrap()
    );
    for row in &rows {
        assert!(row.r_t.is_finite() && row.r_t >= 0.0);
    }
}

#[test]
fn failures_name_their_stage() {
    let dir = tempfile::tempdir().unwrap();

    let mut config = quick_config(dir.path());
    config.cases = dir.path().join("missing.csv");
    let err = run_pipeline(&config).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");

    let bad_cases = dir.path().join("bad.csv");
    fs::write(
        &bad_cases,
        "region,date,cumulative_confirmed\nA,2020-01-22,5\nA,2020-01-23,3\n",
    )
    .unwrap();
    let mut config = quick_config(dir.path());
    config.cases = bad_cases;
    let err = run_pipeline(&config).unwrap_err();
    assert_eq!(err.stage, Stage::Ingestion);
    assert!(err.to_string().contains("2020-01-23"), "{err}");

    let mut config = quick_config(dir.path());
    config.theta = vec![];
    let err = run_pipeline(&config).unwrap_err();
    assert_eq!((err.stage, err.exit_code()), (Stage::Config, 2));

    // a single-class label set cannot train a classifier
    let mut config = quick_config(&dir.path().join("out"));
    config.theta = vec![1000.0];
    let err = run_pipeline(&config).unwrap_err();
    assert_eq!((err.stage, err.exit_code()), (Stage::Training, 4), "{err}");

    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let config = quick_config(&blocker.join("out"));
    let err = run_pipeline(&config).unwrap_err();
    assert_eq!(err.exit_code(), 6, "{err}");
}
