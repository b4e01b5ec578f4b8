//! The full run: ingestion, estimation, dataset assembly, training,
//! explanation, reporting and evaluation, plus a manifest of the run.
//!
//! Output layout under `output_dir`:
//!
//! ```text
//! rt_series.csv
//! dataset.csv
//! models/forest_theta{θ}.model
//! models/ecpi_theta{θ}.model
//! explanations.csv
//! reports/top{k}_theta{θ}_{method}[_nc{stratum}].csv
//! reports/evaluation.csv
//! reports/evaluation_summary.csv
//! manifest.json
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dataset::{
    assemble_rows, discretize_row, label_rows, FeatureRow, LabeledDataset, MeasureSchedule,
    WeatherSeries,
};
use crate::error::{Error, Result};
use crate::explain::{ecpi_explain, Background, Method, ShapleyExplainer};
use crate::ingest::{ingest, Inputs};
use crate::models::{
    evaluate, train_ecpi, train_forest, train_test_split, write_model, CategoricalData, EcpiModel,
    ForestModel, ForestParams, Model, DEFAULT_SMOOTHING, DEFAULT_TREE_COUNT,
};
use crate::report::{aggregate, emit_report, AggregateCounts, EvalRecord, NcStratum, RowTopK};
use crate::rt::{
    estimate_rt, mean_filter, new_cases_from_cumulative, CaseSeries, DEFAULT_FILTER_RADIUS,
    DEFAULT_MIN_CUMULATIVE,
};
use crate::serial_interval::{
    discretize, DiscretizedSerialInterval, GammaParams, DEFAULT_HORIZON, DEFAULT_MEAN_DAYS,
    DEFAULT_SD_DAYS,
};
use crate::tables::{render_dataset, render_explanations, render_rt, RegionEstimate};

pub const DEFAULT_THETAS: [f64; 2] = [1.0, 2.0];
pub const DEFAULT_KS: [usize; 2] = [1, 2];
pub const DEFAULT_EVAL_SEEDS: usize = 10;

/// Model family explained with Shapley values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Forest,
    Ecpi,
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "forest" => Ok(ModelKind::Forest),
            "ecpi" => Ok(ModelKind::Ecpi),
            _ => Err(format!("unknown model {s:?} (expected forest or ecpi)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub cases: PathBuf,
    pub measures: PathBuf,
    pub weather: PathBuf,
    pub si_mean: f64,
    pub si_sd: f64,
    pub horizon: usize,
    pub filter_radius: usize,
    pub min_cumulative: u64,
    pub theta: Vec<f64>,
    pub k: Vec<usize>,
    pub tree_count: usize,
    pub smoothing: f64,
    pub split_fraction: f64,
    pub seed: u64,
    /// Held-out evaluations per model and theta, with seeds `seed..seed + n`.
    pub eval_seeds: usize,
    pub shap_model: ModelKind,
    /// Not echoed in the manifest, so runs into different directories compare equal.
    #[serde(skip)]
    pub output_dir: PathBuf,
    /// Worker threads; `None` uses the global pool. Outputs do not depend on it.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            cases: PathBuf::from("data/cases.csv"),
            measures: PathBuf::from("data/measures.csv"),
            weather: PathBuf::from("data/weather.csv"),
            si_mean: DEFAULT_MEAN_DAYS,
            si_sd: DEFAULT_SD_DAYS,
            horizon: DEFAULT_HORIZON,
            filter_radius: DEFAULT_FILTER_RADIUS,
            min_cumulative: DEFAULT_MIN_CUMULATIVE,
            theta: DEFAULT_THETAS.to_vec(),
            k: DEFAULT_KS.to_vec(),
            tree_count: DEFAULT_TREE_COUNT,
            smoothing: DEFAULT_SMOOTHING,
            split_fraction: crate::models::DEFAULT_SPLIT_FRACTION,
            seed: 0,
            eval_seeds: DEFAULT_EVAL_SEEDS,
            shap_model: ModelKind::Forest,
            output_dir: PathBuf::from("output"),
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        GammaParams::from_mean_sd(self.si_mean, self.si_sd)?;
        let bad = |msg: String| Err(Error::Config(msg));
        if self.horizon == 0 {
            return bad("horizon must be at least 1 day".into());
        }
        if self.theta.is_empty() || self.theta.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return bad(format!(
                "theta values must be positive, got {:?}",
                self.theta
            ));
        }
        let max_k = crate::dataset::FEATURE_COUNT;
        if self.k.is_empty() || self.k.iter().any(|&k| k == 0 || k > max_k) {
            return bad(format!(
                "k values must lie in 1..={max_k}, got {:?}",
                self.k
            ));
        }
        if self.tree_count == 0 {
            return bad("tree_count must be at least 1".into());
        }
        if !(self.smoothing.is_finite() && self.smoothing > 0.0) {
            return bad(format!(
                "smoothing must be positive, got {}",
                self.smoothing
            ));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return bad(format!(
                "split_fraction must lie strictly between 0 and 1, got {}",
                self.split_fraction
            ));
        }
        if self.eval_seeds == 0 {
            return bad("eval_seeds must be at least 1".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        Ok(())
    }

    pub fn serial_interval(&self) -> Result<DiscretizedSerialInterval> {
        discretize(
            &GammaParams::from_mean_sd(self.si_mean, self.si_sd)?,
            self.horizon,
        )
    }

    fn max_k(&self) -> usize {
        self.k.iter().copied().max().unwrap_or(1)
    }
}

/// Where in the pipeline an error happened.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Ingestion,
    Estimation,
    Dataset,
    Training,
    Explanation,
    Report,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Ingestion => "ingestion",
            Stage::Estimation => "estimation",
            Stage::Dataset => "dataset",
            Stage::Training => "training",
            Stage::Explanation => "explanation",
            Stage::Report => "report",
        }
    }
}

#[derive(Debug)]
pub struct PipelineError {
    pub stage: Stage,
    pub source: Error,
}

impl PipelineError {
    /// 2 ingestion (and configuration), 3 estimation, 4 training,
    /// 5 explanation, 6 I/O. I/O failures map to 6 whatever the stage.
    pub fn exit_code(&self) -> i32 {
        if matches!(self.source, Error::Io { .. }) {
            return 6;
        }
        match self.stage {
            Stage::Config | Stage::Ingestion => 2,
            Stage::Estimation | Stage::Dataset => 3,
            Stage::Training => 4,
            Stage::Explanation => 5,
            Stage::Report => 6,
        }
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.stage.name(), self.source)
    }
}

impl std::error::Error for PipelineError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

pub trait StageExt<T> {
    fn stage(self, stage: Stage) -> std::result::Result<T, PipelineError>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> std::result::Result<T, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

/// Daily new cases, smoothed series and R_t for every region.
pub fn estimate_regions(
    cases: &[CaseSeries],
    si: &DiscretizedSerialInterval,
    filter_radius: usize,
    min_cumulative: u64,
) -> Vec<RegionEstimate> {
    cases
        .par_iter()
        .map(|series| {
            let raw = new_cases_from_cumulative(series);
            let smoothed = mean_filter(&raw, filter_radius);
            let rt = estimate_rt(&smoothed, si, min_cumulative);
            if !rt.zero_denominator_days.is_empty() {
                warn!(
                    "{}: {} day(s) omitted for a vanishing renewal denominator",
                    rt.region,
                    rt.zero_denominator_days.len()
                );
            }
            RegionEstimate { raw, smoothed, rt }
        })
        .collect()
}

/// Joins every region's estimates with its measures and weather. The
/// new-case feature is the raw daily count.
pub fn build_feature_rows(
    estimates: &[RegionEstimate],
    measures: &BTreeMap<String, MeasureSchedule>,
    weather: &BTreeMap<String, WeatherSeries>,
) -> Result<Vec<FeatureRow>> {
    let mut rows = Vec::new();
    for e in estimates {
        let region = e.raw.region();
        let schedule = measures.get(region).cloned().unwrap_or_else(|| {
            warn!("{region}: no measures listed, all treated as not implemented");
            MeasureSchedule::new(region)
        });
        let weather = weather.get(region).cloned().unwrap_or_else(|| {
            warn!("{region}: no weather records, region contributes no rows");
            WeatherSeries::new(region)
        });
        rows.extend(assemble_rows(&e.rt, &e.raw, &schedule, &weather)?);
    }
    Ok(rows)
}

pub fn label_features(rows: &[FeatureRow], theta: f64) -> Result<LabeledDataset> {
    label_rows(rows.iter().map(discretize_row).collect(), theta)
}

pub fn train_models(
    data: &CategoricalData,
    tree_count: usize,
    smoothing: f64,
    seed: u64,
) -> Result<(ForestModel, EcpiModel)> {
    let forest = train_forest(data, &ForestParams::new(tree_count, seed))?;
    let ecpi = train_ecpi(data, smoothing)?;
    Ok((forest, ecpi))
}

/// Top-`k` Shapley rankings for every row with R_t below the dataset
/// threshold, in dataset order.
pub fn shap_rows(
    dataset: &LabeledDataset,
    model: &Model,
    background: &Background,
    k: usize,
) -> Result<Vec<RowTopK>> {
    let explainer = ShapleyExplainer::new(model, background)?;
    let negatives: Vec<_> = dataset.rows.iter().filter(|r| r.label).collect();
    negatives
        .par_iter()
        .map(|r| {
            let attribution = explainer.explain(&r.row.codes)?;
            Ok(RowTopK {
                region: r.row.region.clone(),
                date: r.row.date,
                theta: dataset.theta,
                method: Method::Shap,
                new_cases: r.row.new_cases,
                ranked: attribution.top_k(k, true),
            })
        })
        .collect()
}

/// Top-`k` members of each minimal sufficient subset for every row with
/// R_t below the dataset threshold, in dataset order.
pub fn ecpi_rows(dataset: &LabeledDataset, model: &EcpiModel, k: usize) -> Vec<RowTopK> {
    let negatives: Vec<_> = dataset.rows.iter().filter(|r| r.label).collect();
    negatives
        .par_iter()
        .map(|r| RowTopK {
            region: r.row.region.clone(),
            date: r.row.date,
            theta: dataset.theta,
            method: Method::Ecpi,
            new_cases: r.row.new_cases,
            ranked: ecpi_explain(model, &r.row.codes).top_k(k),
        })
        .collect()
}

/// One table per (theta, method, k), unstratified and per new-case stratum.
pub fn aggregate_all(
    rows: &[RowTopK],
    thetas: &[f64],
    ks: &[usize],
) -> Result<Vec<AggregateCounts>> {
    let mut tables = Vec::new();
    for &theta in thetas {
        for method in Method::ALL {
            let subset: Vec<RowTopK> = rows
                .iter()
                .filter(|r| r.theta == theta && r.method == method)
                .cloned()
                .collect();
            for &k in ks {
                tables.push(aggregate(theta, k, method, &subset, None)?);
                for stratum in NcStratum::ALL {
                    tables.push(aggregate(theta, k, method, &subset, Some(stratum))?);
                }
            }
        }
    }
    Ok(tables)
}

/// Held-out precision and recall of both model families for seeds
/// `seed..seed + n_seeds`; each seed drives both the split and the forest.
pub fn evaluate_models(
    data: &CategoricalData,
    theta: f64,
    config: &RunConfig,
) -> Result<Vec<EvalRecord>> {
    let mut forest_records = Vec::new();
    let mut ecpi_records = Vec::new();
    for i in 0..config.eval_seeds as u64 {
        let seed = config.seed.wrapping_add(i);
        let (train, test) = train_test_split(data, config.split_fraction, seed)?;
        let (forest, ecpi) = train_models(&train, config.tree_count, config.smoothing, seed)?;
        for (model, records, report) in [
            ("forest", &mut forest_records, evaluate(&forest, &test)?),
            ("ecpi", &mut ecpi_records, evaluate(&ecpi, &test)?),
        ] {
            records.push(EvalRecord {
                model: model.into(),
                theta,
                seed,
                report,
            });
        }
    }
    forest_records.extend(ecpi_records);
    Ok(forest_records)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct LabelCounts {
    theta: f64,
    below: usize,
    at_or_above: usize,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    config: &'a RunConfig,
    inputs: Vec<FileDigest>,
    regions: usize,
    dataset_rows: usize,
    labels: Vec<LabelCounts>,
    outputs: Vec<FileDigest>,
}

/// Summary of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    /// Every written file, manifest last.
    pub files: Vec<PathBuf>,
    pub dataset_rows: usize,
}

fn write(path: &Path, contents: &[u8], written: &mut Vec<PathBuf>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))?;
    written.push(path.to_path_buf());
    Ok(())
}

pub fn model_bytes(model: &Model) -> Vec<u8> {
    let mut out = Vec::new();
    write_model(model, &mut out).expect("writing to memory cannot fail");
    out
}

/// Runs every stage and writes all outputs. With `config.threads` set, the
/// work runs on a dedicated pool of that size.
pub fn run_pipeline(config: &RunConfig) -> std::result::Result<RunSummary, PipelineError> {
    config.validate().stage(Stage::Config)?;
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))
            .stage(Stage::Config)?
            .install(|| run_stages(config)),
        None => run_stages(config),
    }
}

fn run_stages(config: &RunConfig) -> std::result::Result<RunSummary, PipelineError> {
    let out = &config.output_dir;
    let mut written = Vec::new();

    let Inputs {
        cases,
        measures,
        weather,
    } = ingest(&config.cases, &config.measures, &config.weather).stage(Stage::Ingestion)?;
    info!("ingested {} case series", cases.len());

    let si = config.serial_interval().stage(Stage::Estimation)?;
    let estimates = estimate_regions(&cases, &si, config.filter_radius, config.min_cumulative);
    write(
        &out.join("rt_series.csv"),
        render_rt(&estimates).as_bytes(),
        &mut written,
    )
    .stage(Stage::Report)?;

    let rows = build_feature_rows(&estimates, &measures, &weather).stage(Stage::Dataset)?;
    if rows.is_empty() {
        return Err(Error::Config(
            "no region-day passed the inclusion rule".into(),
        ))
        .stage(Stage::Dataset);
    }
    info!("assembled {} dataset rows", rows.len());
    write(
        &out.join("dataset.csv"),
        render_dataset(&rows).as_bytes(),
        &mut written,
    )
    .stage(Stage::Report)?;

    let mut explanations = Vec::new();
    let mut evaluations = Vec::new();
    let mut labels = Vec::new();
    for &theta in &config.theta {
        let dataset = label_features(&rows, theta).stage(Stage::Dataset)?;
        labels.push(LabelCounts {
            theta,
            below: dataset.count_below(),
            at_or_above: dataset.count_at_or_above(),
        });
        info!(
            "theta {theta}: {} rows below, {} at or above",
            dataset.count_below(),
            dataset.count_at_or_above()
        );
        let data = dataset.to_categorical();
        let (forest, ecpi) = train_models(&data, config.tree_count, config.smoothing, config.seed)
            .stage(Stage::Training)?;
        let forest = Model::Forest(forest);
        let ecpi_model = Model::Ecpi(ecpi.clone());
        for model in [&forest, &ecpi_model] {
            let path = out
                .join("models")
                .join(format!("{}_theta{theta}.model", model.kind()));
            write(&path, &model_bytes(model), &mut written).stage(Stage::Report)?;
        }

        let background = Background::from_rows(data.samples()).stage(Stage::Explanation)?;
        let shap_model = match config.shap_model {
            ModelKind::Forest => &forest,
            ModelKind::Ecpi => &ecpi_model,
        };
        explanations.extend(
            shap_rows(&dataset, shap_model, &background, config.max_k())
                .stage(Stage::Explanation)?,
        );
        explanations.extend(ecpi_rows(&dataset, &ecpi, config.max_k()));
        evaluations.extend(evaluate_models(&data, theta, config).stage(Stage::Training)?);
    }
    write(
        &out.join("explanations.csv"),
        render_explanations(&explanations).as_bytes(),
        &mut written,
    )
    .stage(Stage::Report)?;

    let tables = aggregate_all(&explanations, &config.theta, &config.k).stage(Stage::Report)?;
    written.extend(
        emit_report(&tables, Some(&evaluations), &out.join("reports")).stage(Stage::Report)?,
    );

    let digest = |path: &Path, name: String| -> Result<FileDigest> {
        Ok(FileDigest {
            path: name,
            sha256: sha256_file(path)?,
        })
    };
    let inputs = [&config.cases, &config.measures, &config.weather]
        .into_iter()
        .map(|p| digest(p, p.display().to_string()))
        .collect::<Result<Vec<_>>>()
        .stage(Stage::Report)?;
    let outputs = written
        .iter()
        .map(|p| {
            let rel = p.strip_prefix(out).unwrap_or(p);
            let name = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            digest(p, name)
        })
        .collect::<Result<Vec<_>>>()
        .stage(Stage::Report)?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        config,
        inputs,
        regions: estimates.len(),
        dataset_rows: rows.len(),
        labels,
        outputs,
    };
    let mut json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Config(format!("cannot serialize manifest: {e}")))
        .stage(Stage::Report)?;
    json.push('\n');
    write(&out.join("manifest.json"), json.as_bytes(), &mut written).stage(Stage::Report)?;

    Ok(RunSummary {
        files: written,
        dataset_rows: rows.len(),
    })
}
