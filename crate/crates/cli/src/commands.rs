use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use epiexplain_core::explain::{Background, Method};
use epiexplain_core::ingest::{ingest_cases, ingest_context, parse_date};
use epiexplain_core::models::{read_model, train_ecpi, train_forest, ForestParams, Model};
use epiexplain_core::pipeline::{
    aggregate_all, build_feature_rows, ecpi_rows, estimate_regions, label_features, model_bytes,
    run_pipeline, shap_rows, ModelKind, PipelineError, RunConfig, Stage, StageExt,
};
use epiexplain_core::report::emit_report;
use epiexplain_core::rt::simulate_cases;
use epiexplain_core::serial_interval::{discretize, GammaParams};
use epiexplain_core::tables::{
    read_dataset, read_explanations, read_rt, render_dataset, render_explanations, render_rt,
};
use epiexplain_core::{Error, Result};
use log::info;

use crate::{Cli, Command, SerialIntervalArgs};

type CmdResult = std::result::Result<(), PipelineError>;

pub fn dispatch(cli: Cli) -> CmdResult {
    let Cli {
        output_dir,
        threads,
        command,
        ..
    } = cli;
    if let Command::Run(args) = command {
        let config = RunConfig {
            cases: args.cases,
            measures: args.measures,
            weather: args.weather,
            si_mean: args.estimation.si.si_mean,
            si_sd: args.estimation.si.si_sd,
            horizon: args.estimation.si.horizon,
            filter_radius: args.estimation.filter_radius,
            min_cumulative: args.estimation.min_cumulative,
            theta: args.theta,
            k: args.k,
            tree_count: args.training.tree_count,
            smoothing: args.training.smoothing,
            split_fraction: args.split_fraction,
            seed: args.training.seed,
            eval_seeds: args.eval_seeds,
            shap_model: args.shap_model,
            output_dir,
            threads,
        };
        let summary = run_pipeline(&config)?;
        println!(
            "wrote {} files for {} dataset rows to {}",
            summary.files.len(),
            summary.dataset_rows,
            config.output_dir.display()
        );
        return Ok(());
    }
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))
            .stage(Stage::Config)?
            .install(|| stage_command(command, &output_dir)),
        None => stage_command(command, &output_dir),
    }
}

fn serial_interval(
    args: &SerialIntervalArgs,
) -> Result<epiexplain_core::serial_interval::DiscretizedSerialInterval> {
    discretize(
        &GammaParams::from_mean_sd(args.si_mean, args.si_sd)?,
        args.horizon,
    )
}

fn write(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| io_error(path, e))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn load_model(path: &Path) -> Result<Model> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    read_model(BufReader::new(file))
}

fn stage_command(command: Command, output_dir: &Path) -> CmdResult {
    let out =
        |given: Option<PathBuf>, default: &str| given.unwrap_or_else(|| output_dir.join(default));
    match command {
        Command::EstimateRt {
            cases,
            estimation,
            output,
        } => {
            let series = ingest_cases(&cases).stage(Stage::Ingestion)?;
            let si = serial_interval(&estimation.si).stage(Stage::Estimation)?;
            let estimates = estimate_regions(
                &series,
                &si,
                estimation.filter_radius,
                estimation.min_cumulative,
            );
            write(
                &out(output, "rt_series.csv"),
                render_rt(&estimates).as_bytes(),
            )
            .stage(Stage::Report)
        }
        Command::BuildDataset {
            rt,
            measures,
            weather,
            output,
        } => {
            let estimates = read_rt(&rt).stage(Stage::Ingestion)?;
            let (measures, weather) =
                ingest_context(&measures, &weather).stage(Stage::Ingestion)?;
            let rows = build_feature_rows(&estimates, &measures, &weather).stage(Stage::Dataset)?;
            info!("{} dataset rows", rows.len());
            write(
                &out(output, "dataset.csv"),
                render_dataset(&rows).as_bytes(),
            )
            .stage(Stage::Report)
        }
        Command::Train {
            dataset,
            theta,
            model,
            training,
            output,
        } => {
            let rows = read_dataset(&dataset).stage(Stage::Ingestion)?;
            let labeled = label_features(&rows, theta).stage(Stage::Dataset)?;
            let data = labeled.to_categorical();
            let trained = match model {
                ModelKind::Forest => train_forest(
                    &data,
                    &ForestParams::new(training.tree_count, training.seed),
                )
                .map(Model::Forest),
                ModelKind::Ecpi => train_ecpi(&data, training.smoothing).map(Model::Ecpi),
            }
            .stage(Stage::Training)?;
            let default = format!("models/{}_theta{theta}.model", trained.kind());
            write(&out(output, &default), &model_bytes(&trained)).stage(Stage::Report)
        }
        Command::Explain {
            dataset,
            theta,
            model_file,
            method,
            k,
            output,
        } => {
            let rows = read_dataset(&dataset).stage(Stage::Ingestion)?;
            let labeled = label_features(&rows, theta).stage(Stage::Dataset)?;
            let model = load_model(&model_file).stage(Stage::Ingestion)?;
            let data = labeled.to_categorical();
            let background = Background::from_rows(data.samples()).stage(Stage::Explanation)?;
            let explained = match (method, &model) {
                (Method::Shap, _) => shap_rows(&labeled, &model, &background, k),
                (Method::Ecpi, Model::Ecpi(m)) => Ok(ecpi_rows(&labeled, m, k)),
                (Method::Ecpi, Model::Forest(_)) => Err(Error::Explanation(
                    "sufficient-subset explanations need an ECPI model file".into(),
                )),
            }
            .stage(Stage::Explanation)?;
            write(
                &out(output, "explanations.csv"),
                render_explanations(&explained).as_bytes(),
            )
            .stage(Stage::Report)
        }
        Command::Report {
            explanations,
            dataset,
            k,
        } => {
            let rows = read_dataset(&dataset).stage(Stage::Ingestion)?;
            let new_cases: BTreeMap<(String, NaiveDate), f64> = rows
                .iter()
                .map(|r| ((r.region.clone(), r.date), r.new_cases))
                .collect();
            let explained = read_explanations(&explanations, &new_cases).stage(Stage::Ingestion)?;
            let mut thetas: Vec<f64> = Vec::new();
            for r in &explained {
                if !thetas.contains(&r.theta) {
                    thetas.push(r.theta);
                }
            }
            let tables = aggregate_all(&explained, &thetas, &k).stage(Stage::Report)?;
            let methods: BTreeSet<Method> = explained.iter().map(|r| r.method).collect();
            let tables: Vec<_> = tables
                .into_iter()
                .filter(|t| methods.contains(&t.method))
                .collect();
            let written =
                emit_report(&tables, None, &output_dir.join("reports")).stage(Stage::Report)?;
            println!(
                "wrote {} report files to {}",
                written.len(),
                output_dir.join("reports").display()
            );
            Ok(())
        }
        Command::Simulate {
            r,
            seed_cases,
            region,
            start,
            si,
            output,
        } => {
            let start = parse_date(&start)
                .map_err(Error::Config)
                .stage(Stage::Config)?;
            let si = serial_interval(&si).stage(Stage::Estimation)?;
            let daily = simulate_cases(&r, &si, &seed_cases).stage(Stage::Estimation)?;
            let mut text = String::from("region,date,cumulative_confirmed\n");
            let mut running = 0.0;
            for (day, c) in daily.iter().enumerate() {
                running += c;
                let date = start + chrono::Duration::days(day as i64);
                text.push_str(&format!("{region},{date},{}\n", running.round() as u64));
            }
            write(&out(output, "simulated_cases.csv"), text.as_bytes()).stage(Stage::Report)
        }
        Command::Run(_) => unreachable!("handled by dispatch"),
    }
}
