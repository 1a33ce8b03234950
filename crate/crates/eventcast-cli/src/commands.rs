//! The six pipeline subcommands. Every command is idempotent: identical
//! config and inputs produce byte-identical artifacts. Wall-clock timings
//! are the one measured quantity, so they go to `timings.csv` and stdout
//! only, never into the deterministic artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use eventcast::artifact::{read_dataset, write_dataset, DatasetSidecar};
use eventcast::discretize::Discretizer;
use eventcast::encode::{ordinal_encode, EncodedDataset};
use eventcast::error::{Error, Result};
use eventcast::eval::{confusion, metrics, stratified_split, MetricReport};
use eventcast::events::{
    domains_from_bundle, extract_domains, forecast, AttackForecast, ForecastConfig, MarginalMode,
};
use eventcast::learners::{train, LearnerKind, LearnerModel, LearnerParams, ModelBundle};
use eventcast::resample::resample;
use eventcast::schema::{resolve_schema, SchemaSpec};
use eventcast::select::{
    chi2_scores, kbest_sweep, rfe_sweep, select_k_from, sweep_to_csv, SweepRow,
};
use eventcast::synth::generate_csv;
use eventcast::table::load_csv;

use crate::config::PipelineConfig;

fn ensure_output_dir(config: &PipelineConfig) -> Result<()> {
    std::fs::create_dir_all(&config.output_dir).map_err(|e| {
        Error::data(format!(
            "cannot create output dir {}: {e}",
            config.output_dir.display()
        ))
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| Error::data(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::invariant(format!("serialization failed: {e}")))?;
    std::fs::write(path, json)
        .map_err(|e| Error::data(format!("cannot write {}: {e}", path.display())))
}

/// Encode and discretize the configured dataset, writing columnar artifacts
/// plus sidecars. With a published test split both files are processed with
/// state fitted on the training file alone; with a single file the split is
/// taken later, at training time, from the one artifact.
pub fn cmd_preprocess(config: &PipelineConfig) -> Result<()> {
    ensure_output_dir(config)?;
    let spec = resolve_schema(
        &config.dataset.schema,
        Some(config.dataset.label_column.as_str()),
    )?;
    let train_table = load_csv(&config.dataset.path, &spec)?;
    println!(
        "loaded {}: {} rows ({} corrupt dropped)",
        config.dataset.path.display(),
        train_table.row_count,
        train_table.dropped_rows
    );

    let raw_features = train_table.schema.n_features();
    let (encoder, train_encoded) = ordinal_encode(&train_table)?;
    let (state, train_ready) =
        Discretizer::fit_transform(&train_encoded, config.preprocess.variance_threshold)?;

    let expanded = train_encoded.n_features() + state.sources.len();
    let counts = vec![
        ("raw".to_string(), raw_features),
        ("encoded".to_string(), train_encoded.n_features()),
        ("expanded".to_string(), expanded),
        ("filtered".to_string(), train_ready.n_features()),
    ];
    println!(
        "features: {raw_features} raw -> {} encoded -> {expanded} expanded -> {} filtered",
        train_encoded.n_features(),
        train_ready.n_features()
    );

    let sidecar = |dataset: &EncodedDataset, dropped: usize| DatasetSidecar {
        feature_meta: dataset.features.iter().map(|f| f.meta.clone()).collect(),
        class_names: dataset.class_names.clone(),
        row_count: dataset.n_rows,
        dropped_rows: dropped,
        feature_counts: counts.clone(),
        encoder: Some(encoder.clone()),
        discretizer: Some(state.clone()),
    };

    match &config.dataset.test_path {
        Some(test_path) => {
            // the test file must parse under the same concrete schema
            let concrete = SchemaSpec::Fixed(train_table.schema.clone());
            let test_table = load_csv(test_path, &concrete)?;
            let test_encoded = encoder.transform(&test_table)?;
            let test_ready = Discretizer::transform(&state, &test_encoded)?;
            let train_path = config.output_dir.join("train.evc");
            let test_out = config.output_dir.join("test.evc");
            write_dataset(&train_path, &train_ready, &sidecar(&train_ready, train_table.dropped_rows))?;
            write_dataset(&test_out, &test_ready, &sidecar(&test_ready, test_table.dropped_rows))?;
            println!(
                "wrote {} ({} rows) and {} ({} rows)",
                train_path.display(),
                train_ready.n_rows,
                test_out.display(),
                test_ready.n_rows
            );
        }
        None => {
            let path = config.output_dir.join("dataset.evc");
            write_dataset(&path, &train_ready, &sidecar(&train_ready, train_table.dropped_rows))?;
            println!("wrote {} ({} rows)", path.display(), train_ready.n_rows);
        }
    }
    Ok(())
}

/// Load the preprocessed train/test pair: the published pair if present,
/// otherwise a stratified holdout from the single artifact.
fn load_datasets(config: &PipelineConfig) -> Result<(EncodedDataset, EncodedDataset, DatasetSidecar)> {
    let train_path = config.output_dir.join("train.evc");
    let single_path = config.output_dir.join("dataset.evc");
    if train_path.exists() {
        let (train, sidecar) = read_dataset(&train_path)?;
        let (test, _) = read_dataset(config.output_dir.join("test.evc"))?;
        Ok((train, test, sidecar))
    } else if single_path.exists() {
        let (dataset, sidecar) = read_dataset(&single_path)?;
        let (train, test) = stratified_split(
            &dataset,
            config.dataset.test_fraction,
            config.module_seed("split"),
        )?;
        Ok((train, test, sidecar))
    } else {
        Err(Error::data(format!(
            "no preprocessed dataset under {}; run `eventcast preprocess` first",
            config.output_dir.display()
        )))
    }
}

/// Everything `metrics.json` holds for one learner (no wall time: that is
/// measured, not derived, and lives in timings.csv).
#[derive(Debug, Serialize, Deserialize)]
pub struct LearnerOutcome {
    pub learner: String,
    pub report: MetricReport,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrainSummary {
    pub selected: String,
    pub n_features: usize,
    pub learners: Vec<LearnerOutcome>,
}

fn train_one(
    kind: LearnerKind,
    train_ds: &EncodedDataset,
    test_ds: &EncodedDataset,
    params: &LearnerParams,
) -> Result<(LearnerModel, MetricReport)> {
    let started = Instant::now();
    let model = train(kind, train_ds, params)?;
    let wall = started.elapsed().as_secs_f64();
    let predictions = model.predict_dataset(test_ds)?;
    let mut report = metrics(&confusion(&test_ds.labels, &predictions, &test_ds.class_names)?)?;
    report.train_wall_time = wall;
    Ok((model, report))
}

/// The pre-made gbt grid re-iterated during hyper-parameter tuning.
const GRID_DEPTH: [usize; 3] = [4, 6, 8];
const GRID_ETA: [f64; 2] = [0.1, 0.3];
const GRID_ROUNDS: [usize; 2] = [100, 200];

fn run_grid(
    train_ds: &EncodedDataset,
    test_ds: &EncodedDataset,
    base: &LearnerParams,
) -> Result<(LearnerModel, MetricReport, LearnerParams)> {
    let mut best: Option<(LearnerModel, MetricReport, LearnerParams)> = None;
    let mut cell = 0u64;
    for &max_depth in &GRID_DEPTH {
        for &learning_rate in &GRID_ETA {
            for &n_rounds in &GRID_ROUNDS {
                let params = LearnerParams {
                    max_depth,
                    learning_rate,
                    n_rounds,
                    lambda: 1.0,
                    seed: base.seed.wrapping_add(cell),
                    ..base.clone()
                };
                cell += 1;
                let (model, report) = train_one(LearnerKind::Gbt, train_ds, test_ds, &params)?;
                println!(
                    "  grid depth={max_depth} eta={learning_rate} rounds={n_rounds}: f1={:.4} acc={:.4} ({:.1}s)",
                    report.macro_f1, report.accuracy, report.train_wall_time
                );
                let better = match &best {
                    None => true,
                    Some((_, current, _)) => {
                        report.macro_f1 > current.macro_f1
                            || (report.macro_f1 == current.macro_f1
                                && report.train_wall_time < current.train_wall_time)
                    }
                };
                if better {
                    best = Some((model, report, params));
                }
            }
        }
    }
    Ok(best.expect("grid is nonempty"))
}

/// Train the configured learners on the (optionally resampled, optionally
/// feature-reduced) training split, report metrics and timings, and save the
/// best model by macro F1 (ties to the faster learner) as the bundle.
pub fn cmd_train(config: &PipelineConfig) -> Result<()> {
    ensure_output_dir(config)?;
    let (train_raw, test_full, sidecar) = load_datasets(config)?;
    let plan = config.resample_plan()?;
    let train_full = resample(&train_raw, &plan)?;
    if train_full.n_rows != train_raw.n_rows {
        println!(
            "resampled training split: {} -> {} rows",
            train_raw.n_rows, train_full.n_rows
        );
    }

    // chi-squared scores over all features, before any reduction
    let score_table = chi2_scores(&train_full)?;
    write_text(
        &config.output_dir.join("scores.csv"),
        &score_table.to_csv(),
    )?;

    let (train_ds, test_ds) = if config.selection.k > 0 {
        let k = config.selection.k;
        let train_sel = select_k_from(&train_full, &score_table, k)?;
        let names = train_sel.feature_names();
        let indices: Vec<usize> = names
            .iter()
            .map(|n| {
                test_full
                    .feature_index(n)
                    .ok_or_else(|| Error::invariant(format!("test split lacks feature {n:?}")))
            })
            .collect::<Result<Vec<usize>>>()?;
        println!("feature selection: keeping top {k} of {} features", train_full.n_features());
        (train_sel, test_full.select_columns(&indices))
    } else {
        (train_full.clone(), test_full)
    };

    let base_params = config.learner_params();
    let mut outcomes: Vec<LearnerOutcome> = Vec::new();
    let mut models: Vec<LearnerModel> = Vec::new();
    println!("learner        accuracy  macro_p  macro_r  macro_f1  wall_time");
    for kind in config.train_learners()? {
        let params = LearnerParams {
            seed: config.root_rng().derive(&format!("learner/{kind}")).seed(),
            ..base_params.clone()
        };
        let (model, report) = if kind == LearnerKind::Gbt && config.train.grid {
            let (model, report, chosen) = run_grid(&train_ds, &test_ds, &params)?;
            println!(
                "  grid winner: depth={} eta={} rounds={}",
                chosen.max_depth, chosen.learning_rate, chosen.n_rounds
            );
            (model, report)
        } else {
            train_one(kind, &train_ds, &test_ds, &params)?
        };
        println!(
            "{:<14} {:>8.4} {:>8.4} {:>8.4} {:>9.4} {:>9.2}s",
            kind.to_string(),
            report.accuracy,
            report.macro_precision,
            report.macro_recall,
            report.macro_f1,
            report.train_wall_time
        );
        outcomes.push(LearnerOutcome {
            learner: kind.to_string(),
            report,
        });
        models.push(model);
    }

    // best macro F1; ties go to the shorter training time
    let winner = outcomes
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| {
            a.report
                .macro_f1
                .partial_cmp(&b.report.macro_f1)
                .expect("finite f1")
                .then(
                    b.report
                        .train_wall_time
                        .partial_cmp(&a.report.train_wall_time)
                        .expect("finite time"),
                )
        })
        .map(|(i, _)| i)
        .ok_or_else(|| Error::config("train.learners is empty".to_string()))?;
    let selected_kind = outcomes[winner].learner.clone();
    println!("selected: {selected_kind} (macro F1 {:.4})", outcomes[winner].report.macro_f1);

    let space = extract_domains(&train_ds, &train_ds.feature_names())?;
    let bundle = ModelBundle::new(
        models[winner].clone(),
        sidecar.encoder.clone(),
        sidecar.discretizer.clone(),
        Some(space),
        outcomes[winner].report.accuracy,
    );
    bundle.save(config.output_dir.join("model.json"))?;

    let winner_preds = models[winner].predict_dataset(&test_ds)?;
    let cm = confusion(&test_ds.labels, &winner_preds, &test_ds.class_names)?;
    write_text(&config.output_dir.join("confusion.csv"), &cm.to_csv())?;
    write_json(&config.output_dir.join("confusion.json"), &cm)?;
    write_text(
        &config.output_dir.join("metrics.csv"),
        &outcomes[winner].report.to_csv(),
    )?;

    let timings = {
        let mut out = String::from("learner,seconds\n");
        for o in &outcomes {
            out.push_str(&format!("{},{:.3}\n", o.learner, o.report.train_wall_time));
        }
        out
    };
    write_text(&config.output_dir.join("timings.csv"), &timings)?;

    let summary = TrainSummary {
        selected: selected_kind,
        n_features: train_ds.n_features(),
        learners: outcomes,
    };
    write_json(&config.output_dir.join("metrics.json"), &summary)?;
    println!("wrote model.json, metrics.json/csv, confusion.json/csv, scores.csv, timings.csv");
    Ok(())
}

/// Feature-count sweep: k-best over a k range, or recursive elimination.
pub fn cmd_sweep(config: &PipelineConfig) -> Result<()> {
    ensure_output_dir(config)?;
    let (train_raw, test_ds, _) = load_datasets(config)?;
    let plan = config.resample_plan()?;
    let train_ds = resample(&train_raw, &plan)?;
    let params = LearnerParams {
        seed: config.module_seed("sweep"),
        ..config.learner_params()
    };

    match config.selection.method.as_str() {
        "kbest" => {
            let k_max = if config.selection.k_max == 0 {
                train_ds.n_features()
            } else {
                config.selection.k_max.min(train_ds.n_features())
            };
            let k_min = config.selection.k_min.max(1);
            if k_min > k_max {
                return Err(Error::config(format!(
                    "selection.k_min {k_min} exceeds k_max {k_max}"
                )));
            }
            let ks: Vec<usize> = (k_min..=k_max).collect();
            let rows = kbest_sweep(&train_ds, &test_ds, &params, &ks)?;
            print_sweep(&rows);
            let path = config.output_dir.join("sweep_kbest.csv");
            write_text(&path, &sweep_to_csv(&rows))?;
            println!("wrote {}", path.display());
        }
        "rfe" => {
            let (order, rows) = rfe_sweep(&train_ds, &test_ds, &params, config.selection.step)?;
            print_sweep(&rows);
            let path = config.output_dir.join("sweep_rfe.csv");
            write_text(&path, &sweep_to_csv(&rows))?;
            let order_csv = {
                let mut out = String::from("eliminated_rank,feature\n");
                for (i, name) in order.iter().enumerate() {
                    out.push_str(&format!("{},{}\n", i + 1, name));
                }
                out
            };
            let order_path = config.output_dir.join("rfe_order.csv");
            write_text(&order_path, &order_csv)?;
            println!("wrote {} and {}", path.display(), order_path.display());
        }
        other => {
            return Err(Error::config(format!(
                "unknown selection.method {other:?}; expected kbest|rfe"
            )));
        }
    }
    Ok(())
}

fn print_sweep(rows: &[SweepRow]) {
    println!("k   accuracy  precision  recall   f1");
    for row in rows {
        println!(
            "{:<3} {:>8.4} {:>9.4} {:>8.4} {:>8.4}",
            row.k, row.accuracy, row.precision, row.recall, row.f1
        );
    }
}

/// Classify the saved model's event space and emit the attack forecast.
pub fn cmd_forecast(config: &PipelineConfig) -> Result<()> {
    ensure_output_dir(config)?;
    let bundle_path = config.output_dir.join("model.json");
    let bundle = ModelBundle::load(&bundle_path)?;
    let spec = domains_from_bundle(&bundle)?;
    let accuracy = config.events.accuracy.unwrap_or(bundle.accuracy);
    let fc = ForecastConfig {
        enum_limit: config.events.limit,
        n_samples: config.events.n_samples,
        marginal: config.events.marginal.parse::<MarginalMode>()?,
        seed: config.module_seed("forecast"),
    };
    if config.events.full_size {
        println!("event space size (exact): {}", spec.size());
    } else {
        println!("event space size: {}", spec.size_scientific());
    }
    let result = forecast(&bundle.model, &spec, accuracy, &fc)?;
    print_forecast(&result);
    write_json(&config.output_dir.join("forecast.json"), &result)?;
    write_text(&config.output_dir.join("forecast.csv"), &result.to_csv())?;
    println!("wrote forecast.json and forecast.csv");
    Ok(())
}

fn print_forecast(result: &AttackForecast) {
    println!(
        "mode: {:?} over {} events (model accuracy {:.4})",
        result.mode, result.sample_count, result.model_accuracy
    );
    println!("class              fraction   weighted   stderr");
    for share in &result.classes {
        println!(
            "{:<18} {:>8.4} {:>10.4} {:>8.5}",
            share.class, share.event_fraction, share.weighted, share.standard_error
        );
    }
    println!("most likely attack class: {}", result.argmax_class());
}

/// Generate a synthetic labeled flow CSV (see the library docs for the
/// planted-signal construction; Bayes-optimal accuracy is 0.95).
pub fn cmd_synth(
    config: &PipelineConfig,
    rows: usize,
    classes: usize,
    out: Option<PathBuf>,
) -> Result<()> {
    let csv = generate_csv(rows, classes, config.seed)?;
    let path = out.unwrap_or_else(|| PathBuf::from("synthetic.csv"));
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| Error::data(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    write_text(&path, &csv)?;
    println!(
        "wrote {} ({rows} rows, {classes} classes, seed {})",
        path.display(),
        config.seed
    );
    Ok(())
}

/// Summarize whatever artifacts exist in the output directory.
pub fn cmd_report(config: &PipelineConfig) -> Result<()> {
    let dir = &config.output_dir;
    let mut sections: Vec<String> = Vec::new();

    for name in ["train.evc", "dataset.evc"] {
        let sidecar_path = dir.join(format!("{name}.json"));
        if sidecar_path.exists() {
            let sidecar: DatasetSidecar =
                serde_json::from_slice(&std::fs::read(&sidecar_path).map_err(|e| {
                    Error::data(format!("cannot read {}: {e}", sidecar_path.display()))
                })?)
                .map_err(|e| Error::data(format!("{}: {e}", sidecar_path.display())))?;
            let counts: Vec<String> = sidecar
                .feature_counts
                .iter()
                .map(|(stage, n)| format!("{stage} {n}"))
                .collect();
            sections.push(format!(
                "## Preprocessing ({name})\n\n{} rows ({} corrupt dropped); features: {}\n",
                sidecar.row_count,
                sidecar.dropped_rows,
                counts.join(" -> ")
            ));
            break;
        }
    }

    let metrics_path = dir.join("metrics.json");
    if metrics_path.exists() {
        let summary: TrainSummary = serde_json::from_slice(
            &std::fs::read(&metrics_path)
                .map_err(|e| Error::data(format!("cannot read {}: {e}", metrics_path.display())))?,
        )
        .map_err(|e| Error::data(format!("{}: {e}", metrics_path.display())))?;
        let mut table = String::from(
            "| learner | accuracy | macro precision | macro recall | macro F1 |\n|---|---|---|---|---|\n",
        );
        for o in &summary.learners {
            table.push_str(&format!(
                "| {} | {:.4} | {:.4} | {:.4} | {:.4} |\n",
                o.learner,
                o.report.accuracy,
                o.report.macro_precision,
                o.report.macro_recall,
                o.report.macro_f1
            ));
        }
        sections.push(format!(
            "## Model selection\n\nSelected: **{}** over {} features\n\n{table}",
            summary.selected, summary.n_features
        ));
        let timings = dir.join("timings.csv");
        if timings.exists() {
            let text = std::fs::read_to_string(&timings)
                .map_err(|e| Error::data(format!("cannot read {}: {e}", timings.display())))?;
            sections.push(format!("## Training time\n\n```\n{text}```\n"));
        }
    }

    for (file, title) in [
        ("sweep_kbest.csv", "K-best sweep"),
        ("sweep_rfe.csv", "Recursive elimination sweep"),
    ] {
        let path = dir.join(file);
        if path.exists() {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;
            sections.push(format!("## {title}\n\n```\n{text}```\n"));
        }
    }

    let forecast_path = dir.join("forecast.json");
    if forecast_path.exists() {
        let result: AttackForecast = serde_json::from_slice(
            &std::fs::read(&forecast_path)
                .map_err(|e| Error::data(format!("cannot read {}: {e}", forecast_path.display())))?,
        )
        .map_err(|e| Error::data(format!("{}: {e}", forecast_path.display())))?;
        let mut table =
            String::from("| class | fraction | weighted | stderr |\n|---|---|---|---|\n");
        for share in &result.classes {
            table.push_str(&format!(
                "| {} | {:.4} | {:.4} | {:.5} |\n",
                share.class, share.event_fraction, share.weighted, share.standard_error
            ));
        }
        sections.push(format!(
            "## Attack forecast\n\nEvent space {} ({:?} over {} events), most likely class **{}**\n\n{table}",
            result.space_size,
            result.mode,
            result.sample_count,
            result.argmax_class()
        ));
    }

    if sections.is_empty() {
        return Err(Error::data(format!(
            "no artifacts found under {}; run the pipeline first",
            dir.display()
        )));
    }
    let report = format!("# Pipeline report\n\n{}", sections.join("\n"));
    println!("{report}");
    write_text(&dir.join("report.md"), &report)?;
    Ok(())
}
