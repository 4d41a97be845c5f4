//! The commands behind the binary, each a thin shell over the library: read
//! inputs, run one pipeline stage, write its artifacts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use ecgonn::augment::rebalance;
use ecgonn::beats::{segment_beats, AamiClass, SegmentParams, EXCLUDED_RECORDS};
use ecgonn::dataset::{self, Normalization, PreprocessConfig, TrainedModel, EVAL_SET, TRAIN_SET};
use ecgonn::dsp::{cwt, read_packed, PackedBeat, PackedBeatInfo};
use ecgonn::eval::{percent, ConfusionMatrix3, Metrics};
use ecgonn::selfonn::checkpoint::CheckpointMeta;
use ecgonn::wfdb::{
    adu_to_physical, parse_annotations, read_record, read_records_list, AnnotationEvent,
};
use ecgonn::{
    normalize_record, train_model_observed, Model, ModelInput, NoiseBank, WaveletSpec,
};

use crate::config::{resolve_data_dir, RunConfig, SplitChoice};
use crate::{csvio, usage, CliError, CmdResult};
use crate::{
    AugmentArgs, EvaluateArgs, IngestArgs, PredictArgs, PreprocessArgs, ReportArgs, SynthArgs,
    TrainArgs,
};

/// Refuse to write into an occupied directory unless --force was given.
fn guard_dir(path: &Path, force: bool) -> CmdResult {
    if force || !path.exists() {
        return Ok(());
    }
    if !path.is_dir() {
        return Err(usage(format!(
            "{} exists and is not a directory",
            path.display()
        )));
    }
    let occupied = fs::read_dir(path)
        .map_err(|e| usage(format!("cannot inspect {}: {e}", path.display())))?
        .next()
        .is_some();
    if occupied {
        return Err(usage(format!(
            "output directory {} is not empty (pass --force to overwrite)",
            path.display()
        )));
    }
    Ok(())
}

/// Refuse to replace an existing file unless --force was given.
fn guard_file(path: &Path, force: bool) -> CmdResult {
    if !force && path.exists() {
        return Err(usage(format!(
            "{} already exists (pass --force to overwrite)",
            path.display()
        )));
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, text)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn synth(args: SynthArgs) -> CmdResult {
    let config = RunConfig::load(args.config.config.as_deref(), args.config.seed)?;
    config.echo()?;
    guard_dir(&args.out, args.force)?;
    let manifest = ecgonn::write_synth_dataset(&args.out, &config.synth)?;
    println!(
        "wrote {} records to {} (annotated beats: N {}, S {}, V {})",
        config.synth.records,
        args.out.display(),
        manifest.beat_counts[0],
        manifest.beat_counts[1],
        manifest.beat_counts[2],
    );
    Ok(())
}

/// Names to ingest: the directory's record list if it has one, otherwise
/// every header file on disk, minus the paced and unusable records.
fn record_names(dir: &Path) -> Result<Vec<String>, CliError> {
    let mut names = match read_records_list(dir) {
        Ok(list) => list,
        Err(_) => {
            let entries = fs::read_dir(dir)
                .map_err(|e| usage(format!("cannot read {}: {e}", dir.display())))?;
            let mut found = Vec::new();
            for entry in entries {
                let path = entry?.path();
                if path.extension().is_some_and(|e| e == "hea") {
                    if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                        found.push(stem.to_string());
                    }
                }
            }
            found.sort();
            found
        }
    };
    names.retain(|n| !EXCLUDED_RECORDS.contains(&n.as_str()));
    Ok(names)
}

pub fn ingest(args: IngestArgs) -> CmdResult {
    let config = RunConfig::load(args.config.config.as_deref(), args.config.seed)?;
    let data_dir = resolve_data_dir(args.data_dir, config.data_dir.as_deref())?;
    let names = record_names(&data_dir)?;
    if names.is_empty() {
        return Err(usage(format!("no records found in {}", data_dir.display())));
    }
    let manifest = dataset::ingest(&data_dir, &names)?;
    match &args.out {
        Some(path) => {
            guard_file(path, args.force)?;
            write_json(path, &manifest)?;
            eprintln!("wrote manifest to {}", path.display());
        }
        None => {
            let mut json = serde_json::to_string_pretty(&manifest)?;
            json.push('\n');
            print!("{json}");
        }
    }
    eprintln!(
        "{} records, usable beats: N {}, S {}, V {}",
        manifest.records.len(),
        manifest.totals[0],
        manifest.totals[1],
        manifest.totals[2],
    );
    Ok(())
}

pub fn preprocess(args: PreprocessArgs) -> CmdResult {
    let mut config = RunConfig::load(args.config.config.as_deref(), args.config.seed)?;
    if args.synthetic {
        config.split = SplitChoice::Synthetic;
    }
    config.echo()?;
    let data_dir = resolve_data_dir(args.data_dir, config.data_dir.as_deref())?;
    let plan = config.plan(&data_dir)?;
    guard_dir(&args.out, args.force)?;
    let stage = PreprocessConfig {
        segment: config.segment,
        augment: config.augment.clone(),
    };
    let manifest = dataset::preprocess(&data_dir, &plan, &stage, &args.out)?;
    let added: usize = manifest.train.augmented.iter().sum();
    println!(
        "train: {} beats (N {}, S {}, V {}; {} augmented copies), eval: {} beats (N {}, S {}, V {})",
        manifest.train.beats,
        manifest.train.counts[0],
        manifest.train.counts[1],
        manifest.train.counts[2],
        added,
        manifest.eval.beats,
        manifest.eval.counts[0],
        manifest.eval.counts[1],
        manifest.eval.counts[2],
    );
    eprintln!("dataset written to {}", args.out.display());
    Ok(())
}

/// Duration of the synthesized noise bank backing the mixes, matching what
/// the preprocess stage uses.
const NOISE_BANK_SECONDS: f64 = 60.0;

pub fn augment(args: AugmentArgs) -> CmdResult {
    let mut config = RunConfig::load(args.config.config.as_deref(), args.config.seed)?;
    if args.synthetic {
        config.split = SplitChoice::Synthetic;
    }
    config.echo()?;
    let augment = config
        .augment
        .clone()
        .ok_or_else(|| usage("augmentation is disabled in this config (augment is null)"))?;
    let data_dir = resolve_data_dir(args.data_dir, config.data_dir.as_deref())?;
    let plan = config.plan(&data_dir)?;

    let mut fs_seen: Option<f64> = None;
    let mut sources = Vec::with_capacity(plan.train.len());
    for name in &plan.train {
        let record = dataset::load_record(&data_dir, name, config.segment)?;
        match fs_seen {
            None => fs_seen = Some(record.fs),
            Some(expect) if record.fs != expect => {
                return Err(CliError::Runtime(anyhow::anyhow!(
                    "record {name} samples at {} Hz, the split runs at {expect} Hz",
                    record.fs
                )));
            }
            Some(_) => {}
        }
        sources.push(record.beats);
    }
    let fs = fs_seen.expect("validated splits have at least one training record");
    let segment = config.segment.unwrap_or_else(|| SegmentParams::for_fs(fs));
    let bank = NoiseBank::synthetic((NOISE_BANK_SECONDS * fs) as usize, fs, augment.seed);
    let (_, stats) = rebalance(&sources, &segment, fs, &bank, &augment)?;

    match &args.out {
        Some(path) => {
            guard_file(path, args.force)?;
            write_json(path, &stats)?;
            eprintln!("wrote report to {}", path.display());
        }
        None => {
            let mut json = serde_json::to_string_pretty(&stats)?;
            json.push('\n');
            print!("{json}");
        }
    }
    eprintln!(
        "would add {} beats (S {}, V {}) from {} noisy windows in {} passes",
        stats.added.iter().sum::<usize>(),
        stats.added[1],
        stats.added[2],
        stats.windows,
        stats.passes,
    );
    Ok(())
}

pub fn train(args: TrainArgs) -> CmdResult {
    let config = RunConfig::load(args.config.config.as_deref(), args.config.seed)?;
    config.echo()?;

    if args.dry_run {
        let model = Model::init(&config.model, config.train.seed)?;
        println!("trainable parameters: {}", model.param_count());
        return Ok(());
    }

    let data_dir = args
        .data_dir
        .ok_or_else(|| usage("train needs --data-dir, a preprocessed dataset directory"))?;
    let out = args
        .out
        .ok_or_else(|| usage("train needs --out, a run directory to create"))?;
    guard_dir(&out, args.force)?;

    let manifest = dataset::read_manifest(&data_dir)?;
    if args.cv && manifest.train.records.len() < CV_FOLDS {
        return Err(usage(format!(
            "{CV_FOLDS}-fold cross-validation needs at least {CV_FOLDS} training records, found {}",
            manifest.train.records.len()
        )));
    }
    let (_, beats) = read_packed(&data_dir.join(TRAIN_SET))?;
    write_json(&out.join("config.json"), &config)?;

    if args.cv {
        cross_validate(&config, &manifest.train.records, &beats, &out)
    } else {
        train_full(&config, &manifest.norm, &beats, &out)
    }
}

fn train_full(
    config: &RunConfig,
    norm: &Normalization,
    beats: &[PackedBeat],
    out: &Path,
) -> CmdResult {
    let epochs = config.train.epochs;
    let (model, history) =
        dataset::train_from_packed(beats, norm, &config.model, &config.train, |stats| {
            eprintln!(
                "epoch {}/{}: lr {:.6}, mean loss {:.6}, {} beats",
                stats.epoch + 1,
                epochs,
                stats.lr,
                stats.mean_loss,
                stats.seen,
            );
        })?;

    let mut rows = String::from("epoch,lr,train_loss,seen\n");
    for stats in &history {
        writeln!(
            rows,
            "{},{},{},{}",
            stats.epoch, stats.lr, stats.mean_loss, stats.seen
        )
        .expect("writing to a string cannot fail");
    }
    write_text(&out.join("metrics.csv"), &rows)?;

    let mut metrics = BTreeMap::new();
    if let Some(last) = history.last() {
        metrics.insert("train_loss".to_string(), last.mean_loss);
    }
    let meta = CheckpointMeta {
        seed: config.train.seed,
        epoch: epochs.saturating_sub(1),
        config: config.model.clone(),
        metrics,
    };
    let checkpoint = out.join("model.json");
    TrainedModel {
        model,
        norm: norm.clone(),
    }
    .save(&checkpoint, &meta)?;
    println!(
        "trained {} epochs on {} beats, checkpoint at {}",
        epochs,
        beats.len(),
        checkpoint.display(),
    );
    Ok(())
}

/// Validation pass: mean cross-entropy and macro-F1 of argmax calls.
fn validate_pass(
    model: &Model,
    inputs: &[ModelInput],
    labels: &[usize],
) -> Result<(f64, Option<f64>), CliError> {
    let mut matrix = ConfusionMatrix3::new();
    let mut loss = 0.0;
    for (input, &label) in inputs.iter().zip(labels) {
        let (predicted, scores) = model.predict(input)?;
        loss -= scores[label].max(1e-300).ln();
        let truth = AamiClass::from_index(label)
            .ok_or_else(|| CliError::Runtime(anyhow::anyhow!("label {label} out of range")))?;
        let called = AamiClass::from_index(predicted)
            .ok_or_else(|| CliError::Runtime(anyhow::anyhow!("class {predicted} out of range")))?;
        matrix.add(truth, called);
    }
    let mean_loss = loss / inputs.len() as f64;
    let macro_f1 = Metrics::from_matrix(&matrix)
        .ok()
        .and_then(|m| m.macro_f1());
    Ok((mean_loss, macro_f1))
}

#[derive(Serialize)]
struct FoldSummary {
    fold: usize,
    records: Vec<String>,
    best_epoch: usize,
    val_loss: f64,
    val_macro_f1: Option<f64>,
}

const CV_FOLDS: usize = 5;

/// Patient-wise cross-validation inside the training split. Each fold holds
/// out a group of records, refits the input statistics on the rest, and keeps
/// the epoch with the best validation macro-F1.
fn cross_validate(
    config: &RunConfig,
    records: &[String],
    beats: &[PackedBeat],
    out: &Path,
) -> CmdResult {
    let folds = dataset::plan_patient_folds(records, CV_FOLDS, config.train.seed)?;
    write_json(&out.join("fold_plan.json"), &serde_json::json!({ "folds": folds }))?;

    let mut summaries = Vec::with_capacity(folds.len());
    for (k, holdout) in folds.iter().enumerate() {
        let held: BTreeSet<&str> = holdout.iter().map(String::as_str).collect();
        // Noisy copies carry their source record's name, so they fall on the
        // same side of the fold as the beats they were cut from.
        let fit: Vec<PackedBeat> = beats
            .iter()
            .filter(|b| !held.contains(b.info.record.as_str()))
            .cloned()
            .collect();
        let val: Vec<PackedBeat> = beats
            .iter()
            .filter(|b| held.contains(b.info.record.as_str()) && !b.info.augmented)
            .cloned()
            .collect();
        if fit.is_empty() || val.is_empty() {
            return Err(CliError::Runtime(anyhow::anyhow!(
                "fold {k} leaves an empty training or validation side"
            )));
        }

        let norm = Normalization::fit(&fit)?;
        let (inputs, labels) = dataset::assemble(&fit, &norm);
        let (val_inputs, val_labels) = dataset::assemble(&val, &norm);

        let fold_seed = config.train.seed.wrapping_add(k as u64);
        let mut fold_train = config.train.clone();
        fold_train.seed = fold_seed;
        let mut model = Model::init(&config.model, fold_seed)?;

        let epochs = fold_train.epochs;
        let mut rows = String::from("epoch,lr,train_loss,val_loss,val_macro_f1\n");
        let mut best: Option<(usize, f64, Option<f64>, Model)> = None;
        let mut val_error: Option<CliError> = None;
        train_model_observed(&mut model, &inputs, &labels, &fold_train, |model, stats| {
            if val_error.is_some() {
                return;
            }
            match validate_pass(model, &val_inputs, &val_labels) {
                Ok((val_loss, val_f1)) => {
                    writeln!(
                        rows,
                        "{},{},{},{},{}",
                        stats.epoch,
                        stats.lr,
                        stats.mean_loss,
                        val_loss,
                        val_f1.map_or_else(|| "-".to_string(), |f| f.to_string()),
                    )
                    .expect("writing to a string cannot fail");
                    eprintln!(
                        "fold {k} epoch {}/{}: train loss {:.6}, val loss {:.6}, val macro-F1 {}",
                        stats.epoch + 1,
                        epochs,
                        stats.mean_loss,
                        val_loss,
                        percent(val_f1),
                    );
                    let score = val_f1.unwrap_or(f64::NEG_INFINITY);
                    let incumbent = best
                        .as_ref()
                        .map_or(f64::NEG_INFINITY, |(_, _, f1, _)| {
                            f1.unwrap_or(f64::NEG_INFINITY)
                        });
                    if best.is_none() || score > incumbent {
                        best = Some((stats.epoch, val_loss, val_f1, model.clone()));
                    }
                }
                Err(e) => val_error = Some(e),
            }
        })?;
        if let Some(e) = val_error {
            return Err(e);
        }
        let (best_epoch, val_loss, val_f1, best_model) =
            best.expect("at least one epoch ran");

        write_text(&out.join(format!("cv/fold{k}.csv")), &rows)?;
        let mut metrics = BTreeMap::new();
        metrics.insert("val_loss".to_string(), val_loss);
        if let Some(f1) = val_f1 {
            metrics.insert("val_macro_f1".to_string(), f1);
        }
        let meta = CheckpointMeta {
            seed: fold_seed,
            epoch: best_epoch,
            config: config.model.clone(),
            metrics,
        };
        TrainedModel {
            model: best_model,
            norm,
        }
        .save(&out.join(format!("cv/fold{k}.json")), &meta)?;

        summaries.push(FoldSummary {
            fold: k,
            records: holdout.clone(),
            best_epoch,
            val_loss,
            val_macro_f1: val_f1,
        });
    }

    let mean_f1 = summaries
        .iter()
        .map(|s| s.val_macro_f1)
        .collect::<Option<Vec<f64>>>()
        .map(|v| v.iter().sum::<f64>() / v.len() as f64);
    write_json(
        &out.join("cv_summary.json"),
        &serde_json::json!({ "folds": summaries, "mean_val_macro_f1": mean_f1 }),
    )?;
    println!(
        "cross-validation over {} folds: mean best val macro-F1 {}",
        summaries.len(),
        percent(mean_f1),
    );
    Ok(())
}

fn print_metrics(matrix: &ConfusionMatrix3, metrics: &Metrics) {
    print!("{matrix}");
    println!();
    print!("{}", csvio::metrics_table(metrics));
}

pub fn evaluate(args: EvaluateArgs) -> CmdResult {
    match (args.confusion, args.checkpoint) {
        (Some(csv), None) => evaluate_confusion(&csv, args.out.as_deref(), args.force),
        (None, Some(checkpoint)) => {
            let data_dir = args.data_dir.ok_or_else(|| {
                usage("evaluate --checkpoint needs --data-dir, a preprocessed dataset directory")
            })?;
            evaluate_checkpoint(&checkpoint, &data_dir, args.out.as_deref(), args.force)
        }
        (None, None) => Err(usage(
            "evaluate needs either --confusion FILE or --checkpoint FILE with --data-dir",
        )),
        (Some(_), Some(_)) => Err(usage("--confusion and --checkpoint are mutually exclusive")),
    }
}

fn evaluate_confusion(path: &Path, out: Option<&Path>, force: bool) -> CmdResult {
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read confusion CSV {}: {e}", path.display())))?;
    let matrix = csvio::confusion_from_csv(&text)?;
    let metrics = Metrics::from_matrix(&matrix)
        .map_err(|e| usage(format!("confusion CSV {}: {e}", path.display())))?;
    print_metrics(&matrix, &metrics);
    if let Some(out) = out {
        let path = out.join("metrics.json");
        guard_file(&path, force)?;
        write_json(
            &path,
            &serde_json::json!({ "metrics": metrics, "macro_f1": metrics.macro_f1() }),
        )?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn evaluate_checkpoint(
    checkpoint: &Path,
    data_dir: &Path,
    out: Option<&Path>,
    force: bool,
) -> CmdResult {
    let (_, trained) = TrainedModel::load(checkpoint)?;
    let (_, beats) = read_packed(&data_dir.join(EVAL_SET))?;
    let evaluation = dataset::evaluate_packed(&trained, &beats)?;

    print_metrics(&evaluation.metrics.matrix, &evaluation.metrics);
    if let Some(roc) = &evaluation.roc_s {
        println!("auc S versus rest: {:.4}", roc.auc);
    }
    if let Some(roc) = &evaluation.roc_v {
        println!("auc V versus rest: {:.4}", roc.auc);
    }

    if let Some(out) = out {
        guard_dir(out, force)?;
        write_json(
            &out.join("metrics.json"),
            &serde_json::json!({
                "metrics": evaluation.metrics,
                "macro_f1": evaluation.metrics.macro_f1(),
                "auc_s": evaluation.roc_s.as_ref().map(|r| r.auc),
                "auc_v": evaluation.roc_v.as_ref().map(|r| r.auc),
            }),
        )?;
        write_text(
            &out.join("confusion.csv"),
            &csvio::confusion_to_csv(&evaluation.metrics.matrix),
        )?;
        if let Some(roc) = &evaluation.roc_s {
            write_text(&out.join("roc_s.csv"), &csvio::roc_to_csv(roc))?;
        }
        if let Some(roc) = &evaluation.roc_v {
            write_text(&out.join("roc_v.csv"), &csvio::roc_to_csv(roc))?;
        }
        eprintln!("wrote evaluation to {}", out.display());
    }
    Ok(())
}

pub fn predict(args: PredictArgs) -> CmdResult {
    let (meta, trained) = TrainedModel::load(&args.checkpoint)?;
    let data_dir = resolve_data_dir(args.data_dir, None)?;

    let raw = read_record(&data_dir, &args.record)?;
    let spec = raw.header.signals.first().ok_or_else(|| {
        CliError::Runtime(anyhow::anyhow!("record {} declares no signals", args.record))
    })?;
    let channel = raw.channels.first().ok_or_else(|| {
        CliError::Runtime(anyhow::anyhow!("record {} holds no samples", args.record))
    })?;
    let physical: Vec<f64> = channel
        .iter()
        .map(|&v| adu_to_physical(v, spec.gain, spec.baseline))
        .collect();
    let normalized = normalize_record(&physical)?;
    let fs = raw.header.fs;

    let events: Vec<AnnotationEvent> = match &args.peaks {
        Some(path) => csvio::peaks_from_csv(path)?
            .into_iter()
            .map(|sample| {
                AnnotationEvent::at(sample as u64, 'N').expect("'N' is always encodable")
            })
            .collect(),
        None => {
            let atr = data_dir.join(format!("{}.atr", args.record));
            match fs::read(&atr) {
                Ok(bytes) => parse_annotations(&bytes)?,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                    return Err(usage(format!(
                        "record {} has no annotation file at {}; pass --peaks FILE with one \
                         R-peak sample index per line to locate the beats",
                        args.record,
                        atr.display()
                    )));
                }
                Err(e) => {
                    return Err(CliError::Runtime(anyhow::anyhow!(
                        "cannot read {}: {e}",
                        atr.display()
                    )));
                }
            }
        }
    };

    let params = SegmentParams {
        pre: (0.25 * fs).round() as usize,
        len: meta.config.input_len,
    };
    let (beats, drops) = segment_beats(&args.record, &normalized.samples, &events, fs, params)?;
    if beats.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "no beats survived segmentation (of {} events: {} at a window boundary, {} missing a \
             neighbor, {} with non-beat symbols)",
            events.len(),
            drops.boundary,
            drops.edge,
            drops.excluded_class
        )));
    }

    let wavelet = WaveletSpec::default_for_fs(fs)?;
    let mut csv = String::from("sample,predicted,p_n,p_s,p_v\n");
    for beat in &beats {
        let scalogram = cwt(&beat.window, &wavelet)?;
        let packed = PackedBeat {
            info: PackedBeatInfo {
                record: beat.record.clone(),
                r_sample: beat.r_sample,
                symbol: beat.symbol,
                class: beat.class,
                augmented: beat.augmented,
            },
            scalogram: scalogram.data,
            temporal: beat.temporal.to_array(),
        };
        let (class, scores) = trained.predict_beat(&packed)?;
        writeln!(
            csv,
            "{},{},{},{},{}",
            beat.r_sample,
            class.letter(),
            scores[0],
            scores[1],
            scores[2]
        )
        .expect("writing to a string cannot fail");
    }

    match &args.out {
        Some(path) => {
            guard_file(path, args.force)?;
            write_text(path, &csv)?;
            eprintln!("wrote {} predictions to {}", beats.len(), path.display());
        }
        None => print!("{csv}"),
    }
    if drops.total() > 0 {
        eprintln!(
            "skipped {} events ({} at a window boundary, {} missing a neighbor, {} with \
             non-beat symbols)",
            drops.total(),
            drops.boundary,
            drops.edge,
            drops.excluded_class
        );
    }
    Ok(())
}

pub fn report(args: ReportArgs) -> CmdResult {
    let run = &args.run;
    if !run.is_dir() {
        return Err(usage(format!("{} is not a run directory", run.display())));
    }
    let mut sections = 0usize;

    let read_value = |name: &str| -> Option<serde_json::Value> {
        let text = fs::read_to_string(run.join(name)).ok()?;
        serde_json::from_str(&text).ok()
    };

    if let Some(config) = read_value("config.json") {
        println!("run {}", run.display());
        let train = &config["train"];
        println!(
            "  config: {} epochs, batch {}, lr {}, seed {}",
            train["epochs"], train["batch_size"], train["base_lr"], train["seed"]
        );
        sections += 1;
    }

    if let Ok(text) = fs::read_to_string(run.join("metrics.csv")) {
        let rows: Vec<&str> = text.lines().skip(1).filter(|l| !l.is_empty()).collect();
        if let Some(last) = rows.last() {
            let fields: Vec<&str> = last.split(',').collect();
            if fields.len() >= 3 {
                println!(
                    "  training: {} epochs logged, final mean loss {}",
                    rows.len(),
                    fields[2]
                );
                sections += 1;
            }
        }
    }

    if let Some(model) = read_value("model.json") {
        let metrics = model["metrics"]
            .as_object()
            .map(|m| {
                m.iter()
                    .map(|(k, v)| format!("{k} {v}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            })
            .unwrap_or_default();
        println!("  checkpoint: epoch {}, {}", model["epoch"], metrics);
        sections += 1;
    }

    if let Some(cv) = read_value("cv_summary.json") {
        println!("  cross-validation:");
        if let Some(folds) = cv["folds"].as_array() {
            for fold in folds {
                println!(
                    "    fold {}: best epoch {}, val loss {}, val macro-F1 {}",
                    fold["fold"], fold["best_epoch"], fold["val_loss"], fold["val_macro_f1"]
                );
            }
        }
        println!("    mean val macro-F1: {}", cv["mean_val_macro_f1"]);
        sections += 1;
    }

    for name in ["metrics.json", "eval/metrics.json"] {
        if let Some(eval) = read_value(name) {
            println!(
                "  evaluation: accuracy {}, macro-F1 {}, auc S {}, auc V {}",
                eval["metrics"]["accuracy"], eval["macro_f1"], eval["auc_s"], eval["auc_v"]
            );
            sections += 1;
            break;
        }
    }

    if sections == 0 {
        return Err(usage(format!(
            "{} holds no run artifacts (expected config.json, metrics.csv, model.json, \
             cv_summary.json, or metrics.json)",
            run.display()
        )));
    }
    Ok(())
}
