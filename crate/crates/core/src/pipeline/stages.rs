//! The four per-run stages. Each reads its inputs from and writes its
//! outputs to `cfg.out_dir`, and echoes the resolved configuration there.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;

use crate::anomaly::{correct_outliers, detect_outliers, embed, lof_scores};
use crate::attrib::{explain, select_features, train_svr};
use crate::data::{load_csv, load_csv_with_features, synth_series, CsvSchema, IngestReport, Scaler, SeriesFrame, WindowSet};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, format_table, MetricsReport};
use crate::model::{load_checkpoint, save_checkpoint, PifNet};
use crate::rng::{streams, substream};
use crate::train::{predict, train, EpochLog};

use super::config::{RunConfig, Source};
use super::svg;

pub const RESOLVED_CONFIG: &str = "config.resolved.toml";
pub const INPUT_CSV: &str = "input.csv";
pub const CORRECTED_CSV: &str = "corrected.csv";
pub const ANOMALIES_CSV: &str = "anomalies.csv";
pub const SHAP_CSV: &str = "shap_values.csv";
pub const IMPORTANCE_CSV: &str = "importance.csv";
pub const SELECTED_TXT: &str = "selected_features.txt";
pub const CHECKPOINT: &str = "model.bin";
pub const SCALER_TXT: &str = "scaler.txt";
pub const TRAIN_LOG: &str = "train_log.csv";
pub const PREDICTIONS_CSV: &str = "predictions.csv";
pub const METRICS_CSV: &str = "metrics.csv";
pub const METRICS_TXT: &str = "metrics.txt";

pub(crate) fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Validates `cfg`, creates the run directory and writes the resolved
/// configuration into it.
pub fn prepare_run_dir(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let dir = cfg.out_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write(&dir.join(RESOLVED_CONFIG), cfg.to_toml())?;
    Ok(dir)
}

/// Reads the configured source.
pub fn load_source(cfg: &RunConfig) -> Result<(SeriesFrame, IngestReport)> {
    let d = &cfg.data;
    match d.source {
        Source::Synthetic => {
            let frame = synth_series(&d.synthetic.spec(), d.synthetic.seed);
            let report = IngestReport {
                rows: frame.len(),
                filled: Vec::new(),
            };
            let frame = match &d.feature_cols {
                Some(f) => frame.select_features(f)?,
                None => frame,
            };
            Ok((frame, report))
        }
        Source::Csv => {
            let path = d.path.as_deref().ok_or_else(|| Error::Config("data.path is required".into()))?;
            let mut schema = CsvSchema::new(&d.timestamp_col, &d.load_col);
            schema.features = d.feature_cols.clone();
            match &d.features_path {
                Some(fp) => load_csv_with_features(path, &schema, fp, &d.features_timestamp_col),
                None => load_csv(path, &schema),
            }
        }
    }
}

/// `(training rows, rows used)` for a series of `n` rows.
pub fn split(cfg: &RunConfig, n: usize) -> Result<(usize, usize)> {
    let test = cfg.data.test_rows;
    let train = match cfg.data.train_rows {
        Some(t) => t,
        None => n.checked_sub(test).unwrap_or(0),
    };
    let used = train + test;
    let min_train = cfg.model.lookback + cfg.model.horizon;
    if used > n || train < min_train.max(cfg.lof.k + 1) {
        return Err(Error::InsufficientData(format!(
            "{n} rows cannot hold {train} training rows (at least {}) and {test} test rows",
            min_train.max(cfg.lof.k + 1)
        )));
    }
    Ok((train, used))
}

fn read_corrected(cfg: &RunConfig, dir: &Path) -> Result<SeriesFrame> {
    let path = dir.join(CORRECTED_CSV);
    if !path.exists() {
        return Err(Error::Config(format!("{} not found; run `preprocess` first", path.display())));
    }
    Ok(load_csv(&path, &CsvSchema::new("timestamp", &cfg.data.load_col))?.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessReport {
    pub rows: usize,
    pub train_rows: usize,
    pub filled: Vec<(String, usize)>,
    /// Training-region rows flagged by LOF (empty when correction is off).
    pub flagged: Vec<usize>,
}

/// LOF detection and neighbour-average repair of the training-region load.
///
/// Writes `input.csv` (the ingested series), `corrected.csv`,
/// `anomalies.csv` and `preprocess.txt`. With `data_correction` off the
/// two CSV files are byte-identical.
pub fn run_preprocess(cfg: &RunConfig) -> Result<PreprocessReport> {
    let dir = prepare_run_dir(cfg)?;
    let (frame, ingest) = load_source(cfg)?;
    let (n_train, n_used) = split(cfg, frame.len())?;
    let frame = frame.slice(0, n_used);
    frame.write_csv(&dir.join(INPUT_CSV))?;

    let mut anomalies = String::from("row,timestamp,lof_score,original,corrected\n");
    let (corrected, flagged) = if cfg.ablation.data_correction {
        let train_load = &frame.load[..n_train];
        let (points, dim) = embed(train_load, &frame.timestamps[..n_train], cfg.lof.embed);
        let scores = lof_scores(&points, dim, cfg.lof.k)?;
        let flagged = detect_outliers(&scores, cfg.lof.contamination)?;
        let repaired = correct_outliers(train_load, &flagged)?;
        for &i in &flagged {
            let _ = writeln!(
                anomalies,
                "{i},{},{},{},{}",
                crate::data::format_timestamp(frame.timestamps[i]),
                scores[i],
                train_load[i],
                repaired[i]
            );
        }
        let mut load = repaired;
        load.extend_from_slice(&frame.load[n_train..]);
        (frame.with_load(load)?, flagged)
    } else {
        (frame.clone(), Vec::new())
    };
    corrected.write_csv(&dir.join(CORRECTED_CSV))?;
    write(&dir.join(ANOMALIES_CSV), anomalies)?;

    let mut summary = format!(
        "rows={}\ntrain_rows={n_train}\ntest_rows={}\ndata_correction={}\nk={}\ncontamination={}\nflagged={}\n",
        n_used,
        n_used - n_train,
        cfg.ablation.data_correction,
        cfg.lof.k,
        cfg.lof.contamination,
        flagged.len()
    );
    for (name, n) in &ingest.filled {
        let _ = writeln!(summary, "filled.{name}={n}");
    }
    write(&dir.join("preprocess.txt"), summary)?;
    Ok(PreprocessReport {
        rows: n_used,
        train_rows: n_train,
        filled: ingest.filled,
        flagged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    pub features: Vec<String>,
    /// Mean |φ| per feature, in column order (empty when selection is off).
    pub importance: Vec<f64>,
    pub selected: Vec<String>,
    pub max_efficiency_gap: f64,
    pub support_vectors: usize,
}

/// Sorted sample of `min(want, n)` indices from `0..n`.
fn subsample(n: usize, want: usize, seed: u64, stream: u64) -> Vec<usize> {
    if want >= n {
        return (0..n).collect();
    }
    let mut idx = sample(&mut substream(seed, stream), n, want).into_vec();
    idx.sort_unstable();
    idx
}

/// SVR surrogate of load from covariates, exact Shapley attribution and
/// importance-based selection over the training region.
pub fn run_select_features(cfg: &RunConfig) -> Result<SelectionReport> {
    let dir = prepare_run_dir(cfg)?;
    let frame = read_corrected(cfg, &dir)?;
    let (n_train, _) = split(cfg, frame.len())?;
    let names = frame.feature_names.clone();
    let f = names.len();

    if !cfg.ablation.feature_selection || f == 0 {
        write(&dir.join(SELECTED_TXT), names.iter().map(|n| format!("{n}\n")).collect::<String>())?;
        return Ok(SelectionReport {
            features: names.clone(),
            importance: Vec::new(),
            selected: names,
            max_efficiency_gap: 0.0,
            support_vectors: 0,
        });
    }

    let train = frame.slice(0, n_train);
    let scaler = Scaler::fit(&train.to_matrix(), frame.dims())?;
    let row = |i: usize| -> Vec<f64> { (0..f).map(|j| scaler.apply_value(j + 1, train.features[j][i])).collect() };
    let seed = cfg.shap.seed;

    let fit_rows = subsample(n_train, cfg.svr.max_train_rows, seed, streams::SVR_SUBSAMPLE);
    let x: Vec<f64> = fit_rows.iter().flat_map(|&i| row(i)).collect();
    let y: Vec<f64> = fit_rows.iter().map(|&i| scaler.apply_value(0, train.load[i])).collect();
    let svr = train_svr(&x, f, &y, &cfg.svr.params())?;

    let background: Vec<f64> = subsample(n_train, cfg.shap.background, seed, streams::BACKGROUND)
        .into_iter()
        .flat_map(row)
        .collect();
    let explained = subsample(n_train, cfg.shap.max_samples, seed, streams::SHAP_SAMPLES);
    let samples: Vec<f64> = explained.iter().flat_map(|&i| row(i)).collect();
    let attr = explain(&|v: &[f64]| svr.predict(v), &samples, &background, f)?;

    let mut shap = format!("row,{},output,efficiency_gap\n", names.join(","));
    for (j, &r) in explained.iter().enumerate() {
        let phi = attr.row(j);
        let gap = phi.iter().sum::<f64>() - (attr.outputs[j] - attr.baseline);
        let cells: Vec<String> = phi.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(shap, "{r},{},{},{gap:e}", cells.join(","), attr.outputs[j]);
    }
    write(&dir.join(SHAP_CSV), shap)?;

    let importance = attr.global_importance.clone();
    let mut order: Vec<usize> = (0..f).collect();
    order.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]));
    let mut imp = String::from("feature,importance\n");
    for &j in &order {
        let _ = writeln!(imp, "{},{}", names[j], importance[j]);
    }
    write(&dir.join(IMPORTANCE_CSV), imp)?;
    let labels: Vec<String> = order.iter().map(|&j| names[j].clone()).collect();
    let values: Vec<f64> = order.iter().map(|&j| importance[j]).collect();
    write(&dir.join("importance.svg"), svg::bar_plot("Global feature importance (mean |phi|)", &labels, &values))?;

    let selected = select_features(&importance, &names, cfg.shap.rule())?;
    write(&dir.join(SELECTED_TXT), selected.iter().map(|n| format!("{n}\n")).collect::<String>())?;
    let report = SelectionReport {
        features: names,
        importance,
        selected,
        max_efficiency_gap: attr.efficiency_gap(),
        support_vectors: svr.support_count(),
    };
    write(
        &dir.join("selection.txt"),
        format!(
            "svr_rows={}\nsupport_vectors={}\nbackground={}\nexplained={}\nbaseline={}\nmax_efficiency_gap={:e}\nselected={}\n",
            fit_rows.len(),
            report.support_vectors,
            background.len() / f,
            explained.len(),
            attr.baseline,
            report.max_efficiency_gap,
            report.selected.join(",")
        ),
    )?;
    Ok(report)
}

fn read_selected(cfg: &RunConfig, dir: &Path, frame: &SeriesFrame) -> Result<Vec<String>> {
    let path = dir.join(SELECTED_TXT);
    if !path.exists() {
        if cfg.ablation.feature_selection {
            return Err(Error::Config(format!("{} not found; run `select-features` first", path.display())));
        }
        return Ok(frame.feature_names.clone());
    }
    Ok(read(&path)?.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect())
}

/// Normalised windows over the used rows plus the training and test
/// window indices. Test windows take their look-back from the rows before
/// the test region.
struct Windows {
    set: WindowSet,
    train: Vec<usize>,
    test: Vec<usize>,
}

fn build_windows(frame: &SeriesFrame, scaler: &Scaler, n_train: usize, lookback: usize, horizon: usize) -> Result<Windows> {
    let set = WindowSet::from_matrix(&scaler.apply(&frame.to_matrix()), frame.dims(), lookback, horizon)?;
    let train: Vec<usize> = (0..set.len()).filter(|&i| i + lookback + horizon <= n_train).collect();
    let test: Vec<usize> = (0..set.len()).filter(|&i| i + lookback >= n_train).collect();
    if train.is_empty() || test.is_empty() {
        return Err(Error::InsufficientData("no training or test windows".into()));
    }
    Ok(Windows { set, train, test })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub log: Vec<EpochLog>,
    pub checkpoint: PathBuf,
    pub features: Vec<String>,
}

/// Adam training on the training-region windows. Writes the checkpoint,
/// its manifest, the scaler and the per-epoch log. On divergence the
/// last finite parameters are saved before the error is returned.
pub fn run_train(cfg: &RunConfig) -> Result<TrainReport> {
    let dir = prepare_run_dir(cfg)?;
    let frame = read_corrected(cfg, &dir)?;
    let (n_train, _) = split(cfg, frame.len())?;
    let features = read_selected(cfg, &dir, &frame)?;
    let frame = frame.select_features(&features)?;
    let scaler = Scaler::fit(&frame.slice(0, n_train).to_matrix(), frame.dims())?;
    scaler.save(&dir.join(SCALER_TXT))?;
    let w = build_windows(&frame, &scaler, n_train, cfg.model.lookback, cfg.model.horizon)?;

    let mut net = PifNet::new(cfg.model_config(frame.dims()), cfg.train.seed)?;
    let outcome = train(&mut net, &w.set, &w.train, &cfg.loss_kind(), &cfg.train_config());
    let (log, err) = match outcome {
        Ok(log) => (log, None),
        Err(d) => (d.log, Some(d.error)),
    };
    let mut csv = format!("{}\n", EpochLog::CSV_HEADER);
    for e in &log {
        let _ = writeln!(csv, "{}", e.csv_row());
    }
    write(&dir.join(TRAIN_LOG), csv)?;
    let checkpoint = dir.join(CHECKPOINT);
    save_checkpoint(&checkpoint, &net, &frame.load_name, &features)?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(TrainReport {
        log,
        checkpoint,
        features,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub model: MetricsReport,
    pub persistence: MetricsReport,
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
}

/// One-step-ahead forecasts over the test region in original units.
pub fn run_evaluate(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<EvalReport> {
    let dir = prepare_run_dir(cfg)?;
    let ckpt = checkpoint.map(Path::to_path_buf).unwrap_or_else(|| dir.join(CHECKPOINT));
    let (net, manifest) = load_checkpoint(&ckpt)?;
    let frame = read_corrected(cfg, &dir)?;
    let (n_train, _) = split(cfg, frame.len())?;
    let frame = frame.select_features(&manifest.features)?;
    let expected = cfg.model_config(frame.dims());
    if manifest.config != expected {
        return Err(Error::Contract(format!(
            "checkpoint was trained with {:?}, configuration asks for {:?}",
            manifest.config, expected
        ))
        .in_file(&ckpt));
    }
    let scaler = Scaler::load(&dir.join(SCALER_TXT))?;
    if scaler.dims() != frame.dims() {
        return Err(Error::Contract("scaler and checkpoint disagree on the channel count".into()));
    }
    let horizon = expected.horizon;
    let w = build_windows(&frame, &scaler, n_train, expected.lookback, horizon)?;
    let scaled = predict(&net, &w.set, &w.test)?;

    let mut actual = Vec::with_capacity(scaled.len());
    let mut predicted = Vec::with_capacity(scaled.len());
    let mut naive = Vec::with_capacity(scaled.len());
    let mut csv = String::from("row,timestamp,step,actual,predicted,persistence\n");
    for (k, &i) in w.test.iter().enumerate() {
        let first = w.set.target_row(i);
        for step in 0..horizon {
            let r = first + step;
            let a = frame.load[r];
            let p = scaler.invert_value(0, scaled[k * horizon + step]);
            let q = frame.load[first - 1];
            let _ = writeln!(
                csv,
                "{r},{},{},{a},{p},{q}",
                crate::data::format_timestamp(frame.timestamps[r]),
                step + 1
            );
            actual.push(a);
            predicted.push(p);
            naive.push(q);
        }
    }
    write(&dir.join(PREDICTIONS_CSV), csv)?;
    let model = evaluate(&actual, &predicted)?;
    let persistence = evaluate(&actual, &naive)?;
    write(
        &dir.join(METRICS_CSV),
        format!(
            "model,{}\npifnet,{}\npersistence,{}\n",
            MetricsReport::csv_header(),
            model.csv_row(),
            persistence.csv_row()
        ),
    )?;
    write(
        &dir.join(METRICS_TXT),
        format_table(&[("pifnet".into(), model.clone()), ("persistence".into(), persistence.clone())]),
    )?;
    write(
        &dir.join("forecast.svg"),
        svg::line_plot(
            "Test region: actual vs predicted",
            &[("actual", &actual, "black"), ("PIF-Net", &predicted, "#d62728"), ("persistence", &naive, "#999999")],
        ),
    )?;
    Ok(EvalReport {
        model,
        persistence,
        actual,
        predicted,
    })
}

/// Preprocess, select, train and evaluate in one directory.
pub fn run_all(cfg: &RunConfig) -> Result<EvalReport> {
    run_preprocess(cfg)?;
    run_select_features(cfg)?;
    run_train(cfg)?;
    run_evaluate(cfg, None)
}
