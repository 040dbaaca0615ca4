use std::fs;
use std::path::Path;

use pifnet_core::anomaly::{detect_outliers, embed, lof_scores, Embedding};
use pifnet_core::data::{synth_series_with_spikes, SynthSpec};
use pifnet_core::pipeline::{self, RunConfig, Source, Variant};

fn small(dir: &Path) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.out_dir = dir.to_path_buf();
    cfg.data.source = Source::Synthetic;
    cfg.data.synthetic.n = 600;
    cfg.svr.max_train_rows = 300;
    cfg.shap.max_samples = 64;
    cfg.model.hidden = 8;
    cfg.train.max_epoch = 2;
    cfg
}

#[test]
fn lof_recovers_injected_spikes() {
    let spec = SynthSpec::default();
    let (frame, spikes) = synth_series_with_spikes(&spec, 0);
    let (pts, dim) = embed(&frame.load, &frame.timestamps, Embedding::Value);
    let scores = lof_scores(&pts, dim, 10).unwrap();
    let flagged = detect_outliers(&scores, spikes.len() as f64 / frame.len() as f64).unwrap();
    let hits = spikes.iter().filter(|s| flagged.contains(s)).count();
    assert_eq!(flagged.len(), 10);
    assert!(hits >= 8, "only {hits} of 10 spikes flagged");
}

#[test]
fn disabled_correction_leaves_data_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.ablation.data_correction = false;
    let r = pipeline::run_preprocess(&cfg).unwrap();
    assert!(r.flagged.is_empty());
    let a = fs::read(dir.path().join(pipeline::INPUT_CSV)).unwrap();
    let b = fs::read(dir.path().join(pipeline::CORRECTED_CSV)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn correction_touches_only_the_training_region() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path());
    let r = pipeline::run_preprocess(&cfg).unwrap();
    assert_eq!(r.flagged.len(), 25); // ceil(0.05 * 500)
    assert!(r.flagged.iter().all(|&i| i < 500));
    let input = fs::read_to_string(dir.path().join(pipeline::INPUT_CSV)).unwrap();
    let corrected = fs::read_to_string(dir.path().join(pipeline::CORRECTED_CSV)).unwrap();
    let tail = |s: &str| s.lines().skip(501).map(str::to_string).collect::<Vec<_>>();
    assert_eq!(tail(&input), tail(&corrected));
    let anomalies = fs::read_to_string(dir.path().join(pipeline::ANOMALIES_CSV)).unwrap();
    assert_eq!(anomalies.lines().count(), 26);
}

#[test]
fn pure_noise_covariate_is_ranked_last_and_dropped() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.data.synthetic.n = 2000;
    pipeline::run_preprocess(&cfg).unwrap();
    let r = pipeline::run_select_features(&cfg).unwrap();
    assert_eq!(r.features, ["temperature", "dew_point", "noise"]);
    let noise = r.importance[2];
    assert!(r.importance[..2].iter().all(|&v| v > noise));
    assert!(!r.selected.contains(&"noise".to_string()));
    assert!(r.max_efficiency_gap < 1e-9);
    let ranked = fs::read_to_string(dir.path().join(pipeline::IMPORTANCE_CSV)).unwrap();
    assert!(ranked.trim_end().ends_with(&format!("noise,{noise}")));
}

#[test]
fn disabled_selection_passes_every_feature() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.ablation.feature_selection = false;
    pipeline::run_preprocess(&cfg).unwrap();
    let r = pipeline::run_select_features(&cfg).unwrap();
    assert_eq!(r.selected, ["temperature", "dew_point", "noise"]);
    assert!(!dir.path().join(pipeline::SHAP_CSV).exists());
}

#[test]
fn end_to_end_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path());
    let r = pipeline::run_all(&cfg).unwrap();
    assert_eq!(r.predicted.len(), 100);
    assert_eq!(r.actual.len(), 100);
    for f in [
        pipeline::RESOLVED_CONFIG,
        pipeline::CORRECTED_CSV,
        pipeline::ANOMALIES_CSV,
        pipeline::SHAP_CSV,
        pipeline::IMPORTANCE_CSV,
        pipeline::SELECTED_TXT,
        pipeline::CHECKPOINT,
        "model.manifest",
        pipeline::SCALER_TXT,
        pipeline::TRAIN_LOG,
        pipeline::PREDICTIONS_CSV,
        pipeline::METRICS_CSV,
        pipeline::METRICS_TXT,
        "forecast.svg",
        "importance.svg",
    ] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    let log = fs::read_to_string(dir.path().join(pipeline::TRAIN_LOG)).unwrap();
    assert_eq!(log.lines().count(), 3);
    let metrics = fs::read_to_string(dir.path().join(pipeline::METRICS_CSV)).unwrap();
    assert!(metrics.lines().nth(2).unwrap().starts_with("persistence,"));

    // the echoed config reproduces the run
    let echoed = RunConfig::load(&dir.path().join(pipeline::RESOLVED_CONFIG)).unwrap();
    assert_eq!(echoed, cfg);
}

#[test]
fn mismatched_checkpoint_is_a_contract_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    pipeline::run_all(&cfg).unwrap();
    cfg.model.hidden = 9;
    let err = pipeline::run_evaluate(&cfg, None).unwrap_err();
    assert_eq!(err.kind(), "contract");
}

#[test]
fn divergence_aborts_and_keeps_last_good_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.train.lr = 1e300;
    cfg.model.dropout = 0.0;
    pipeline::run_preprocess(&cfg).unwrap();
    pipeline::run_select_features(&cfg).unwrap();
    let err = pipeline::run_train(&cfg).unwrap_err();
    assert_eq!(err.kind(), "diverged");
    assert!(dir.path().join(pipeline::CHECKPOINT).exists());
}

#[test]
fn stages_require_their_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path());
    assert_eq!(pipeline::run_train(&cfg).unwrap_err().kind(), "config");
    let mut bad = cfg.clone();
    bad.data.source = Source::Csv;
    assert_eq!(pipeline::run_preprocess(&bad).unwrap_err().kind(), "config");
}

#[test]
fn ablation_toggles_are_orthogonal_and_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.ablation.seeds = vec![0];
    cfg.ablation.variants = [Variant::Full, Variant::NoGating, Variant::NoPatching]
        .iter()
        .map(|v| v.key().to_string())
        .collect();
    let r = pipeline::run_ablation(&cfg).unwrap();
    assert!(r.runs.iter().all(|run| run.outcome.is_ok()));
    let root = dir.path().join("ablation");
    for f in [pipeline::CORRECTED_CSV, pipeline::SELECTED_TXT] {
        let full = fs::read(root.join("full").join(f)).unwrap();
        assert_eq!(full, fs::read(root.join("no_gating").join(f)).unwrap());
        assert_eq!(full, fs::read(root.join("no_patching").join(f)).unwrap());
    }
    let summary = fs::read_to_string(root.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert!(summary.contains("w/o Gating Mechanism"));

    // a variant whose training cannot start is recorded, the others still run
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.ablation.seeds = vec![0];
    cfg.ablation.variants = vec!["full".into(), "no_feature_selection".into()];
    cfg.train.lr = 1e300;
    cfg.model.dropout = 0.0;
    let r = pipeline::run_ablation(&cfg).unwrap();
    assert!(r.runs.iter().all(|run| run.outcome.as_ref().is_err_and(|e| e.contains("diverged"))));
    assert!(r.medians.iter().all(|m| m.1.is_none()));
}

#[test]
fn sensitivity_reports_a_spread_per_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.sensitivity.max_epoch = vec![1, 2];
    cfg.sensitivity.lookback = vec![8, 12];
    cfg.sensitivity.batch_size = vec![32, 64];
    let r = pipeline::run_sensitivity(&cfg).unwrap();
    assert_eq!(r.cells.len(), 6);
    assert!(r.cells.iter().all(|c| c.outcome.is_ok()));
    assert_eq!(r.spread.len(), 3);
    assert!(r.spread.iter().all(|(_, v)| v.iter().all(|s| s.is_finite() && *s >= 0.0)));
    let std = fs::read_to_string(dir.path().join("sensitivity/std.csv")).unwrap();
    assert_eq!(std.lines().next().unwrap(), "sweep,MAE,MSE,RMSE,MAPE,R2,IA,U1");
    assert_eq!(std.lines().count(), 4);

    // a one-value grid has zero spread
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.sensitivity.max_epoch = vec![2];
    cfg.sensitivity.lookback = vec![24];
    cfg.sensitivity.batch_size = vec![64];
    let r = pipeline::run_sensitivity(&cfg).unwrap();
    assert!(r.spread.iter().all(|(_, v)| v.iter().all(|&s| s == 0.0)));
}
