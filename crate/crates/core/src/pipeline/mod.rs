//! End-to-end experiment stages driven by a [`RunConfig`].

mod config;
mod experiments;
mod stages;
pub mod svg;

pub use config::{
    AblationConfig, DataConfig, LofConfig, LossName, LossSection, ModelSection, RuleKind, RunConfig, SensitivityConfig,
    ShapConfig, Source, SvrConfig, SyntheticConfig, TrainSection,
};
pub use experiments::{
    median_metrics, run_ablation, run_sensitivity, AblationReport, AblationRun, SensitivityCell, SensitivityReport,
    Sweep, Variant,
};
pub use stages::{
    load_source, prepare_run_dir, run_all, run_evaluate, run_preprocess, run_select_features, run_train, split,
    EvalReport, PreprocessReport, SelectionReport, TrainReport, ANOMALIES_CSV, CHECKPOINT, CORRECTED_CSV, IMPORTANCE_CSV,
    INPUT_CSV, METRICS_CSV, METRICS_TXT, PREDICTIONS_CSV, RESOLVED_CONFIG, SCALER_TXT, SELECTED_TXT, SHAP_CSV, TRAIN_LOG,
};
