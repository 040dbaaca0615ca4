//! Ingestion, scaling, windowing and synthetic generation of load series.

mod frame;
mod scaler;
mod synth;
mod window;

pub use frame::{
    format_timestamp, load_csv, load_csv_with_features, parse_timestamp, repair_column, CsvSchema,
    IngestReport, SeriesFrame,
};
pub use scaler::{fit_apply_scaler, Scaler};
pub use synth::{synth_series, synth_series_with_spikes, SynthSpec};
pub use window::{make_windows, WindowSet};
