//! Experiment configs, runners, sweeps and CSV/SVG output.

mod config;
mod output;
mod pool;
mod run;
mod trials;

pub use config::{
    Budget, CodecSettings, CsqSettings, ExperimentConfig, ExperimentKind, PanelSettings,
    ReductionSettings, SweepSettings, SCHEMA_VERSION,
};
pub use output::{
    create_run_dir, csv_string, emit_csv, emit_svg, load_csv, output_root, parse_csv, svg_string,
    Chart, CsvRow, Series, CSV_HEADER,
};
pub use pool::parallel_map;
pub use run::{
    build_id, load_summary, run_experiment, run_transfer_panel, sweep, Aggregate, PanelEntry,
    RunResult, Summary, SweepRow,
};
pub use trials::{samples_to_threshold, TrialRecord, TrialStatus};
