//! Configuration files, named presets, experiment orchestration and the
//! on-disk formats (CSV scans, PGM images, fit reports).

mod config;
mod io;
mod presets;
mod run;

pub use config::{load_config, parse_config, ExperimentRun, FitPlan, DEFAULT_MEAN_PAIRS, DEFAULT_SEED, KNOWN_KEYS, REQUIRED_KEYS};
pub use io::{
    decode_pgm, encode_pgm, format_csv, parse_csv, parse_fit_report, read_csv, read_pgm, write_atomic, write_csv,
    write_pgm, FitReport, CSV_HEADER, FIT_REPORT_HEADER,
};
pub use presets::{carrier_period, preset, resolve, ClassicalRun, PresetName, RunPreset};
pub use run::{
    effective_periods, fit_scan, render_classical, render_preset, run_preset, scan_experiment, OutputBundle, RunMode,
    CSV_FORMAT_VERSION, FIT_REPORT_FORMAT_VERSION, LARGE_PEAK_FRACTION,
};
