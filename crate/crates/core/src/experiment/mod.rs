//! Replicated experiment harness: configuration, execution over a budget grid,
//! rate fitting and result files.

mod config;
mod fit;
mod output;
mod runner;

pub use config::{
    load_config, load_probe_config, write_config, ExperimentConfig, Metric, ModelSpec, ProbeConfig,
    SSP_OBJECTIVE,
};
pub use fit::{fit_loglog_slope, SlopeFit};
pub use output::{
    probe_csv, rates_csv, rates_svg, sibling, summary_json, write_probe, write_results, write_svg,
    CSV_HEADER, PROBE_HEADER,
};
pub use runner::{
    aggregate, run_cells, run_experiment, run_probe, CellResult, ProbeRow, RateResult, RateRow,
};
