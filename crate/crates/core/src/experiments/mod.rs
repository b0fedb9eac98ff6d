//! Seeded experiment runner producing rate reports.

mod config;
mod report;
mod run;

#[cfg(test)]
mod tests;

pub use config::{log_grid, parse_kv, ExperimentConfig, ExperimentKind};
pub use report::{fit_loglog, fit_slope, mean_by_n, RateReport, RateRow, SlopeFit};
pub use run::{fixed_point_exponent, run_experiment, ExperimentOutput, EVAL_POINTS};
