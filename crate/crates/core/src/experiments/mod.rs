//! Config loading, the study commands and provenance-stamped output.

mod commands;
pub mod config;
pub mod output;
pub mod stats;

pub use commands::{
    cmd_chaos_study, cmd_converge_study, cmd_quantize, cmd_simulate, cmd_solve_limit, cmd_verify,
    observed_contraction, scenario_positions, solve_limit, LimitSummary, MomentRow, QuantizeRow, RateRow, Run,
    StudyResult,
};
pub use config::{ExperimentConfig, LoadedConfig, QuantizationConfig, Scenario};
pub use output::{verify_dir, Manifest, OutputDir, Provenance};
pub use stats::{log_log_slope, Slope};
