//! Multi-seed experiment runner, summary comparison and the importance
//! ranking report.

mod compare;
mod config;
mod report;
mod run;

pub use compare::{
    compare, compare_files, parse_summary, ratio_percent, Comparison, ComparisonRow,
};
pub use config::{EnvSpec, ExperimentConfig, ObservationKind};
pub use report::{report_importance, Band, ImportanceReport, ReportRow, REPORT_ROLLOUTS};
pub use run::{
    checkpoint_scores, episodes_csv, frames_to_sustained_success, mean, run_experiment, stdev,
    summarize, summary_csv, train_seed, EpisodeRecord, ExperimentResult, SeedRun, SummaryRow,
    EPISODE_CSV_HEADER, SUMMARY_CSV_HEADER, SUSTAINED_EPISODES,
};
