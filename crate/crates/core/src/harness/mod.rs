//! Experiment driver: map sources, batch execution, summaries and CSV.

mod batch;
pub mod mapgen;
mod report;
mod spec;

pub use batch::{
    cell_seed, delta_t, run_batch, summarize, summarize_progression, BatchError, BatchOutput, ProgressionPoint, RunRecord,
    SummaryRow, PROGRESSION_STEP,
};
pub use report::{format_delta, progression_csv, runs_csv, summary_csv, write_batch};
pub use spec::{ExperimentSpec, MapSource, SpecError};
