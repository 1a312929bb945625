//! The alternating block/objective engine.

mod engine;
mod frequency;
mod output;
mod partition;
mod schedule;
mod step;

pub use engine::{
    run_block_smoo, run_block_smoo_observed, smoo_step, IterateState, OptimizerConfig, Progress, RunRecord,
    SnapshotLoss, SnapshotPolicy,
};
pub use frequency::{validate_frequency_vector, weighted_sum_weights, FrequencyVector};
pub use output::{select_output, OutputRule};
pub use partition::BlockPartition;
pub use schedule::{build_block_permutation, build_index_mapping, Schedule, SchedulePolicy};
pub use step::{StepSizeRule, STEP_SIZE_GRID};
