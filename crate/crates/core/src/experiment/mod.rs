//! Config-driven experiments: grids of (algorithm, step size, seed) cells
//! with checkpointed losses and best-step selection, and Pareto sweeps.

mod config;
mod load;
mod run;
mod sweep;

pub use config::{Algorithm, Budget, ExperimentConfig, ProblemConfig, SweepConfig, CACHE_ENV};
pub use load::LoadedProblem;
pub use run::{
    budget_work_units, initial_point, run_experiment, select_best_steps, write_cell_csv, BestStep, CellResult,
    CellSummary, ExperimentSummary, ResultRow,
};
pub use sweep::{run_pareto_sweep, SweepReport};

#[cfg(test)]
mod tests;
