use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::{initial_point, write_json_atomic};
use super::{ExperimentConfig, LoadedProblem};
use crate::error::{Error, Result};
use crate::optimizer::{SchedulePolicy, StepSizeRule};
use crate::pareto::{
    enumerate_frequency_vectors, nondominated_filter, run_sweep, write_front_csv, Comparator, MetricsSummary,
    ParetoFront, SweepFailure, SweepSettings,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub vectors: usize,
    pub steps_per_run: u64,
    pub metrics: MetricsSummary,
    pub failures: Vec<(Comparator, SweepFailure)>,
    #[serde(skip)]
    pub fronts: Vec<ParetoFront>,
}

/// Runs both comparators over every `m` with entries summing to `sweep.p`,
/// scores the fronts against each other, and (with `out`) writes
/// `<method>.csv`, `<method>.nondominated.csv` and `metrics.json`.
pub fn run_pareto_sweep(cfg: &ExperimentConfig, problem: &LoadedProblem, out: Option<&Path>) -> Result<SweepReport> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| Error::config("sweep", "missing [sweep] table"))?;
    let q = problem.num_objectives();
    let vectors = enumerate_frequency_vectors(q, sweep.p);
    let steps = match problem.num_train_samples() {
        Some(n) => SweepSettings::steps_for_passes(sweep.data_passes, n, cfg.batch.min(n)),
        None => sweep.data_passes,
    };
    let settings = SweepSettings {
        partition: problem.partition(cfg.partition)?,
        step_rule: StepSizeRule::Fixed { alpha: sweep.step },
        steps,
        seed: cfg.seed,
        schedule_policy: SchedulePolicy::ReshuffleEachCycle,
    };
    let dim = problem.dim();
    let init = |i: usize| initial_point(cfg.seed, i as u64, dim, cfg.init_std);
    let evaluate = |x: &[f64]| problem.evaluate(x).1;

    let mut fronts = Vec::new();
    let mut failures = Vec::new();
    for comparator in [Comparator::BlockSmoo, Comparator::WeightedSum] {
        let outcome = match problem {
            LoadedProblem::Rrr { train, .. } => run_sweep(train, &settings, &vectors, comparator, init, evaluate),
            LoadedProblem::Quadratic(p) => run_sweep(p, &settings, &vectors, comparator, init, evaluate),
        };
        failures.extend(outcome.failures.into_iter().map(|f| (comparator, f)));
        fronts.push(ParetoFront { origin: comparator.label().to_string(), points: outcome.points });
    }
    let failed = |c: Comparator| failures.iter().filter(|(k, _)| *k == c).count();
    let scored: Vec<(ParetoFront, usize)> = fronts
        .iter()
        .cloned()
        .zip([failed(Comparator::BlockSmoo), failed(Comparator::WeightedSum)])
        .collect();
    let metrics = MetricsSummary::compute(&scored)?;
    let report = SweepReport { vectors: vectors.len(), steps_per_run: steps, metrics, failures, fronts };
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        for front in &report.fronts {
            write_front_csv(&dir.join(format!("{}.csv", front.origin)), front)?;
            write_front_csv(&dir.join(format!("{}.nondominated.csv", front.origin)), &nondominated_filter(front)?)?;
        }
        write_json_atomic(&dir.join("metrics.json"), &report)?;
    }
    Ok(report)
}
