use serde::{Deserialize, Serialize};

use super::FrontPoint;
use crate::error::{Error, Result};
use crate::optimizer::{
    run_block_smoo, BlockPartition, FrequencyVector, OptimizerConfig, OutputRule, SchedulePolicy, SnapshotPolicy,
    StepSizeRule,
};
use crate::problems::{MooProblem, Scalarized};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparator {
    BlockSmoo,
    /// Plain SGD on `F_m`: every step uses the full weighted gradient.
    WeightedSum,
}

impl Comparator {
    pub fn label(self) -> &'static str {
        match self {
            Comparator::BlockSmoo => "block-smoo",
            Comparator::WeightedSum => "weighted-sum",
        }
    }
}

/// Shared knobs for every run of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub partition: BlockPartition,
    pub step_rule: StepSizeRule,
    /// Inner steps per run. Both comparators draw one minibatch per step, so
    /// equal step counts mean equal data passes.
    pub steps: u64,
    pub seed: u64,
    pub schedule_policy: SchedulePolicy,
}

impl SweepSettings {
    /// Step count covering `passes` passes over `n_samples` with minibatch `batch`.
    pub fn steps_for_passes(passes: u64, n_samples: usize, batch: usize) -> u64 {
        (passes * n_samples as u64).div_ceil(batch.max(1) as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub index: usize,
    pub freq: Vec<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepOutcome {
    /// Successful runs in vector order.
    pub points: Vec<FrontPoint>,
    pub failures: Vec<SweepFailure>,
}

fn run_one<P, E>(
    problem: &P,
    settings: &SweepSettings,
    freq: &FrequencyVector,
    index: usize,
    comparator: Comparator,
    x0: Vec<f64>,
    evaluate: &E,
) -> Result<FrontPoint>
where
    P: MooProblem,
    E: Fn(&[f64]) -> Vec<f64>,
{
    let configure = |outer: usize, partition: BlockPartition, f: FrequencyVector| {
        let mut cfg = OptimizerConfig::new(outer, partition, f, settings.step_rule)
            .with_seed(settings.seed)
            .with_output(OutputRule::LastIterate)
            .with_policy(settings.schedule_policy);
        cfg.run_index = index as u64;
        cfg.snapshots = SnapshotPolicy::Endpoints;
        cfg.max_steps = Some(settings.steps);
        cfg
    };
    let record = match comparator {
        Comparator::BlockSmoo => {
            let per_outer = (settings.partition.num_blocks() * freq.budget()) as u64;
            let outer = settings.steps.div_ceil(per_outer) as usize;
            let cfg = configure(outer, settings.partition.clone(), freq.clone());
            run_block_smoo(problem, &cfg, x0)?
        }
        Comparator::WeightedSum => {
            let scalar = Scalarized::new(problem, freq.weights())?;
            let cfg = configure(settings.steps as usize, BlockPartition::single(problem.dim())?, FrequencyVector::new(vec![1])?);
            run_block_smoo(&scalar, &cfg, x0)?
        }
    };
    let objectives = evaluate(&record.output);
    if objectives.iter().any(|v| !v.is_finite()) {
        return Err(Error::UndefinedMetric(format!("non-finite objective values {objectives:?}")));
    }
    Ok(FrontPoint {
        objectives,
        freq: freq.counts().to_vec(),
        seed: settings.seed,
        work_units: record.work_units,
    })
}

/// One independent run per frequency vector. Run `i` uses stream `i` under
/// the root seed, so results do not depend on scheduling. `init(i)` gives the
/// starting point and `evaluate` maps the returned iterate to the reported
/// objective values (typically test losses). Failed runs are collected, not
/// propagated.
pub fn run_sweep<P, I, E>(
    problem: &P,
    settings: &SweepSettings,
    vectors: &[FrequencyVector],
    comparator: Comparator,
    init: I,
    evaluate: E,
) -> SweepOutcome
where
    P: MooProblem,
    I: Fn(usize) -> Vec<f64> + Sync,
    E: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let job = |(index, freq): (usize, &FrequencyVector)| {
        run_one(problem, settings, freq, index, comparator, init(index), &evaluate).map_err(|e| SweepFailure {
            index,
            freq: freq.counts().to_vec(),
            message: e.to_string(),
        })
    };
    #[cfg(feature = "parallel")]
    let results: Vec<_> = {
        use rayon::prelude::*;
        vectors.par_iter().enumerate().map(job).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = vectors.iter().enumerate().map(job).collect();

    let mut outcome = SweepOutcome::default();
    for r in results {
        match r {
            Ok(p) => outcome.points.push(p),
            Err(f) => outcome.failures.push(f),
        }
    }
    outcome
}
