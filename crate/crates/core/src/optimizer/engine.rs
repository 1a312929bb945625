use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use super::output::{select_output, OutputRule};
use super::schedule::{build_block_permutation, build_index_mapping, SchedulePolicy};
use super::{BlockPartition, FrequencyVector, StepSizeRule};
use crate::error::{Error, Result, StepLocation};
use crate::problems::{weighted_objective, MooProblem};
use crate::rng::{RunStreams, StreamRng};

/// Which outer start points `x^{t,0,0}` a run keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnapshotPolicy {
    #[default]
    All,
    /// Every `k`-th outer point plus the last one. Output rules then operate on the thinned set.
    Every(usize),
    /// Only the initial and final points; pair with [`OutputRule::LastIterate`].
    Endpoints,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub outer_iterations: usize,
    pub partition: BlockPartition,
    pub freq: FrequencyVector,
    pub step_rule: StepSizeRule,
    pub output_rule: OutputRule,
    pub seed: u64,
    /// Stream index under `seed`; sweeps give each run its own.
    pub run_index: u64,
    pub schedule_policy: SchedulePolicy,
    pub snapshots: SnapshotPolicy,
    /// Evaluate every `f_k` and `F_m` at each kept snapshot.
    pub record_losses: bool,
    /// Stop once this many work units have been spent.
    pub max_work_units: Option<u64>,
    /// Stop after this many inner steps.
    pub max_steps: Option<u64>,
}

impl OptimizerConfig {
    pub fn new(outer_iterations: usize, partition: BlockPartition, freq: FrequencyVector, step_rule: StepSizeRule) -> Self {
        Self {
            outer_iterations,
            partition,
            freq,
            step_rule,
            output_rule: OutputRule::LastIterate,
            seed: 0,
            run_index: 0,
            schedule_policy: SchedulePolicy::ReshuffleEachCycle,
            snapshots: SnapshotPolicy::All,
            record_losses: false,
            max_work_units: None,
            max_steps: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_output(mut self, rule: OutputRule) -> Self {
        self.output_rule = rule;
        self
    }

    pub fn with_policy(mut self, policy: SchedulePolicy) -> Self {
        self.schedule_policy = policy;
        self
    }

    /// Work units consumed by one full outer iteration on `problem`.
    pub fn outer_iteration_cost<P: MooProblem>(&self, problem: &P) -> u64 {
        let p = self.freq.budget() as u64;
        self.partition.blocks().iter().map(|b| problem.gradient_cost(b.len()) * p).sum()
    }

    fn check<P: MooProblem>(&self, problem: &P, x0: &[f64]) -> Result<()> {
        let n = problem.dim();
        if x0.len() != n {
            return Err(Error::dim(format!("initial point has {} coordinates, problem has {n}", x0.len())));
        }
        if self.partition.total_dim() != n {
            return Err(Error::dim(format!(
                "partition covers {} coordinates, problem has {n}",
                self.partition.total_dim()
            )));
        }
        if self.freq.num_objectives() != problem.num_objectives() {
            return Err(Error::dim(format!(
                "frequency vector has {} entries, problem has {} objectives",
                self.freq.num_objectives(),
                problem.num_objectives()
            )));
        }
        if let SnapshotPolicy::Every(0) = self.snapshots {
            return Err(Error::config("snapshots", "thinning interval must be positive"));
        }
        self.step_rule.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub x: Vec<f64>,
    pub location: StepLocation,
    pub work_units: u64,
    pub steps: u64,
}

impl IterateState {
    pub fn new(x: Vec<f64>) -> Self {
        Self {
            x,
            location: StepLocation { t: 0, i: 0, j: 0 },
            work_units: 0,
            steps: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotLoss {
    pub objectives: Vec<f64>,
    pub weighted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// Kept outer start points `x^{t,0,0}`.
    pub outer_points: Vec<Vec<f64>>,
    /// Outer index `t` of each kept point.
    pub snapshot_iterations: Vec<usize>,
    pub losses: Vec<SnapshotLoss>,
    /// Number of outer iterations run to completion.
    pub completed_outer: usize,
    /// The iterate when the run ended (`x^{T,0,0}` unless a budget cut it short).
    pub final_point: Vec<f64>,
    pub output: Vec<f64>,
    pub work_units: u64,
    pub steps: u64,
    pub seed: u64,
    pub stopped_early: bool,
}

/// What an observer sees after every inner step (and once before the first).
#[derive(Debug)]
pub struct Progress<'a> {
    pub location: StepLocation,
    pub x: &'a [f64],
    pub work_units: u64,
    pub steps: u64,
}

/// One inner update: only the coordinates in `block` move, by `alpha` times the
/// stochastic partial gradient of `objective` at the full current point.
pub fn smoo_step<P: MooProblem>(
    state: &mut IterateState,
    problem: &P,
    block: &[usize],
    objective: usize,
    alpha: f64,
    rng: &mut StreamRng,
    grad: &mut Vec<f64>,
) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Contract(format!("step size {alpha} is not positive")));
    }
    if objective >= problem.num_objectives() {
        return Err(Error::dim(format!("objective {objective} out of range")));
    }
    if let Some(&c) = block.iter().find(|&&c| c >= state.x.len()) {
        return Err(Error::dim(format!("block coordinate {c} out of range")));
    }
    let sample = problem.draw_sample(rng)?;
    grad.clear();
    grad.resize(block.len(), 0.0);
    problem.partial_gradient(objective, block, &state.x, &sample, grad);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NumericFailure(state.location));
    }
    for (&c, g) in block.iter().zip(grad.iter()) {
        state.x[c] -= alpha * g;
    }
    if block.iter().any(|&c| !state.x[c].is_finite()) {
        return Err(Error::NumericFailure(state.location));
    }
    state.work_units += problem.gradient_cost(block.len());
    state.steps += 1;
    Ok(())
}

pub fn run_block_smoo<P: MooProblem>(problem: &P, config: &OptimizerConfig, x0: Vec<f64>) -> Result<RunRecord> {
    run_block_smoo_observed(problem, config, x0, |_| ControlFlow::Continue(()))
}

/// Runs the two-loop alternation: outer iterations over a block permutation,
/// and for each block `p` steps following an index mapping over objectives.
/// The observer can end the run early by returning `Break`.
pub fn run_block_smoo_observed<P, F>(problem: &P, config: &OptimizerConfig, x0: Vec<f64>, mut observer: F) -> Result<RunRecord>
where
    P: MooProblem,
    F: FnMut(&Progress<'_>) -> ControlFlow<()>,
{
    config.check(problem, &x0)?;
    let weights = config.freq.weights();
    let mut streams = RunStreams::new(config.seed, config.run_index);
    let mut state = IterateState::new(x0);
    let mut grad = Vec::new();
    let mut record = RunRecord {
        outer_points: Vec::new(),
        snapshot_iterations: Vec::new(),
        losses: Vec::new(),
        completed_outer: 0,
        final_point: Vec::new(),
        output: Vec::new(),
        work_units: 0,
        steps: 0,
        seed: config.seed,
        stopped_early: false,
    };
    let keep = |t: usize, last: bool| match config.snapshots {
        SnapshotPolicy::All => true,
        SnapshotPolicy::Every(k) => t.is_multiple_of(k) || last,
        SnapshotPolicy::Endpoints => t == 0 || last,
    };
    let push_snapshot = |record: &mut RunRecord, t: usize, x: &[f64]| {
        record.outer_points.push(x.to_vec());
        record.snapshot_iterations.push(t);
        if config.record_losses {
            let objectives: Vec<f64> = (0..problem.num_objectives()).map(|k| problem.objective(k, x)).collect();
            let weighted = weighted_objective(problem, &weights, x);
            record.losses.push(SnapshotLoss { objectives, weighted });
        }
    };

    let budget_hit = |state: &IterateState| {
        config.max_work_units.is_some_and(|b| state.work_units >= b) || config.max_steps.is_some_and(|b| state.steps >= b)
    };

    let initial = Progress { location: state.location, x: &state.x, work_units: 0, steps: 0 };
    let mut stop = observer(&initial).is_break() || budget_hit(&state);
    if keep(0, config.outer_iterations == 0 || stop) {
        push_snapshot(&mut record, 0, &state.x);
    }

    let p = config.freq.budget();
    let s = config.partition.num_blocks();
    'outer: for t in 0..config.outer_iterations {
        if stop {
            break;
        }
        let alpha = config.step_rule.alpha(t);
        let sigma = build_block_permutation(s, config.schedule_policy, &mut streams.sigma)?;
        for (i, &b) in sigma.iter().enumerate() {
            let pi = build_index_mapping(&config.freq, config.schedule_policy, &mut streams.pi);
            let block = config.partition.block(b);
            for (j, &k) in pi.iter().enumerate() {
                state.location = StepLocation { t, i, j };
                smoo_step(&mut state, problem, block, k, alpha, &mut streams.minibatch, &mut grad)?;
                let progress = Progress {
                    location: state.location,
                    x: &state.x,
                    work_units: state.work_units,
                    steps: state.steps,
                };
                let finished_cycle = i + 1 == s && j + 1 == p;
                if observer(&progress).is_break() || budget_hit(&state) {
                    stop = true;
                    if !finished_cycle {
                        record.stopped_early = true;
                        break 'outer;
                    }
                }
            }
        }
        record.completed_outer = t + 1;
        let last = t + 1 == config.outer_iterations || stop;
        if keep(t + 1, last) {
            push_snapshot(&mut record, t + 1, &state.x);
        }
    }
    record.final_point = state.x;
    record.work_units = state.work_units;
    record.steps = state.steps;
    record.output = select_output(&record, config.output_rule, &mut streams.output)?;
    Ok(record)
}
