//! Straight-line optimizers for the single-objective special cases, written
//! without the engine so they can serve as equivalence oracles.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::optimizer::{select_output, OptimizerConfig, RunRecord, SchedulePolicy};
use crate::problems::MooProblem;
use crate::rng::RunStreams;

fn check_single_objective<P: MooProblem>(problem: &P, config: &OptimizerConfig, x0: &[f64]) -> Result<()> {
    if problem.num_objectives() != 1 || config.freq.num_objectives() != 1 {
        return Err(Error::Contract("reference optimizers need a single objective".into()));
    }
    if x0.len() != problem.dim() || config.partition.total_dim() != problem.dim() {
        return Err(Error::dim("initial point or partition does not match the problem"));
    }
    Ok(())
}

fn finish(outer_points: Vec<Vec<f64>>, x: Vec<f64>, config: &OptimizerConfig, steps: u64, work_units: u64, streams: &mut RunStreams) -> Result<RunRecord> {
    let t = outer_points.len() - 1;
    let mut record = RunRecord {
        snapshot_iterations: (0..=t).collect(),
        outer_points,
        losses: Vec::new(),
        completed_outer: t,
        final_point: x,
        output: Vec::new(),
        work_units,
        steps,
        seed: config.seed,
        stopped_early: false,
    };
    record.output = select_output(&record, config.output_rule, &mut streams.output)?;
    Ok(record)
}

/// Plain SGD: `x ← x − α_t ∇g(x, ξ)`, `p` steps per outer iteration.
pub fn reference_sgd<P: MooProblem>(problem: &P, config: &OptimizerConfig, x0: Vec<f64>) -> Result<RunRecord> {
    check_single_objective(problem, config, &x0)?;
    if config.partition.num_blocks() != 1 {
        return Err(Error::Contract("reference SGD needs a single block".into()));
    }
    let n = problem.dim();
    let all: Vec<usize> = (0..n).collect();
    let mut streams = RunStreams::new(config.seed, config.run_index);
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut outer_points = vec![x.clone()];
    let mut steps = 0u64;
    for t in 0..config.outer_iterations {
        let alpha = config.step_rule.alpha(t);
        for _ in 0..config.freq.budget() {
            let xi = problem.draw_sample(&mut streams.minibatch)?;
            problem.partial_gradient(0, &all, &x, &xi, &mut g);
            for c in 0..n {
                x[c] -= alpha * g[c];
            }
            steps += 1;
        }
        outer_points.push(x.clone());
    }
    let work = steps * problem.gradient_cost(n);
    finish(outer_points, x, config, steps, work, &mut streams)
}

/// Stochastic block coordinate descent: each outer iteration visits the
/// blocks in a fresh random order and takes `p` steps on each.
pub fn reference_bcd<P: MooProblem>(problem: &P, config: &OptimizerConfig, x0: Vec<f64>) -> Result<RunRecord> {
    check_single_objective(problem, config, &x0)?;
    let blocks = config.partition.blocks();
    let mut streams = RunStreams::new(config.seed, config.run_index);
    let mut x = x0;
    let mut outer_points = vec![x.clone()];
    let mut steps = 0u64;
    let mut work = 0u64;
    for t in 0..config.outer_iterations {
        let alpha = config.step_rule.alpha(t);
        let mut order: Vec<usize> = (0..blocks.len()).collect();
        if config.schedule_policy == SchedulePolicy::ReshuffleEachCycle {
            order.shuffle(&mut streams.sigma);
        }
        for b in order {
            let block = &blocks[b];
            let mut g = vec![0.0; block.len()];
            for _ in 0..config.freq.budget() {
                let xi = problem.draw_sample(&mut streams.minibatch)?;
                problem.partial_gradient(0, block, &x, &xi, &mut g);
                for (&c, gc) in block.iter().zip(&g) {
                    x[c] -= alpha * gc;
                }
                steps += 1;
                work += problem.gradient_cost(block.len());
            }
        }
        outer_points.push(x.clone());
    }
    finish(outer_points, x, config, steps, work, &mut streams)
}
