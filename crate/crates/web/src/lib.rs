//! WebAssembly bindings for the demo page in `www/`.
//!
//! Every export returns a JSON string. The plain functions behind them are
//! usable, and tested, natively.

use std::ops::ControlFlow;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use block_smoo::optimizer::{
    run_block_smoo_observed, BlockPartition, FrequencyVector, OptimizerConfig, SchedulePolicy, StepSizeRule,
};
use block_smoo::pareto::{enumerate_frequency_vectors, run_sweep, Comparator, MetricsSummary, ParetoFront, SweepSettings};
use block_smoo::problems::{GradientNoise, MooProblem, QuadraticMoo};
use block_smoo::verify::{convex_rate_suite, nonconvex_rate_suite, pl_rate_suite, RateReport, RateSettings};

pub const MAX_OUTER: usize = 500;
pub const MAX_P: usize = 40;
pub const START: [f64; 2] = [2.5, 2.0];

/// Two objectives on the plane with minimizers `(-1, 1)` and `(1, -1)`.
pub fn demo_problem(noise: f64) -> Result<QuadraticMoo, String> {
    let noise = if noise > 0.0 { GradientNoise::Gaussian { std: noise } } else { GradientNoise::Exact };
    QuadraticMoo::from_diagonals(&[vec![1.0, 4.0], vec![4.0, 1.0]], &[vec![-1.0, 1.0], vec![1.0, -1.0]], noise)
        .map_err(|e| e.to_string())
}

/// Exact Pareto front of the demo problem, traced through weighted-sum minimizers.
pub fn true_front(points: usize) -> Vec<[f64; 2]> {
    let problem = demo_problem(0.0).expect("fixed instance");
    (0..=points)
        .filter_map(|i| {
            let freq = FrequencyVector::new(vec![i, points - i]).ok()?;
            let (x, _) = problem.minimizer(&freq).ok()?;
            Some([problem.objective(0, &x), problem.objective(1, &x)])
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct Trajectory {
    /// Iterate after every inner step, starting at the initial point.
    pub path: Vec<[f64; 2]>,
    /// `F_m` at the start of each outer iteration and at the end.
    pub weighted: Vec<f64>,
    pub minimizer: [f64; 2],
    pub optimum: f64,
    pub centers: [[f64; 2]; 2],
}

fn partition(blocks: usize) -> Result<BlockPartition, String> {
    match blocks {
        1 => BlockPartition::single(2),
        2 => BlockPartition::contiguous(&[1, 1]),
        _ => return Err("blocks must be 1 or 2".into()),
    }
    .map_err(|e| e.to_string())
}

pub fn run_trajectory(m: [usize; 2], blocks: usize, step: f64, outer: usize, noise: f64, seed: u64) -> Result<Trajectory, String> {
    if outer > MAX_OUTER || m[0] + m[1] > MAX_P {
        return Err(format!("at most {MAX_OUTER} outer iterations and m1 + m2 <= {MAX_P}"));
    }
    let problem = demo_problem(noise)?;
    let freq = FrequencyVector::new(m.to_vec()).map_err(|e| e.to_string())?;
    let mut config = OptimizerConfig::new(outer, partition(blocks)?, freq.clone(), StepSizeRule::Fixed { alpha: step })
        .with_seed(seed);
    config.record_losses = true;
    let mut path = Vec::new();
    let record = run_block_smoo_observed(&problem, &config, START.to_vec(), |progress| {
        path.push([progress.x[0], progress.x[1]]);
        ControlFlow::Continue(())
    })
    .map_err(|e| e.to_string())?;
    let (x_star, optimum) = problem.minimizer(&freq).map_err(|e| e.to_string())?;
    Ok(Trajectory {
        path,
        weighted: record.losses.iter().map(|l| l.weighted).collect(),
        minimizer: [x_star[0], x_star[1]],
        optimum,
        centers: [[-1.0, 1.0], [1.0, -1.0]],
    })
}

#[derive(Debug, Serialize)]
pub struct FrontPlot {
    pub method: String,
    /// `(f1, f2, m1)` per surviving run.
    pub points: Vec<[f64; 3]>,
}

#[derive(Debug, Serialize)]
pub struct Fronts {
    pub fronts: Vec<FrontPlot>,
    pub failed: usize,
    pub metrics: MetricsSummary,
    pub truth: Vec<[f64; 2]>,
}

pub fn run_fronts(p: usize, steps: u64, step: f64, noise: f64, seed: u64) -> Result<Fronts, String> {
    if p == 0 || p > MAX_P || steps > 20_000 {
        return Err(format!("need 1 <= p <= {MAX_P} and at most 20000 steps"));
    }
    let problem = demo_problem(noise)?;
    let vectors = enumerate_frequency_vectors(2, p);
    let settings = SweepSettings {
        partition: partition(2)?,
        step_rule: StepSizeRule::Fixed { alpha: step },
        steps,
        seed,
        schedule_policy: SchedulePolicy::ReshuffleEachCycle,
    };
    let evaluate = |x: &[f64]| vec![problem.objective(0, x), problem.objective(1, x)];
    let mut scored = Vec::new();
    let mut plots = Vec::new();
    let mut failed = 0;
    for comparator in [Comparator::BlockSmoo, Comparator::WeightedSum] {
        let outcome = run_sweep(&problem, &settings, &vectors, comparator, |_| START.to_vec(), evaluate);
        failed += outcome.failures.len();
        plots.push(FrontPlot {
            method: comparator.label().to_string(),
            points: outcome.points.iter().map(|pt| [pt.objectives[0], pt.objectives[1], pt.freq[0] as f64]).collect(),
        });
        let front = ParetoFront { origin: comparator.label().to_string(), points: outcome.points };
        scored.push((front, outcome.failures.len()));
    }
    let metrics = MetricsSummary::compute(&scored).map_err(|e| e.to_string())?;
    Ok(Fronts { fronts: plots, failed, metrics, truth: true_front(100) })
}

pub fn run_rate(kind: &str, seeds: usize, seed: u64) -> Result<RateReport, String> {
    if seeds == 0 || seeds > 50 {
        return Err("seeds must be between 1 and 50".into());
    }
    let settings = RateSettings { seeds, ..RateSettings::default() };
    match kind {
        "pl" => pl_rate_suite(seed, &settings),
        "convex" => convex_rate_suite(seed, &settings),
        "nonconvex" => nonconvex_rate_suite(seed, &settings),
        other => return Err(format!("unknown rate experiment `{other}`")),
    }
    .map_err(|e| e.to_string())
}

fn to_js<T: Serialize>(result: Result<T, String>) -> Result<String, JsError> {
    let value = result.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

/// Iterates of one run on the planar two-objective problem.
#[wasm_bindgen]
pub fn trajectory(m1: u32, m2: u32, blocks: u32, step: f64, outer: u32, noise: f64, seed: u32) -> Result<String, JsError> {
    to_js(run_trajectory([m1 as usize, m2 as usize], blocks as usize, step, outer as usize, noise, seed as u64))
}

/// Block-SMOO and weighted-sum fronts over every `(m1, p - m1)`, with metrics.
#[wasm_bindgen]
pub fn pareto_fronts(p: u32, steps: u32, step: f64, noise: f64, seed: u32) -> Result<String, JsError> {
    to_js(run_fronts(p as usize, steps as u64, step, noise, seed as u64))
}

/// Log-log rate fit for `pl`, `convex` or `nonconvex`.
#[wasm_bindgen]
pub fn rate(kind: &str, seeds: u32, seed: u32) -> Result<String, JsError> {
    to_js(run_rate(kind, seeds as usize, seed as u64))
}
