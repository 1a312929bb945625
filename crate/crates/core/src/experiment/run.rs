use std::fs;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Algorithm, Budget, ExperimentConfig, LoadedProblem};
use crate::error::{Error, Result};
use crate::optimizer::{
    run_block_smoo_observed, BlockPartition, FrequencyVector, OptimizerConfig, OutputRule, SnapshotPolicy, StepSizeRule,
};
use crate::problems::{MooProblem, Scalarized};
use crate::rng::{stream, Purpose};
use crate::verify::par_map;

/// Losses at one checkpoint of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub algorithm: Algorithm,
    pub step_size: f64,
    pub seed: usize,
    pub checkpoint: usize,
    pub work_units: u64,
    pub steps: u64,
    pub train: Vec<f64>,
    pub test: Vec<f64>,
    pub train_weighted: f64,
    pub test_weighted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub algorithm: Algorithm,
    pub step_size: f64,
    pub seed: usize,
    pub rows: Vec<ResultRow>,
    pub work_units: u64,
    pub error: Option<String>,
}

impl CellResult {
    /// Weighted test loss at the end of the cell; `None` for failed cells.
    pub fn final_test_weighted(&self) -> Option<f64> {
        if self.error.is_some() {
            return None;
        }
        self.rows.last().map(|r| r.test_weighted).filter(|v| v.is_finite())
    }

    pub fn file_name(&self) -> String {
        format!("{}_step-{}_seed-{}.csv", self.algorithm.label(), self.step_size, self.seed)
    }
}

/// Work units a budget allows on `problem`, or `None` for wall-clock budgets.
pub fn budget_work_units(budget: &Budget, problem: &LoadedProblem) -> Option<u64> {
    match *budget {
        Budget::WorkUnits { value } => Some(value),
        Budget::DataPasses { passes } => {
            let samples = problem.num_train_samples().unwrap_or(1) as f64;
            Some((passes * samples * problem.dim() as f64).ceil() as u64)
        }
        Budget::WallClock { .. } => None,
    }
}

/// Initial point for seed `seed`: i.i.d. `N(0, init_std²)` coordinates, shared
/// by every algorithm and step size.
pub fn initial_point(root: u64, seed: u64, dim: usize, init_std: f64) -> Vec<f64> {
    let mut rng = stream(root, seed, Purpose::Init);
    match Normal::new(0.0, init_std) {
        Ok(normal) if init_std > 0.0 => (0..dim).map(|_| normal.sample(&mut rng)).collect(),
        _ => vec![0.0; dim],
    }
}

struct CellJob<'a> {
    cfg: &'a ExperimentConfig,
    algorithm: Algorithm,
    step_size: f64,
    seed: usize,
    partition: BlockPartition,
    freq: FrequencyVector,
    budget: Option<u64>,
}

fn drive<P: MooProblem>(
    problem: &P,
    partition: BlockPartition,
    freq: FrequencyVector,
    job: &CellJob<'_>,
    x0: Vec<f64>,
    mut checkpoint: impl FnMut(usize, &crate::optimizer::Progress<'_>),
) -> Result<u64> {
    let cfg = job.cfg;
    let mut opt = OptimizerConfig::new(usize::MAX, partition, freq, StepSizeRule::Fixed { alpha: job.step_size })
        .with_seed(cfg.seed)
        .with_output(OutputRule::LastIterate);
    opt.run_index = job.seed as u64;
    opt.snapshots = SnapshotPolicy::Endpoints;
    let thresholds = cfg.checkpoints;
    let mut next = 0usize;
    let result = match (job.budget, cfg.budget) {
        (Some(budget), _) => {
            opt.outer_iterations = budget.div_ceil(opt.outer_iteration_cost(problem).max(1)) as usize;
            opt.max_work_units = Some(budget);
            run_block_smoo_observed(problem, &opt, x0, |p| {
                let mut hit = None;
                while next <= thresholds && p.work_units >= (budget as u128 * next as u128).div_ceil(thresholds as u128) as u64 {
                    hit = Some(next);
                    next += 1;
                }
                if let Some(i) = hit {
                    checkpoint(i, p);
                }
                ControlFlow::Continue(())
            })
        }
        (None, Budget::WallClock { seconds }) => {
            let start = Instant::now();
            let total = Duration::from_secs_f64(seconds);
            run_block_smoo_observed(problem, &opt, x0, |p| {
                let elapsed = start.elapsed();
                let mut hit = None;
                while next <= thresholds && elapsed >= total.mul_f64(next as f64 / thresholds as f64) {
                    hit = Some(next);
                    next += 1;
                }
                if let Some(i) = hit {
                    checkpoint(i, p);
                }
                if elapsed >= total {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            })
        }
        (None, _) => unreachable!("only wall-clock budgets lack a work-unit total"),
    };
    result.map(|r| r.work_units)
}

fn run_cell(problem: &LoadedProblem, job: CellJob<'_>) -> CellResult {
    let weights = job.freq.weights();
    let x0 = initial_point(job.cfg.seed, job.seed as u64, problem.dim(), job.cfg.init_std);
    let mut rows: Vec<ResultRow> = Vec::new();
    let record = |i: usize, p: &crate::optimizer::Progress<'_>, rows: &mut Vec<ResultRow>| {
        let (train, test) = problem.evaluate(p.x);
        let dot = |v: &[f64]| v.iter().zip(&weights).map(|(a, w)| a * w).sum::<f64>();
        rows.push(ResultRow {
            algorithm: job.algorithm,
            step_size: job.step_size,
            seed: job.seed,
            checkpoint: i,
            work_units: p.work_units,
            steps: p.steps,
            train_weighted: dot(&train),
            test_weighted: dot(&test),
            train,
            test,
        });
    };
    let single = || FrequencyVector::new(vec![1]).expect("p = 1");
    let outcome = (|| -> Result<u64> {
        let full = BlockPartition::single(problem.dim())?;
        macro_rules! dispatch {
            ($p:expr) => {
                match job.algorithm {
                    Algorithm::BlockSmoo => drive($p, job.partition.clone(), job.freq.clone(), &job, x0.clone(), |i, p| record(i, p, &mut rows)),
                    Algorithm::FunctionAlternate => drive($p, full, job.freq.clone(), &job, x0.clone(), |i, p| record(i, p, &mut rows)),
                    Algorithm::WeightedSum => {
                        let s = Scalarized::new($p, weights.clone())?;
                        drive(&s, full, single(), &job, x0.clone(), |i, p| record(i, p, &mut rows))
                    }
                    Algorithm::BlockAlternate => {
                        let s = Scalarized::new($p, weights.clone())?;
                        drive(&s, job.partition.clone(), single(), &job, x0.clone(), |i, p| record(i, p, &mut rows))
                    }
                }
            };
        }
        match problem {
            LoadedProblem::Rrr { train, .. } => dispatch!(train),
            LoadedProblem::Quadratic(q) => dispatch!(q),
        }
    })();
    let (work_units, error) = match outcome {
        Ok(w) => (w, None),
        Err(e) => (rows.last().map_or(0, |r| r.work_units), Some(e.to_string())),
    };
    CellResult { algorithm: job.algorithm, step_size: job.step_size, seed: job.seed, rows, work_units, error }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub algorithm: Algorithm,
    pub step_size: f64,
    pub seed: usize,
    pub work_units: u64,
    pub final_test_weighted: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestStep {
    pub algorithm: Algorithm,
    /// `None` when every step size failed on some seed.
    pub step_size: Option<f64>,
    pub mean_final_test_weighted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub budget_work_units: Option<u64>,
    pub cells: Vec<CellSummary>,
    pub best: Vec<BestStep>,
}

impl ExperimentSummary {
    /// Per-seed final test losses of `algorithm` at its selected step size.
    pub fn final_losses_at_best(&self, algorithm: Algorithm) -> Vec<Option<f64>> {
        let Some(step) = self.best.iter().find(|b| b.algorithm == algorithm).and_then(|b| b.step_size) else {
            return Vec::new();
        };
        let mut cells: Vec<&CellSummary> =
            self.cells.iter().filter(|c| c.algorithm == algorithm && c.step_size == step).collect();
        cells.sort_by_key(|c| c.seed);
        cells.iter().map(|c| c.final_test_weighted).collect()
    }
}

/// Picks, per algorithm, the step size with the lowest mean final test
/// loss over seeds. A step size with any failed seed counts as infinite.
pub fn select_best_steps(cells: &[CellSummary], algorithms: &[Algorithm], steps: &[f64]) -> Vec<BestStep> {
    algorithms
        .iter()
        .map(|&algorithm| {
            let mut best = BestStep { algorithm, step_size: None, mean_final_test_weighted: None };
            for &step in steps {
                let finals: Vec<Option<f64>> = cells
                    .iter()
                    .filter(|c| c.algorithm == algorithm && c.step_size == step)
                    .map(|c| c.final_test_weighted)
                    .collect();
                let Some(values) = finals.iter().copied().collect::<Option<Vec<f64>>>() else {
                    continue;
                };
                if values.is_empty() {
                    continue;
                }
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                if best.mean_final_test_weighted.is_none_or(|b| mean < b) {
                    best.step_size = Some(step);
                    best.mean_final_test_weighted = Some(mean);
                }
            }
            best
        })
        .collect()
}

pub fn write_cell_csv(path: &Path, cell: &CellResult) -> Result<()> {
    let q = cell.rows.first().map_or(0, |r| r.train.len());
    let mut header = vec!["algorithm", "step_size", "seed", "checkpoint", "work_units", "steps"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    header.extend((1..=q).map(|k| format!("train_loss{k}")));
    header.extend((1..=q).map(|k| format!("test_loss{k}")));
    header.push("train_weighted".into());
    header.push("test_weighted".into());
    let csv_err = |e: csv::Error| Error::Io(e.into());
    let tmp = path.with_extension("csv.tmp");
    {
        let mut w = csv::Writer::from_path(&tmp).map_err(csv_err)?;
        w.write_record(&header).map_err(csv_err)?;
        for r in &cell.rows {
            let mut rec = vec![
                r.algorithm.label().to_string(),
                r.step_size.to_string(),
                r.seed.to_string(),
                r.checkpoint.to_string(),
                r.work_units.to_string(),
                r.steps.to_string(),
            ];
            rec.extend(r.train.iter().chain(&r.test).map(|v| format!("{v:e}")));
            rec.push(format!("{:e}", r.train_weighted));
            rec.push(format!("{:e}", r.test_weighted));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
    }
    fs::rename(tmp, path)?;
    Ok(())
}

pub(crate) fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_string_pretty(value)?)?;
    fs::rename(tmp, path)?;
    Ok(())
}

/// Runs every `(algorithm, step size, seed)` cell. With `out`, each cell's
/// checkpoints go to `out/cells/<cell>.csv` as soon as the cell finishes and
/// the summary to `out/summary.json`.
pub fn run_experiment(cfg: &ExperimentConfig, problem: &LoadedProblem, out: Option<&Path>) -> Result<(ExperimentSummary, Vec<CellResult>)> {
    cfg.validate()?;
    let q = problem.num_objectives();
    let freq = cfg.frequency_vector(q)?;
    let partition = problem.partition(cfg.partition)?;
    let budget = budget_work_units(&cfg.budget, problem);
    let cell_dir: Option<PathBuf> = out.map(|o| o.join("cells"));
    if let Some(dir) = &cell_dir {
        fs::create_dir_all(dir)?;
    }
    let mut jobs = Vec::new();
    for &algorithm in &cfg.algorithms {
        for &step_size in &cfg.step_sizes {
            for seed in 0..cfg.seeds {
                jobs.push((algorithm, step_size, seed));
            }
        }
    }
    let results: Vec<Result<CellResult>> = par_map(jobs.len(), |i| {
        let (algorithm, step_size, seed) = jobs[i];
        let job = CellJob { cfg, algorithm, step_size, seed, partition: partition.clone(), freq: freq.clone(), budget };
        let cell = run_cell(problem, job);
        if let Some(dir) = &cell_dir {
            write_cell_csv(&dir.join(cell.file_name()), &cell)?;
        }
        Ok(cell)
    });
    let cells = results.into_iter().collect::<Result<Vec<_>>>()?;
    let summaries: Vec<CellSummary> = cells
        .iter()
        .map(|c| CellSummary {
            algorithm: c.algorithm,
            step_size: c.step_size,
            seed: c.seed,
            work_units: c.work_units,
            final_test_weighted: c.final_test_weighted(),
            error: c.error.clone(),
        })
        .collect();
    let best = select_best_steps(&summaries, &cfg.algorithms, &cfg.step_sizes);
    let summary = ExperimentSummary { name: cfg.name.clone(), budget_work_units: budget, cells: summaries, best };
    if let Some(o) = out {
        write_json_atomic(&o.join("summary.json"), &summary)?;
    }
    Ok((summary, cells))
}
