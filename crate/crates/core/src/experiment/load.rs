use std::path::Path;
use std::sync::Arc;

use super::{ExperimentConfig, ProblemConfig};
use crate::data::{generate_synthetic, read_cache, Dataset, SyntheticParams};
use crate::error::{Error, Result};
use crate::optimizer::BlockPartition;
use crate::problems::{GradientNoise, MooProblem, PartitionPreset, QuadraticMoo, RrrProblem};
use crate::rng::{stream, Purpose};

/// A configured problem, ready to optimize and evaluate.
#[derive(Debug, Clone)]
pub enum LoadedProblem {
    Rrr { train: RrrProblem, test: RrrProblem, dataset: Arc<Dataset> },
    Quadratic(QuadraticMoo),
}

impl LoadedProblem {
    /// Builds the problem a config describes; relative cache paths resolve
    /// against `base` (see [`ExperimentConfig::resolve_cache_path`]).
    pub fn load(cfg: &ExperimentConfig, base: &Path) -> Result<Self> {
        match &cfg.problem {
            ProblemConfig::Synthetic { data_seed, n_train, n_test, d, q, r, noise_sigma, rank } => {
                let params = SyntheticParams { n_train: *n_train, n_test: *n_test, d: *d, q: *q, r: *r, noise_sigma: *noise_sigma };
                let (dataset, _) = generate_synthetic(*data_seed, &params).map_err(|e| Error::config("problem", e.to_string()))?;
                Self::regression(dataset, rank.unwrap_or(*r), cfg)
            }
            ProblemConfig::Cache { path, rank, responses, n_train, n_test } => {
                let resolved = ExperimentConfig::resolve_cache_path(path, base);
                let mut dataset = read_cache(&resolved)?;
                if let Some(names) = responses {
                    let columns = names
                        .iter()
                        .map(|name| {
                            dataset.response_names.iter().position(|n| n == name).ok_or_else(|| {
                                Error::config("problem.responses", format!("no response named `{name}` in {}", resolved.display()))
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    dataset = dataset.select_responses(&columns)?;
                }
                let train_rows = n_train.unwrap_or(dataset.train.num_rows());
                let test_rows = n_test.unwrap_or(dataset.test.num_rows());
                dataset = dataset.truncate(train_rows, test_rows);
                Self::regression(dataset, *rank, cfg)
            }
            ProblemConfig::Quadratic { instance_seed, n, q, eig_lo, eig_hi, center_scale, noise_std } => {
                let mut rng = stream(*instance_seed, 0, Purpose::Data);
                let noise = if *noise_std > 0.0 { GradientNoise::Gaussian { std: *noise_std } } else { GradientNoise::Exact };
                let p = QuadraticMoo::random(*n, *q, *eig_lo, *eig_hi, *center_scale, noise, &mut rng)
                    .map_err(|e| Error::config("problem", e.to_string()))?;
                Ok(LoadedProblem::Quadratic(p))
            }
        }
    }

    fn regression(dataset: Dataset, rank: usize, cfg: &ExperimentConfig) -> Result<Self> {
        let batch = cfg.batch.min(dataset.train.num_rows());
        let train = RrrProblem::new(Arc::new(dataset.train.clone()), rank, batch, cfg.normalization)
            .map_err(|e| Error::config("problem", e.to_string()))?;
        let test = train.on_data(Arc::new(dataset.test.clone()))?;
        Ok(LoadedProblem::Rrr { train, test, dataset: Arc::new(dataset) })
    }

    pub fn num_objectives(&self) -> usize {
        match self {
            LoadedProblem::Rrr { train, .. } => train.num_objectives(),
            LoadedProblem::Quadratic(p) => p.num_objectives(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            LoadedProblem::Rrr { train, .. } => train.dim(),
            LoadedProblem::Quadratic(p) => p.dim(),
        }
    }

    /// Training rows, or `None` for problems without a dataset.
    pub fn num_train_samples(&self) -> Option<usize> {
        match self {
            LoadedProblem::Rrr { train, .. } => Some(train.data().num_rows()),
            LoadedProblem::Quadratic(_) => None,
        }
    }

    /// `{U, V}` or `{U, V rows}` for regression; for quadratics, two halves or
    /// one block per coordinate.
    pub fn partition(&self, preset: PartitionPreset) -> Result<BlockPartition> {
        match self {
            LoadedProblem::Rrr { train, .. } => Ok(train.layout().partition(preset)),
            LoadedProblem::Quadratic(p) => {
                let n = p.dim();
                match preset {
                    PartitionPreset::TwoBlock if n >= 2 => BlockPartition::contiguous(&[n / 2, n - n / 2]),
                    PartitionPreset::TwoBlock => BlockPartition::single(n),
                    PartitionPreset::RowBlocks => BlockPartition::contiguous(&vec![1; n]),
                }
            }
        }
    }

    /// Per-objective `(train, test)` losses at `x`.
    pub fn evaluate(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match self {
            LoadedProblem::Rrr { train, test, .. } => (train.objectives(x), test.objectives(x)),
            LoadedProblem::Quadratic(p) => {
                let f: Vec<f64> = (0..p.num_objectives()).map(|k| p.objective(k, x)).collect();
                (f.clone(), f)
            }
        }
    }
}
