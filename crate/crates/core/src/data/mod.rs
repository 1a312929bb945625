//! Datasets: the synthetic low-rank generator, the air-quality ingestion
//! pipeline, standardization, the on-disk cache, and minibatch sampling.

mod air_quality;
mod cache;
mod standardize;
mod synthetic;

pub use air_quality::{
    load_air_quality, preprocess_air_quality, AirQualitySchema, Preprocessed, RawRow, RawTable, POLLUTANTS, SCHEMA_JSON,
};
pub use cache::{read_cache, write_cache, CacheSidecar};
pub use standardize::StandardizationStats;
pub use synthetic::{generate_synthetic, SyntheticParams, SyntheticTruth};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Features and responses for one split.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

impl RegressionData {
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::dim(format!("X has {} rows but Y has {}", x.nrows(), y.nrows())));
        }
        Ok(Self { x, y })
    }

    pub fn num_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn num_responses(&self) -> usize {
        self.y.ncols()
    }

    /// The earliest `rows` rows.
    pub fn truncate(&self, rows: usize) -> Self {
        let rows = rows.min(self.num_rows());
        Self {
            x: self.x.rows(0, rows).into_owned(),
            y: self.y.rows(0, rows).into_owned(),
        }
    }

    /// Keeps only the listed response columns, in the given order.
    pub fn select_responses(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.num_responses()) {
            return Err(Error::dim(format!("response column {bad} out of range")));
        }
        Ok(Self {
            x: self.x.clone(),
            y: self.y.select_columns(columns),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    Synthetic { seed: u64, params: SyntheticParams },
    Files { digests: Vec<(String, String)> },
    Unknown,
}

/// Train and test splits; rows of the two are disjoint by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: RegressionData,
    pub test: RegressionData,
    pub feature_names: Vec<String>,
    pub response_names: Vec<String>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn truncate(&self, n_train: usize, n_test: usize) -> Self {
        Self {
            train: self.train.truncate(n_train),
            test: self.test.truncate(n_test),
            ..self.clone()
        }
    }

    pub fn select_responses(&self, columns: &[usize]) -> Result<Self> {
        Ok(Self {
            train: self.train.select_responses(columns)?,
            test: self.test.select_responses(columns)?,
            response_names: columns.iter().map(|&c| self.response_names[c].clone()).collect(),
            ..self.clone()
        })
    }
}

/// `batch` distinct row indices drawn uniformly from `0..rows`.
pub fn sample_minibatch(rows: usize, batch: usize, rng: &mut StreamRng) -> Result<Vec<usize>> {
    if batch == 0 || batch > rows {
        return Err(Error::Sampling(format!("cannot draw {batch} distinct rows from {rows}")));
    }
    Ok(rand::seq::index::sample(rng, rows, batch).into_vec())
}
