use rand::Rng;
use serde::{Deserialize, Serialize};

use super::RunRecord;
use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// How the returned point is chosen from the outer start points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputRule {
    /// One of `x^{0,0,0}, …, x^{T−1,0,0}`, each with probability `1/T` (non-convex regime).
    UniformRandomIterate,
    /// Coordinate-wise mean of `x^{0,0,0}, …, x^{T−1,0,0}` (convex regime).
    AverageIterate,
    /// `x^{T,0,0}` (PL regime).
    #[default]
    LastIterate,
}

/// Applies `rule` to the snapshots of `record`.
pub fn select_output(record: &RunRecord, rule: OutputRule, rng: &mut StreamRng) -> Result<Vec<f64>> {
    if record.outer_points.is_empty() {
        return Err(Error::State("run record holds no snapshots".into()));
    }
    // Start points strictly before the final outer iteration; with a single
    // snapshot every rule collapses to it.
    let mut candidates: Vec<&Vec<f64>> = record
        .outer_points
        .iter()
        .zip(&record.snapshot_iterations)
        .filter(|(_, &t)| t < record.completed_outer)
        .map(|(x, _)| x)
        .collect();
    if candidates.is_empty() {
        candidates = record.outer_points.iter().collect();
    }
    match rule {
        OutputRule::LastIterate => Ok(if record.final_point.is_empty() {
            record.outer_points.last().expect("non-empty").clone()
        } else {
            record.final_point.clone()
        }),
        OutputRule::UniformRandomIterate => {
            let idx = rng.random_range(0..candidates.len());
            Ok(candidates[idx].clone())
        }
        OutputRule::AverageIterate => {
            let n = candidates[0].len();
            let mut mean = vec![0.0; n];
            for x in &candidates {
                for (m, v) in mean.iter_mut().zip(x.iter()) {
                    *m += v;
                }
            }
            let count = candidates.len() as f64;
            mean.iter_mut().for_each(|m| *m /= count);
            Ok(mean)
        }
    }
}
