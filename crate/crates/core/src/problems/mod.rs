//! Multi-objective problem oracles.
//!
//! A [`MooProblem`] exposes full-data objective values, exact gradients, and
//! block-partial stochastic gradients drawn from a declared sampling scheme.
//! All randomness enters through a caller-supplied stream, so oracles stay
//! read-only and can be shared between concurrent runs.

mod nonconvex;
mod quadratic;
mod rrr;
mod scalarized;

pub use nonconvex::SinusoidalMoo;
pub use quadratic::{pl_constant, GradientNoise, QuadSample, QuadraticMoo};
pub use rrr::{rrr_objective, LossNormalization, PartitionPreset, RrrLayout, RrrProblem};
pub use scalarized::Scalarized;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rng::StreamRng;

pub trait MooProblem: Sync {
    /// One realization of the randomness behind a stochastic gradient.
    type Sample;

    fn num_objectives(&self) -> usize;

    fn dim(&self) -> usize;

    /// Samples consumed by one stochastic gradient.
    fn batch_size(&self) -> usize;

    /// Full-data value of objective `k`.
    fn objective(&self, k: usize, x: &[f64]) -> f64;

    /// Exact full gradient of objective `k`.
    fn gradient(&self, k: usize, x: &[f64]) -> Vec<f64>;

    fn draw_sample(&self, rng: &mut StreamRng) -> Result<Self::Sample>;

    /// Writes the stochastic partial gradient of objective `k`, restricted to
    /// `block`, into `out` (same length as `block`).
    fn partial_gradient(
        &self,
        k: usize,
        block: &[usize],
        x: &[f64],
        sample: &Self::Sample,
        out: &mut [f64],
    );

    /// Work units for one partial gradient on a block of `block_len` coordinates.
    fn gradient_cost(&self, block_len: usize) -> u64 {
        (block_len * self.batch_size()) as u64
    }

    fn constants(&self) -> ProblemConstants {
        ProblemConstants::default()
    }
}

/// Problems whose randomness is a minibatch from a finite pool of samples.
pub trait FiniteSum: MooProblem {
    fn num_samples(&self) -> usize;

    fn sample_from_rows(&self, rows: Vec<usize>) -> Self::Sample;
}

/// Known analytic constants of an instance. Unknown entries are `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    pub smoothness: Option<f64>,
    pub sigma_sq: Option<f64>,
    pub mu: Option<f64>,
    pub f_star: Option<f64>,
    pub delta: Option<f64>,
}

/// `Σ w_k f_k(x)`.
pub fn weighted_objective<P: MooProblem + ?Sized>(problem: &P, weights: &[f64], x: &[f64]) -> f64 {
    weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w != 0.0)
        .map(|(k, &w)| w * problem.objective(k, x))
        .sum()
}

/// `Σ w_k ∇f_k(x)`.
pub fn weighted_gradient<P: MooProblem + ?Sized>(problem: &P, weights: &[f64], x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; problem.dim()];
    for (k, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (gi, dk) in g.iter_mut().zip(problem.gradient(k, x)) {
            *gi += w * dk;
        }
    }
    g
}

pub(crate) fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}
