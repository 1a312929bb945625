use super::{weighted_objective, MooProblem};
use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// The weighted sum `Σ w_k f_k` presented as a single objective.
///
/// Each stochastic gradient evaluates every component on the same sample, so
/// its cost is `q` times that of one component.
#[derive(Debug, Clone)]
pub struct Scalarized<'a, P> {
    inner: &'a P,
    weights: Vec<f64>,
}

impl<'a, P: MooProblem> Scalarized<'a, P> {
    pub fn new(inner: &'a P, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != inner.num_objectives() {
            return Err(Error::dim(format!(
                "{} weights for {} objectives",
                weights.len(),
                inner.num_objectives()
            )));
        }
        Ok(Self { inner, weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl<P: MooProblem> MooProblem for Scalarized<'_, P> {
    type Sample = P::Sample;

    fn num_objectives(&self) -> usize {
        1
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn batch_size(&self) -> usize {
        self.inner.batch_size()
    }

    fn objective(&self, _k: usize, x: &[f64]) -> f64 {
        weighted_objective(self.inner, &self.weights, x)
    }

    fn gradient(&self, _k: usize, x: &[f64]) -> Vec<f64> {
        super::weighted_gradient(self.inner, &self.weights, x)
    }

    fn draw_sample(&self, rng: &mut StreamRng) -> Result<Self::Sample> {
        self.inner.draw_sample(rng)
    }

    fn partial_gradient(&self, _k: usize, block: &[usize], x: &[f64], sample: &Self::Sample, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut part = vec![0.0; block.len()];
        for (k, &w) in self.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            self.inner.partial_gradient(k, block, x, sample, &mut part);
            for (o, g) in out.iter_mut().zip(&part) {
                *o += w * g;
            }
        }
    }

    fn gradient_cost(&self, block_len: usize) -> u64 {
        self.inner.gradient_cost(block_len) * self.inner.num_objectives() as u64
    }
}
