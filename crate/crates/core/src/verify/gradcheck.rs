use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, StepLocation};
use crate::problems::{MooProblem, ProblemConstants};
use crate::rng::StreamRng;

/// Minimum number of coordinates a gradient check probes (all of them on
/// smaller problems).
pub const MIN_CHECKED_COORDINATES: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_coordinate: usize,
    pub step: f64,
    pub coordinates_checked: usize,
}

/// Compares the analytic gradient of objective `k` with central differences
/// on random coordinates. Relative error is `|a − fd| / max(1, |a|)`.
pub fn finite_difference_check<P: MooProblem>(
    problem: &P,
    k: usize,
    x: &[f64],
    step: f64,
    rng: &mut StreamRng,
) -> Result<GradCheckReport> {
    let n = problem.dim();
    if x.len() != n {
        return Err(Error::dim(format!("point has {} coordinates, problem has {n}", x.len())));
    }
    let analytic = problem.gradient(k, x);
    let coords: Vec<usize> = if n <= MIN_CHECKED_COORDINATES {
        (0..n).collect()
    } else {
        sample(rng, n, MIN_CHECKED_COORDINATES).into_vec()
    };
    let mut probe = x.to_vec();
    let mut report = GradCheckReport { max_relative_error: 0.0, worst_coordinate: 0, step, coordinates_checked: coords.len() };
    for &c in &coords {
        probe[c] = x[c] + step;
        let up = problem.objective(k, &probe);
        probe[c] = x[c] - step;
        let down = problem.objective(k, &probe);
        probe[c] = x[c];
        let fd = (up - down) / (2.0 * step);
        if !fd.is_finite() || !analytic[c].is_finite() {
            return Err(Error::NumericFailure(StepLocation { t: 0, i: c, j: k }));
        }
        let err = (analytic[c] - fd).abs() / analytic[c].abs().max(1.0);
        if err > report.max_relative_error || coords.len() == 1 {
            report.max_relative_error = err;
            report.worst_coordinate = c;
        }
    }
    Ok(report)
}

/// Wraps a problem and scales every gradient it reports. Used to plant a
/// known fault for the gradient checks to catch.
#[derive(Debug, Clone)]
pub struct FaultyGradient<P> {
    pub inner: P,
    pub factor: f64,
}

impl<P: MooProblem> MooProblem for FaultyGradient<P> {
    type Sample = P::Sample;

    fn num_objectives(&self) -> usize {
        self.inner.num_objectives()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn batch_size(&self) -> usize {
        self.inner.batch_size()
    }

    fn objective(&self, k: usize, x: &[f64]) -> f64 {
        self.inner.objective(k, x)
    }

    fn gradient(&self, k: usize, x: &[f64]) -> Vec<f64> {
        self.inner.gradient(k, x).into_iter().map(|g| g * self.factor).collect()
    }

    fn draw_sample(&self, rng: &mut StreamRng) -> Result<Self::Sample> {
        self.inner.draw_sample(rng)
    }

    fn partial_gradient(&self, k: usize, block: &[usize], x: &[f64], sample: &Self::Sample, out: &mut [f64]) {
        self.inner.partial_gradient(k, block, x, sample, out);
        out.iter_mut().for_each(|g| *g *= self.factor);
    }

    fn gradient_cost(&self, block_len: usize) -> u64 {
        self.inner.gradient_cost(block_len)
    }

    fn constants(&self) -> ProblemConstants {
        self.inner.constants()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticParams};
    use crate::problems::{GradientNoise, LossNormalization, QuadraticMoo, RrrProblem};
    use crate::rng::{stream, Purpose};
    use std::sync::Arc;

    #[test]
    fn quadratic_is_exact() {
        let mut rng = stream(1, 0, Purpose::Init);
        let p = QuadraticMoo::random(40, 2, 0.5, 3.0, 2.0, GradientNoise::Exact, &mut rng).unwrap();
        let x: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let r = finite_difference_check(&p, 1, &x, 1e-4, &mut rng).unwrap();
        assert_eq!(r.coordinates_checked, 32);
        assert!(r.max_relative_error < 1e-7, "{r:?}");
    }

    #[test]
    fn rrr_within_tolerance_and_fault_detected() {
        let params = SyntheticParams { n_train: 40, n_test: 10, d: 6, q: 3, r: 2, noise_sigma: 0.1 };
        let (data, _) = generate_synthetic(3, &params).unwrap();
        let p = RrrProblem::new(Arc::new(data.train), 2, 8, LossNormalization::Mean).unwrap();
        let mut rng = stream(2, 0, Purpose::Init);
        let x: Vec<f64> = (0..p.dim()).map(|i| ((i * 7) % 5) as f64 * 0.2 - 0.4).collect();
        let r = finite_difference_check(&p, 0, &x, 1e-6, &mut rng).unwrap();
        assert!(r.max_relative_error < 1e-5, "{r:?}");

        let faulty = FaultyGradient { inner: p, factor: 2.0 };
        let bad = finite_difference_check(&faulty, 0, &x, 1e-6, &mut rng).unwrap();
        assert!(bad.max_relative_error > 0.1, "{bad:?}");
    }
}
