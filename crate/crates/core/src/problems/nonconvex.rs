use super::{FiniteSum, MooProblem, ProblemConstants, QuadSample, QuadraticMoo};
use crate::error::Result;
use crate::optimizer::FrequencyVector;
use crate::rng::StreamRng;

/// Smooth non-convex objectives `f_k(x) = q_k(x) + a_k Σ_i sin(ω x_i)` built on a
/// quadratic base. The sinusoid is bounded, so the weighted sum stays bounded
/// below, and it is non-convex whenever `a_k ω²` exceeds the base curvature.
#[derive(Debug, Clone)]
pub struct SinusoidalMoo {
    base: QuadraticMoo,
    amplitudes: Vec<f64>,
    frequency: f64,
}

impl SinusoidalMoo {
    pub fn new(base: QuadraticMoo, amplitudes: Vec<f64>, frequency: f64) -> Result<Self> {
        if amplitudes.len() != base.num_objectives() {
            return Err(crate::error::Error::dim("one amplitude per objective"));
        }
        Ok(Self { base, amplitudes, frequency })
    }

    pub fn base(&self) -> &QuadraticMoo {
        &self.base
    }

    pub fn smoothness(&self) -> f64 {
        let bump = self.amplitudes.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        self.base.smoothness() + bump * self.frequency * self.frequency
    }

    /// A lower bound on `inf F_m`: the quadratic minimum minus the largest
    /// possible sinusoid contribution.
    pub fn f_star_lower_bound(&self, freq: &FrequencyVector) -> Result<f64> {
        let (_, quad_min) = self.base.minimizer(freq)?;
        let n = self.dim() as f64;
        let bump: f64 = freq.weights().iter().zip(&self.amplitudes).map(|(w, a)| w * a.abs()).sum();
        Ok(quad_min - n * bump)
    }
}

impl MooProblem for SinusoidalMoo {
    type Sample = QuadSample;

    fn num_objectives(&self) -> usize {
        self.base.num_objectives()
    }

    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn batch_size(&self) -> usize {
        self.base.batch_size()
    }

    fn objective(&self, k: usize, x: &[f64]) -> f64 {
        let wiggle: f64 = x.iter().map(|&xi| (self.frequency * xi).sin()).sum();
        self.base.objective(k, x) + self.amplitudes[k] * wiggle
    }

    fn gradient(&self, k: usize, x: &[f64]) -> Vec<f64> {
        let mut g = self.base.gradient(k, x);
        let scale = self.amplitudes[k] * self.frequency;
        for (gi, &xi) in g.iter_mut().zip(x) {
            *gi += scale * (self.frequency * xi).cos();
        }
        g
    }

    fn draw_sample(&self, rng: &mut StreamRng) -> Result<QuadSample> {
        self.base.draw_sample(rng)
    }

    fn partial_gradient(&self, k: usize, block: &[usize], x: &[f64], sample: &QuadSample, out: &mut [f64]) {
        self.base.partial_gradient(k, block, x, sample, out);
        let scale = self.amplitudes[k] * self.frequency;
        for (o, &c) in out.iter_mut().zip(block) {
            *o += scale * (self.frequency * x[c]).cos();
        }
    }

    fn constants(&self) -> ProblemConstants {
        ProblemConstants {
            smoothness: Some(self.smoothness()),
            ..ProblemConstants::default()
        }
    }
}

impl FiniteSum for SinusoidalMoo {
    fn num_samples(&self) -> usize {
        self.base.num_samples()
    }

    fn sample_from_rows(&self, rows: Vec<usize>) -> QuadSample {
        self.base.sample_from_rows(rows)
    }
}
