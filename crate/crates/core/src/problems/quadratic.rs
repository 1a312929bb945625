use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{FiniteSum, MooProblem, ProblemConstants};
use crate::error::{Error, Result};
use crate::optimizer::FrequencyVector;
use crate::rng::StreamRng;

/// How stochastic gradients of a [`QuadraticMoo`] deviate from the exact ones.
#[derive(Debug, Clone, PartialEq)]
pub enum GradientNoise {
    Exact,
    /// Additive isotropic Gaussian noise with per-coordinate standard deviation `std`.
    Gaussian { std: f64 },
    /// Additive noise uniform on the ball of radius `radius`; bounded support.
    Ball { radius: f64 },
    /// Finite-sum form: sample `i` of objective `k` shifts the linear term by
    /// `offsets[k][i]` (centered over `i`); a minibatch of `batch` rows is drawn
    /// without replacement.
    FiniteSum { offsets: Vec<Vec<Vec<f64>>>, batch: usize },
}

impl GradientNoise {
    /// Random centered offsets for the finite-sum form.
    pub fn finite_sum(q: usize, n: usize, samples: usize, batch: usize, scale: f64, rng: &mut StreamRng) -> Self {
        let offsets = (0..q)
            .map(|_| {
                let mut rows: Vec<Vec<f64>> = (0..samples)
                    .map(|_| (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect())
                    .collect();
                for c in 0..n {
                    let mean = rows.iter().map(|r| r[c]).sum::<f64>() / samples as f64;
                    rows.iter_mut().for_each(|r| r[c] -= mean);
                }
                rows
            })
            .collect();
        GradientNoise::FiniteSum { offsets, batch }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuadSample {
    Exact,
    Additive(Vec<f64>),
    Rows(Vec<usize>),
}

/// Objectives `f_k(x) = ½ xᵀA_k x − b_kᵀx + c_k` with symmetric PSD `A_k`.
#[derive(Debug, Clone)]
pub struct QuadraticMoo {
    a: Vec<DMatrix<f64>>,
    b: Vec<DVector<f64>>,
    c: Vec<f64>,
    noise: GradientNoise,
}

impl QuadraticMoo {
    pub fn new(a: Vec<DMatrix<f64>>, b: Vec<DVector<f64>>, c: Vec<f64>, noise: GradientNoise) -> Result<Self> {
        let q = a.len();
        if q == 0 || b.len() != q || c.len() != q {
            return Err(Error::dim("need matching, non-empty lists of A_k, b_k, c_k"));
        }
        let n = a[0].nrows();
        for (k, (ak, bk)) in a.iter().zip(&b).enumerate() {
            if ak.nrows() != n || ak.ncols() != n || bk.len() != n {
                return Err(Error::dim(format!("objective {k} is not {n}-dimensional")));
            }
            if (ak - ak.transpose()).amax() > 1e-12 * ak.amax().max(1.0) {
                return Err(Error::DegenerateInstance(format!("A_{k} is not symmetric")));
            }
            let min_eig = SymmetricEigen::new(ak.clone()).eigenvalues.min();
            if min_eig < -1e-10 * ak.amax().max(1.0) {
                return Err(Error::DegenerateInstance(format!("A_{k} has eigenvalue {min_eig}")));
            }
        }
        match &noise {
            GradientNoise::FiniteSum { offsets, batch } => {
                if offsets.len() != q || offsets.iter().any(|o| o.is_empty() || o.iter().any(|r| r.len() != n)) {
                    return Err(Error::dim("finite-sum offsets must be q lists of n-vectors"));
                }
                let samples = offsets[0].len();
                if offsets.iter().any(|o| o.len() != samples) || *batch == 0 || *batch > samples {
                    return Err(Error::Sampling(format!("batch {batch} invalid for {samples} samples")));
                }
            }
            GradientNoise::Gaussian { std } if *std < 0.0 => return Err(Error::dim("negative noise std")),
            GradientNoise::Ball { radius } if *radius < 0.0 => return Err(Error::dim("negative noise radius")),
            _ => {}
        }
        Ok(Self { a, b, c, noise })
    }

    /// `f_k(x) = ½ (x − c_k)ᵀ diag(d_k) (x − c_k)`; each objective has minimum 0 at `c_k`.
    pub fn from_diagonals(diagonals: &[Vec<f64>], centers: &[Vec<f64>], noise: GradientNoise) -> Result<Self> {
        if diagonals.len() != centers.len() {
            return Err(Error::dim("one center per diagonal"));
        }
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut c = Vec::new();
        for (d, ctr) in diagonals.iter().zip(centers) {
            if d.len() != ctr.len() {
                return Err(Error::dim("diagonal and center lengths differ"));
            }
            let ak = DMatrix::from_diagonal(&DVector::from_column_slice(d));
            let ck = DVector::from_column_slice(ctr);
            let bk = &ak * &ck;
            c.push(0.5 * ck.dot(&bk));
            a.push(ak);
            b.push(bk);
        }
        Self::new(a, b, c, noise)
    }

    /// Random instance whose matrices have eigenvalues drawn uniformly in
    /// `[eig_lo, eig_hi]` under random rotations, and minimizers of the
    /// individual objectives spread with scale `center_scale`.
    pub fn random(
        n: usize,
        q: usize,
        eig_lo: f64,
        eig_hi: f64,
        center_scale: f64,
        noise: GradientNoise,
        rng: &mut StreamRng,
    ) -> Result<Self> {
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut c = Vec::new();
        for _ in 0..q {
            let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let rot = g.qr().q();
            let eig = DVector::from_fn(n, |_, _| rng.random_range(eig_lo..=eig_hi));
            let ak = &rot * DMatrix::from_diagonal(&eig) * rot.transpose();
            let ak = (&ak + ak.transpose()) * 0.5;
            let ck = DVector::from_fn(n, |_, _| center_scale * rng.sample::<f64, _>(StandardNormal));
            let bk = &ak * &ck;
            c.push(0.5 * ck.dot(&bk));
            a.push(ak);
            b.push(bk);
        }
        Self::new(a, b, c, noise)
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.a
    }

    pub fn noise(&self) -> &GradientNoise {
        &self.noise
    }

    pub fn with_noise(&self, noise: GradientNoise) -> Result<Self> {
        Self::new(self.a.clone(), self.b.clone(), self.c.clone(), noise)
    }

    /// Largest eigenvalue over all `A_k`: the common smoothness constant.
    pub fn smoothness(&self) -> f64 {
        self.a
            .iter()
            .map(|ak| SymmetricEigen::new(ak.clone()).eigenvalues.max())
            .fold(0.0, f64::max)
    }

    pub fn weighted_matrix(&self, weights: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        self.a
            .iter()
            .zip(weights)
            .fold(DMatrix::zeros(n, n), |acc, (ak, &w)| acc + ak * w)
    }

    fn weighted_vector(&self, weights: &[f64]) -> DVector<f64> {
        self.b
            .iter()
            .zip(weights)
            .fold(DVector::zeros(self.dim()), |acc, (bk, &w)| acc + bk * w)
    }

    /// `(x*, F*)` for the weighted-sum function induced by `freq`.
    pub fn minimizer(&self, freq: &FrequencyVector) -> Result<(Vec<f64>, f64)> {
        let w = freq.weights();
        let chol = self
            .weighted_matrix(&w)
            .cholesky()
            .ok_or_else(|| Error::DegenerateInstance("weighted matrix is singular".into()))?;
        let x_star = chol.solve(&self.weighted_vector(&w));
        let x_star: Vec<f64> = x_star.iter().copied().collect();
        let f_star = super::weighted_objective(self, &w, &x_star);
        Ok((x_star, f_star))
    }

    /// Upper bound on `E‖noise‖²` for one stochastic gradient.
    pub fn noise_second_moment(&self) -> f64 {
        let n = self.dim() as f64;
        match &self.noise {
            GradientNoise::Exact => 0.0,
            GradientNoise::Gaussian { std } => n * std * std,
            GradientNoise::Ball { radius } => n / (n + 2.0) * radius * radius,
            GradientNoise::FiniteSum { offsets, batch } => {
                let samples = offsets[0].len() as f64;
                let b = *batch as f64;
                let shrink = if samples > 1.0 { (samples - b) / (b * (samples - 1.0)) } else { 0.0 };
                offsets
                    .iter()
                    .map(|rows| rows.iter().map(|r| super::norm_sq(r)).sum::<f64>() / samples)
                    .fold(0.0, f64::max)
                    * shrink
            }
        }
    }

    /// Exact gradient plus one realization of the declared noise.
    pub fn quadratic_oracle(&self, k: usize, x: &[f64], rng: &mut StreamRng) -> Result<(f64, Vec<f64>)> {
        let sample = self.draw_sample(rng)?;
        let all: Vec<usize> = (0..self.dim()).collect();
        let mut g = vec![0.0; self.dim()];
        self.partial_gradient(k, &all, x, &sample, &mut g);
        Ok((self.objective(k, x), g))
    }
}

/// Minimum eigenvalue of `Σ (m_k/p) A_k`, the PL constant of the weighted sum.
pub fn pl_constant(problem: &QuadraticMoo, freq: &FrequencyVector) -> Result<f64> {
    if freq.num_objectives() != problem.num_objectives() {
        return Err(Error::dim("frequency vector length differs from objective count"));
    }
    let h = problem.weighted_matrix(&freq.weights());
    let eig = SymmetricEigen::new(h.clone()).eigenvalues;
    let scale = h.amax().max(f64::MIN_POSITIVE);
    let mu = eig.min();
    if mu <= 1e-12 * scale {
        return Err(Error::DegenerateInstance(format!("weighted matrix is singular (min eigenvalue {mu})")));
    }
    Ok(mu)
}

fn ball_sample(n: usize, radius: f64, rng: &mut StreamRng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let norm = super::norm_sq(&v).sqrt();
    let r: f64 = radius * rng.random::<f64>().powf(1.0 / n as f64);
    v.iter_mut().for_each(|x| *x *= r / norm);
    v
}

impl MooProblem for QuadraticMoo {
    type Sample = QuadSample;

    fn num_objectives(&self) -> usize {
        self.a.len()
    }

    fn dim(&self) -> usize {
        self.a[0].nrows()
    }

    fn batch_size(&self) -> usize {
        match &self.noise {
            GradientNoise::FiniteSum { batch, .. } => *batch,
            _ => 1,
        }
    }

    fn objective(&self, k: usize, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        0.5 * x.dot(&(&self.a[k] * &x)) - self.b[k].dot(&x) + self.c[k]
    }

    fn gradient(&self, k: usize, x: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(x);
        (&self.a[k] * &x - &self.b[k]).iter().copied().collect()
    }

    fn draw_sample(&self, rng: &mut StreamRng) -> Result<QuadSample> {
        let n = self.dim();
        Ok(match &self.noise {
            GradientNoise::Exact => QuadSample::Exact,
            GradientNoise::Gaussian { std } => {
                QuadSample::Additive((0..n).map(|_| std * rng.sample::<f64, _>(StandardNormal)).collect())
            }
            GradientNoise::Ball { radius } => QuadSample::Additive(ball_sample(n, *radius, rng)),
            GradientNoise::FiniteSum { offsets, batch } => {
                QuadSample::Rows(crate::data::sample_minibatch(offsets[0].len(), *batch, rng)?)
            }
        })
    }

    fn partial_gradient(&self, k: usize, block: &[usize], x: &[f64], sample: &QuadSample, out: &mut [f64]) {
        let ak = &self.a[k];
        for (o, &c) in out.iter_mut().zip(block) {
            // A_k is symmetric: column c equals row c and is contiguous.
            let row: f64 = ak.column(c).iter().zip(x).map(|(a, x)| a * x).sum();
            *o = row - self.b[k][c];
        }
        match (sample, &self.noise) {
            (QuadSample::Additive(noise), _) => {
                for (o, &c) in out.iter_mut().zip(block) {
                    *o += noise[c];
                }
            }
            (QuadSample::Rows(rows), GradientNoise::FiniteSum { offsets, .. }) => {
                let inv = 1.0 / rows.len() as f64;
                for (o, &c) in out.iter_mut().zip(block) {
                    *o -= rows.iter().map(|&i| offsets[k][i][c]).sum::<f64>() * inv;
                }
            }
            _ => {}
        }
    }

    fn constants(&self) -> ProblemConstants {
        ProblemConstants {
            smoothness: Some(self.smoothness()),
            ..ProblemConstants::default()
        }
    }
}

impl FiniteSum for QuadraticMoo {
    fn num_samples(&self) -> usize {
        match &self.noise {
            GradientNoise::FiniteSum { offsets, .. } => offsets[0].len(),
            _ => 1,
        }
    }

    fn sample_from_rows(&self, rows: Vec<usize>) -> QuadSample {
        match &self.noise {
            GradientNoise::FiniteSum { .. } => QuadSample::Rows(rows),
            _ => QuadSample::Exact,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    fn identity_problem(noise: GradientNoise) -> QuadraticMoo {
        QuadraticMoo::from_diagonals(&[vec![1.0, 1.0]], &[vec![0.0, 0.0]], noise).unwrap()
    }

    #[test]
    fn exact_gradient_of_identity() {
        let p = identity_problem(GradientNoise::Exact);
        let (_, g) = p.quadratic_oracle(0, &[3.0, 4.0], &mut stream(0, 0, Purpose::Minibatch)).unwrap();
        assert_eq!(g, vec![3.0, 4.0]);
        assert_eq!(p.objective(0, &[3.0, 4.0]), 12.5);
    }

    #[test]
    fn noise_mean_is_zero() {
        // Monte-Carlo mean of the noisy gradient within 4 standard errors of the exact one.
        for noise in [GradientNoise::Gaussian { std: 0.7 }, GradientNoise::Ball { radius: 2.0 }] {
            let p = identity_problem(noise);
            let mut rng = stream(9, 0, Purpose::Minibatch);
            let draws = 100_000;
            let x = [3.0, 4.0];
            let mut sum = [0.0; 2];
            let mut sum_sq = [0.0; 2];
            for _ in 0..draws {
                let (_, g) = p.quadratic_oracle(0, &x, &mut rng).unwrap();
                for c in 0..2 {
                    sum[c] += g[c];
                    sum_sq[c] += g[c] * g[c];
                }
            }
            for c in 0..2 {
                let mean = sum[c] / draws as f64;
                let var = sum_sq[c] / draws as f64 - mean * mean;
                let se = (var / draws as f64).sqrt();
                assert!((mean - x[c]).abs() < 4.0 * se, "coord {c}: {mean} vs {}", x[c]);
            }
        }
    }

    #[test]
    fn ball_noise_stays_in_ball() {
        let mut rng = stream(2, 0, Purpose::Minibatch);
        for _ in 0..1000 {
            let v = ball_sample(5, 0.3, &mut rng);
            assert!(crate::problems::norm_sq(&v).sqrt() <= 0.3 + 1e-15);
        }
    }

    #[test]
    fn pl_constant_examples() {
        let p = QuadraticMoo::from_diagonals(
            &[vec![1.0, 4.0], vec![2.0, 2.0]],
            &[vec![0.0; 2], vec![0.0; 2]],
            GradientNoise::Exact,
        )
        .unwrap();
        let freq = FrequencyVector::new(vec![1, 1]).unwrap();
        assert!((pl_constant(&p, &freq).unwrap() - 1.5).abs() < 1e-14);

        let eye = QuadraticMoo::from_diagonals(&[vec![1.0; 3], vec![1.0; 3]], &[vec![0.0; 3], vec![1.0; 3]], GradientNoise::Exact)
            .unwrap();
        for m in [vec![1, 1], vec![3, 1], vec![0, 5]] {
            let mu = pl_constant(&eye, &FrequencyVector::new(m).unwrap()).unwrap();
            assert!((mu - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn pl_constant_singular_instance() {
        let p = QuadraticMoo::from_diagonals(&[vec![1.0, 0.0], vec![2.0, 0.0]], &[vec![0.0; 2], vec![0.0; 2]], GradientNoise::Exact)
            .unwrap();
        let freq = FrequencyVector::new(vec![1, 1]).unwrap();
        assert!(matches!(pl_constant(&p, &freq), Err(Error::DegenerateInstance(_))));
    }

    /// Power iteration on the weighted matrix, independent of the symmetric eigen solver.
    fn min_eig_by_power_iteration(h: &DMatrix<f64>) -> f64 {
        let n = h.nrows();
        let mut v = DVector::from_fn(n, |i, _| 1.0 + i as f64 * 0.37);
        let mut lam_max = 0.0;
        for _ in 0..5000 {
            let w = h * &v;
            lam_max = w.norm() / v.norm();
            v = w.normalize();
        }
        let shifted = DMatrix::identity(n, n) * lam_max - h;
        let mut v = DVector::from_fn(n, |i, _| 1.0 - i as f64 * 0.21);
        let mut top = 0.0;
        for _ in 0..20000 {
            let w = &shifted * &v;
            top = v.dot(&w) / v.dot(&v);
            v = w.normalize();
        }
        lam_max - top
    }

    #[test]
    fn pl_constant_matches_power_iteration() {
        let mut rng = stream(4, 0, Purpose::Data);
        for n in [2, 3] {
            let p = QuadraticMoo::random(n, 2, 0.5, 3.0, 1.0, GradientNoise::Exact, &mut rng).unwrap();
            let freq = FrequencyVector::new(vec![3, 1]).unwrap();
            let mu = pl_constant(&p, &freq).unwrap();
            let oracle = min_eig_by_power_iteration(&p.weighted_matrix(&freq.weights()));
            assert!((mu - oracle).abs() < 1e-8, "{mu} vs {oracle}");
        }
    }

    #[test]
    fn pl_inequality_and_smoothness_hold_pointwise() {
        let mut rng = stream(6, 0, Purpose::Data);
        let p = QuadraticMoo::random(4, 2, 0.5, 3.0, 2.0, GradientNoise::Exact, &mut rng).unwrap();
        let freq = FrequencyVector::new(vec![2, 3]).unwrap();
        let w = freq.weights();
        let mu = pl_constant(&p, &freq).unwrap();
        let (_, f_star) = p.minimizer(&freq).unwrap();
        let l = p.smoothness();
        for _ in 0..1000 {
            let x: Vec<f64> = (0..4).map(|_| 5.0 * rng.sample::<f64, _>(StandardNormal)).collect();
            let y: Vec<f64> = (0..4).map(|_| 5.0 * rng.sample::<f64, _>(StandardNormal)).collect();
            let g = crate::problems::weighted_gradient(&p, &w, &x);
            let gap = crate::problems::weighted_objective(&p, &w, &x) - f_star;
            assert!(crate::problems::norm_sq(&g) >= 2.0 * mu * gap - 1e-9);
            for k in 0..2 {
                let gx = p.gradient(k, &x);
                let gy = p.gradient(k, &y);
                let dg: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a - b).collect();
                let dx: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
                let lhs = crate::problems::norm_sq(&dg).sqrt();
                let rhs = l * crate::problems::norm_sq(&dx).sqrt();
                assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
            }
        }
    }

    #[test]
    fn minimizer_of_weighted_diagonals() {
        let p = QuadraticMoo::from_diagonals(&[vec![1.0], vec![3.0]], &[vec![0.0], vec![4.0]], GradientNoise::Exact).unwrap();
        let (x, f) = p.minimizer(&FrequencyVector::new(vec![1, 1]).unwrap()).unwrap();
        // (0.5*1*0 + 0.5*3*4) / (0.5*1 + 0.5*3) = 3
        assert!((x[0] - 3.0).abs() < 1e-14);
        // 0.5*(0.5*9) + 0.5*(0.5*3*1) = 3
        assert!((f - 3.0).abs() < 1e-12);
    }
}
