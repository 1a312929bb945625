use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Dataset, Provenance, RegressionData};
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub n_train: usize,
    pub n_test: usize,
    pub d: usize,
    pub q: usize,
    pub r: usize,
    pub noise_sigma: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            n_train: 1 << 14,
            n_test: 1 << 10,
            d: 400,
            q: 5,
            r: 3,
            noise_sigma: 0.05,
        }
    }
}

/// The low-rank factors behind a synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTruth {
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

fn gaussian(rows: usize, cols: usize, rng: &mut StreamRng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// `Y = X U* V* + ε` with standard normal `X`, `U*`, `V*` and `ε ~ N(0, σ² I)`.
pub fn generate_synthetic(seed: u64, params: &SyntheticParams) -> Result<(Dataset, SyntheticTruth)> {
    let SyntheticParams { n_train, n_test, d, q, r, noise_sigma } = *params;
    if d == 0 || q == 0 || r == 0 || n_train == 0 {
        return Err(Error::dim("synthetic dimensions must be positive"));
    }
    if r > d.min(q) {
        return Err(Error::dim(format!("rank {r} exceeds min(d, q) = {}", d.min(q))));
    }
    if noise_sigma.is_nan() || noise_sigma < 0.0 {
        return Err(Error::dim("noise level must be non-negative"));
    }
    let mut rng = stream(seed, 0, Purpose::Data);
    let u = gaussian(d, r, &mut rng);
    let v = gaussian(r, q, &mut rng);
    let w = &u * &v;
    let noise = Normal::new(0.0, noise_sigma).expect("validated sigma");
    let mut split = |rows: usize| {
        let x = gaussian(rows, d, &mut rng);
        let mut y = &x * &w;
        if noise_sigma > 0.0 {
            y.iter_mut().for_each(|v| *v += rng.sample(noise));
        }
        RegressionData { x, y }
    };
    let train = split(n_train);
    let test = split(n_test);
    let dataset = Dataset {
        train,
        test,
        feature_names: (0..d).map(|i| format!("x{i}")).collect(),
        response_names: (0..q).map(|k| format!("y{k}")).collect(),
        provenance: Provenance::Synthetic { seed, params: params.clone() },
    };
    Ok((dataset, SyntheticTruth { u, v }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{rrr_objective, LossNormalization};

    fn small() -> SyntheticParams {
        SyntheticParams { n_train: 64, n_test: 16, d: 10, q: 4, r: 2, noise_sigma: 0.05 }
    }

    #[test]
    fn shapes_and_determinism() {
        let (a, _) = generate_synthetic(3, &small()).unwrap();
        let (b, _) = generate_synthetic(3, &small()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.train.x.shape(), (64, 10));
        assert_eq!(a.test.y.shape(), (16, 4));
        let (c, _) = generate_synthetic(4, &small()).unwrap();
        assert_ne!(a.train.x, c.train.x);
    }

    #[test]
    fn noiseless_truth_has_zero_loss() {
        let params = SyntheticParams { noise_sigma: 0.0, ..small() };
        let (data, truth) = generate_synthetic(1, &params).unwrap();
        for k in 0..params.q {
            let loss = rrr_objective(k, &truth.u, &truth.v, &data.train, LossNormalization::Mean).unwrap();
            assert_eq!(loss, 0.0);
        }
    }

    #[test]
    fn invalid_dims() {
        assert!(generate_synthetic(0, &SyntheticParams { r: 5, ..small() }).is_err());
        assert!(generate_synthetic(0, &SyntheticParams { d: 0, ..small() }).is_err());
        assert!(generate_synthetic(0, &SyntheticParams { noise_sigma: -1.0, ..small() }).is_err());
    }

    #[test]
    fn default_truth_has_rank_three() {
        let params = SyntheticParams { n_train: 1, n_test: 1, ..SyntheticParams::default() };
        let (_, truth) = generate_synthetic(0, &params).unwrap();
        let w = &truth.u * &truth.v;
        assert_eq!(w.shape(), (400, 5));
        let sv = w.singular_values();
        let top = sv.max();
        let rank = sv.iter().filter(|&&s| s > 1e-8 * top).count();
        assert_eq!(rank, 3);
    }
}
