use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{FiniteSum, MooProblem};
use crate::data::{sample_minibatch, RegressionData};
use crate::error::{Error, Result};
use crate::optimizer::BlockPartition;
use crate::rng::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossNormalization {
    /// `(1/N) ‖Y_k − X U V_k‖²`; minibatch estimates average over the batch.
    #[default]
    Mean,
    /// `‖Y_k − X U V_k‖²` summed over all rows.
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionPreset {
    /// `{U, V}`.
    #[default]
    TwoBlock,
    /// `{U, V row 1, …, V row r}`.
    RowBlocks,
}

/// Packing of `(U, V)` into the flat decision vector: `U` (d×r) row-major,
/// followed by `V` (r×q) row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RrrLayout {
    pub d: usize,
    pub r: usize,
    pub q: usize,
}

impl RrrLayout {
    pub fn dim(&self) -> usize {
        self.d * self.r + self.r * self.q
    }

    pub fn u_len(&self) -> usize {
        self.d * self.r
    }

    pub fn u_index(&self, i: usize, j: usize) -> usize {
        i * self.r + j
    }

    pub fn v_index(&self, j: usize, k: usize) -> usize {
        self.u_len() + j * self.q + k
    }

    pub fn pack(&self, u: &DMatrix<f64>, v: &DMatrix<f64>) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        for i in 0..self.d {
            for j in 0..self.r {
                x[self.u_index(i, j)] = u[(i, j)];
            }
        }
        for j in 0..self.r {
            for k in 0..self.q {
                x[self.v_index(j, k)] = v[(j, k)];
            }
        }
        x
    }

    pub fn unpack(&self, x: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let u = DMatrix::from_row_slice(self.d, self.r, &x[..self.u_len()]);
        let v = DMatrix::from_row_slice(self.r, self.q, &x[self.u_len()..]);
        (u, v)
    }

    pub fn partition(&self, preset: PartitionPreset) -> BlockPartition {
        let mut sizes = vec![self.u_len()];
        match preset {
            PartitionPreset::TwoBlock => sizes.push(self.r * self.q),
            PartitionPreset::RowBlocks => sizes.extend(std::iter::repeat_n(self.q, self.r)),
        }
        BlockPartition::contiguous(&sizes).expect("layout sizes are positive")
    }
}

/// Reduced-rank regression with one objective per response column:
/// `f_k(U, V) = ‖Y_k − X U V_k‖²`, normalized per [`LossNormalization`].
#[derive(Debug, Clone)]
pub struct RrrProblem {
    data: Arc<RegressionData>,
    layout: RrrLayout,
    batch: usize,
    normalization: LossNormalization,
}

impl RrrProblem {
    pub fn new(data: Arc<RegressionData>, rank: usize, batch: usize, normalization: LossNormalization) -> Result<Self> {
        if rank == 0 {
            return Err(Error::dim("rank must be positive"));
        }
        if data.num_rows() == 0 || data.num_features() == 0 || data.num_responses() == 0 {
            return Err(Error::dim("empty regression data"));
        }
        if batch == 0 || batch > data.num_rows() {
            return Err(Error::Sampling(format!("batch {batch} invalid for {} rows", data.num_rows())));
        }
        let layout = RrrLayout {
            d: data.num_features(),
            r: rank,
            q: data.num_responses(),
        };
        Ok(Self { data, layout, batch, normalization })
    }

    /// Same objectives evaluated on different data (e.g. the test split).
    pub fn on_data(&self, data: Arc<RegressionData>) -> Result<Self> {
        let batch = self.batch.min(data.num_rows());
        let p = Self::new(data, self.layout.r, batch, self.normalization)?;
        if p.layout != self.layout {
            return Err(Error::dim("evaluation data has different shape"));
        }
        Ok(p)
    }

    pub fn layout(&self) -> RrrLayout {
        self.layout
    }

    pub fn data(&self) -> &RegressionData {
        &self.data
    }

    pub fn normalization(&self) -> LossNormalization {
        self.normalization
    }

    fn value_scale(&self) -> f64 {
        match self.normalization {
            LossNormalization::Mean => 1.0 / self.data.num_rows() as f64,
            LossNormalization::Sum => 1.0,
        }
    }

    /// Every objective at once, sharing the product `XU`.
    pub fn objectives(&self, x: &[f64]) -> Vec<f64> {
        let (u, v) = self.layout.unpack(x);
        let pred = &self.data.x * u * v;
        let scale = self.value_scale();
        (0..self.layout.q)
            .map(|k| (self.data.y.column(k) - pred.column(k)).norm_squared() * scale)
            .collect()
    }

    /// Gradient on the rows `rows` (all rows when `None`), written into the
    /// coordinates listed in `block`.
    fn block_gradient(&self, k: usize, block: &[usize], x: &[f64], rows: Option<&[usize]>, out: &mut [f64]) {
        let lay = self.layout;
        let (u, v) = lay.unpack(x);
        let (xb, yk, count) = match rows {
            Some(rows) => (self.data.x.select_rows(rows), self.data.y.select_rows(rows).column(k).into_owned(), rows.len()),
            None => (self.data.x.clone(), self.data.y.column(k).into_owned(), self.data.num_rows()),
        };
        let scale = match self.normalization {
            LossNormalization::Mean => 2.0 / count as f64,
            LossNormalization::Sum => 2.0 * self.data.num_rows() as f64 / count as f64,
        };
        let vk: DVector<f64> = v.column(k).into_owned();
        let xu = &xb * &u;
        let residual = yk - &xu * &vk;
        let touches_u = block.iter().any(|&c| c < lay.u_len());
        let touches_v = block.iter().any(|&c| c >= lay.u_len());
        let xt_res = touches_u.then(|| xb.tr_mul(&residual));
        let xut_res = touches_v.then(|| xu.tr_mul(&residual));
        for (o, &c) in out.iter_mut().zip(block) {
            *o = if c < lay.u_len() {
                let (i, j) = (c / lay.r, c % lay.r);
                -scale * xt_res.as_ref().expect("U coordinate")[i] * vk[j]
            } else {
                let off = c - lay.u_len();
                let (j, col) = (off / lay.q, off % lay.q);
                if col == k {
                    -scale * xut_res.as_ref().expect("V coordinate")[j]
                } else {
                    0.0
                }
            };
        }
    }

    /// Gradient on an explicit minibatch, over all coordinates.
    pub fn minibatch_gradient(&self, k: usize, x: &[f64], rows: &[usize]) -> Result<Vec<f64>> {
        if rows.is_empty() {
            return Err(Error::Sampling("empty minibatch".into()));
        }
        let all: Vec<usize> = (0..self.layout.dim()).collect();
        let mut g = vec![0.0; all.len()];
        self.block_gradient(k, &all, x, Some(rows), &mut g);
        Ok(g)
    }
}

/// `(1/N)‖Y_k − X U V_k‖²` for one response, the stand-alone form of the objective.
pub fn rrr_objective(k: usize, u: &DMatrix<f64>, v: &DMatrix<f64>, data: &RegressionData, normalization: LossNormalization) -> Result<f64> {
    if u.nrows() != data.num_features() || u.ncols() != v.nrows() || v.ncols() != data.num_responses() || k >= v.ncols() {
        return Err(Error::dim("U, V, X, Y shapes are inconsistent"));
    }
    let residual = data.y.column(k) - &data.x * (u * v.column(k));
    let rss = residual.norm_squared();
    Ok(match normalization {
        LossNormalization::Mean => rss / data.num_rows() as f64,
        LossNormalization::Sum => rss,
    })
}

impl MooProblem for RrrProblem {
    type Sample = Vec<usize>;

    fn num_objectives(&self) -> usize {
        self.layout.q
    }

    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn batch_size(&self) -> usize {
        self.batch
    }

    fn objective(&self, k: usize, x: &[f64]) -> f64 {
        let (u, v) = self.layout.unpack(x);
        let residual = self.data.y.column(k) - &self.data.x * (u * v.column(k));
        residual.norm_squared() * self.value_scale()
    }

    fn gradient(&self, k: usize, x: &[f64]) -> Vec<f64> {
        let all: Vec<usize> = (0..self.layout.dim()).collect();
        let mut g = vec![0.0; all.len()];
        self.block_gradient(k, &all, x, None, &mut g);
        g
    }

    fn draw_sample(&self, rng: &mut StreamRng) -> Result<Vec<usize>> {
        sample_minibatch(self.data.num_rows(), self.batch, rng)
    }

    fn partial_gradient(&self, k: usize, block: &[usize], x: &[f64], sample: &Vec<usize>, out: &mut [f64]) {
        self.block_gradient(k, block, x, Some(sample), out);
    }
}

impl FiniteSum for RrrProblem {
    fn num_samples(&self) -> usize {
        self.data.num_rows()
    }

    fn sample_from_rows(&self, rows: Vec<usize>) -> Vec<usize> {
        rows
    }
}
