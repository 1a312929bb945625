use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Per-column location and scale, fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub x_mean: Vec<f64>,
    pub x_scale: Vec<f64>,
    pub y_mean: Vec<f64>,
    pub y_scale: Vec<f64>,
}

/// Mean and population standard deviation per column; zero-variance columns get scale 1.
fn column_stats(m: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = m.nrows() as f64;
    m.column_iter()
        .map(|col| {
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            (mean, if sd > 0.0 { sd } else { 1.0 })
        })
        .unzip()
}

fn apply(m: &mut DMatrix<f64>, mean: &[f64], scale: &[f64]) {
    for (c, mut col) in m.column_iter_mut().enumerate() {
        col.iter_mut().for_each(|v| *v = (*v - mean[c]) / scale[c]);
    }
}

fn invert(m: &mut DMatrix<f64>, mean: &[f64], scale: &[f64]) {
    for (c, mut col) in m.column_iter_mut().enumerate() {
        col.iter_mut().for_each(|v| *v = *v * scale[c] + mean[c]);
    }
}

impl StandardizationStats {
    pub fn fit(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Self {
        let (x_mean, x_scale) = column_stats(x);
        let (y_mean, y_scale) = column_stats(y);
        Self { x_mean, x_scale, y_mean, y_scale }
    }

    pub fn transform(&self, x: &mut DMatrix<f64>, y: &mut DMatrix<f64>) {
        apply(x, &self.x_mean, &self.x_scale);
        apply(y, &self.y_mean, &self.y_scale);
    }

    pub fn inverse(&self, x: &mut DMatrix<f64>, y: &mut DMatrix<f64>) {
        invert(x, &self.x_mean, &self.x_scale);
        invert(y, &self.y_mean, &self.y_scale);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_column_is_centered_only() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        let y = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 2.0]);
        let stats = StandardizationStats::fit(&x, &y);
        assert_eq!(stats.x_scale[1], 1.0);
        let (mut xs, mut ys) = (x.clone(), y.clone());
        stats.transform(&mut xs, &mut ys);
        assert!(xs.column(1).iter().all(|&v| v == 0.0));
    }

    proptest! {
        #[test]
        fn standardize_then_invert_round_trips(values in prop::collection::vec(-1e3f64..1e3, 12)) {
            let x = DMatrix::from_row_slice(4, 3, &values);
            let y = DMatrix::from_row_slice(4, 3, &values.iter().rev().copied().collect::<Vec<_>>());
            let stats = StandardizationStats::fit(&x, &y);
            let (mut xs, mut ys) = (x.clone(), y.clone());
            stats.transform(&mut xs, &mut ys);
            for col in xs.column_iter() {
                let mean = col.sum() / 4.0;
                prop_assert!(mean.abs() < 1e-9);
            }
            stats.inverse(&mut xs, &mut ys);
            for (a, b) in xs.iter().zip(x.iter()).chain(ys.iter().zip(y.iter())) {
                prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
            }
        }
    }
}
