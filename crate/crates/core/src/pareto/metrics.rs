use super::filter::nondominated_indices;
use crate::error::{Error, Result};

/// Objective vectors are compared for purity membership after rounding to
/// this many significant digits.
pub const PURITY_SIGNIFICANT_DIGITS: usize = 10;

fn round_significant(v: f64) -> f64 {
    // `{:.9e}` prints exactly ten significant digits
    format!("{:.*e}", PURITY_SIGNIFICANT_DIGITS - 1, v).parse().unwrap_or(v)
}

fn rounded(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    points.iter().map(|p| p.iter().map(|&v| round_significant(v)).collect()).collect()
}

fn filtered(points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    Ok(nondominated_indices(points)?.into_iter().map(|i| points[i].clone()).collect())
}

/// Share of `front`'s own nondominated points that survive in the
/// nondominated set of the union of `front` and every reference front.
pub fn purity(front: &[Vec<f64>], references: &[&[Vec<f64>]]) -> Result<f64> {
    let own = filtered(&rounded(front))?;
    if own.is_empty() {
        return Err(Error::UndefinedMetric("purity of an empty front".into()));
    }
    let mut union = rounded(front);
    for r in references {
        union.extend(rounded(r));
    }
    let truth = filtered(&union)?;
    let hits = own.iter().filter(|p| truth.contains(p)).count();
    Ok(hits as f64 / own.len() as f64)
}

fn deduplicated(front: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if let Some(first) = front.first() {
        if front.iter().any(|p| p.len() != first.len()) {
            return Err(Error::dim("mixed objective counts in front"));
        }
    }
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(front.len());
    for p in front {
        if !out.contains(p) {
            out.push(p.clone());
        }
    }
    if out.len() < 2 {
        return Err(Error::UndefinedMetric("spread needs at least two distinct points".into()));
    }
    Ok(out)
}

fn sorted_column(front: &[Vec<f64>], k: usize) -> Vec<f64> {
    let mut col: Vec<f64> = front.iter().map(|p| p[k]).collect();
    col.sort_by(f64::total_cmp);
    col
}

/// Largest gap between consecutive sorted coordinates, maximized over
/// objectives.
pub fn spread_gamma(front: &[Vec<f64>]) -> Result<f64> {
    let front = deduplicated(front)?;
    let gamma = (0..front[0].len())
        .map(|k| {
            sorted_column(&front, k)
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    Ok(gamma)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadDelta {
    pub value: f64,
    /// False when no reference extremes were supplied and the extreme
    /// terms were left out.
    pub used_extremes: bool,
}

/// Deviation of the sorted per-objective gaps from uniform spacing, with the
/// distances to the reference extremes `(lo_k, hi_k)` added when given.
/// Returns the maximum over objectives.
pub fn spread_delta(front: &[Vec<f64>], extremes: Option<&[(f64, f64)]>) -> Result<SpreadDelta> {
    let front = deduplicated(front)?;
    let q = front[0].len();
    if let Some(ext) = extremes {
        if ext.len() != q {
            return Err(Error::dim(format!("{} extremes for {q} objectives", ext.len())));
        }
    }
    let mut worst = 0.0f64;
    for k in 0..q {
        let col = sorted_column(&front, k);
        let gaps: Vec<f64> = col.windows(2).map(|w| w[1] - w[0]).collect();
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        let deviation: f64 = gaps.iter().map(|g| (g - mean).abs()).sum();
        let d_ext = extremes.map_or(0.0, |ext| {
            let (lo, hi) = ext[k];
            (col[0] - lo).abs() + (hi - col[col.len() - 1]).abs()
        });
        let denom = d_ext + gaps.len() as f64 * mean;
        let delta_k = if denom > 0.0 { (d_ext + deviation) / denom } else { 0.0 };
        worst = worst.max(delta_k);
    }
    Ok(SpreadDelta { value: worst, used_extremes: extremes.is_some() })
}
