use super::{FrontPoint, ParetoFront};
use crate::error::{Error, Result};

/// `a` dominates `b` when it is no worse everywhere and differs somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a != b
}

/// Indices of the points not dominated by any other; exact duplicates keep
/// their first occurrence.
pub fn nondominated_indices(points: &[Vec<f64>]) -> Result<Vec<usize>> {
    if let Some(first) = points.first() {
        if let Some(bad) = points.iter().find(|p| p.len() != first.len()) {
            return Err(Error::dim(format!("mixed objective counts {} and {}", first.len(), bad.len())));
        }
    }
    let mut keep = Vec::new();
    'candidates: for (i, p) in points.iter().enumerate() {
        for (j, other) in points.iter().enumerate() {
            if dominates(other, p) || (j < i && other == p) {
                continue 'candidates;
            }
        }
        keep.push(i);
    }
    Ok(keep)
}

pub fn nondominated_filter(front: &ParetoFront) -> Result<ParetoFront> {
    let vectors = front.objective_vectors();
    let points: Vec<FrontPoint> = nondominated_indices(&vectors)?
        .into_iter()
        .map(|i| front.points[i].clone())
        .collect();
    Ok(ParetoFront { origin: front.origin.clone(), points })
}
