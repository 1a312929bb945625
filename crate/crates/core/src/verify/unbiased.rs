use crate::error::{Error, Result};
use crate::problems::FiniteSum;

/// Largest pool for which every minibatch is enumerated.
pub const MAX_ENUMERATED_SAMPLES: usize = 10;

fn for_each_subset(n: usize, b: usize, mut visit: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..b).collect();
    loop {
        visit(&idx);
        // advance to the next b-subset in lexicographic order
        let Some(pos) = (0..b).rev().find(|&i| idx[i] != i + n - b) else {
            return;
        };
        idx[pos] += 1;
        for i in pos + 1..b {
            idx[i] = idx[i - 1] + 1;
        }
    }
}

/// Averages the minibatch gradient of objective `k` over all `C(N, B)`
/// batches and returns the largest relative deviation from the full
/// gradient, `|avg − ∇f| / max(1, |∇f|)`.
pub fn unbiasedness_check<P: FiniteSum>(problem: &P, k: usize, x: &[f64], batch: usize) -> Result<f64> {
    let n = problem.num_samples();
    if n > MAX_ENUMERATED_SAMPLES {
        return Err(Error::Contract(format!(
            "{n} samples is too many to enumerate every batch (limit {MAX_ENUMERATED_SAMPLES}); use a Monte-Carlo estimate instead"
        )));
    }
    if batch == 0 || batch > n {
        return Err(Error::Sampling(format!("batch {batch} invalid for {n} samples")));
    }
    let dim = problem.dim();
    let all: Vec<usize> = (0..dim).collect();
    let mut sum = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    let mut count = 0usize;
    for_each_subset(n, batch, |rows| {
        let sample = problem.sample_from_rows(rows.to_vec());
        problem.partial_gradient(k, &all, x, &sample, &mut g);
        sum.iter_mut().zip(&g).for_each(|(s, gi)| *s += gi);
        count += 1;
    });
    let full = problem.gradient(k, x);
    Ok(sum
        .iter()
        .zip(&full)
        .map(|(s, f)| (s / count as f64 - f).abs() / f.abs().max(1.0))
        .fold(0.0, f64::max))
}
