use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_HORIZONS: usize = 4;

/// Least-squares fit of `log(level) = a + slope · log(T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub horizons: Vec<usize>,
    pub levels: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
}

impl RateFit {
    /// Normal-approximation interval `slope ± z · stderr`.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        (self.slope - z * self.stderr, self.slope + z * self.stderr)
    }
}

pub fn estimate_rate_slope(horizons: &[usize], levels: &[f64]) -> Result<RateFit> {
    if horizons.len() != levels.len() {
        return Err(Error::dim("one level per horizon"));
    }
    if horizons.len() < MIN_HORIZONS {
        return Err(Error::Contract(format!("need at least {MIN_HORIZONS} horizons, got {}", horizons.len())));
    }
    if horizons.windows(2).any(|w| w[0] >= w[1]) || horizons[0] == 0 {
        return Err(Error::Contract("horizons must be positive and strictly increasing".into()));
    }
    if let Some(bad) = levels.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::Contract(format!("level {bad} is not positive")));
    }
    let xs: Vec<f64> = horizons.iter().map(|&t| (t as f64).ln()).collect();
    let ys: Vec<f64> = levels.iter().map(|l| l.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    Ok(RateFit { horizons: horizons.to_vec(), levels: levels.to_vec(), slope, intercept, stderr })
}
