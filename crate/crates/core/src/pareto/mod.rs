//! Pareto-front approximation: frequency-vector enumeration, sweeps over
//! `m`, nondominated filtering, and the purity/spread quality metrics.

mod enumerate;
mod filter;
mod io;
mod metrics;
mod sweep;

pub use enumerate::enumerate_frequency_vectors;
pub use filter::{dominates, nondominated_filter, nondominated_indices};
pub use io::{read_front_csv, write_front_csv, FrontMetrics, MetricsSummary};
pub use metrics::{purity, spread_delta, spread_gamma, SpreadDelta, PURITY_SIGNIFICANT_DIGITS};
pub use sweep::{run_sweep, Comparator, SweepFailure, SweepOutcome, SweepSettings};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontPoint {
    pub objectives: Vec<f64>,
    pub freq: Vec<usize>,
    pub seed: u64,
    pub work_units: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParetoFront {
    pub origin: String,
    pub points: Vec<FrontPoint>,
}

impl ParetoFront {
    pub fn objective_vectors(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.objectives.clone()).collect()
    }
}
