use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step size as a function of the outer iteration `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepSizeRule {
    /// `c / sqrt(horizon)` at every iteration; `c = 1` is the non-convex and convex prescription.
    ConstantOverSqrtT { c: f64, horizon: usize },
    /// `2 / (mu (t + 1))`, the PL prescription.
    PlHarmonic { mu: f64 },
    /// A fixed per-step constant, as in the experiment grids.
    Fixed { alpha: f64 },
}

impl StepSizeRule {
    pub fn inverse_sqrt_horizon(horizon: usize) -> Self {
        StepSizeRule::ConstantOverSqrtT { c: 1.0, horizon }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepSizeRule::ConstantOverSqrtT { c, horizon } => c > 0.0 && c.is_finite() && horizon > 0,
            StepSizeRule::PlHarmonic { mu } => mu > 0.0 && mu.is_finite(),
            StepSizeRule::Fixed { alpha } => alpha > 0.0 && alpha.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config("step_rule", format!("{self:?} does not produce positive finite steps")))
        }
    }

    pub fn alpha(&self, t: usize) -> f64 {
        match *self {
            StepSizeRule::ConstantOverSqrtT { c, horizon } => c / (horizon as f64).sqrt(),
            StepSizeRule::PlHarmonic { mu } => 2.0 / (mu * (t as f64 + 1.0)),
            StepSizeRule::Fixed { alpha } => alpha,
        }
    }
}

/// Per-step constants used for the experiment grids.
pub const STEP_SIZE_GRID: [f64; 6] = [0.001, 0.002, 0.005, 0.01, 0.02, 0.05];
