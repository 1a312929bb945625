use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use super::par_map;
use crate::error::{Error, Result};
use crate::optimizer::{run_block_smoo_observed, OptimizerConfig, SnapshotPolicy};
use crate::problems::{norm_sq, weighted_gradient, weighted_objective, GradientNoise, MooProblem, QuadraticMoo};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentReport {
    pub outer_index: usize,
    pub trials: usize,
    pub alpha: f64,
    pub smoothness: f64,
    /// Measured second-moment bound: largest `‖∇f_k‖²` at any point where a
    /// gradient was taken during the checked iteration, plus the noise
    /// second moment.
    pub sigma_sq: f64,
    /// Mean of `F_m(x^{t+1,0,0})` over trials.
    pub lhs_mean: f64,
    pub lhs_stderr: f64,
    /// `E F_m(x^t) − ½ α E‖∇F_m(x^t)‖² + α² L σ² p² [s + L α s³/3]`.
    pub rhs: f64,
    pub passed: bool,
    /// The step exceeds `2/L`, where the bound is not expected to hold.
    pub out_of_regime: bool,
}

struct Trial {
    f_now: f64,
    grad_sq_now: f64,
    f_next: f64,
    max_grad_sq: f64,
}

/// Monte-Carlo check of the one-outer-iteration descent inequality at outer
/// index `t`, using `trials` independent runs from `x0` (run indices
/// `0..trials` under `config.seed`). Passes if the mean left side is at most
/// the right side plus three standard errors.
pub fn descent_bound_check(
    problem: &QuadraticMoo,
    config: &OptimizerConfig,
    x0: &[f64],
    t: usize,
    trials: usize,
) -> Result<DescentReport> {
    if trials < 2 {
        return Err(Error::Contract("descent check needs at least two trials".into()));
    }
    if matches!(problem.noise(), GradientNoise::Gaussian { .. }) {
        return Err(Error::Contract("unbounded Gaussian noise has no second-moment bound over the iterates".into()));
    }
    let weights = config.freq.weights();
    let q = problem.num_objectives();
    let p = config.freq.budget();
    let s = config.partition.num_blocks();
    let steps_before = (t * s * p) as u64;
    let steps_within = (s * p) as u64;

    let mut cfg = config.clone();
    cfg.outer_iterations = t + 1;
    cfg.snapshots = SnapshotPolicy::All;
    cfg.max_steps = None;
    cfg.max_work_units = None;

    let worst_grad = |x: &[f64]| (0..q).map(|k| norm_sq(&problem.gradient(k, x))).fold(0.0, f64::max);
    let results = par_map(trials, |trial| -> Result<Trial> {
        let mut run_cfg = cfg.clone();
        run_cfg.run_index = trial as u64;
        let mut max_grad_sq = 0.0f64;
        let record = run_block_smoo_observed(problem, &run_cfg, x0.to_vec(), |progress| {
            // gradients in iteration t are taken at every point from x^{t,0,0}
            // up to, but not including, x^{t+1,0,0}
            if progress.steps >= steps_before && progress.steps < steps_before + steps_within {
                max_grad_sq = max_grad_sq.max(worst_grad(progress.x));
            }
            ControlFlow::Continue(())
        })?;
        let now = &record.outer_points[t];
        let next = &record.outer_points[t + 1];
        Ok(Trial {
            f_now: weighted_objective(problem, &weights, now),
            grad_sq_now: norm_sq(&weighted_gradient(problem, &weights, now)),
            f_next: weighted_objective(problem, &weights, next),
            max_grad_sq,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let n = trials as f64;
    let mean = |f: &dyn Fn(&Trial) -> f64| results.iter().map(f).sum::<f64>() / n;
    let lhs_mean = mean(&|r| r.f_next);
    let var = results.iter().map(|r| (r.f_next - lhs_mean).powi(2)).sum::<f64>() / (n - 1.0);
    let lhs_stderr = (var / n).sqrt();

    let alpha = config.step_rule.alpha(t);
    let l = problem.smoothness();
    let sigma_sq = results.iter().map(|r| r.max_grad_sq).fold(0.0, f64::max) + problem.noise_second_moment();
    let (pf, sf) = (p as f64, s as f64);
    let rhs = mean(&|r| r.f_now) - 0.5 * alpha * mean(&|r| r.grad_sq_now)
        + alpha * alpha * l * sigma_sq * pf * pf * (sf + l * alpha * sf.powi(3) / 3.0);
    Ok(DescentReport {
        outer_index: t,
        trials,
        alpha,
        smoothness: l,
        sigma_sq,
        lhs_mean,
        lhs_stderr,
        rhs,
        passed: lhs_mean <= rhs + 3.0 * lhs_stderr,
        out_of_regime: alpha > 2.0 / l,
    })
}
