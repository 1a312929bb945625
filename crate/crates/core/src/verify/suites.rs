//! Ready-made verification suites with pinned instances and tolerances.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use super::{
    descent_bound_check, estimate_rate_slope, finite_difference_check, mapping_invariance, par_map, reference_bcd,
    reference_sgd, unbiasedness_check, DescentReport, FaultyGradient, GradCheckReport, RateFit,
};
use crate::data::{generate_synthetic, RegressionData, SyntheticParams};
use crate::error::{Error, Result};
use crate::optimizer::{
    run_block_smoo, run_block_smoo_observed, BlockPartition, FrequencyVector, OptimizerConfig, OutputRule,
    SnapshotPolicy, StepSizeRule,
};
use crate::problems::{
    norm_sq, pl_constant, weighted_gradient, weighted_objective, GradientNoise, LossNormalization, MooProblem,
    QuadraticMoo, RrrProblem, SinusoidalMoo,
};
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Reductions,
    Mapping,
    Gradients,
    Unbiasedness,
    Descent,
    RatePl,
    RateConvex,
    RateNonconvex,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Reductions,
        Suite::Mapping,
        Suite::Gradients,
        Suite::Unbiasedness,
        Suite::Descent,
        Suite::RatePl,
        Suite::RateConvex,
        Suite::RateNonconvex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Reductions => "reductions",
            Suite::Mapping => "mapping",
            Suite::Gradients => "gradients",
            Suite::Unbiasedness => "unbiasedness",
            Suite::Descent => "descent",
            Suite::RatePl => "rate-pl",
            Suite::RateConvex => "rate-convex",
            Suite::RateNonconvex => "rate-nonconvex",
        }
    }

    /// Accepts a suite name, `rates` for the three rate suites, or `all`.
    pub fn parse_selector(selector: &str) -> Result<Vec<Suite>> {
        match selector {
            "all" => Ok(Suite::ALL.to_vec()),
            "rates" => Ok(vec![Suite::RatePl, Suite::RateConvex, Suite::RateNonconvex]),
            other => Suite::ALL
                .into_iter()
                .find(|s| s.name() == other)
                .map(|s| vec![s])
                .ok_or_else(|| Error::config("suite", format!("unknown suite `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    pub root_seed: u64,
    pub rate: RateSettings,
    pub descent_trials: usize,
    /// Doubles every gradient in the gradient suite, which must then fail.
    pub planted_fault: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { root_seed: 2024, rate: RateSettings::default(), descent_trials: 500, planted_fault: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSettings {
    pub horizons: Vec<usize>,
    pub seeds: usize,
}

impl Default for RateSettings {
    fn default() -> Self {
        Self { horizons: vec![200, 400, 800, 1600, 3200], seeds: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub passed: bool,
    pub details: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub passed: bool,
    pub suites: Vec<SuiteOutcome>,
}

pub fn run_suites(suites: &[Suite], options: &SuiteOptions) -> VerificationReport {
    let outcomes: Vec<SuiteOutcome> = suites
        .iter()
        .map(|&suite| {
            let result = match suite {
                Suite::Reductions => reductions_suite(options.root_seed).map(|r| (r.passed(), to_json(&r))),
                Suite::Mapping => mapping_suite(options.root_seed).map(|r| (r.passed, to_json(&r))),
                Suite::Gradients => gradient_suite(options.root_seed, options.planted_fault).map(|r| (r.passed, to_json(&r))),
                Suite::Unbiasedness => unbiasedness_suite(options.root_seed).map(|r| (r.passed, to_json(&r))),
                Suite::Descent => descent_suite(options.root_seed, options.descent_trials).map(|r| (r.passed, to_json(&r))),
                Suite::RatePl => pl_rate_suite(options.root_seed, &options.rate).map(|r| (r.passed, to_json(&r))),
                Suite::RateConvex => convex_rate_suite(options.root_seed, &options.rate).map(|r| (r.passed, to_json(&r))),
                Suite::RateNonconvex => {
                    nonconvex_rate_suite(options.root_seed, &options.rate).map(|r| (r.passed, to_json(&r)))
                }
            };
            match result {
                Ok((passed, details)) => SuiteOutcome { suite, passed, details },
                Err(e) => SuiteOutcome { suite, passed: false, details: serde_json::json!({ "error": e.to_string() }) },
            }
        })
        .collect();
    VerificationReport { passed: outcomes.iter().all(|o| o.passed), suites: outcomes }
}

fn to_json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).unwrap_or(serde_json::Value::Null)
}

// ---------------------------------------------------------------- reductions

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub steps: u64,
    pub sgd_identical: bool,
    pub bcd_identical: bool,
}

impl ReductionReport {
    pub fn passed(&self) -> bool {
        self.sgd_identical && self.bcd_identical
    }
}

/// 200 noisy steps with `(s=1, q=1)` against reference SGD and with
/// `(s=3, q=1)` against reference BCD; trajectories must match bit for bit.
pub fn reductions_suite(seed: u64) -> Result<ReductionReport> {
    let mut rng = stream(seed, 0, Purpose::Init);
    let problem = QuadraticMoo::random(6, 1, 0.5, 2.0, 1.0, GradientNoise::Gaussian { std: 0.2 }, &mut rng)?;
    let x0 = vec![1.5; 6];
    let make = |partition: BlockPartition, outer: usize| {
        OptimizerConfig::new(outer, partition, FrequencyVector::new(vec![1]).expect("p = 1"), StepSizeRule::Fixed { alpha: 0.05 })
            .with_seed(seed)
    };
    let sgd_cfg = make(BlockPartition::single(6)?, 200);
    let engine = run_block_smoo(&problem, &sgd_cfg, x0.clone())?;
    let reference = reference_sgd(&problem, &sgd_cfg, x0.clone())?;
    let sgd_identical = engine.outer_points == reference.outer_points && engine.final_point == reference.final_point;

    // three blocks, one step each per outer iteration: 200 steps over ~67 cycles
    let bcd_cfg = make(BlockPartition::contiguous(&[2, 1, 3])?, 67);
    let engine = run_block_smoo(&problem, &bcd_cfg, x0.clone())?;
    let reference = reference_bcd(&problem, &bcd_cfg, x0)?;
    let bcd_identical = engine.outer_points == reference.outer_points && engine.final_point == reference.final_point;
    Ok(ReductionReport { steps: 200, sgd_identical, bcd_identical })
}

// ------------------------------------------------------------------- mapping

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingReport {
    pub cases: Vec<(Vec<usize>, f64)>,
    pub tolerance: f64,
    pub passed: bool,
}

pub const MAPPING_TOLERANCE: f64 = 1e-12;

/// For each frequency vector, 10 random admissible mappings evaluated on a
/// random quadratic with as many objectives.
pub fn mapping_suite(seed: u64) -> Result<MappingReport> {
    let vectors = [vec![5, 15], vec![2, 2, 2, 2, 2], vec![0, 3, 1]];
    let mut cases = Vec::new();
    for (i, m) in vectors.iter().enumerate() {
        let mut rng = stream(seed, i as u64, Purpose::Init);
        let problem = QuadraticMoo::random(5, m.len(), 0.2, 3.0, 2.0, GradientNoise::Exact, &mut rng)?;
        let x: Vec<f64> = (0..5).map(|c| (c as f64 + 1.0) * 0.7 - 2.0).collect();
        let freq = FrequencyVector::new(m.clone())?;
        let mut pi_rng = stream(seed, i as u64, Purpose::IndexMapping);
        cases.push((m.clone(), mapping_invariance(&problem, &freq, &x, 10, &mut pi_rng)?));
    }
    let passed = cases.iter().all(|(_, dev)| *dev <= MAPPING_TOLERANCE);
    Ok(MappingReport { cases, tolerance: MAPPING_TOLERANCE, passed })
}

// ----------------------------------------------------------------- gradients

pub const QUADRATIC_GRAD_TOLERANCE: f64 = 1e-7;
pub const RRR_GRAD_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub quadratic: Vec<GradCheckReport>,
    pub rrr: Vec<GradCheckReport>,
    pub planted_fault: bool,
    pub passed: bool,
}

fn check_all<P: MooProblem>(problem: &P, x: &[f64], step: f64, seed: u64) -> Result<Vec<GradCheckReport>> {
    let mut rng = stream(seed, 1, Purpose::Init);
    (0..problem.num_objectives()).map(|k| finite_difference_check(problem, k, x, step, &mut rng)).collect()
}

pub fn gradient_suite(seed: u64, planted_fault: bool) -> Result<GradientReport> {
    let factor = if planted_fault { 2.0 } else { 1.0 };
    let mut rng = stream(seed, 0, Purpose::Init);
    let quad = QuadraticMoo::random(40, 3, 0.5, 3.0, 2.0, GradientNoise::Exact, &mut rng)?;
    let xq: Vec<f64> = (0..40).map(|i| (i as f64 * 0.61).cos() * 2.0).collect();
    let quadratic = check_all(&FaultyGradient { inner: quad, factor }, &xq, 1e-4, seed)?;

    let params = SyntheticParams { n_train: 64, n_test: 8, d: 8, q: 3, r: 2, noise_sigma: 0.1 };
    let (data, _) = generate_synthetic(seed, &params)?;
    let mut rrr_problems = Vec::new();
    for norm in [LossNormalization::Mean, LossNormalization::Sum] {
        rrr_problems.push(RrrProblem::new(std::sync::Arc::new(data.train.clone()), 2, 16, norm)?);
    }
    let mut rrr = Vec::new();
    for p in rrr_problems {
        let xr: Vec<f64> = (0..p.dim()).map(|i| ((i * 5) % 7) as f64 * 0.15 - 0.45).collect();
        rrr.extend(check_all(&FaultyGradient { inner: p, factor }, &xr, 1e-6, seed)?);
    }
    let passed = quadratic.iter().all(|r| r.max_relative_error < QUADRATIC_GRAD_TOLERANCE)
        && rrr.iter().all(|r| r.max_relative_error < RRR_GRAD_TOLERANCE);
    Ok(GradientReport { quadratic, rrr, planted_fault, passed })
}

// -------------------------------------------------------------- unbiasedness

pub const UNBIASED_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnbiasednessReport {
    /// `(label, N, B, max deviation)` per case.
    pub cases: Vec<(String, usize, usize, f64)>,
    pub passed: bool,
}

pub fn unbiasedness_suite(seed: u64) -> Result<UnbiasednessReport> {
    let mut cases = Vec::new();
    let mut rng = stream(seed, 0, Purpose::Data);
    for (n, b) in [(4, 2), (4, 4), (10, 3)] {
        let x = nalgebra::DMatrix::from_fn(n, 3, |i, j| ((i * 3 + j * 7) % 11) as f64 / 5.0 - 1.0);
        let y = nalgebra::DMatrix::from_fn(n, 2, |i, j| ((i * 5 + j * 2) % 7) as f64 / 3.0 - 1.0);
        let data = RegressionData::new(x, y)?;
        let p = RrrProblem::new(std::sync::Arc::new(data), 1, b, LossNormalization::Mean)?;
        let point: Vec<f64> = (0..p.dim()).map(|i| 0.3 * i as f64 - 0.5).collect();
        let dev = (0..2).map(|k| unbiasedness_check(&p, k, &point, b)).collect::<Result<Vec<_>>>()?;
        cases.push(("rrr".to_string(), n, b, dev.into_iter().fold(0.0, f64::max)));
    }
    let noise = GradientNoise::finite_sum(2, 4, 6, 3, 0.5, &mut rng);
    let quad = QuadraticMoo::from_diagonals(&[vec![1.0, 2.0, 0.5, 1.0], vec![0.5, 1.0, 2.0, 3.0]], &[vec![0.0; 4], vec![1.0; 4]], noise)?;
    let dev = (0..2).map(|k| unbiasedness_check(&quad, k, &[0.3, -0.1, 2.0, 1.0], 3)).collect::<Result<Vec<_>>>()?;
    cases.push(("quadratic".to_string(), 6, 3, dev.into_iter().fold(0.0, f64::max)));
    let passed = cases.iter().all(|c| c.3 < UNBIASED_TOLERANCE);
    Ok(UnbiasednessReport { cases, passed })
}

// ------------------------------------------------------------------- descent

/// The pinned two-block instance for the descent check: `n = 4`, `s = 2`,
/// `m = (1, 1)`, bounded ball noise.
pub fn descent_instance() -> Result<(QuadraticMoo, OptimizerConfig, Vec<f64>)> {
    let problem = QuadraticMoo::from_diagonals(
        &[vec![1.0, 2.0, 1.5, 0.5], vec![2.0, 0.5, 1.0, 1.0]],
        &[vec![1.0, 0.0, -1.0, 0.5], vec![0.0, 1.0, 0.5, -1.0]],
        GradientNoise::Ball { radius: 1.0 },
    )?;
    let config = OptimizerConfig::new(
        1,
        BlockPartition::contiguous(&[2, 2])?,
        FrequencyVector::new(vec![1, 1])?,
        StepSizeRule::Fixed { alpha: 0.05 },
    );
    Ok((problem, config, vec![3.0, -2.0, 1.0, 2.0]))
}

pub fn descent_suite(seed: u64, trials: usize) -> Result<DescentReport> {
    let (problem, config, x0) = descent_instance()?;
    descent_bound_check(&problem, &config.with_seed(seed), &x0, 5, trials)
}

// --------------------------------------------------------------------- rates

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub fit: RateFit,
    pub seeds: usize,
    pub accepted: SlopeRange,
    /// 95% normal-approximation interval on the slope.
    pub interval: (f64, f64),
    /// Evaluated right side of the rate bound per horizon, when checked.
    pub bound: Option<Vec<f64>>,
    pub below_bound: Option<bool>,
    pub passed: bool,
}

impl RateReport {
    fn new(fit: RateFit, seeds: usize, accepted: SlopeRange, bound: Option<Vec<f64>>) -> Self {
        let below_bound = bound.as_ref().map(|b| fit.levels.iter().zip(b).all(|(l, b)| l <= b));
        let passed = accepted.contains(fit.slope) && below_bound.unwrap_or(true);
        let interval = fit.interval(1.96);
        Self { fit, seeds, accepted, interval, bound, below_bound, passed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeRange {
    pub min: Option<f64>,
    pub max: f64,
}

impl SlopeRange {
    pub fn contains(&self, slope: f64) -> bool {
        self.min.is_none_or(|m| slope >= m) && slope <= self.max
    }
}

pub const PL_SLOPE_RANGE: SlopeRange = SlopeRange { min: Some(-1.25), max: -0.75 };
pub const CONVEX_SLOPE_RANGE: SlopeRange = SlopeRange { min: Some(-0.7), max: -0.3 };
pub const NONCONVEX_SLOPE_RANGE: SlopeRange = SlopeRange { min: None, max: -0.3 };

fn mean_over_runs(settings: &RateSettings, level: impl Fn(usize, u64) -> Result<f64> + Sync) -> Result<Vec<f64>> {
    let h = settings.horizons.len();
    let cells = par_map(h * settings.seeds, |cell| level(settings.horizons[cell / settings.seeds], (cell % settings.seeds) as u64));
    let cells = cells.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(cells.chunks(settings.seeds).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect())
}

/// Well-conditioned two-objective quadratic with distinct minimizers, split
/// into two blocks, with ball noise.
pub fn pl_instance() -> Result<(QuadraticMoo, BlockPartition, FrequencyVector)> {
    let problem = QuadraticMoo::from_diagonals(
        &[vec![1.0, 2.0, 1.5, 1.0], vec![2.0, 1.0, 1.0, 1.5]],
        &[vec![1.0, 0.0, -1.0, 0.5], vec![0.0, 1.0, 0.5, -1.0]],
        GradientNoise::Ball { radius: 1.0 },
    )?;
    Ok((problem, BlockPartition::contiguous(&[2, 2])?, FrequencyVector::new(vec![1, 1])?))
}

/// Optimality gap of the last iterate under `α_t = 2/(μ(t+1))`.
pub fn pl_rate_suite(seed: u64, settings: &RateSettings) -> Result<RateReport> {
    let (problem, partition, freq) = pl_instance()?;
    let mu = pl_constant(&problem, &freq)?;
    let (_, f_star) = problem.minimizer(&freq)?;
    let weights = freq.weights();
    let x0 = vec![3.0, -3.0, 3.0, -3.0];
    let levels = mean_over_runs(settings, |horizon, run| {
        let mut cfg = OptimizerConfig::new(horizon, partition.clone(), freq.clone(), StepSizeRule::PlHarmonic { mu })
            .with_seed(seed)
            .with_output(OutputRule::LastIterate);
        cfg.run_index = run;
        cfg.snapshots = SnapshotPolicy::Endpoints;
        let record = run_block_smoo(&problem, &cfg, x0.clone())?;
        Ok(weighted_objective(&problem, &weights, &record.output) - f_star)
    })?;
    let fit = estimate_rate_slope(&settings.horizons, &levels)?;
    Ok(RateReport::new(fit, settings.seeds, PL_SLOPE_RANGE, None))
}

/// Same family as [`pl_instance`], but with a log-spaced spectrum reaching
/// down to `1e-4`, so over the tested horizons the instance behaves like a
/// merely convex problem rather than a strongly convex one.
pub fn convex_instance() -> Result<(QuadraticMoo, BlockPartition, FrequencyVector)> {
    let n = 24;
    let spectrum: Vec<f64> = (0..n).map(|i| 1e-4 * (2.0f64 / 1e-4).powf(i as f64 / (n - 1) as f64)).collect();
    let second: Vec<f64> = spectrum.iter().map(|l| 1.5 * l).collect();
    let problem = QuadraticMoo::from_diagonals(&[spectrum, second], &[vec![0.0; n], vec![0.0; n]], GradientNoise::Ball { radius: 0.5 })?;
    // interleave coordinates so both blocks span the spectrum
    let blocks = vec![(0..n).step_by(2).collect(), (1..n).step_by(2).collect()];
    Ok((problem, BlockPartition::new(blocks, n)?, FrequencyVector::new(vec![1, 1])?))
}

/// Optimality gap of the averaged iterate under `α = 1/√T`.
pub fn convex_rate_suite(seed: u64, settings: &RateSettings) -> Result<RateReport> {
    let (problem, partition, freq) = convex_instance()?;
    let (_, f_star) = problem.minimizer(&freq)?;
    let weights = freq.weights();
    let x0 = vec![1.0; problem.dim()];
    let levels = mean_over_runs(settings, |horizon, run| {
        let mut cfg = OptimizerConfig::new(horizon, partition.clone(), freq.clone(), StepSizeRule::inverse_sqrt_horizon(horizon))
            .with_seed(seed)
            .with_output(OutputRule::AverageIterate);
        cfg.run_index = run;
        let record = run_block_smoo(&problem, &cfg, x0.clone())?;
        Ok(weighted_objective(&problem, &weights, &record.output) - f_star)
    })?;
    let fit = estimate_rate_slope(&settings.horizons, &levels)?;
    Ok(RateReport::new(fit, settings.seeds, CONVEX_SLOPE_RANGE, None))
}

/// Quadratic base plus a bounded sinusoid strong enough to make every
/// objective non-convex, with ball noise.
pub fn nonconvex_instance() -> Result<(SinusoidalMoo, BlockPartition, FrequencyVector)> {
    let base = QuadraticMoo::from_diagonals(
        &[vec![1.0, 1.5, 1.0, 1.5], vec![1.5, 1.0, 1.5, 1.0]],
        &[vec![1.0, 0.0, -1.0, 0.5], vec![0.0, 1.0, 0.5, -1.0]],
        GradientNoise::Ball { radius: 0.5 },
    )?;
    let problem = SinusoidalMoo::new(base, vec![0.5, 0.5], 2.0)?;
    Ok((problem, BlockPartition::contiguous(&[2, 2])?, FrequencyVector::new(vec![1, 1])?))
}

/// `(1/T) Σ_{t<T} ‖∇F_m(x^{t,0,0})‖²` under `α = 1/√T`, compared against the
/// bound `2/√T · (F_m(x⁰) − F* + L σ² p² [s + L s³/3])` with `F*` replaced
/// by a lower bound and `σ²` measured along the trajectories.
pub fn nonconvex_rate_suite(seed: u64, settings: &RateSettings) -> Result<RateReport> {
    let (problem, partition, freq) = nonconvex_instance()?;
    let weights = freq.weights();
    let q = problem.num_objectives();
    let x0 = vec![3.0, -3.0, 3.0, -3.0];
    let runs = par_map(settings.horizons.len() * settings.seeds, |cell| -> Result<(f64, f64)> {
        let horizon = settings.horizons[cell / settings.seeds];
        let mut cfg = OptimizerConfig::new(horizon, partition.clone(), freq.clone(), StepSizeRule::inverse_sqrt_horizon(horizon))
            .with_seed(seed);
        cfg.run_index = (cell % settings.seeds) as u64;
        let mut worst = 0.0f64;
        let record = run_block_smoo_observed(&problem, &cfg, x0.clone(), |progress| {
            for k in 0..q {
                worst = worst.max(norm_sq(&problem.gradient(k, progress.x)));
            }
            ControlFlow::Continue(())
        })?;
        let level = record.outer_points[..horizon]
            .iter()
            .map(|x| norm_sq(&weighted_gradient(&problem, &weights, x)))
            .sum::<f64>()
            / horizon as f64;
        Ok((level, worst))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let levels: Vec<f64> =
        runs.chunks(settings.seeds).map(|c| c.iter().map(|r| r.0).sum::<f64>() / c.len() as f64).collect();
    let sigma_sq = runs.iter().map(|r| r.1).fold(0.0, f64::max) + problem.base().noise_second_moment();
    let l = problem.smoothness();
    let (p, s) = (freq.budget() as f64, partition.num_blocks() as f64);
    let gap0 = weighted_objective(&problem, &weights, &x0) - problem.f_star_lower_bound(&freq)?;
    let bound: Vec<f64> = settings
        .horizons
        .iter()
        .map(|&t| 2.0 / (t as f64).sqrt() * (gap0 + l * sigma_sq * p * p * (s + l * s.powi(3) / 3.0)))
        .collect();
    let fit = estimate_rate_slope(&settings.horizons, &levels)?;
    Ok(RateReport::new(fit, settings.seeds, NONCONVEX_SLOPE_RANGE, Some(bound)))
}
