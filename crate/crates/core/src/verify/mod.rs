//! Numerical checks of the optimizer against independent oracles: reference
//! loops for the single-objective special cases, finite differences,
//! exhaustive minibatch enumeration, rate-slope fits, and a Monte-Carlo check
//! of the per-iteration descent inequality.

mod descent;
mod gradcheck;
mod rate;
mod reference;
mod suites;
mod unbiased;

pub use descent::{descent_bound_check, DescentReport};
pub use gradcheck::{finite_difference_check, FaultyGradient, GradCheckReport, MIN_CHECKED_COORDINATES};
pub use rate::{estimate_rate_slope, RateFit, MIN_HORIZONS};
pub use reference::{reference_bcd, reference_sgd};
pub use suites::*;
pub use unbiased::{unbiasedness_check, MAX_ENUMERATED_SAMPLES};

use crate::error::Result;
use crate::optimizer::{build_index_mapping, FrequencyVector, SchedulePolicy};
use crate::problems::{weighted_objective, MooProblem};
use crate::rng::StreamRng;

/// Largest relative gap between `(1/p) Σ_j f_{π(j)}(x)` over `draws` random
/// admissible mappings and `Σ_k (m_k/p) f_k(x)`.
pub fn mapping_invariance<P: MooProblem>(
    problem: &P,
    freq: &FrequencyVector,
    x: &[f64],
    draws: usize,
    rng: &mut StreamRng,
) -> Result<f64> {
    let direct = weighted_objective(problem, &freq.weights(), x);
    let p = freq.budget() as f64;
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let pi = build_index_mapping(freq, SchedulePolicy::ReshuffleEachCycle, rng);
        let via_mapping = pi.iter().map(|&k| problem.objective(k, x)).sum::<f64>() / p;
        worst = worst.max((via_mapping - direct).abs() / direct.abs().max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is on.
#[doc(hidden)]
pub fn par_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{GradientNoise, QuadraticMoo};
    use crate::rng::{stream, Purpose};

    #[test]
    fn mapping_suite_passes() {
        let r = mapping_suite(11).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.cases.len(), 3);
    }

    #[test]
    fn mapping_invariance_is_tiny_on_random_quadratics() {
        let mut rng = stream(5, 0, Purpose::Init);
        let p = QuadraticMoo::random(3, 2, 0.1, 1.0, 1.0, GradientNoise::Exact, &mut rng).unwrap();
        let freq = FrequencyVector::new(vec![5, 15]).unwrap();
        assert!(mapping_invariance(&p, &freq, &[1.0, 2.0, 3.0], 10, &mut rng).unwrap() < 1e-12);
    }

    #[test]
    fn suite_selector() {
        assert_eq!(Suite::parse_selector("all").unwrap().len(), 8);
        assert_eq!(Suite::parse_selector("rates").unwrap().len(), 3);
        assert_eq!(Suite::parse_selector("descent").unwrap(), vec![Suite::Descent]);
        assert!(Suite::parse_selector("nope").is_err());
    }

    #[test]
    fn cheap_suites_pass_and_fault_is_caught() {
        let opts = SuiteOptions { descent_trials: 100, ..SuiteOptions::default() };
        let report = run_suites(&[Suite::Reductions, Suite::Gradients, Suite::Unbiasedness, Suite::Descent], &opts);
        assert!(report.passed, "{report:#?}");
        let faulty = SuiteOptions { planted_fault: true, ..opts };
        let report = run_suites(&[Suite::Gradients], &faulty);
        assert!(!report.passed);
    }
}
