//! Stochastic multi-objective optimization by simultaneous alternation over
//! objectives and variable blocks.
//!
//! The engine ([`optimizer`]) runs an outer loop over a permutation of
//! variable blocks and, for each block, a fixed number of stochastic partial
//! gradient steps per objective. The allocation of steps (the frequency
//! vector `m`) determines which weighted sum `Σ (m_k/p) f_k` is minimized, so
//! sweeping `m` traces a Pareto front ([`pareto`]).

pub mod data;
pub mod error;
pub mod experiment;
pub mod optimizer;
pub mod pareto;
pub mod problems;
pub mod rng;
pub mod verify;

pub use error::{Error, Result, StepLocation};
