//! Capacity-distortion tradeoffs for bistatic sensing and communication over
//! discrete memoryless channels, computed with alternating (Arimoto–Blahut
//! style) maximization.
//!
//! A transmitter sends `X`; a receiver that knows the state `S` observes `Y`,
//! while a separate sensing receiver observes `Z` and estimates `S`. The
//! solvers trace the largest rate achievable at a given sensing distortion,
//! either under squared error ([`se`]) or under logarithmic loss
//! ([`logloss`]).

pub mod channel;
pub mod classic;
pub mod config;
pub mod error;
pub mod logloss;
pub mod monostatic;
pub mod multiplier;
pub mod prob;
pub mod se;
pub mod solver;

#[cfg(test)]
mod test_support;

pub use channel::{discretize_gaussian, ChannelModel, Factorization, GaussianSpec};
pub use classic::{capacity, capacity_with_cost, CapacityConfig, CapacityResult};
pub use error::{Error, Result};


pub use logloss::solve_ll;
pub use monostatic::{monostatic_distortion, monostatic_rate, monostatic_reference, MonostaticReference};
pub use multiplier::{solve_pair, solve_scalar, RootConfig, TiltProblem, TiltSign};
pub use prob::{Alphabet, DiscreteDistribution, JointTable};
pub use se::solve;
pub use solver::{Estimator, EstimatorTable, SolveResult, SolverConfig, TraceEntry};


