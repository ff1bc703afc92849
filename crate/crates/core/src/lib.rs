//! Exact and Monte Carlo analysis of a conservative stochastic particle
//! system on a ring with a 5-site update neighborhood.
//!
//! The crate enumerates rotation classes with fixed conserved quantities,
//! decomposes them into irreducible sets under the stochastic rule, solves
//! for stationary distributions, compares them against the pattern-count
//! weight `α^{m010} / (1-α)^{m1110+m010}`, and evaluates the mean flux both
//! from partition functions and from simulation.

pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod markov;
pub mod montecarlo;
pub mod prob;
pub mod ring;
pub mod theory;

pub use dynamics::{FluxRule, RuleName, StepOutcome};
pub use ensemble::{OmegaSet, Sector};
pub use error::{Error, Result};
pub use markov::{StationaryDistribution, TransitionMatrix};
pub use prob::ProbExpr;
pub use ring::{OrbitClass, RingConfig};
pub use theory::{FluxPoint, PartitionTable};
