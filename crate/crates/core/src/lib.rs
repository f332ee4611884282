//! Bell-type inequality statistics, classical correlation polytopes and a
//! parameterized hidden-measurement model.
//!
//! The crate is organised bottom-up:
//!
//! * [`prob`] exact rational probabilities used by every correlation vector.
//! * [`stats`] data model for coincidence experiments and the CHSH /
//!   Clauser-Horne statistics.
//! * [`simplex`] phase-one simplex feasibility in float or exact arithmetic.
//! * [`pitowsky`] correlation polytope vertices, membership, the printed
//!   inequality families and constructive product representations.
//! * [`models`] generators for the singlet, vessels and concept scenarios and
//!   the event-distinguishing transformation.
//! * [`epsrho`] closed forms and a seeded Monte Carlo of the sphere, rod and
//!   elastic measurement model.
//!
//! Data-parallel loops (Monte Carlo trials, sweeps, batch membership) run on
//! rayon when the `parallel` feature is enabled and fall back to plain
//! iterators otherwise. Results are identical either way.

pub mod epsrho;
pub mod error;
pub mod exec;
pub mod models;
pub mod pitowsky;
pub mod prob;
pub mod simplex;
pub mod stats;

pub use error::{Error, Result};
pub use exec::Execution;
pub use prob::Prob;
pub use stats::{
    chsh_statistic, clauser_horne_statistic, expectation_from_joint, ChCombination,
    CorrelationVector, ExpectationSet, JointOutcomeDistribution, Pair, Scenario, ScenarioKind,
};

/// Absolute tolerance for probability bounds and sums.
pub const PROB_TOL: f64 = 1e-9;
