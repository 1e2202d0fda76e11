//! Sharp partial-identification bounds on persuasion rates and probabilities
//! of causation under monotone treatment response (MTR) and monotone
//! treatment selection (MTS).
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] holds the shared value types ([`JointDistribution`],
//!   [`AssumptionSet`], [`Interval`], ...).
//! * [`bounds`] gives the closed-form sharp bounds for every estimand and
//!   assumption row.
//! * [`oracle`] recomputes the same bounds by brute-force search over the
//!   latent polytope of potential-outcome tables.
//! * [`estimate`] turns microdata into plug-in bound estimates with
//!   cluster-robust delta-method standard errors.
//! * [`inference`] builds one-sided, specification-test and
//!   Imbens–Manski/Stoye confidence intervals.
//! * [`sim`] provides data-generating processes and a Monte Carlo harness.
//! * [`advise`] encodes the method-selection decision tree.

pub mod advise;
pub mod bounds;
pub mod error;
pub mod estimate;
pub mod inference;
pub mod model;
pub mod oracle;
pub mod sample;
pub mod sim;

pub use error::{Error, Result};
pub use model::{
    AssumptionSet, DerivedProbs, EstimandKind, Interval, IntervalKind, JointDistribution,
    TypeShares,
};
