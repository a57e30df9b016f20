//! Sequence-labeling evaluation toolkit.
//!
//! Scores named-entity predictions three different ways so the effect of the
//! scoring methodology itself can be measured:
//!
//! - **entity-strict**: IOB2 spans decoded strictly, exact label and boundary
//!   match, micro-averaged.
//! - **token-with-O** / **entity-without-O**: independent token classification,
//!   with and without the `O` class.
//! - **offset-exact**: BRAT standoff annotations matched on exact character
//!   offsets.
//!
//! Alongside the scorers the crate parses CoNLL and BRAT files, aggregates
//! multi-seed runs into `mean ± std` cells, compares subword vocabularies and
//! estimates training emissions.
//!
//! Score arithmetic is generic over [`Scalar`], so the same kernels run on
//! `f64`, `f32` or exact rationals ([`Rational`]).

pub mod carbon;
pub mod error;
pub mod formats;
pub mod methodology;
pub mod metrics;
pub mod scalar;
pub mod tagging;
pub mod vocab;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Exact rational scores; useful when a test needs `16/21` rather than `0.7619...`.
pub type Rational = num_rational::Ratio<i64>;

/// Per-class and averaged scores as `f64` fractions.
pub type EvalReport = metrics::Report<f64>;
/// Per-class and averaged scores as exact rationals.
pub type ExactReport = metrics::Report<Rational>;
pub type ClassScore = metrics::ClassScore<f64>;
pub type Prf = metrics::Prf<f64>;

/// `mean ± std` over seeded runs.
pub type AggregateScore = methodology::Aggregate<f64>;
pub type ComparisonTable = methodology::ComparisonTable<f64>;

pub type IntersectionStats = vocab::IntersectionStats<f64>;
pub type FertilityStats = vocab::FertilityStats<f64>;

pub type TrainingRun = carbon::TrainingRun<f64>;
pub type EmissionEstimate = carbon::EmissionEstimate<f64>;
