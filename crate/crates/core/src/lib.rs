//! Multi-objective evolutionary fusion of spoofing-detector scores.
//!
//! The crate searches for score-level fusions of a detector pool that trade
//! detection error (EER) against total model size (parameter count), using
//! NSGA-II over either a binary detector-selection encoding or a real-valued
//! weight encoding.
//!
//! * [`score_data`] loads and aligns detector scores, labels and metadata.
//! * [`metrics`] computes DET operating points, EER and minDCF.
//! * [`fusion`] defines the chromosome encodings and the two objectives.
//! * [`nsga2`] is the evolutionary engine and Pareto-front tooling.
//! * [`baselines`] holds averaging and logistic-regression reference fusions.
//! * [`synthgen`] generates Gaussian score sets with closed-form error rates.

pub mod baselines;
pub mod error;
pub mod fusion;
pub mod metrics;
pub mod nsga2;
pub mod score_data;
pub mod synthgen;

pub use error::{Error, ErrorKind, Result};
pub use fusion::{Chromosome, Encoding, FusionObjectives};
pub use nsga2::{ParetoFront, RunConfig, RunReport};
pub use score_data::ScoreMatrix;
