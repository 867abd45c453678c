//! Rectified AI-informed priors for Bayesian inference on risk minimizers.
//!
//! An AI system induces a synthetic law over `(x, y)`; this crate corrects
//! ("rectifies") that law against labeled calibration data, centers a Dirichlet
//! process prior on the corrected measure and samples the posterior of a
//! risk-minimizing parameter with the posterior bootstrap.

pub mod diagnostics;
pub mod error;
pub mod harness;
mod linalg;
pub mod losses;
pub mod measures;
pub mod posterior;
pub mod rectifiers;
pub mod rng;

pub use diagnostics::{BenchRecord, BenchSummary, SandwichEstimate};
pub use error::{Error, Result};
pub use harness::{RunConfig, ScenarioKind, ScenarioSpec};
pub use losses::{LossSpec, MlpConfig, Theta, WeightedProblem};
pub use measures::{AtomicMeasure, Covariates, DirichletWeights, LabeledSample, Outcome, Outcomes};
pub use posterior::{PosteriorRun, PriorConfig};
pub use rectifiers::{CalibrationStrategy, FittedRectifier, RectifierSpec};
pub use rng::SeededRng;
