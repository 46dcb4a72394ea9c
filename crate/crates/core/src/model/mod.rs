//! Estimation problems: parameter spaces, priors, data models and posteriors.

pub mod family;
pub mod prior;
pub mod problem;
pub mod space;

pub use family::{CustomModel, DataModel, ObsChart};
pub use prior::{Prior, PriorAlteration, PriorKind};
pub use problem::{EstimationProblem, Posterior, ProblemClass};
pub use space::{ObservationKind, ObservationSpace, ParameterSpace};

/// Seeded generator used throughout for reproducible sampling.
pub type Rng64 = rand_chacha::ChaCha8Rng;
