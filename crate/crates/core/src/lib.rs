//! Online learning from preference feedback.
//!
//! A learner presents a ranking for each query, a (simulated) user answers
//! with a ranking it prefers, and the preference perceptron moves its weights
//! toward the preferred ranking's joint features. The crate provides the
//! learner, two simulated users, regret accounting with a runtime regret
//! certificate, LETOR and synthetic data, and a multi-run experiment harness.

pub mod data;
pub mod error;
pub mod experiment;
pub mod feedback;
pub mod model;
pub mod perceptron;
pub mod ranking;

pub use error::{Error, Result};
pub use feedback::{FeedbackOracle, FeedbackOracleConfig, OracleKind};
pub use model::{dot, FeatureVector, JointFeatureMap, UtilityModel, WeightVector};
pub use perceptron::{regret_bound, run, AverageRegret, PerceptronState, RoundRecord, RunTrace};
pub use ranking::{Document, Query, Ranking, RankingDomain};
