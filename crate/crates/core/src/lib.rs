//! Learning under a noisy, possibly eavesdropped channel with a certified
//! halting rule.
//!
//! The crate plans sample budgets for a train-then-certify learner, simulates
//! it over classical label noise or a BB84 link, and decides whether a design
//! is admissible, certifiable, reliable, and better than blind guessing.

pub mod bounds;
pub mod budget;
pub mod channels;
pub mod cli;
pub mod error;
pub mod halting;
pub mod holevo;
pub mod learner;
pub mod rng;
pub mod stats;

pub use bounds::{ClassCapacity, HaltingDesign, LearningTarget, PrlBaseline};
pub use budget::{BudgetInputs, BudgetPlan, Surrogate};
pub use channels::ChannelSpec;
pub use error::{Error, Result};
pub use holevo::ThresholdVariant;
pub use learner::{HypothesisClass, InputDistribution, RunRecord};
pub use stats::{DecisionReport, MonteCarloSummary, PlEvidence, Scenario, Verdict};
