//! Simulation and structural estimation for two-stage decision experiments
//! on learning from others' choices.
//!
//! Subjects guess which of two boxes a ball came from, once from a private
//! ball draw (individual condition) and once from a neighbor's guess (social
//! condition). This crate simulates such experiments under a structural
//! behavioral model, classifies the resulting decisions as rational or not,
//! decomposes the failures into posterior and reasoning errors, and estimates
//! the model's parameters back from panels.
//!
//! Modules:
//! - [`env`]: boxes, balls, states, exact posteriors, canonical relabeling.
//! - [`agents`]: the behavioral decision model (distorted updating, noisy
//!   choice, beliefs about neighbors).
//! - [`sim`]: panel records and the experiment generator.
//! - [`classify`]: rationality classification and error decomposition rates.
//! - [`estimate`]: parameter recovery, kernel regression, panel regressions.
//! - [`stats`]: the hypothesis tests used to compare conditions and arms.
//! - [`cli`]: the command-line pipelines and the panel CSV format.

pub mod agents;
pub mod classify;
pub mod cli;
pub mod env;
pub mod estimate;
pub mod rng;
pub mod sim;
pub mod stats;
