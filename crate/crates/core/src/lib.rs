//! Simulation toolkit for adaptive inventory control with unknown discrete
//! demand and nonperishable stock.
//!
//! - [`demand`]: distributions on `{0, ..., dbar}`, sampling, empirical counts,
//!   random distribution generators.
//! - [`cost`]: expected and realized costs, the newsvendor benchmark, regret.
//! - [`policy`]: adaptive ordering policies as stepwise state machines.
//! - [`bounds`]: divergences, separation, and regret bound constants.
//! - [`harness`]: seeded parallel Monte Carlo experiments and tail statistics.

pub mod bounds;
pub mod cost;
pub mod demand;
pub mod error;
pub mod harness;
pub mod numfmt;
pub mod policy;
pub mod rng;

pub use error::{Error, Result};
