//! Two-rod impact simulation: Schwarz alternating contact, penalty and
//! Lagrange-multiplier baselines, and chatter-mitigating time integrators.
//!
//! Everything is 1D linear elasticity with linear elements. The closed-form
//! impact solution in [`oracle`] is the reference for every error metric.

pub mod acceptance;
pub mod config;
pub mod conventional;
pub mod error;
pub mod experiment;
pub mod fem;
pub mod integrators;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod rod;
pub mod schwarz;
pub mod series;
pub mod transfer;

pub use error::{Error, Result};
