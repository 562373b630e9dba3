//! Deterministic Monte-Carlo system-level simulator for two-tier
//! heterogeneous cellular networks.

pub mod channel;
pub mod config;
pub mod dacca;
pub mod eicic;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod green;
pub mod learn;
pub mod link;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
