//! Agent-based simulation of shared autonomous vehicle (SAV) services.
//!
//! A synthetic population executes day plans on a queue-based road network
//! while a fleet of shared vehicles serves on-demand requests through an
//! insertion dispatcher and a min-cost-flow rebalancer. Plans are scored and
//! replanned until demand relaxes against the service, and the final day is
//! reduced to fleet performance indicators.

pub mod activity;
pub mod coevolution;
pub mod config;
pub mod error;
pub mod events;
pub mod mobsim;
pub mod metrics;
pub mod mode;
pub mod network;
pub mod population;
pub mod report;
pub mod runner;
pub mod savfleet;
pub mod scoring;

pub use error::{Error, Result};

/// Whole seconds since midnight of the simulated day.
pub type Time = i64;
