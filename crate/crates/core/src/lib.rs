//! Mean peak age of information for clustered IoT devices served by UAVs.
//!
//! Two engines share one parameter set ([`Scenario`]):
//!
//! * an analytic engine ([`sinr`], [`activity`], [`paoi`]) built on adaptive
//!   quadrature, a beta approximation of the meta distribution and a damped
//!   fixed point for the mean activity probability;
//! * a Monte-Carlo engine ([`sim`]) that samples cluster topologies, fading and
//!   slot-level queues.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod activity;
pub mod channel;
mod error;
pub mod geometry;
pub mod paoi;
pub mod quad;
pub mod sim;
pub mod sinr;
pub mod special;

pub use activity::{ActivitySolution, LoadModel};
pub use channel::Link;
pub use error::{Error, Result};
pub use geometry::{Environment, Scenario, Topology};
pub use paoi::{DeviceMode, Method, PaoiDistribution, PaoiSummary};
pub use sim::{Fidelity, Metric, SimConfig, SimEstimate};
pub use sinr::{Moments, SuccessKernel, SuccessLaw};
