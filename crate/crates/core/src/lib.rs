//! Trace-driven simulation of IPTV streaming over a fixed WiMAX downlink.
//!
//! The formula layers ([`propagation`], [`phy`], parts of [`metrics`]) are
//! generic over [`Scalar`]; the aliases below pin them to `f64`, which is
//! what the event engine uses.

// Domain checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod mac;
pub mod metrics;
pub mod phy;
pub mod propagation;
pub mod runner;
pub mod scalar;
pub mod traffic;

pub use scalar::Scalar;

pub type PathLossModel = propagation::PathLossModel<f64>;
pub type LinkBudget = propagation::LinkBudget<f64>;
pub type McsProfile = phy::McsProfile<f64>;
pub type PhyProfile = phy::PhyProfile<f64>;

pub use engine::{build_scenario, run, RunOutput, RunReport, Scenario, ScenarioConfig};
pub use mac::{DropReason, FlowId, QosParams, ServiceClass};
pub use metrics::MetricsReport;
