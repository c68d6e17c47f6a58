//! Scheduling, latency modeling and simulation of hybrid-parallel DNN
//! training over a device, an edge server and a cloud center.

pub mod arch;
pub mod error;
pub mod experiment;
pub mod format;
pub mod kernel;
pub mod latency;
pub mod profiles;
pub mod scheduler;
pub mod simulator;

pub use error::{Error, Result};
pub use latency::{total_time, LatencyBreakdown, LatencyModel, Policy, Role, RoleMapping};
pub use profiles::{CostProfile, ModelSpec, NetworkSpec, Worker, WorkerSpec};
