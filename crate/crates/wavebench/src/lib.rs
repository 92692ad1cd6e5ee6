//! Single-lane microscopic traffic simulation and benchmarking toolkit.
//!
//! The crate couples four pieces that are usually kept in separate tools:
//!
//! * car-following dynamics (IDM) that reproduce stop-and-go waves,
//! * linear string-stability analysis of those dynamics,
//! * polynomial vehicle fuel-consumption models with constrained fitting,
//! * sparse flow-smoothing controllers (FollowerStopper, IDM with relaxation)
//!   and a KPI pipeline that scores them against an uncontrolled baseline.
//!
//! See the `examples/` directory for one runnable program per capability,
//! and the `wavebench` binary for the file-driven command-line interface.

pub mod cfm;
pub mod config;
pub mod control;
pub mod energy;
pub mod error;
pub mod kpi;
pub mod sim;
pub mod stability;
pub mod util;

pub use error::WavebenchError;
