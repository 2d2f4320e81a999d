//! Verification harness: configuration, ensemble tasks, reports and the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod ensemble;
pub mod functional;
pub mod ibp;
pub mod pool;
pub mod psi_independence;
pub mod report;
pub mod stationarity;
pub mod tolerances;
