//! Verification harness: finite-difference and closed-form oracles and the
//! seeded conformance suite.

pub mod fd;

pub use fd::{fd_oracle, relative_error, FdConfig, FdOracle, OracleObject};
pub mod closed_forms;
pub mod suite;

pub use suite::{run_suite, CheckResult, Region, Status, SuiteConfig, Tier, Tolerances, VerificationReport};
