//! Library surface of the experiment driver, shared by the `lsi` binary
//! and the integration suites.

pub mod config;
pub mod experiments;
pub mod perturb;
