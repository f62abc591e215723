//! Oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

pub mod bandit;
pub mod kigen;
pub mod lloyd;
pub mod matcher;
pub mod quadrature;
