#![allow(clippy::result_large_err)]

pub mod graph;
pub mod harness;
pub mod inference;
pub mod ki;
pub mod microciv;
pub mod rl;
pub mod value;
