//! Learning classifier systems whose rule conditions are built from code
//! fragments (small Boolean expression trees), with fragments shared
//! between concurrently learned tasks.

pub mod coordinator;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod features;
pub mod fragment;
pub mod multiclass;
pub mod problems;
pub mod rng;
pub mod xcs;

pub use error::{Error, Result};
