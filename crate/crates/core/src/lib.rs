//! Topological pilot assignment for cell-free massive MIMO.

pub mod baselines;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod greedy;
pub mod io;
pub mod linalg;
pub mod lrmc;
pub mod milp;
pub mod netgen;
pub mod rng;
pub mod smwim;
pub mod topo;

pub use error::{Error, Result};
