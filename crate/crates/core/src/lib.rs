//! Retraction-free decentralized optimization on the Stiefel manifold.
//!
//! The crate simulates `n` agents on an undirected graph that jointly minimize
//! `f(X) = (1/n) Σᵢ fᵢ(X)` subject to `XᵀX = I` without ever projecting onto
//! the manifold. Each agent tracks a penalized surrogate gradient and mixes with
//! its neighbors through a doubly stochastic matrix and its lazy correction.

pub mod error;
pub mod harness;
pub mod matops;
pub mod network;
pub mod problems;
pub mod solvers;
pub mod surrogate;
pub mod theory;

pub use error::{Error, Result};
pub use harness::{ExperimentConfig, RunOutcome, Termination, TraceRecord};
pub use matops::DenseMatrix;
pub use network::{build_topology, MixingPair, Topology, TopologyKind};
pub use problems::Problem;
pub use solvers::{SolverConfig, SolverKind, StackedState};
pub use surrogate::SurrogateParams;
pub use theory::{RegionSampler, TheoryConstants};
