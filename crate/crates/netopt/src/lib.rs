//! Decentralized optimization over gossip networks.
//!
//! Agents hold disjoint shards of a dataset and cooperate to minimize the
//! average of their local losses while communicating only with graph
//! neighbors through a doubly stochastic mixing matrix. The crate provides
//! the communication layer (graphs, mixing, gradient tracking), loss
//! oracles, local subproblem solvers, the iteration engines (Network-DANE,
//! Network-SVRG/SARAH, gradient-tracked DGD, EXTRA, centralized DANE), and
//! executable convergence-rate models that bound the per-step error
//! dynamics of those engines.

pub mod algorithms;
pub mod error;
pub mod linalg;
pub mod network;
pub mod problem;
pub mod solvers;
pub mod theory;

pub use error::{Error, Result};
pub use problem::{LossOracle, ProblemConstants, SmoothObjective};
pub use network::{consensus_error, Graph, MixingMatrix, MixingMode, MixingScheme, Stack};

