//! Inner solvers for the per-agent local subproblems.

mod fista;
mod nesterov;
mod quadratic;
mod surrogate;

pub use fista::fista;
pub use nesterov::{nesterov_agd, SolverReport};
pub use quadratic::{quadratic_dane_step, QuadraticDaneSolver};
pub use surrogate::{make_surrogate, SurrogateOracle};
