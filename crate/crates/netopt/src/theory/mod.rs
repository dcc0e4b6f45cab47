//! Executable convergence theory: rate formulas, error-propagation
//! matrices, spectral radii, and parameter-selection rules.

mod lyapunov;
mod params;
mod rates;

pub use lyapunov::{
    propagation_check, propagation_matrix, spectral_radius, PropagationBreach, PropagationKind,
    PropagationMatrix,
};
pub use params::{select_parameters, InnerParams, SelectedParams, SelectionRegime};
pub use rates::RateModel;
