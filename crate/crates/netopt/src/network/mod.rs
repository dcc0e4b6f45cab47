//! Communication layer: graph topologies, doubly stochastic mixing with
//! multi-round and Chebyshev-accelerated variants, and the dynamic average
//! consensus recursion used for gradient tracking.

mod graph;
mod mixing;
mod tracking;

pub use graph::{Graph, GraphKind, GraphSpec};
pub use mixing::{
    chebyshev_rate, column_means, mix_rounds, mixing_rate, MixingMatrix, MixingMode, MixingScheme,
    Stack,
};
pub use tracking::{consensus_error, track_update, tracking_discrepancy};
