//! Problem layer: datasets, shards, synthetic generation, loss oracles and
//! curvature constants, nonsmooth regularizers.

mod composite;
mod dataset;
mod io;
mod oracle;
mod synthetic;

pub use composite::{l1_prox, soft_threshold, CompositeProblem, L1Norm, Regularizer, ZeroReg};
pub use dataset::{Dataset, DatasetKind, Shard};
pub use io::{load_dataset, read_dataset, write_csv, DataFormat};
pub use oracle::{
    measure_constants, ConstantsMode, LogisticOracle, LossOracle, ProblemConstants,
    QuadraticOracle, SmoothObjective,
};
pub use synthetic::{generate_synthetic, substream, varrho_for_condition, SyntheticSpec};
