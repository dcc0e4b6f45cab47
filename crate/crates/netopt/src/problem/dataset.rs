//! Datasets and their partition into equal per-agent shards.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Regression,
    Binary,
}

/// Full dataset: one sample per row of `features`, targets aligned by index.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: DMatrix<f64>,
    pub targets: DVector<f64>,
    pub kind: DatasetKind,
}

impl Dataset {
    pub fn new(features: DMatrix<f64>, targets: DVector<f64>, kind: DatasetKind) -> Result<Dataset> {
        if features.nrows() != targets.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} feature rows vs {} targets",
                features.nrows(),
                targets.len()
            )));
        }
        if !linalg::all_finite(features.iter().copied()) || !linalg::all_finite(targets.iter().copied())
        {
            return Err(Error::Validation("dataset has non-finite entries".into()));
        }
        if kind == DatasetKind::Binary {
            for (i, &t) in targets.iter().enumerate() {
                if t != 0.0 && t != 1.0 {
                    return Err(Error::Validation(format!(
                        "binary label at row {i} is {t}, expected 0 or 1"
                    )));
                }
            }
        }
        Ok(Dataset { features, targets, kind })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Splits into `n` disjoint equal shards in row order. The sample count
    /// must divide evenly; there is no remainder handling.
    pub fn partition(&self, n: usize) -> Result<Vec<Shard>> {
        if n == 0 {
            return Err(Error::InvalidConfig("agent count must be positive".into()));
        }
        if self.len() % n != 0 {
            return Err(Error::InvalidConfig(format!(
                "{} samples do not split evenly over {n} agents",
                self.len()
            )));
        }
        let m = self.len() / n;
        Ok((0..n)
            .map(|agent| Shard {
                agent,
                features: self.features.rows(agent * m, m).into_owned(),
                targets: self.targets.rows(agent * m, m).into_owned(),
            })
            .collect())
    }
}

/// One agent's local slice of the dataset.
#[derive(Debug, Clone)]
pub struct Shard {
    pub agent: usize,
    pub features: DMatrix<f64>,
    pub targets: DVector<f64>,
}

impl Shard {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }
}
