//! Synthetic domain-gap benchmark, backbone pretraining and dataset CSV files.

mod csv_io;
mod pretrain;
mod synthetic;

pub use csv_io::{load_csv_dataset, parse_csv_dataset, write_csv_dataset};
pub use pretrain::{pretrain_backbone, PretrainConfig};
pub use synthetic::{generate_synthetic, DomainShift, SyntheticBenchmark, SyntheticSpec};

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::ClassId;
use crate::numerics::{RealVector, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidConfig(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub x: RealVector<T>,
    pub y: ClassId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset<T> {
    pub samples: Vec<Sample<T>>,
    pub spec_hash: u64,
    pub split: Split,
}

impl<T: Scalar> LabeledDataset<T> {
    pub fn new(samples: Vec<Sample<T>>, spec_hash: u64, split: Split) -> Self {
        Self {
            samples,
            spec_hash,
            split,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.samples.first().map(|s| s.x.dim())
    }

    pub fn classes(&self) -> BTreeSet<ClassId> {
        self.samples.iter().map(|s| s.y).collect()
    }

    /// Samples of one class, in dataset order.
    pub fn of_class(&self, class: ClassId) -> impl Iterator<Item = &Sample<T>> {
        self.samples.iter().filter(move |s| s.y == class)
    }
}
