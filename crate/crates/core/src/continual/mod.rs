//! Core learners and the per-task adapt → freeze → learn → evaluate loop.

mod driver;
mod learners;

pub use driver::{run_acl, RunFailure, RunOutcome, TaskReport};
pub use learners::{core_learn_linear, core_learn_ncm, evaluate, LinearCoreConfig};

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::model::{AdapterModule, Backbone, ClassId, Classifier, LinearHead, PrototypeTable};
use crate::numerics::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Task<T> {
    /// 1-based position in the stream.
    pub index: usize,
    pub classes: Vec<ClassId>,
    pub train: LabeledDataset<T>,
    pub test: LabeledDataset<T>,
}

/// Ordered tasks with pairwise-disjoint class sets.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskStream<T> {
    tasks: Vec<Task<T>>,
}

impl<T: Scalar> TaskStream<T> {
    pub fn new(tasks: Vec<Task<T>>) -> Result<Self> {
        if tasks.is_empty() {
            return Err(Error::InvalidSpec("task stream needs at least one task".into()));
        }
        let mut seen = BTreeSet::new();
        for t in &tasks {
            if t.train.is_empty() || t.test.is_empty() || t.classes.is_empty() {
                return Err(Error::InvalidSpec(format!("task {} is empty", t.index)));
            }
            for &c in &t.classes {
                if !seen.insert(c) {
                    return Err(Error::DuplicateClass(c));
                }
            }
            let declared: BTreeSet<ClassId> = t.classes.iter().copied().collect();
            if let Some(bad) = t
                .train
                .classes()
                .into_iter()
                .chain(t.test.classes())
                .find(|c| !declared.contains(c))
            {
                return Err(Error::UnknownLabel(bad));
            }
        }
        Ok(Self { tasks })
    }

    pub fn tasks(&self) -> &[Task<T>] {
        &self.tasks
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoreStrategy {
    /// Nearest class mean over an append-only prototype store.
    Ncm,
    /// Growing linear head trained with cross-entropy.
    Linear,
}

impl CoreStrategy {
    pub fn name(self) -> &'static str {
        match self {
            CoreStrategy::Ncm => "ncm",
            CoreStrategy::Linear => "linear",
        }
    }
}

impl fmt::Display for CoreStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CoreStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ncm" => Ok(CoreStrategy::Ncm),
            "linear" => Ok(CoreStrategy::Linear),
            other => Err(Error::InvalidConfig(format!("unknown core strategy `{other}`"))),
        }
    }
}

/// Model and classifier carried across tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentState<T> {
    pub backbone: Backbone<T>,
    pub adapter: AdapterModule<T>,
    pub classifier: Classifier<T>,
    /// Number of tasks learned so far.
    pub task_index: usize,
}

impl<T: Scalar> ExperimentState<T> {
    pub fn new(backbone: Backbone<T>, adapter: AdapterModule<T>, strategy: CoreStrategy) -> Self {
        let classifier = match strategy {
            CoreStrategy::Ncm => Classifier::Cosine(PrototypeTable::new(0)),
            CoreStrategy::Linear => Classifier::Linear(LinearHead::new(backbone.output_dim())),
        };
        Self {
            backbone,
            adapter,
            classifier,
            task_index: 0,
        }
    }
}
