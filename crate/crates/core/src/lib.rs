//! Adapt-then-learn continual learning on a small embedding network.
//!
//! Before each task the backbone (and adapter) is tuned with a
//! prototype-anchored contrastive loss, then frozen while a core learner
//! (nearest class mean or a linear head) absorbs the task. The crate also
//! carries runtime checks for the guarantees of that loss: the
//! misclassification bound, the feature-drift bound and the two sphere
//! lemmas they rest on.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`). The aliases at the
//! crate root fix the precision to `f64`, which is what the benchmark and the
//! verification suite use.

pub mod adaptation;
pub mod continual;
pub mod data;
pub mod error;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod verify;

pub use error::{Error, Result};
pub use model::ClassId;
pub use numerics::Scalar;

pub type RealVector = numerics::RealVector<f64>;
pub type UnitVector = numerics::UnitVector<f64>;
pub type Backbone = model::Backbone<f64>;
pub type AdapterModule = model::AdapterModule<f64>;
pub type ModelParams = model::ModelParams<f64>;
pub type Classifier = model::Classifier<f64>;
pub type PrototypeTable = model::PrototypeTable<f64>;
pub type LinearHead = model::LinearHead<f64>;
pub type LabeledDataset = data::LabeledDataset<f64>;
pub type TaskStream = continual::TaskStream<f64>;
pub type ExperimentState = continual::ExperimentState<f64>;
pub type AccuracyMatrix = metrics::AccuracyMatrix<f64>;
pub type BoundReport = metrics::BoundReport<f64>;
pub type AdaptReport = adaptation::AdaptReport<f64>;
pub type AdaptConfig = adaptation::AdaptConfig<f64>;

pub type BackboneF32 = model::Backbone<f32>;
pub type AdapterModuleF32 = model::AdapterModule<f32>;
pub type LabeledDatasetF32 = data::LabeledDataset<f32>;
pub type TaskStreamF32 = continual::TaskStream<f32>;
