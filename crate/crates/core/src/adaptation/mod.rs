//! Pre-task adaptation: prototypes from the current model, the
//! prototype-anchored contrastive loss, and the training loop that tunes the
//! backbone and adapter against it. Ablation modes swap the loss for plain
//! cross-entropy or restrict updates to the adapter.

mod losses;
mod prototypes;
mod report;
mod run;

pub use losses::{acl_loss, ce_adapt_loss, softmax_cross_entropy, CeOutput};
pub use prototypes::{compute_prototypes, model_fingerprint, prototypes_from_embeddings};
pub use report::{AdaptReport, BatchBound, EpochRecord, CHORD_TOLERANCE};
pub use run::adapt;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdaptMode {
    /// Contrastive loss against frozen prototypes; backbone and adapter train.
    Acl,
    /// Cross-entropy through a throwaway linear head instead.
    CeAblation,
    /// Contrastive loss, adapter only; backbone frozen.
    LightweightOnly,
    Disabled,
}

impl AdaptMode {
    pub fn name(self) -> &'static str {
        match self {
            AdaptMode::Acl => "acl",
            AdaptMode::CeAblation => "ce_ablation",
            AdaptMode::LightweightOnly => "lightweight_only",
            AdaptMode::Disabled => "disabled",
        }
    }
}

impl fmt::Display for AdaptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AdaptMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "acl" => Ok(AdaptMode::Acl),
            "ce_ablation" => Ok(AdaptMode::CeAblation),
            "lightweight_only" => Ok(AdaptMode::LightweightOnly),
            "disabled" => Ok(AdaptMode::Disabled),
            other => Err(Error::InvalidConfig(format!("unknown adaptation mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptConfig<T> {
    pub temperature: T,
    pub epochs: usize,
    pub learning_rate: T,
    pub momentum: T,
    pub batch_size: usize,
    pub mode: AdaptMode,
    /// Adapt before the first task only.
    pub first_task_only: bool,
}

impl<T: Scalar> Default for AdaptConfig<T> {
    fn default() -> Self {
        Self {
            temperature: T::of(0.1),
            epochs: 1,
            learning_rate: T::of(0.05),
            momentum: T::of(0.9),
            batch_size: 32,
            mode: AdaptMode::Acl,
            first_task_only: false,
        }
    }
}

impl<T: Scalar> AdaptConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.temperature <= T::zero() || !self.temperature.is_finite() {
            return Err(Error::InvalidConfig("temperature must be positive".into()));
        }
        if self.learning_rate < T::zero() || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig("learning rate must be non-negative".into()));
        }
        if !(self.momentum >= T::zero() && self.momentum < T::one()) {
            return Err(Error::InvalidConfig("momentum must lie in [0, 1)".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        Ok(())
    }
}
