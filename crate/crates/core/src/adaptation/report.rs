use std::io::Write;

use super::AdaptMode;
use crate::error::Result;
use crate::metrics::BoundReport;
use crate::numerics::Scalar;

/// Largest accepted `chord_cosine_residual`.
pub const CHORD_TOLERANCE: f64 = 1e-10;

/// Markov check on one mini-batch, evaluated before the step.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchBound<T> {
    pub epoch: usize,
    pub batch: usize,
    pub report: BoundReport<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord<T> {
    pub epoch: usize,
    /// Mean of the optimized loss over the epoch's batches.
    pub mean_loss: T,
    /// Mean contrastive loss over the whole task after the epoch.
    pub end_acl_loss: T,
    /// Feature-drift bound on the whole task after the epoch.
    pub stability: BoundReport<T>,
    /// Markov check pooled over every batch of the epoch.
    pub markov: BoundReport<T>,
    /// `|mean‖e* − p‖² − 2 mean(1 − cos(e*, p))|` after the epoch.
    pub chord_cosine_residual: T,
}

/// What one adaptation phase did and whether its guarantees held.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptReport<T> {
    pub mode: AdaptMode,
    /// Fingerprint of the pre-adaptation model the prototypes came from.
    pub prototype_provenance: Option<u64>,
    /// Mean contrastive loss over the task before any update.
    pub initial_acl_loss: Option<T>,
    pub epochs: Vec<EpochRecord<T>>,
    pub batches: Vec<BatchBound<T>>,
    /// Misclassified samples whose loss fell below `log 2` (must be zero).
    pub threshold_violations: usize,
    pub samples_checked: usize,
}

impl<T: Scalar> AdaptReport<T> {
    pub(crate) fn empty(mode: AdaptMode) -> Self {
        Self {
            mode,
            prototype_provenance: None,
            initial_acl_loss: None,
            epochs: Vec::new(),
            batches: Vec::new(),
            threshold_violations: 0,
            samples_checked: 0,
        }
    }

    pub fn final_acl_loss(&self) -> Option<T> {
        self.epochs.last().map(|e| e.end_acl_loss)
    }

    pub fn all_bounds_pass(&self) -> bool {
        self.threshold_violations == 0
            && self.batches.iter().all(|b| b.report.pass)
            && self.epochs.iter().all(|e| {
                e.stability.pass && e.markov.pass && e.chord_cosine_residual <= T::of(CHORD_TOLERANCE)
            })
    }

    /// `epoch,mean_loss,bound_lhs,bound_rhs,markov_lhs,markov_rhs`
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "epoch,mean_loss,bound_lhs,bound_rhs,markov_lhs,markov_rhs")?;
        for e in &self.epochs {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                e.epoch, e.mean_loss, e.stability.lhs, e.stability.rhs, e.markov.lhs, e.markov.rhs
            )?;
        }
        Ok(())
    }
}
