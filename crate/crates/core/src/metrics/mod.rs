//! Continual-learning metrics and standalone checks of the loss guarantees.

mod accuracy;
mod bounds;

pub use accuracy::{AccuracyMatrix, PlasticityMode};
pub use bounds::{
    check_markov_bound, check_stability_bound, verify_lemma1, verify_lemma2, BoundReport,
    Lemma2Report, MARKOV_TOLERANCE, STABILITY_TOLERANCE,
};
