use super::{ExperimentState, Task, TaskStream};
use crate::adaptation::{compute_prototypes, softmax_cross_entropy};
use crate::error::{Error, Result};
use crate::model::{embed, embed_with_tape, fingerprint, Classifier, ModelParams};
use crate::numerics::{OptimizerState, RngState, Scalar};

fn check_new_classes<T: Scalar>(state: &ExperimentState<T>, task: &Task<T>) -> Result<()> {
    let known = state.classifier.class_ids();
    match task.classes.iter().find(|c| known.contains(c)) {
        Some(&c) => Err(Error::DuplicateClass(c)),
        None => Ok(()),
    }
}

/// Appends prototypes of the task's classes, computed with the frozen
/// current model. Nothing is trained and stored prototypes are untouched.
pub fn core_learn_ncm<T: Scalar>(state: &mut ExperimentState<T>, task: &Task<T>) -> Result<()> {
    check_new_classes(state, task)?;
    let frozen = fingerprint(&state.backbone);
    let table = compute_prototypes(&state.backbone, Some(&state.adapter), &task.train)?;
    match &mut state.classifier {
        Classifier::Cosine(store) => store.append(&table)?,
        Classifier::Linear(_) => {
            return Err(Error::InvalidConfig("NCM learner needs a cosine classifier".into()))
        }
    }
    if fingerprint(&state.backbone) != frozen {
        return Err(Error::FrozenBackboneModified("nearest-class-mean learning"));
    }
    state.task_index = task.index;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearCoreConfig<T> {
    pub epochs: usize,
    pub learning_rate: T,
    pub momentum: T,
    pub batch_size: usize,
    /// Also update the adapter, not just the head.
    pub tune_adapter: bool,
}

impl<T: Scalar> Default for LinearCoreConfig<T> {
    fn default() -> Self {
        Self {
            epochs: 5,
            learning_rate: T::of(0.1),
            momentum: T::of(0.9),
            batch_size: 32,
            tune_adapter: false,
        }
    }
}

/// Adds zero rows for the task's classes, then trains with cross-entropy on
/// the current task only. Logits are restricted to the current task's rows
/// during training so older rows are never pushed down. The backbone is
/// frozen and checked bit-for-bit.
pub fn core_learn_linear<T: Scalar>(
    state: &mut ExperimentState<T>,
    task: &Task<T>,
    config: &LinearCoreConfig<T>,
    rng: &mut RngState,
) -> Result<()> {
    check_new_classes(state, task)?;
    if config.batch_size == 0 {
        return Err(Error::InvalidConfig("batch size must be positive".into()));
    }
    let frozen = fingerprint(&state.backbone);
    let Classifier::Linear(head) = &mut state.classifier else {
        return Err(Error::InvalidConfig("linear learner needs a linear classifier".into()));
    };
    head.add_classes(&task.classes)?;
    let active: Vec<usize> = task
        .classes
        .iter()
        .map(|&c| head.index_of(c).expect("row just added"))
        .collect();

    let mut head_opt = OptimizerState::new(config.learning_rate, config.momentum)?;
    let mut adapter_opt = OptimizerState::new(config.learning_rate, config.momentum)?;
    let mut order: Vec<usize> = (0..task.train.len()).collect();
    for epoch in 0..config.epochs {
        rng.shuffle(&mut order);
        for batch in order.chunks(config.batch_size) {
            let weight = T::one() / T::from_usize(batch.len()).unwrap();
            let mut head_grad = head.zeros_like();
            let mut grads = ModelParams {
                backbone: state.backbone.zeros_like(),
                adapter: Some(state.adapter.zeros_like()),
            };
            for &i in batch {
                let s = &task.train.samples[i];
                let (e, mut tape) = embed_with_tape(&state.backbone, Some(&state.adapter), &s.x)?;
                let out = softmax_cross_entropy(&e, s.y, head, Some(&active))?;
                if !out.loss.is_finite() {
                    return Err(Error::NonFiniteLoss(format!(
                        "linear core learning, task {}, epoch {epoch}",
                        task.index
                    )));
                }
                for (acc, g) in head_grad.weight.data.iter_mut().zip(&out.d_head.weight.data) {
                    *acc = *acc + weight * *g;
                }
                for (acc, g) in head_grad.bias.iter_mut().zip(&out.d_head.bias) {
                    *acc = *acc + weight * *g;
                }
                if config.tune_adapter {
                    tape.backprop_into(&out.d_embedding, weight, &mut grads)?;
                }
            }
            head_opt.step(head, &head_grad)?;
            if config.tune_adapter {
                adapter_opt.step(&mut state.adapter, grads.adapter.as_ref().expect("adapter grads"))?;
            }
        }
    }
    if fingerprint(&state.backbone) != frozen {
        return Err(Error::FrozenBackboneModified("linear core learning"));
    }
    state.task_index = task.index;
    Ok(())
}

/// Accuracy on each of the first `up_to` tasks' test sets, predicting over
/// every class the classifier knows.
pub fn evaluate<T: Scalar>(
    state: &ExperimentState<T>,
    stream: &TaskStream<T>,
    up_to: usize,
) -> Result<Vec<T>> {
    if up_to > state.task_index || up_to > stream.len() {
        return Err(Error::InvalidConfig(format!(
            "cannot evaluate {up_to} tasks after learning {}",
            state.task_index
        )));
    }
    stream.tasks()[..up_to]
        .iter()
        .map(|task| {
            let mut hits = 0usize;
            for s in &task.test.samples {
                let e = embed(&state.backbone, Some(&state.adapter), &s.x)?;
                if state.classifier.classify(&e)?.0 == s.y {
                    hits += 1;
                }
            }
            Ok(T::from_usize(hits).unwrap() / T::from_usize(task.test.len()).unwrap())
        })
        .collect()
}
