use std::f64::consts::LN_2;

use super::losses::{acl_loss, softmax_cross_entropy};
use super::prototypes::compute_prototypes;
use super::{AdaptConfig, AdaptMode, AdaptReport, BatchBound, EpochRecord};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::metrics::{check_markov_bound, check_stability_bound, MARKOV_TOLERANCE};
use crate::model::{
    embed, embed_with_tape, AdapterModule, Backbone, Classifier, LinearHead, ModelParams,
    PrototypeTable,
};
use crate::numerics::{cosine_sim, squared_distance, OptimizerState, RngState, Scalar, UnitVector};

fn embed_all<T: Scalar>(
    backbone: &Backbone<T>,
    adapter: &AdapterModule<T>,
    data: &LabeledDataset<T>,
) -> Result<Vec<UnitVector<T>>> {
    data.samples
        .iter()
        .map(|s| embed(backbone, Some(adapter), &s.x))
        .collect()
}

fn mean_acl_loss<T: Scalar>(
    embeddings: &[UnitVector<T>],
    data: &LabeledDataset<T>,
    protos: &PrototypeTable<T>,
    temperature: T,
) -> Result<T> {
    let mut total = T::zero();
    for (e, s) in embeddings.iter().zip(&data.samples) {
        total = total + acl_loss(e, s.y, protos, temperature)?.0;
    }
    Ok(total / T::from_usize(embeddings.len()).unwrap())
}

/// `|mean‖e − p_y‖² − 2·mean(1 − cos(e, p_y))|`, both sides computed separately.
fn chord_cosine_residual<T: Scalar>(
    embeddings: &[UnitVector<T>],
    data: &LabeledDataset<T>,
    protos: &PrototypeTable<T>,
) -> Result<T> {
    let n = T::from_usize(embeddings.len()).unwrap();
    let mut chord = T::zero();
    let mut cos_gap = T::zero();
    for (e, s) in embeddings.iter().zip(&data.samples) {
        let p = protos.get(s.y).ok_or(Error::UnknownLabel(s.y))?;
        chord = chord + squared_distance(e, p);
        cos_gap = cos_gap + (T::one() - cosine_sim(e, p)?);
    }
    Ok((chord / n - T::of(2.0) * cos_gap / n).abs())
}

/// Runs one adaptation phase on a task's training data.
///
/// Prototypes are computed once from the incoming model and stay fixed for
/// the whole phase. Every batch records a Markov check and every sample a
/// `log 2` threshold check; every epoch ends with the drift bound evaluated
/// on the full task. `epochs = 0` or [`AdaptMode::Disabled`] return the
/// inputs unchanged.
pub fn adapt<T: Scalar>(
    backbone: &Backbone<T>,
    adapter: &AdapterModule<T>,
    data: &LabeledDataset<T>,
    config: &AdaptConfig<T>,
    rng: &mut RngState,
) -> Result<(Backbone<T>, AdapterModule<T>, AdaptReport<T>)> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut report = AdaptReport::empty(config.mode);
    if config.mode == AdaptMode::Disabled || config.epochs == 0 {
        return Ok((backbone.clone(), adapter.clone(), report));
    }

    let protos = compute_prototypes(backbone, Some(adapter), data)?;
    let provenance = protos.provenance();
    report.prototype_provenance = Some(provenance);
    let classifier = Classifier::Cosine(protos.clone());
    let protos = &protos;
    let tau = config.temperature;
    let labels: Vec<_> = data.samples.iter().map(|s| s.y).collect();
    let before = embed_all(backbone, adapter, data)?;
    report.initial_acl_loss = Some(mean_acl_loss(&before, data, protos, tau)?);

    let mut head = match config.mode {
        AdaptMode::CeAblation => {
            let mut h = LinearHead::new(backbone.output_dim());
            h.add_classes(&protos.classes().collect::<Vec<_>>())?;
            Some(h)
        }
        _ => None,
    };
    let mut params = ModelParams {
        backbone: backbone.clone(),
        adapter: Some(adapter.clone()),
    };
    let mut backbone_opt = OptimizerState::new(config.learning_rate, config.momentum)?;
    let mut adapter_opt = OptimizerState::new(config.learning_rate, config.momentum)?;
    let mut head_opt = OptimizerState::new(config.learning_rate, config.momentum)?;
    let threshold = T::of(LN_2) - T::of(MARKOV_TOLERANCE);

    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 1..=config.epochs {
        rng.shuffle(&mut order);
        let mut epoch_losses = Vec::with_capacity(data.len());
        let mut epoch_acl = Vec::with_capacity(data.len());
        let mut epoch_correct = Vec::with_capacity(data.len());

        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let mut grads = params.zeros_like();
            let mut head_grad = head.as_ref().map(LinearHead::zeros_like);
            let weight = T::one() / T::from_usize(batch.len()).unwrap();
            let mut batch_acl = Vec::with_capacity(batch.len());
            let mut batch_correct = Vec::with_capacity(batch.len());

            for &i in batch {
                let sample = &data.samples[i];
                let (e, mut tape) =
                    embed_with_tape(&params.backbone, params.adapter.as_ref(), &sample.x)?;
                let (acl, acl_grad) = acl_loss(&e, sample.y, protos, tau)?;
                let (pred, _) = classifier.classify(&e)?;
                let correct = pred == sample.y;
                if !correct && acl < threshold {
                    report.threshold_violations += 1;
                }
                report.samples_checked += 1;
                batch_acl.push(acl);
                batch_correct.push(correct);

                let (loss, d_e) = match (&head, &mut head_grad) {
                    (Some(h), Some(hg)) => {
                        let out = softmax_cross_entropy(&e, sample.y, h, None)?;
                        for (acc, g) in hg.weight.data.iter_mut().zip(&out.d_head.weight.data) {
                            *acc = *acc + weight * *g;
                        }
                        for (acc, g) in hg.bias.iter_mut().zip(&out.d_head.bias) {
                            *acc = *acc + weight * *g;
                        }
                        (out.loss, out.d_embedding)
                    }
                    _ => (acl, acl_grad),
                };
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss(format!(
                        "{} adaptation, epoch {epoch}, batch {b}",
                        config.mode
                    )));
                }
                epoch_losses.push(loss);
                tape.backprop_into(&d_e, weight, &mut grads)?;
            }

            report.batches.push(BatchBound {
                epoch,
                batch: b,
                report: check_markov_bound(&batch_acl, &batch_correct)?,
            });
            epoch_acl.extend(batch_acl);
            epoch_correct.extend(batch_correct);

            if config.mode != AdaptMode::LightweightOnly {
                backbone_opt.step(&mut params.backbone, &grads.backbone)?;
            }
            if let (Some(a), Some(ga)) = (params.adapter.as_mut(), grads.adapter.as_ref()) {
                adapter_opt.step(a, ga)?;
            }
            if let (Some(h), Some(hg)) = (head.as_mut(), head_grad.as_ref()) {
                head_opt.step(h, hg)?;
            }
        }

        let adapter_now = params.adapter.as_ref().expect("adapter present");
        let after = embed_all(&params.backbone, adapter_now, data)?;
        let n = T::from_usize(epoch_losses.len()).unwrap();
        report.epochs.push(EpochRecord {
            epoch,
            mean_loss: epoch_losses.iter().copied().sum::<T>() / n,
            end_acl_loss: mean_acl_loss(&after, data, protos, tau)?,
            stability: check_stability_bound(&before, &after, protos, &labels)?,
            markov: check_markov_bound(&epoch_acl, &epoch_correct)?,
            chord_cosine_residual: chord_cosine_residual(&after, data, protos)?,
        });
    }
    debug_assert_eq!(protos.provenance(), provenance);

    let ModelParams { backbone, adapter } = params;
    Ok((backbone, adapter.expect("adapter present"), report))
}
