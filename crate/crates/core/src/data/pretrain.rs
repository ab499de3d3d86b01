use super::LabeledDataset;
use crate::adaptation::softmax_cross_entropy;
use crate::error::{Error, Result};
use crate::model::{embed_with_tape, Backbone, LinearHead, ModelParams};
use crate::numerics::{OptimizerState, RngState, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct PretrainConfig<T> {
    pub epochs: usize,
    pub learning_rate: T,
    pub momentum: T,
    pub batch_size: usize,
}

impl<T: Scalar> Default for PretrainConfig<T> {
    fn default() -> Self {
        Self {
            epochs: 30,
            learning_rate: T::of(0.1),
            momentum: T::of(0.9),
            batch_size: 32,
        }
    }
}

/// Supervised pretraining of the backbone through a throwaway linear head on
/// the normalized embedding. The head is discarded.
pub fn pretrain_backbone<T: Scalar>(
    backbone: &Backbone<T>,
    data: &LabeledDataset<T>,
    config: &PretrainConfig<T>,
    rng: &mut RngState,
) -> Result<Backbone<T>> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidConfig("batch size must be positive".into()));
    }
    let mut params = ModelParams {
        backbone: backbone.clone(),
        adapter: None,
    };
    if config.epochs == 0 {
        return Ok(params.backbone);
    }
    let mut head = LinearHead::new(backbone.output_dim());
    head.add_classes(&data.classes().into_iter().collect::<Vec<_>>())?;
    let mut opt = OptimizerState::new(config.learning_rate, config.momentum)?;
    let mut head_opt = OptimizerState::new(config.learning_rate, config.momentum)?;

    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..config.epochs {
        rng.shuffle(&mut order);
        for batch in order.chunks(config.batch_size) {
            let weight = T::one() / T::from_usize(batch.len()).unwrap();
            let mut grads = params.zeros_like();
            let mut head_grad = head.zeros_like();
            for &i in batch {
                let s = &data.samples[i];
                let (e, mut tape) = embed_with_tape(&params.backbone, None, &s.x)?;
                let out = softmax_cross_entropy(&e, s.y, &head, None)?;
                if !out.loss.is_finite() {
                    return Err(Error::NonFiniteLoss(format!("pretraining epoch {epoch}")));
                }
                for (acc, g) in head_grad.weight.data.iter_mut().zip(&out.d_head.weight.data) {
                    *acc = *acc + weight * *g;
                }
                for (acc, g) in head_grad.bias.iter_mut().zip(&out.d_head.bias) {
                    *acc = *acc + weight * *g;
                }
                tape.backprop_into(&out.d_embedding, weight, &mut grads)?;
            }
            opt.step(&mut params.backbone, &grads.backbone)?;
            head_opt.step(&mut head, &head_grad)?;
        }
    }
    Ok(params.backbone)
}
