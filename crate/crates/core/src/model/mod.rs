//! Embedding network, residual adapter, classification heads and the
//! hand-written backward pass through embed → normalize.

mod checkpoint;
mod classifier;
mod layers;
mod tape;

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use classifier::{argmax_lowest_id, classify, ClassId, Classifier, LinearHead, PrototypeTable};
pub use layers::{fingerprint, Activation, AdapterModule, Backbone, Dense, Matrix, ModelParams};
pub use tape::{embed, embed_with_tape, Tape};

use crate::error::{Error, Result};
use crate::numerics::{RngState, Scalar};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub embed_dim: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub adapter_rank: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_dim: 32,
            embed_dim: 16,
            hidden: vec![64, 64],
            activation: Activation::Tanh,
            adapter_rank: 8,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim < 1 {
            return Err(Error::InvalidConfig("input_dim must be >= 1".into()));
        }
        if self.embed_dim < 2 {
            return Err(Error::InvalidConfig("embed_dim must be >= 2".into()));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::InvalidConfig(
                "need at least one hidden layer, all widths >= 1".into(),
            ));
        }
        if self.adapter_rank < 1 {
            return Err(Error::InvalidConfig("adapter_rank must be >= 1".into()));
        }
        Ok(())
    }
}

/// Fresh backbone and adapter. Weights and biases are uniform in
/// `±1/√fan_in`; the adapter's up-projection is zero so it starts as identity.
///
/// Panics if `config` does not validate.
pub fn init_model<T: Scalar>(
    config: &ModelConfig,
    rng: &mut RngState,
) -> (Backbone<T>, AdapterModule<T>) {
    config.validate().expect("invalid model config");
    let mut dims = vec![config.input_dim];
    dims.extend(&config.hidden);
    dims.push(config.embed_dim);
    let layers = dims
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let scale = 1.0 / (fan_in as f64).sqrt();
            let weight = Matrix::uniform(fan_out, fan_in, scale, rng);
            let bias = (0..fan_out).map(|_| rng.uniform(-scale, scale)).collect();
            Dense { weight, bias }
        })
        .collect();
    let backbone = Backbone {
        activation: config.activation,
        layers,
    };
    let d = config.embed_dim;
    let r = config.adapter_rank;
    let adapter = AdapterModule {
        activation: config.activation,
        down: Matrix::uniform(r, d, 1.0 / (d as f64).sqrt(), rng),
        up: Matrix::zeros(d, r),
    };
    (backbone, adapter)
}
