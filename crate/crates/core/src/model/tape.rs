use super::layers::{AdapterModule, Backbone, ModelParams};
use crate::error::{Error, Result};
use crate::numerics::{dot, l2_normalize, norm, Scalar, UnitVector};

struct LayerRecord<T> {
    input: Vec<T>,
    pre: Vec<T>,
    out: Vec<T>,
}

struct AdapterRecord<T> {
    input: Vec<T>,
    pre: Vec<T>,
    hidden: Vec<T>,
}

/// Activations from one forward pass, held for a single backward pass.
pub struct Tape<'m, T> {
    backbone: &'m Backbone<T>,
    adapter: Option<&'m AdapterModule<T>>,
    layers: Vec<LayerRecord<T>>,
    adapter_record: Option<AdapterRecord<T>>,
    raw_norm: T,
    embedding: UnitVector<T>,
    consumed: bool,
}

fn check_input<T: Scalar>(backbone: &Backbone<T>, x: &[T]) -> Result<()> {
    if x.len() != backbone.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: backbone.input_dim(),
            found: x.len(),
        });
    }
    Ok(())
}

/// Forward pass: backbone, optional adapter residual, then projection onto the sphere.
pub fn embed<T: Scalar>(
    backbone: &Backbone<T>,
    adapter: Option<&AdapterModule<T>>,
    x: &[T],
) -> Result<UnitVector<T>> {
    check_input(backbone, x)?;
    let raw = backbone.forward(x);
    let v = match adapter {
        Some(a) => a.forward(&raw),
        None => raw,
    };
    l2_normalize(&v)
}

/// Same computation as [`embed`], keeping what backprop needs.
pub fn embed_with_tape<'m, T: Scalar>(
    backbone: &'m Backbone<T>,
    adapter: Option<&'m AdapterModule<T>>,
    x: &[T],
) -> Result<(UnitVector<T>, Tape<'m, T>)> {
    check_input(backbone, x)?;
    let last = backbone.layers.len() - 1;
    let act = backbone.activation;
    let mut layers = Vec::with_capacity(backbone.layers.len());
    let mut h = x.to_vec();
    for (i, layer) in backbone.layers.iter().enumerate() {
        let pre = layer.forward(&h);
        let out: Vec<T> = if i == last {
            pre.clone()
        } else {
            pre.iter().map(|&z| act.apply(z)).collect()
        };
        layers.push(LayerRecord {
            input: std::mem::take(&mut h),
            pre,
            out: out.clone(),
        });
        h = out;
    }

    let (v, adapter_record) = match adapter {
        Some(a) => {
            let pre = a.down.matvec(&h);
            let hidden: Vec<T> = pre.iter().map(|&z| a.activation.apply(z)).collect();
            let delta = a.up.matvec(&hidden);
            let v: Vec<T> = h.iter().zip(delta).map(|(&e, d)| e + d).collect();
            (v, Some(AdapterRecord { input: h, pre, hidden }))
        }
        None => (h, None),
    };
    let embedding = l2_normalize(&v)?;
    let tape = Tape {
        backbone,
        adapter,
        layers,
        adapter_record,
        raw_norm: norm(&v),
        embedding: embedding.clone(),
        consumed: false,
    };
    Ok((embedding, tape))
}

impl<'m, T: Scalar> Tape<'m, T> {
    pub fn embedding(&self) -> &UnitVector<T> {
        &self.embedding
    }

    pub fn is_consumed(&self) -> bool {
        self.consumed
    }

    /// Gradients of `⟨embedding, d_embedding⟩` for the backbone and adapter.
    pub fn backprop(&mut self, d_embedding: &[T]) -> Result<ModelParams<T>> {
        let mut grads = ModelParams {
            backbone: self.backbone.zeros_like(),
            adapter: self.adapter.map(AdapterModule::zeros_like),
        };
        self.backprop_into(d_embedding, T::one(), &mut grads)?;
        Ok(grads)
    }

    /// Adds `weight` times the gradients into `grads`.
    pub fn backprop_into(
        &mut self,
        d_embedding: &[T],
        weight: T,
        grads: &mut ModelParams<T>,
    ) -> Result<()> {
        if self.consumed {
            return Err(Error::TapeConsumed);
        }
        if d_embedding.len() != self.embedding.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.embedding.dim(),
                found: d_embedding.len(),
            });
        }
        self.consumed = true;

        // Normalization Jacobian: (I − e eᵀ) / ‖v‖.
        let e = self.embedding.as_slice();
        let proj = dot(e, d_embedding);
        let mut g: Vec<T> = d_embedding
            .iter()
            .zip(e)
            .map(|(&gi, &ei)| weight * (gi - ei * proj) / self.raw_norm)
            .collect();

        if let (Some(adapter), Some(rec)) = (self.adapter, &self.adapter_record) {
            let ga = grads
                .adapter
                .as_mut()
                .ok_or_else(|| Error::ShapeMismatch("gradient container lacks adapter".into()))?;
            ga.up.add_outer(&g, &rec.hidden);
            let d_hidden = adapter.up.matvec_t(&g);
            let d_pre: Vec<T> = d_hidden
                .iter()
                .zip(rec.pre.iter().zip(&rec.hidden))
                .map(|(&dh, (&z, &a))| dh * adapter.activation.derivative(z, a))
                .collect();
            ga.down.add_outer(&d_pre, &rec.input);
            let through = adapter.down.matvec_t(&d_pre);
            for (gi, t) in g.iter_mut().zip(through) {
                *gi = *gi + t;
            }
        }

        let act = self.backbone.activation;
        let last = self.layers.len() - 1;
        for (i, rec) in self.layers.iter().enumerate().rev() {
            let dz: Vec<T> = if i == last {
                g
            } else {
                g.iter()
                    .zip(rec.pre.iter().zip(&rec.out))
                    .map(|(&gi, (&z, &a))| gi * act.derivative(z, a))
                    .collect()
            };
            let gl = &mut grads.backbone.layers[i];
            gl.weight.add_outer(&dz, &rec.input);
            for (b, &d) in gl.bias.iter_mut().zip(&dz) {
                *b = *b + d;
            }
            g = if i > 0 {
                self.backbone.layers[i].weight.matvec_t(&dz)
            } else {
                Vec::new()
            };
        }
        Ok(())
    }
}
