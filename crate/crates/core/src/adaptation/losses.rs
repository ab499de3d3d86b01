use crate::error::{Error, Result};
use crate::model::{ClassId, LinearHead, PrototypeTable};
use crate::numerics::{log_sum_exp, softmax, Scalar, UnitVector};

/// Prototype-anchored contrastive loss and its gradient with respect to the
/// (already normalized) embedding.
///
/// With `s_j = cos(e, p_j) / τ` the loss is `lse(s) − s_label`, and the
/// gradient is `Σ_j (softmax(s)_j − [j = label]) p_j / τ`. The loss is
/// evaluated on the margins `s_j − s_label` (through `ln_1p` when the label
/// scores highest) so that tiny losses keep their relative precision.
pub fn acl_loss<T: Scalar>(
    e_star: &UnitVector<T>,
    label: ClassId,
    protos: &PrototypeTable<T>,
    temperature: T,
) -> Result<(T, Vec<T>)> {
    if temperature.is_nan() || temperature <= T::zero() {
        return Err(Error::InvalidConfig("temperature must be positive".into()));
    }
    let target = protos.index_of(label).ok_or(Error::UnknownLabel(label))?;
    let scores: Vec<T> = protos
        .similarities(e_star)?
        .into_iter()
        .map(|c| c / temperature)
        .collect();
    let margins: Vec<T> = scores.iter().map(|&s| s - scores[target]).collect();
    let top = margins.iter().copied().fold(T::zero(), T::max);
    let loss = if top == T::zero() {
        margins
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != target)
            .map(|(_, &m)| m.exp())
            .sum::<T>()
            .ln_1p()
    } else {
        log_sum_exp(&margins)?
    };
    let probs = softmax(&scores)?;
    let mut grad = vec![T::zero(); e_star.dim()];
    for (j, ((_, p), &pj)) in protos.iter().zip(&probs).enumerate() {
        let w = (pj - if j == target { T::one() } else { T::zero() }) / temperature;
        for (g, &v) in grad.iter_mut().zip(p.iter()) {
            *g = *g + w * v;
        }
    }
    Ok((loss, grad))
}

/// Softmax cross-entropy on a linear head.
#[derive(Debug, Clone)]
pub struct CeOutput<T> {
    pub loss: T,
    pub d_embedding: Vec<T>,
    pub d_head: LinearHead<T>,
}

/// Cross-entropy of `head` logits against `label`.
pub fn ce_adapt_loss<T: Scalar>(
    e_star: &UnitVector<T>,
    label: ClassId,
    head: &LinearHead<T>,
) -> Result<CeOutput<T>> {
    softmax_cross_entropy(e_star, label, head, None)
}

/// Cross-entropy over the head rows in `active` (all rows when `None`).
/// Rows outside `active` get zero gradient.
pub fn softmax_cross_entropy<T: Scalar>(
    e: &[T],
    label: ClassId,
    head: &LinearHead<T>,
    active: Option<&[usize]>,
) -> Result<CeOutput<T>> {
    let all: Vec<usize>;
    let rows = match active {
        Some(r) => r,
        None => {
            all = (0..head.classes().len()).collect();
            &all
        }
    };
    if rows.is_empty() {
        return Err(Error::EmptyClassifier);
    }
    let label_row = head.index_of(label).ok_or(Error::UnknownLabel(label))?;
    let target = rows
        .iter()
        .position(|&r| r == label_row)
        .ok_or(Error::UnknownLabel(label))?;
    let logits_all = head.logits(e)?;
    let logits: Vec<T> = rows.iter().map(|&r| logits_all[r]).collect();
    let loss = log_sum_exp(&logits)? - logits[target];
    let probs = softmax(&logits)?;

    let mut d_head = head.zeros_like();
    let mut d_embedding = vec![T::zero(); e.len()];
    for (k, (&r, &p)) in rows.iter().zip(&probs).enumerate() {
        let dz = p - if k == target { T::one() } else { T::zero() };
        d_head.bias[r] = dz;
        let cols = head.weight.cols;
        for (i, (&ei, w)) in e.iter().zip(head.weight.row(r)).enumerate() {
            d_head.weight.data[r * cols + i] = dz * ei;
            d_embedding[i] = d_embedding[i] + dz * *w;
        }
    }
    Ok(CeOutput {
        loss,
        d_embedding,
        d_head,
    })
}
