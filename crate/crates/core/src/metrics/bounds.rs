use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::model::{ClassId, PrototypeTable};
use crate::numerics::{cosine_sim, l2_normalize, mean_vector, squared_distance, RngState, Scalar, UnitVector};

pub const MARKOV_TOLERANCE: f64 = 1e-12;
pub const STABILITY_TOLERANCE: f64 = 1e-9;
const LEMMA2_TOLERANCE: f64 = 1e-12;

/// One inequality `lhs ≤ rhs` evaluated on data.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport<T> {
    pub context: String,
    pub lhs: T,
    pub rhs: T,
    pub tolerance: T,
    pub slack: T,
    pub pass: bool,
}

impl<T: Scalar> BoundReport<T> {
    pub fn new(context: impl Into<String>, lhs: T, rhs: T, tolerance: T) -> Self {
        let slack = rhs - lhs;
        Self {
            context: context.into(),
            lhs,
            rhs,
            tolerance,
            slack,
            pass: slack >= -tolerance,
        }
    }
}

/// Misclassification rate against `mean(loss) / log 2`.
pub fn check_markov_bound<T: Scalar>(losses: &[T], correct: &[bool]) -> Result<BoundReport<T>> {
    if losses.len() != correct.len() {
        return Err(Error::LengthMismatch {
            left: losses.len(),
            right: correct.len(),
        });
    }
    if losses.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = T::from_usize(losses.len()).unwrap();
    let wrong = T::from_usize(correct.iter().filter(|&&c| !c).count()).unwrap();
    let mean_loss = losses.iter().copied().sum::<T>() / n;
    Ok(BoundReport::new(
        "markov",
        wrong / n,
        mean_loss / T::of(LN_2),
        T::of(MARKOV_TOLERANCE),
    ))
}

/// `mean‖new − old‖² ≤ 2 (mean‖new − p_y‖² + mean‖old − p_y‖²)`.
pub fn check_stability_bound<T: Scalar>(
    old: &[UnitVector<T>],
    new: &[UnitVector<T>],
    prototypes: &PrototypeTable<T>,
    labels: &[ClassId],
) -> Result<BoundReport<T>> {
    if old.len() != new.len() {
        return Err(Error::LengthMismatch {
            left: old.len(),
            right: new.len(),
        });
    }
    if old.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: old.len(),
            right: labels.len(),
        });
    }
    if old.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut drift = T::zero();
    let mut new_to_proto = T::zero();
    let mut old_to_proto = T::zero();
    for ((o, n), &y) in old.iter().zip(new).zip(labels) {
        let p = prototypes.get(y).ok_or(Error::UnknownLabel(y))?;
        drift = drift + squared_distance(n, o);
        new_to_proto = new_to_proto + squared_distance(n, p);
        old_to_proto = old_to_proto + squared_distance(o, p);
    }
    let count = T::from_usize(old.len()).unwrap();
    let two = T::of(2.0);
    Ok(BoundReport::new(
        "stability",
        drift / count,
        two * (new_to_proto / count + old_to_proto / count),
        T::of(STABILITY_TOLERANCE),
    ))
}

/// Largest `|‖a−b‖² − 2(1 − cos(a, b))|` over `n` random unit pairs.
pub fn verify_lemma1<T: Scalar>(n: usize, dim: usize, rng: &mut RngState) -> T {
    (0..n)
        .map(|_| {
            let a: UnitVector<T> = rng.unit_vector(dim);
            let b: UnitVector<T> = rng.unit_vector(dim);
            let chord = squared_distance(&a, &b);
            let cos = cosine_sim(&a, &b).expect("same dimension");
            (chord - T::of(2.0) * (T::one() - cos)).abs()
        })
        .fold(T::zero(), T::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma2Report<T> {
    /// Mean squared distance to the mean (lhs) against the best probe (rhs).
    pub bound: BoundReport<T>,
    /// Max-abs entry of `−2 · mean(e − z)` at `z = mean`.
    pub gradient_at_mean: T,
    /// `‖normalize(mean) − mean‖`; measured, not asserted.
    pub renormalization_gap: T,
    pub pass: bool,
}

fn mean_sq_dist<T: Scalar>(points: &[&[T]], z: &[T]) -> T {
    let n = T::from_usize(points.len()).unwrap();
    points.iter().map(|p| squared_distance(p, z)).sum::<T>() / n
}

/// Checks that the plain mean minimizes mean squared distance against
/// `n_probes` Gaussian perturbations of it (`noise_sd` per coordinate).
pub fn verify_lemma2<T: Scalar>(
    embeddings: &[&[T]],
    rng: &mut RngState,
    n_probes: usize,
    noise_sd: f64,
) -> Result<Lemma2Report<T>> {
    if embeddings.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            found: embeddings.len(),
        });
    }
    let mean = mean_vector(embeddings)?;
    let lhs = mean_sq_dist(embeddings, &mean);
    let rhs = (0..n_probes)
        .map(|_| {
            let z: Vec<T> = mean.iter().map(|&m| m + rng.normal::<T>(0.0, noise_sd)).collect();
            mean_sq_dist(embeddings, &z)
        })
        .fold(T::infinity(), T::min);

    let n = T::from_usize(embeddings.len()).unwrap();
    let mut grad = vec![T::zero(); mean.len()];
    for e in embeddings {
        for ((g, &x), &m) in grad.iter_mut().zip(e.iter()).zip(&mean) {
            *g = *g + x - m;
        }
    }
    let gradient_at_mean = grad
        .iter()
        .map(|&g| (T::of(-2.0) * g / n).abs())
        .fold(T::zero(), T::max);

    let renormalization_gap = match l2_normalize(&mean) {
        Ok(u) => squared_distance(&u, &mean).sqrt(),
        Err(_) => T::nan(),
    };

    let tol = T::of(LEMMA2_TOLERANCE);
    let bound = BoundReport::new("lemma2", lhs, rhs, tol);
    let pass = bound.pass && gradient_at_mean <= tol;
    Ok(Lemma2Report {
        bound,
        gradient_at_mean,
        renormalization_gap,
        pass,
    })
}
