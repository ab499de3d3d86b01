use super::Scalar;
use crate::error::{Error, Result};

/// Anything exposing its trainable values as a fixed list of flat buffers.
///
/// Gradients use the same type as the parameters they belong to, so the
/// buffer lists line up index for index.
pub trait ParamSet<T> {
    fn buffers(&self) -> Vec<&[T]>;
    fn buffers_mut(&mut self) -> Vec<&mut [T]>;

    fn shapes(&self) -> Vec<usize> {
        self.buffers().iter().map(|b| b.len()).collect()
    }

    fn num_params(&self) -> usize {
        self.buffers().iter().map(|b| b.len()).sum()
    }
}

impl<T> ParamSet<T> for Vec<Vec<T>> {
    fn buffers(&self) -> Vec<&[T]> {
        self.iter().map(Vec::as_slice).collect()
    }

    fn buffers_mut(&mut self) -> Vec<&mut [T]> {
        self.iter_mut().map(Vec::as_mut_slice).collect()
    }
}

/// Momentum SGD: `v <- momentum * v + g; p <- p - lr * v`.
#[derive(Debug, Clone)]
pub struct OptimizerState<T> {
    pub learning_rate: T,
    pub momentum: T,
    velocity: Vec<Vec<T>>,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(learning_rate: T, momentum: T) -> Result<Self> {
        if learning_rate < T::zero() || !learning_rate.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be non-negative, got {learning_rate}"
            )));
        }
        if !(momentum >= T::zero() && momentum < T::one()) {
            return Err(Error::InvalidConfig(format!(
                "momentum must lie in [0, 1), got {momentum}"
            )));
        }
        Ok(Self {
            learning_rate,
            momentum,
            velocity: Vec::new(),
        })
    }

    pub fn velocity(&self) -> &[Vec<T>] {
        &self.velocity
    }

    /// One update in place. Velocity buffers are sized on the first call and
    /// must match every later call.
    pub fn step<P: ParamSet<T>>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        let g = grads.buffers();
        let mut p = params.buffers_mut();
        if p.len() != g.len() || p.iter().zip(&g).any(|(a, b)| a.len() != b.len()) {
            return Err(Error::ShapeMismatch(
                "parameter and gradient buffers differ".into(),
            ));
        }
        if self.velocity.is_empty() {
            self.velocity = g.iter().map(|b| vec![T::zero(); b.len()]).collect();
        } else if self.velocity.len() != g.len()
            || self.velocity.iter().zip(&g).any(|(v, b)| v.len() != b.len())
        {
            return Err(Error::ShapeMismatch(
                "velocity buffers do not match parameters".into(),
            ));
        }
        for ((pb, gb), vb) in p.iter_mut().zip(&g).zip(self.velocity.iter_mut()) {
            for ((pi, &gi), vi) in pb.iter_mut().zip(gb.iter()).zip(vb.iter_mut()) {
                *vi = self.momentum * *vi + gi;
                *pi = *pi - self.learning_rate * *vi;
            }
        }
        Ok(())
    }
}

/// Functional form of [`OptimizerState::step`].
pub fn sgd_step<T: Scalar, P: ParamSet<T> + Clone>(
    params: &P,
    grads: &P,
    state: &mut OptimizerState<T>,
) -> Result<P> {
    let mut out = params.clone();
    state.step(&mut out, grads)?;
    Ok(out)
}
