use std::ops::Deref;

use super::Scalar;
use crate::error::{Error, Result};

/// Degenerate-vector threshold for normalization.
pub const EPS_NORM: f64 = 1e-8;

/// A non-empty vector of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct RealVector<T>(Vec<T>);

impl<T: Scalar> RealVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue("vector"));
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "zero-dimensional vector");
        Self(vec![T::zero(); dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn norm(&self) -> T {
        norm(&self.0)
    }
}

impl<T> Deref for RealVector<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

/// A vector on the unit hypersphere.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector<T>(Vec<T>);

impl<T: Scalar> UnitVector<T> {
    /// Wraps values that must already have unit norm.
    pub fn try_new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue("unit vector"));
        }
        let n = norm(&values);
        if (n - T::one()).abs() > T::unit_tolerance() {
            return Err(Error::ShapeMismatch(format!(
                "expected unit norm, found {}",
                n
            )));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn to_real(&self) -> RealVector<T> {
        RealVector(self.0.clone())
    }
}

impl<T> Deref for UnitVector<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm<T: Scalar>(v: &[T]) -> T {
    dot(v, v).sqrt()
}

pub fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| {
        let d = x - y;
        acc + d * d
    })
}

/// Scales `v` onto the unit sphere.
pub fn l2_normalize<T: Scalar>(v: &[T]) -> Result<UnitVector<T>> {
    if v.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = norm(v);
    if !n.is_finite() {
        return Err(Error::NonFiniteValue("normalization input"));
    }
    if n <= T::of(EPS_NORM) {
        return Err(Error::DegenerateVector { norm: n.as_f64() });
    }
    Ok(UnitVector(v.iter().map(|&x| x / n).collect()))
}

/// Cosine similarity of two unit vectors, clamped to `[-1, 1]`.
pub fn cosine_sim<T: Scalar>(a: &UnitVector<T>, b: &UnitVector<T>) -> Result<T> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(clamp_unit(dot(a, b)))
}

pub(crate) fn clamp_unit<T: Scalar>(x: T) -> T {
    x.max(-T::one()).min(T::one())
}

/// Element-wise mean of equal-length rows.
pub fn mean_vector<T: Scalar>(rows: &[&[T]]) -> Result<Vec<T>> {
    let first = rows.first().ok_or(Error::EmptyInput)?;
    let mut acc = vec![T::zero(); first.len()];
    for r in rows {
        if r.len() != acc.len() {
            return Err(Error::DimensionMismatch {
                expected: acc.len(),
                found: r.len(),
            });
        }
        for (a, &x) in acc.iter_mut().zip(r.iter()) {
            *a = *a + x;
        }
    }
    let n = T::from_usize(rows.len()).unwrap();
    Ok(acc.into_iter().map(|a| a / n).collect())
}
