use super::{ParamSet, Scalar};
use crate::error::{Error, Result};

/// Central-difference gradient of `loss` at `params`, coordinate by coordinate.
pub fn finite_diff_grad<T, P, F>(mut loss: F, params: &P, h: T) -> Result<P>
where
    T: Scalar,
    P: ParamSet<T> + Clone,
    F: FnMut(&P) -> T,
{
    if h.is_nan() || h <= T::zero() {
        return Err(Error::InvalidConfig("finite-difference step must be positive".into()));
    }
    let mut grad = params.clone();
    let mut probe = params.clone();
    let shapes = params.shapes();
    let two_h = h + h;
    for (buf, &len) in shapes.iter().enumerate() {
        for i in 0..len {
            let orig = params.buffers()[buf][i];
            probe.buffers_mut()[buf][i] = orig + h;
            let up = loss(&probe);
            probe.buffers_mut()[buf][i] = orig - h;
            let down = loss(&probe);
            probe.buffers_mut()[buf][i] = orig;
            if !up.is_finite() || !down.is_finite() {
                return Err(Error::NonFiniteLoss(format!(
                    "finite-difference probe of buffer {buf} index {i}"
                )));
            }
            grad.buffers_mut()[buf][i] = (up - down) / two_h;
        }
    }
    Ok(grad)
}

/// `‖a − b‖ / max(‖a‖, ‖b‖, floor)` over all buffers.
pub fn relative_error<T: Scalar>(a: &[&[T]], b: &[&[T]], floor: T) -> T {
    let mut diff = T::zero();
    let mut na = T::zero();
    let mut nb = T::zero();
    for (x, y) in a.iter().zip(b) {
        for (&u, &v) in x.iter().zip(y.iter()) {
            diff = diff + (u - v) * (u - v);
            na = na + u * u;
            nb = nb + v * v;
        }
    }
    diff.sqrt() / na.sqrt().max(nb.sqrt()).max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let g = finite_diff_grad(|p: &Vec<Vec<f64>>| p[0][0] * p[0][0], &vec![vec![3.0]], 1e-5)
            .unwrap();
        assert!((g[0][0] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn constant_gives_zero() {
        let g = finite_diff_grad(|_: &Vec<Vec<f64>>| 4.2, &vec![vec![1.0, 2.0], vec![3.0]], 1e-5)
            .unwrap();
        assert_eq!(g, vec![vec![0.0, 0.0], vec![0.0]]);
    }

    #[test]
    fn non_finite_and_bad_step() {
        let p = vec![vec![0.0]];
        assert!(matches!(
            finite_diff_grad(|q: &Vec<Vec<f64>>| 1.0 / q[0][0].abs().min(0.0), &p, 1e-5),
            Err(Error::NonFiniteLoss(_))
        ));
        assert!(finite_diff_grad(|_: &Vec<Vec<f64>>| 0.0, &p, 0.0).is_err());
    }

    #[test]
    fn relative_error_basics() {
        let a = [1.0, 2.0];
        let b = [1.0, 2.0];
        assert_eq!(relative_error(&[&a[..]], &[&b[..]], 1e-12), 0.0);
        let z = [0.0, 0.0];
        assert_eq!(relative_error(&[&z[..]], &[&z[..]], 1e-12), 0.0);
    }
}
