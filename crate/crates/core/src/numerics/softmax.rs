use super::Scalar;
use crate::error::{Error, Result};

/// `log Σ exp(s_i)`, shifted by the maximum so large logits do not overflow.
pub fn log_sum_exp<T: Scalar>(logits: &[T]) -> Result<T> {
    if logits.is_empty() {
        return Err(Error::EmptyInput);
    }
    if logits.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFiniteValue("logits"));
    }
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let sum: T = logits.iter().map(|&s| (s - max).exp()).sum();
    Ok(max + sum.ln())
}

/// Softmax probabilities, computed with the same max shift.
pub fn softmax<T: Scalar>(logits: &[T]) -> Result<Vec<T>> {
    let lse = log_sum_exp(logits)?;
    Ok(logits.iter().map(|&s| (s - lse).exp()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn closed_forms() {
        assert_eq!(log_sum_exp(&[0.0]).unwrap(), 0.0);
        assert!((log_sum_exp(&[0.0, 0.0]).unwrap() - 2f64.ln()).abs() < 1e-15);
        // Shift invariance: lse(1000, 1000) = 1000 + lse(0, 0).
        let big = log_sum_exp(&[1000.0, 1000.0]).unwrap();
        assert!((big - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!(matches!(log_sum_exp::<f64>(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[1.0, 2.0, 3.0]).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(p[2] > p[1] && p[1] > p[0]);
    }

    /// Unshifted reference. For |s| <= 50 nothing overflows, so this is an
    /// independent evaluation path accurate to a few ulps.
    fn naive(logits: &[f64]) -> f64 {
        logits.iter().map(|s| s.exp()).sum::<f64>().ln()
    }

    proptest! {
        #[test]
        fn shift_invariance(s in prop::collection::vec(-50.0f64..50.0, 1..20), c in -500.0f64..500.0) {
            let base = log_sum_exp(&s).unwrap();
            let shifted: Vec<f64> = s.iter().map(|x| x + c).collect();
            let moved = log_sum_exp(&shifted).unwrap();
            prop_assert!((moved - (base + c)).abs() <= 1e-10);
        }

        #[test]
        fn matches_naive_in_safe_range(s in prop::collection::vec(-50.0f64..50.0, 1..20)) {
            let got = log_sum_exp(&s).unwrap();
            let want = naive(&s);
            prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }
}
