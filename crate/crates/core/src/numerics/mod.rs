//! Vector math on the unit sphere, stable softmax pieces, momentum SGD,
//! the seeded random stream and the finite-difference gradient oracle.

mod finite_diff;
mod optim;
mod rng;
mod scalar;
mod softmax;
mod vector;

pub use finite_diff::{finite_diff_grad, relative_error};
pub use optim::{sgd_step, OptimizerState, ParamSet};
pub use rng::RngState;
pub use scalar::Scalar;
pub use softmax::{log_sum_exp, softmax};
pub use vector::{
    cosine_sim, dot, l2_normalize, mean_vector, norm, squared_distance, RealVector, UnitVector,
    EPS_NORM,
};

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_vec(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, dim)
            .prop_filter("non-degenerate", |v| norm(v) > 1e-3)
    }

    proptest! {
        #[test]
        fn normalize_is_scale_invariant(v in arb_vec(8), alpha in 1e-3f64..1e3) {
            let a = l2_normalize(&v).unwrap();
            let scaled: Vec<f64> = v.iter().map(|x| x * alpha).collect();
            let b = l2_normalize(&scaled).unwrap();
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn cosine_symmetric_and_bounded(u in arb_vec(6), w in arb_vec(6)) {
            let a = l2_normalize(&u).unwrap();
            let b = l2_normalize(&w).unwrap();
            let ab = cosine_sim(&a, &b).unwrap();
            prop_assert_eq!(ab, cosine_sim(&b, &a).unwrap());
            prop_assert!((-1.0..=1.0).contains(&ab));
        }
    }

    #[test]
    fn chord_length_matches_cosine_on_seeded_pairs() {
        let mut rng = RngState::new(11);
        for _ in 0..1000 {
            let a: UnitVector<f64> = rng.unit_vector(16);
            let b: UnitVector<f64> = rng.unit_vector(16);
            let lhs = squared_distance(&a, &b);
            let rhs = 2.0 * (1.0 - cosine_sim(&a, &b).unwrap());
            assert!((lhs - rhs).abs() <= 1e-12);
        }
    }
}
