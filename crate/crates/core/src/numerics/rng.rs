use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{l2_normalize, Scalar, UnitVector};

/// Seeded random stream.
///
/// Backed by ChaCha8 in counter mode: the 64-bit seed expands to the key,
/// the stream id selects an independent nonce, and draws walk the block
/// counter. Output is identical on every platform. Floating-point draws are
/// made in `f64` and converted, so `f32` and `f64` runs see the same stream.
#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// An independent child stream, a pure function of (seed, stream, label).
    pub fn fork(&self, label: u64) -> Self {
        let mixed = splitmix64(self.stream ^ splitmix64(label.wrapping_add(0x9e37_79b9)));
        Self::with_stream(self.seed, mixed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.random()
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform<T: Scalar>(&mut self, lo: f64, hi: f64) -> T {
        let u: f64 = self.inner.random();
        T::of(lo + (hi - lo) * u)
    }

    pub fn standard_normal<T: Scalar>(&mut self) -> T {
        let z: f64 = self.inner.sample(StandardNormal);
        T::of(z)
    }

    pub fn normal<T: Scalar>(&mut self, mean: f64, sd: f64) -> T {
        let z: f64 = self.inner.sample(StandardNormal);
        T::of(mean + sd * z)
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn shuffle<E>(&mut self, items: &mut [E]) {
        items.shuffle(&mut self.inner);
    }

    /// Uniformly distributed point on the sphere in `dim` dimensions.
    pub fn unit_vector<T: Scalar>(&mut self, dim: usize) -> UnitVector<T> {
        loop {
            let v: Vec<T> = (0..dim).map(|_| self.standard_normal()).collect();
            if let Ok(u) = l2_normalize(&v) {
                return u;
            }
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_seeds_identical_streams() {
        let mut a = RngState::new(7);
        let mut b = RngState::new(7);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
            let x: f64 = a.standard_normal();
            let y: f64 = b.standard_normal();
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn different_seeds_and_forks_differ() {
        let mut a = RngState::new(1);
        let mut b = RngState::new(2);
        assert_ne!(a.next_u64(), b.next_u64());
        let root = RngState::new(1);
        let mut f1 = root.fork(1);
        let mut f2 = root.fork(2);
        assert_ne!(f1.next_u64(), f2.next_u64());
        let mut f1_again = root.fork(1);
        let mut f1_fresh = RngState::new(1).fork(1);
        assert_eq!(f1_again.next_u64(), f1_fresh.next_u64());
    }

    #[test]
    fn unit_vectors_are_unit() {
        let mut r = RngState::new(3);
        for _ in 0..100 {
            let u: UnitVector<f64> = r.unit_vector(16);
            assert!((super::super::norm(&u) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_in_range() {
        let mut r = RngState::new(4);
        for _ in 0..1000 {
            let x: f64 = r.uniform(-0.5, 0.5);
            assert!((-0.5..0.5).contains(&x));
        }
    }
}
