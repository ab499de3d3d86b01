use super::{LabeledDataset, Sample, Split};
use crate::continual::{Task, TaskStream};
use crate::error::{Error, Result};
use crate::model::ClassId;
use crate::numerics::{dot, RealVector, RngState, Scalar};

/// Parameters of the Gaussian-cluster benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub input_dim: usize,
    pub n_pretrain_classes: usize,
    pub n_incremental_classes: usize,
    pub n_tasks: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Per-coordinate standard deviation of each cluster.
    pub sigma: f64,
    /// Magnitude of the rotation + translation applied to incremental clusters.
    pub shift: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            input_dim: 32,
            n_pretrain_classes: 10,
            n_incremental_classes: 8,
            n_tasks: 4,
            train_per_class: 100,
            test_per_class: 50,
            sigma: 0.3,
            shift: 2.0,
            seed: 1993,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.into()));
        if self.input_dim < 2 {
            return bad("input_dim must be >= 2");
        }
        if self.n_pretrain_classes < 2 || self.n_incremental_classes < 2 {
            return bad("class counts must be >= 2");
        }
        if self.n_tasks < 1 || !self.n_incremental_classes.is_multiple_of(self.n_tasks) {
            return bad("incremental classes must split evenly into n_tasks >= 1 tasks");
        }
        if self.train_per_class < 1 || self.test_per_class < 1 {
            return bad("need at least one train and one test sample per class");
        }
        if self.sigma <= 0.0 || !self.sigma.is_finite() {
            return bad("sigma must be positive");
        }
        if self.shift < 0.0 || !self.shift.is_finite() {
            return bad("shift must be non-negative");
        }
        Ok(())
    }

    /// Stable hash of every field, stamped into generated datasets.
    pub fn hash(&self) -> u64 {
        let fields = [
            self.input_dim as u64,
            self.n_pretrain_classes as u64,
            self.n_incremental_classes as u64,
            self.n_tasks as u64,
            self.train_per_class as u64,
            self.test_per_class as u64,
            self.sigma.to_bits(),
            self.shift.to_bits(),
            self.seed,
        ];
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for f in fields {
            for b in f.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

/// Affine map `c ↦ R c + shift·u` applied to incremental cluster centers.
///
/// `R` rotates by `shift · π/8` inside each of `⌊D/2⌋` mutually orthogonal
/// random planes; `u` is a random unit direction. With `shift = 0` both parts
/// are exactly the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainShift {
    /// Orthonormal plane pairs `(a, b)`.
    pub planes: Vec<(Vec<f64>, Vec<f64>)>,
    pub angle: f64,
    pub translation: Vec<f64>,
}

impl DomainShift {
    fn sample(dim: usize, shift: f64, rng: &mut RngState) -> Self {
        // Gram-Schmidt on Gaussian draws gives a random orthonormal basis.
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dim);
        while basis.len() < dim {
            let mut v: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
            for b in &basis {
                let p = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= p * bi);
            }
            let n = dot(&v, &v).sqrt();
            if n > 1e-6 {
                basis.push(v.into_iter().map(|x| x / n).collect());
            }
        }
        let planes = basis
            .chunks_exact(2)
            .map(|p| (p[0].clone(), p[1].clone()))
            .collect();
        let dir: Vec<f64> = rng.unit_vector::<f64>(dim).into_inner();
        Self {
            planes,
            angle: shift * std::f64::consts::FRAC_PI_8,
            translation: dir.into_iter().map(|x| x * shift).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.angle == 0.0 && self.translation.iter().all(|&t| t == 0.0)
    }

    pub fn apply(&self, c: &[f64]) -> Vec<f64> {
        let mut out = c.to_vec();
        if self.angle != 0.0 {
            let (s, co) = self.angle.sin_cos();
            for (a, b) in &self.planes {
                let pa = dot(c, a);
                let pb = dot(c, b);
                // Rotate the (pa, pb) component; the rest is untouched.
                let ra = co * pa - s * pb;
                let rb = s * pa + co * pb;
                for i in 0..out.len() {
                    out[i] += (ra - pa) * a[i] + (rb - pb) * b[i];
                }
            }
        }
        for (o, t) in out.iter_mut().zip(&self.translation) {
            *o += t;
        }
        out
    }
}

/// Output of [`generate_synthetic`].
#[derive(Debug, Clone)]
pub struct SyntheticBenchmark<T> {
    pub pretrain_train: LabeledDataset<T>,
    /// Held-out draws from the pretraining distribution.
    pub pretrain_test: LabeledDataset<T>,
    pub stream: TaskStream<T>,
    pub shift: DomainShift,
    pub pretrain_centers: Vec<Vec<f64>>,
    pub incremental_centers: Vec<Vec<f64>>,
}

fn draw_class<T: Scalar>(
    center: &[f64],
    class: ClassId,
    n: usize,
    sigma: f64,
    rng: &mut RngState,
) -> Vec<Sample<T>> {
    (0..n)
        .map(|_| {
            let x: Vec<T> = center.iter().map(|&c| rng.normal(c, sigma)).collect();
            Sample {
                x: RealVector::new(x).expect("finite gaussian draw"),
                y: class,
            }
        })
        .collect()
}

/// Builds pretraining data and a class-incremental task stream; a pure
/// function of `spec`, including `spec.seed`.
///
/// Pretrain and incremental class ids are separate label spaces, both
/// starting at 0. Incremental classes are assigned to tasks in a seeded
/// random order.
pub fn generate_synthetic<T: Scalar>(spec: &SyntheticSpec) -> Result<SyntheticBenchmark<T>> {
    spec.validate()?;
    let hash = spec.hash();
    let root = RngState::new(spec.seed);
    let mut center_rng = root.fork(1);
    let mut shift_rng = root.fork(2);
    let mut sample_rng = root.fork(3);
    let mut order_rng = root.fork(4);

    let d = spec.input_dim;
    let pretrain_centers: Vec<Vec<f64>> = (0..spec.n_pretrain_classes)
        .map(|_| center_rng.unit_vector::<f64>(d).into_inner())
        .collect();
    let raw_incremental: Vec<Vec<f64>> = (0..spec.n_incremental_classes)
        .map(|_| center_rng.unit_vector::<f64>(d).into_inner())
        .collect();
    let shift = DomainShift::sample(d, spec.shift, &mut shift_rng);
    let incremental_centers: Vec<Vec<f64>> =
        raw_incremental.iter().map(|c| shift.apply(c)).collect();

    let mut pre_train = Vec::new();
    let mut pre_test = Vec::new();
    for (c, center) in pretrain_centers.iter().enumerate() {
        let class = ClassId(c as u32);
        pre_train.extend(draw_class(center, class, spec.train_per_class, spec.sigma, &mut sample_rng));
        pre_test.extend(draw_class(center, class, spec.test_per_class, spec.sigma, &mut sample_rng));
    }

    let mut class_order: Vec<usize> = (0..spec.n_incremental_classes).collect();
    order_rng.shuffle(&mut class_order);
    let per_task = spec.n_incremental_classes / spec.n_tasks;
    let tasks = class_order
        .chunks(per_task)
        .enumerate()
        .map(|(k, chunk)| {
            let mut classes: Vec<ClassId> = chunk.iter().map(|&c| ClassId(c as u32)).collect();
            classes.sort();
            let mut train = Vec::new();
            let mut test = Vec::new();
            for &class in &classes {
                let center = &incremental_centers[class.0 as usize];
                train.extend(draw_class(center, class, spec.train_per_class, spec.sigma, &mut sample_rng));
                test.extend(draw_class(center, class, spec.test_per_class, spec.sigma, &mut sample_rng));
            }
            Task {
                index: k + 1,
                classes,
                train: LabeledDataset::new(train, hash, Split::Train),
                test: LabeledDataset::new(test, hash, Split::Test),
            }
        })
        .collect();

    Ok(SyntheticBenchmark {
        pretrain_train: LabeledDataset::new(pre_train, hash, Split::Train),
        pretrain_test: LabeledDataset::new(pre_test, hash, Split::Test),
        stream: TaskStream::new(tasks)?,
        shift,
        pretrain_centers,
        incremental_centers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn small() -> SyntheticSpec {
        SyntheticSpec {
            input_dim: 8,
            n_pretrain_classes: 3,
            n_incremental_classes: 6,
            n_tasks: 3,
            train_per_class: 5,
            test_per_class: 3,
            sigma: 0.2,
            shift: 1.0,
            seed: 42,
        }
    }

    #[test]
    fn same_seed_same_data() {
        let a = generate_synthetic::<f64>(&small()).unwrap();
        let b = generate_synthetic::<f64>(&small()).unwrap();
        assert_eq!(a.pretrain_train, b.pretrain_train);
        assert_eq!(a.stream, b.stream);
        let mut other = small();
        other.seed = 43;
        let c = generate_synthetic::<f64>(&other).unwrap();
        assert_ne!(a.pretrain_train, c.pretrain_train);
    }

    #[test]
    fn tasks_are_disjoint_and_exhaustive() {
        let b = generate_synthetic::<f64>(&small()).unwrap();
        let mut seen = BTreeSet::new();
        for t in b.stream.tasks() {
            assert_eq!(t.classes.len(), 2);
            for c in &t.classes {
                assert!(seen.insert(*c));
            }
            assert_eq!(t.train.classes(), t.classes.iter().copied().collect());
            assert_eq!(t.train.len(), 10);
            assert_eq!(t.test.len(), 6);
        }
        assert_eq!(seen, (0..6).map(ClassId).collect());
    }

    #[test]
    fn zero_shift_is_identity() {
        let mut s = small();
        s.shift = 0.0;
        let b = generate_synthetic::<f64>(&s).unwrap();
        assert!(b.shift.is_identity());
        let c = vec![0.3; 8];
        assert_eq!(b.shift.apply(&c), c);
    }

    #[test]
    fn shift_is_rigid() {
        // Raw centers are unit vectors and the rotation is orthogonal, so
        // shifted centers sit on the unit sphere around the translation.
        let b = generate_synthetic::<f64>(&small()).unwrap();
        let t = &b.shift.translation;
        for c in &b.incremental_centers {
            let r: f64 = c.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!((r - 1.0).abs() < 1e-12);
        }
        let tn: f64 = t.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((tn - small().shift).abs() < 1e-12);
    }

    #[test]
    fn invalid_specs() {
        let mut s = small();
        s.n_tasks = 4;
        assert!(matches!(generate_synthetic::<f64>(&s), Err(Error::InvalidSpec(_))));
        let mut s = small();
        s.sigma = 0.0;
        assert!(generate_synthetic::<f64>(&s).is_err());
        let mut s = small();
        s.n_pretrain_classes = 1;
        assert!(generate_synthetic::<f64>(&s).is_err());
    }
}
