use std::collections::BTreeMap;
use std::fmt;

use super::layers::Matrix;
use crate::error::{Error, Result};
use crate::numerics::{cosine_sim, Scalar, UnitVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassId(pub u32);

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Unit prototypes keyed by class, tagged with the fingerprint of the model
/// state that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeTable<T> {
    entries: BTreeMap<ClassId, UnitVector<T>>,
    provenance: u64,
}

impl<T: Scalar> PrototypeTable<T> {
    pub fn new(provenance: u64) -> Self {
        Self {
            entries: BTreeMap::new(),
            provenance,
        }
    }

    pub fn provenance(&self) -> u64 {
        self.provenance
    }

    pub fn insert(&mut self, class: ClassId, proto: UnitVector<T>) -> Result<()> {
        if self.entries.contains_key(&class) {
            return Err(Error::DuplicateClass(class));
        }
        if let Some((_, first)) = self.entries.iter().next() {
            if first.dim() != proto.dim() {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    found: proto.dim(),
                });
            }
        }
        self.entries.insert(class, proto);
        Ok(())
    }

    /// Appends every entry of `other`; no existing entry is touched.
    pub fn append(&mut self, other: &PrototypeTable<T>) -> Result<()> {
        if let Some(c) = other.classes().find(|c| self.entries.contains_key(c)) {
            return Err(Error::DuplicateClass(c));
        }
        for (c, p) in other.iter() {
            self.insert(c, p.clone())?;
        }
        Ok(())
    }

    pub fn get(&self, class: ClassId) -> Option<&UnitVector<T>> {
        self.entries.get(&class)
    }

    pub fn contains(&self, class: ClassId) -> bool {
        self.entries.contains_key(&class)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Ascending class ids.
    pub fn classes(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.entries.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClassId, &UnitVector<T>)> {
        self.entries.iter().map(|(&c, p)| (c, p))
    }

    /// Position of `class` in ascending order, which is also its logit index.
    pub fn index_of(&self, class: ClassId) -> Option<usize> {
        self.entries.keys().position(|&c| c == class)
    }

    /// Cosine similarity to every prototype, ascending class order.
    pub fn similarities(&self, e: &UnitVector<T>) -> Result<Vec<T>> {
        self.entries.values().map(|p| cosine_sim(e, p)).collect()
    }
}

/// Linear head `W e + b`, one row per class in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead<T> {
    classes: Vec<ClassId>,
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> LinearHead<T> {
    pub fn new(embed_dim: usize) -> Self {
        Self {
            classes: Vec::new(),
            weight: Matrix::zeros(0, embed_dim),
            bias: Vec::new(),
        }
    }

    pub fn embed_dim(&self) -> usize {
        self.weight.cols
    }

    pub fn classes(&self) -> &[ClassId] {
        &self.classes
    }

    pub fn index_of(&self, class: ClassId) -> Option<usize> {
        self.classes.iter().position(|&c| c == class)
    }

    /// Appends zero-initialized rows for `classes`.
    pub fn add_classes(&mut self, classes: &[ClassId]) -> Result<()> {
        for &c in classes {
            if self.classes.contains(&c) {
                return Err(Error::DuplicateClass(c));
            }
            self.classes.push(c);
            self.weight
                .data
                .extend(std::iter::repeat_n(T::zero(), self.weight.cols));
            self.weight.rows += 1;
            self.bias.push(T::zero());
        }
        Ok(())
    }

    pub fn logits(&self, e: &[T]) -> Result<Vec<T>> {
        if e.len() != self.weight.cols {
            return Err(Error::DimensionMismatch {
                expected: self.weight.cols,
                found: e.len(),
            });
        }
        let mut z = self.weight.matvec(e);
        for (zi, &b) in z.iter_mut().zip(&self.bias) {
            *zi = *zi + b;
        }
        Ok(z)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            classes: self.classes.clone(),
            weight: Matrix::zeros(self.weight.rows, self.weight.cols),
            bias: vec![T::zero(); self.bias.len()],
        }
    }
}

impl<T> crate::numerics::ParamSet<T> for LinearHead<T> {
    fn buffers(&self) -> Vec<&[T]> {
        vec![self.weight.data.as_slice(), self.bias.as_slice()]
    }

    fn buffers_mut(&mut self) -> Vec<&mut [T]> {
        vec![self.weight.data.as_mut_slice(), self.bias.as_mut_slice()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classifier<T> {
    Cosine(PrototypeTable<T>),
    Linear(LinearHead<T>),
}

impl<T: Scalar> Classifier<T> {
    pub fn num_classes(&self) -> usize {
        match self {
            Classifier::Cosine(p) => p.len(),
            Classifier::Linear(h) => h.classes().len(),
        }
    }

    pub fn class_ids(&self) -> Vec<ClassId> {
        match self {
            Classifier::Cosine(p) => p.classes().collect(),
            Classifier::Linear(h) => h.classes().to_vec(),
        }
    }

    /// Predicted class and logits (in [`Classifier::class_ids`] order).
    /// Ties go to the lowest class id.
    pub fn classify(&self, embedding: &UnitVector<T>) -> Result<(ClassId, Vec<T>)> {
        let (ids, logits) = match self {
            Classifier::Cosine(p) => {
                if let Some((_, first)) = p.iter().next() {
                    if first.dim() != embedding.dim() {
                        return Err(Error::DimensionMismatch {
                            expected: first.dim(),
                            found: embedding.dim(),
                        });
                    }
                }
                (p.classes().collect::<Vec<_>>(), p.similarities(embedding)?)
            }
            Classifier::Linear(h) => (h.classes().to_vec(), h.logits(embedding)?),
        };
        let best = argmax_lowest_id(&ids, &logits).ok_or(Error::EmptyClassifier)?;
        Ok((ids[best], logits))
    }
}

/// Index of the maximal score; equal scores resolve to the smaller class id.
pub fn argmax_lowest_id<T: Scalar>(ids: &[ClassId], scores: &[T]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for i in 0..ids.len().min(scores.len()) {
        best = match best {
            None => Some(i),
            Some(b) if scores[i] > scores[b] || (scores[i] == scores[b] && ids[i] < ids[b]) => {
                Some(i)
            }
            keep => keep,
        };
    }
    best
}

/// Shorthand for [`Classifier::classify`].
pub fn classify<T: Scalar>(
    classifier: &Classifier<T>,
    embedding: &UnitVector<T>,
) -> Result<(ClassId, Vec<T>)> {
    classifier.classify(embedding)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{l2_normalize, RngState};

    fn table(protos: &[(u32, &[f64])]) -> PrototypeTable<f64> {
        let mut t = PrototypeTable::new(0);
        for (c, v) in protos {
            t.insert(ClassId(*c), l2_normalize(v).unwrap()).unwrap();
        }
        t
    }

    #[test]
    fn cosine_basic() {
        let c = Classifier::Cosine(table(&[(0, &[1.0, 0.0]), (1, &[0.0, 1.0])]));
        let e = l2_normalize(&[1.0, 0.0]).unwrap();
        let (pred, logits) = c.classify(&e).unwrap();
        assert_eq!(pred, ClassId(0));
        assert_eq!(logits, vec![1.0, 0.0]);
    }

    #[test]
    fn tie_goes_to_lower_id() {
        let c = Classifier::Cosine(table(&[(5, &[1.0, 0.0]), (2, &[0.0, 1.0])]));
        let e = l2_normalize(&[1.0, 1.0]).unwrap();
        assert_eq!(c.classify(&e).unwrap().0, ClassId(2));

        let mut head = LinearHead::new(2);
        head.add_classes(&[ClassId(9), ClassId(3)]).unwrap();
        let lin = Classifier::Linear(head);
        assert_eq!(lin.classify(&e).unwrap().0, ClassId(3));
    }

    #[test]
    fn empty_classifier() {
        let c = Classifier::Cosine(PrototypeTable::<f64>::new(0));
        let e = l2_normalize(&[1.0, 0.0]).unwrap();
        assert!(matches!(c.classify(&e), Err(Error::EmptyClassifier)));
        let l = Classifier::Linear(LinearHead::<f64>::new(2));
        assert!(matches!(l.classify(&e), Err(Error::EmptyClassifier)));
    }

    #[test]
    fn matches_brute_force_table() {
        let mut rng = RngState::new(21);
        let mut t = PrototypeTable::new(0);
        for c in 0..5 {
            t.insert(ClassId(c), rng.unit_vector(8)).unwrap();
        }
        let protos: Vec<Vec<f64>> = t.iter().map(|(_, p)| p.as_slice().to_vec()).collect();
        let clf = Classifier::Cosine(t);
        for _ in 0..100 {
            let e = rng.unit_vector::<f64>(8);
            let sims: Vec<f64> = protos
                .iter()
                .map(|p| p.iter().zip(e.iter()).map(|(a, b)| a * b).sum())
                .collect();
            let mut best = 0;
            for i in 1..sims.len() {
                if sims[i] > sims[best] {
                    best = i;
                }
            }
            assert_eq!(clf.classify(&e).unwrap().0, ClassId(best as u32));
        }
    }

    #[test]
    fn duplicate_and_append() {
        let mut a = table(&[(0, &[1.0, 0.0])]);
        let b = table(&[(1, &[0.0, 1.0])]);
        a.append(&b).unwrap();
        assert_eq!(a.len(), 2);
        assert!(matches!(a.append(&b), Err(Error::DuplicateClass(ClassId(1)))));
        assert_eq!(a.index_of(ClassId(1)), Some(1));
    }

    #[test]
    fn cosine_argmax_invariant_under_positive_rescale() {
        let mut rng = RngState::new(5);
        let mut t = PrototypeTable::new(0);
        for c in 0..4 {
            t.insert(ClassId(c), rng.unit_vector(6)).unwrap();
        }
        let ids: Vec<ClassId> = t.classes().collect();
        for _ in 0..50 {
            let e = rng.unit_vector::<f64>(6);
            let sims = t.similarities(&e).unwrap();
            let scaled: Vec<f64> = sims.iter().map(|s| s * 7.5).collect();
            assert_eq!(argmax_lowest_id(&ids, &sims), argmax_lowest_id(&ids, &scaled));
        }
    }
}
