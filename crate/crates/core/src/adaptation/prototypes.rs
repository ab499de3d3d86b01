use std::collections::BTreeMap;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::model::{embed, fingerprint, AdapterModule, Backbone, ClassId, ModelParams, PrototypeTable};
use crate::numerics::{l2_normalize, mean_vector, Scalar, UnitVector};

/// Groups embeddings by label, averages each group and renormalizes.
pub fn prototypes_from_embeddings<'a, T: Scalar>(
    labeled: impl IntoIterator<Item = (ClassId, &'a UnitVector<T>)>,
    provenance: u64,
) -> Result<PrototypeTable<T>> {
    let mut groups: BTreeMap<ClassId, Vec<&[T]>> = BTreeMap::new();
    for (y, e) in labeled {
        groups.entry(y).or_default().push(e.as_slice());
    }
    if groups.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut table = PrototypeTable::new(provenance);
    for (class, members) in groups {
        let mean = mean_vector(&members)?;
        table.insert(class, l2_normalize(&mean)?)?;
    }
    Ok(table)
}

/// Identifies the model state a prototype table was computed from.
pub fn model_fingerprint<T: Scalar>(backbone: &Backbone<T>, adapter: Option<&AdapterModule<T>>) -> u64 {
    let params = ModelParams {
        backbone: backbone.clone(),
        adapter: adapter.cloned(),
    };
    fingerprint(&params)
}

/// One renormalized mean embedding per class present in `data`.
pub fn compute_prototypes<T: Scalar>(
    backbone: &Backbone<T>,
    adapter: Option<&AdapterModule<T>>,
    data: &LabeledDataset<T>,
) -> Result<PrototypeTable<T>> {
    let embeddings = data
        .samples
        .iter()
        .map(|s| embed(backbone, adapter, &s.x))
        .collect::<Result<Vec<_>>>()?;
    prototypes_from_embeddings(
        data.samples.iter().map(|s| s.y).zip(embeddings.iter()),
        model_fingerprint(backbone, adapter),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Sample, Split};
    use crate::model::{init_model, ModelConfig};
    use crate::numerics::{norm, RealVector, RngState};

    fn u(v: &[f64]) -> UnitVector<f64> {
        l2_normalize(v).unwrap()
    }

    #[test]
    fn symmetric_pair_gives_diagonal() {
        let a = u(&[1.0, 0.0]);
        let b = u(&[0.0, 1.0]);
        let t = prototypes_from_embeddings([(ClassId(0), &a), (ClassId(0), &b)], 0).unwrap();
        let p = t.get(ClassId(0)).unwrap();
        let h = 0.5f64.sqrt();
        assert!((p[0] - h).abs() < 1e-15 && (p[1] - h).abs() < 1e-15);
    }

    #[test]
    fn single_sample_is_its_own_prototype() {
        let a = u(&[0.3, -0.4, 1.2]);
        let t = prototypes_from_embeddings([(ClassId(4), &a)], 0).unwrap();
        let p = t.get(ClassId(4)).unwrap();
        assert!(p.iter().zip(a.iter()).all(|(x, y)| (x - y).abs() < 1e-15));
    }

    #[test]
    fn opposite_pair_is_degenerate() {
        let a = u(&[1.0, 0.0]);
        let b = u(&[-1.0, 0.0]);
        assert!(matches!(
            prototypes_from_embeddings([(ClassId(0), &a), (ClassId(0), &b)], 0),
            Err(Error::DegenerateVector { .. })
        ));
    }

    #[test]
    fn from_model_covers_classes_and_is_unit() {
        let cfg = ModelConfig {
            input_dim: 4,
            embed_dim: 3,
            hidden: vec![5],
            ..ModelConfig::default()
        };
        let mut rng = RngState::new(1);
        let (b, a) = init_model::<f64>(&cfg, &mut rng);
        let samples = (0..12)
            .map(|i| Sample {
                x: RealVector::new((0..4).map(|_| rng.normal(0.0, 1.0)).collect()).unwrap(),
                y: ClassId(10 + i % 3),
            })
            .collect();
        let data = LabeledDataset::new(samples, 0, Split::Train);
        let t = compute_prototypes(&b, Some(&a), &data).unwrap();
        assert_eq!(t.classes().collect::<Vec<_>>(), vec![ClassId(10), ClassId(11), ClassId(12)]);
        for (_, p) in t.iter() {
            assert!((norm(p) - 1.0).abs() < 1e-12);
        }
        assert_eq!(t.provenance(), model_fingerprint(&b, Some(&a)));
    }
}
