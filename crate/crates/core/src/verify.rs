//! Randomized campaigns that exercise the loss guarantees and the analytic
//! gradient. Shared by the `verify` command and the acceptance tests.

use std::f64::consts::LN_2;

use crate::adaptation::acl_loss;
use crate::error::Result;
use crate::metrics::{check_markov_bound, check_stability_bound, verify_lemma1, verify_lemma2, MARKOV_TOLERANCE};
use crate::model::{
    embed, embed_with_tape, init_model, Activation, ClassId, Classifier, Matrix, ModelConfig,
    ModelParams, PrototypeTable,
};
use crate::numerics::{finite_diff_grad, l2_normalize, relative_error, ParamSet, RngState, UnitVector};

/// Outcome of one campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: String,
    pub cases: usize,
    /// Worst observed statistic (residual, violation count or error).
    pub worst: f64,
    pub limit: f64,
    pub pass: bool,
    /// First failing case, when there is one.
    pub detail: Option<String>,
}

impl CheckRow {
    fn new(name: impl Into<String>, cases: usize, worst: f64, limit: f64, detail: Option<String>) -> Self {
        Self {
            name: name.into(),
            cases,
            worst,
            limit,
            pass: worst <= limit && detail.is_none(),
            detail,
        }
    }

    /// No cases were run; passes vacuously.
    pub fn is_vacuous(&self) -> bool {
        self.cases == 0
    }
}

/// Max chord/cosine residual over `n` random unit pairs in each dimension.
pub fn lemma1_campaign(seed: u64, n: usize, dims: &[usize]) -> Vec<CheckRow> {
    dims.iter()
        .map(|&d| {
            let mut rng = RngState::new(seed).fork(d as u64);
            let worst: f64 = verify_lemma1(n, d, &mut rng);
            CheckRow::new(format!("lemma1 d={d}"), n, worst, 1e-12, None)
        })
        .collect()
}

/// Mean-minimizes-squared-distance check over `n_sets` random embedding sets.
pub fn lemma2_campaign(seed: u64, n_sets: usize, set_size: usize, n_probes: usize, dim: usize) -> Result<CheckRow> {
    let mut rng = RngState::new(seed).fork(0x1e2);
    let mut detail = None;
    let mut worst_grad = 0.0f64;
    for s in 0..n_sets {
        let points: Vec<UnitVector<f64>> = (0..set_size).map(|_| rng.unit_vector(dim)).collect();
        let refs: Vec<&[f64]> = points.iter().map(|p| p.as_slice()).collect();
        let rep = verify_lemma2(&refs, &mut rng, n_probes, 0.1)?;
        worst_grad = worst_grad.max(rep.gradient_at_mean);
        if !rep.pass && detail.is_none() {
            detail = Some(format!(
                "set {s}: lhs {} rhs {} gradient {}",
                rep.bound.lhs, rep.bound.rhs, rep.gradient_at_mean
            ));
        }
    }
    Ok(CheckRow::new("lemma2", n_sets, worst_grad, 1e-12, detail))
}

fn random_table(rng: &mut RngState, classes: usize, dim: usize) -> PrototypeTable<f64> {
    let mut t = PrototypeTable::new(0);
    for c in 0..classes {
        t.insert(ClassId(c as u32), rng.unit_vector(dim)).expect("fresh class");
    }
    t
}

/// Random (embedding, prototype table) draws: every cosine-misclassified
/// sample must have loss ≥ log 2, and each group of `group` draws must satisfy
/// the Markov bound. A quarter of the draws sit exactly between two
/// prototypes to exercise ties.
pub fn markov_campaign(seed: u64, draws: usize, group: usize) -> Result<Vec<CheckRow>> {
    let mut rng = RngState::new(seed).fork(0x3a2);
    let temps = [0.02, 0.05, 0.1, 0.2, 0.5];
    let threshold = LN_2 - MARKOV_TOLERANCE;
    let mut violations = 0usize;
    let mut first_violation = None;
    let mut min_wrong_loss = f64::INFINITY;
    let mut group_losses = Vec::new();
    let mut group_correct = Vec::new();
    let mut groups = 0usize;
    let mut worst_slack = 0.0f64;
    let mut group_detail = None;

    for i in 0..draws {
        let classes = 2 + rng.below(5);
        let dim = 2 + rng.below(15);
        let table = random_table(&mut rng, classes, dim);
        let label = ClassId(rng.below(classes) as u32);
        let tau = temps[rng.below(temps.len())];
        let e: UnitVector<f64> = if i % 4 == 0 {
            let other = ClassId(rng.below(classes) as u32);
            let mid: Vec<f64> = table
                .get(label)
                .unwrap()
                .iter()
                .zip(table.get(other).unwrap().iter())
                .map(|(a, b)| a + b)
                .collect();
            l2_normalize(&mid).unwrap_or_else(|_| rng.unit_vector(dim))
        } else {
            rng.unit_vector(dim)
        };
        let (loss, _) = acl_loss(&e, label, &table, tau)?;
        let correct = Classifier::Cosine(table).classify(&e)?.0 == label;
        if !correct {
            min_wrong_loss = min_wrong_loss.min(loss);
            if loss < threshold {
                violations += 1;
                first_violation.get_or_insert_with(|| {
                    format!("draw {i}: loss {loss} < log 2 (classes {classes}, dim {dim}, tau {tau})")
                });
            }
        }
        group_losses.push(loss);
        group_correct.push(correct);
        if group_losses.len() == group || i + 1 == draws {
            let rep = check_markov_bound(&group_losses, &group_correct)?;
            groups += 1;
            worst_slack = worst_slack.max(-rep.slack);
            if !rep.pass && group_detail.is_none() {
                group_detail = Some(format!("group {groups}: lhs {} rhs {}", rep.lhs, rep.rhs));
            }
            group_losses.clear();
            group_correct.clear();
        }
    }
    Ok(vec![
        CheckRow::new("misclassification threshold", draws, violations as f64, 0.0, first_violation),
        CheckRow::new("markov bound", groups, worst_slack.max(0.0), MARKOV_TOLERANCE, group_detail),
    ])
}

/// Drift bound on random unit triples (old, new, prototype).
pub fn stability_campaign(seed: u64, draws: usize, dim: usize) -> Result<CheckRow> {
    let mut rng = RngState::new(seed).fork(0x57a);
    let mut detail = None;
    let mut worst = 0.0f64;
    for i in 0..draws {
        let table = random_table(&mut rng, 3, dim);
        let old = vec![rng.unit_vector::<f64>(dim)];
        let new = vec![rng.unit_vector::<f64>(dim)];
        let y = vec![ClassId(rng.below(3) as u32)];
        let rep = check_stability_bound(&old, &new, &table, &y)?;
        worst = worst.max(-rep.slack);
        if !rep.pass && detail.is_none() {
            detail = Some(format!("draw {i}: lhs {} rhs {}", rep.lhs, rep.rhs));
        }
    }
    Ok(CheckRow::new("stability bound", draws, worst.max(0.0), 1e-9, detail))
}

/// Deliberate corruption of the analytic gradient, to prove the battery bites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientFault {
    #[default]
    None,
    SignFlip,
}

/// Analytic backprop through embed → normalize → contrastive loss against
/// central differences (`h = 1e-5`), per parameter group, `probes` random
/// inputs for each of `seeds`.
pub fn gradient_battery(seeds: &[u64], probes: usize, fault: GradientFault) -> Result<Vec<CheckRow>> {
    const H: f64 = 1e-5;
    const LIMIT: f64 = 1e-4;
    let cfg = ModelConfig {
        input_dim: 4,
        embed_dim: 3,
        hidden: vec![5],
        activation: Activation::Tanh,
        adapter_rank: 2,
    };
    let mut rows = Vec::new();
    for &seed in seeds {
        let mut rng = RngState::new(seed).fork(0x9d);
        let (backbone, mut adapter) = init_model::<f64>(&cfg, &mut rng);
        adapter.up = Matrix::uniform(adapter.up.rows, adapter.up.cols, 0.5, &mut rng);
        let params = ModelParams {
            backbone,
            adapter: Some(adapter),
        };
        let table = random_table(&mut rng, 3, cfg.embed_dim);
        let groups = params.buffers().len();
        let mut worst = vec![0.0f64; groups];
        let mut detail = None;
        for probe in 0..probes {
            let x: Vec<f64> = (0..cfg.input_dim).map(|_| rng.normal(0.0, 1.0)).collect();
            let label = ClassId(rng.below(3) as u32);
            let (e, mut tape) = embed_with_tape(&params.backbone, params.adapter.as_ref(), &x)?;
            let (_, mut d_e) = acl_loss(&e, label, &table, 0.1)?;
            if fault == GradientFault::SignFlip {
                d_e.iter_mut().for_each(|g| *g = -*g);
            }
            let analytic = tape.backprop(&d_e)?;
            let numeric = finite_diff_grad(
                |p: &ModelParams<f64>| {
                    let e = embed(&p.backbone, p.adapter.as_ref(), &x).expect("finite forward");
                    acl_loss(&e, label, &table, 0.1).expect("known label").0
                },
                &params,
                H,
            )?;
            for (g, (a, n)) in analytic.buffers().iter().zip(numeric.buffers()).enumerate() {
                let err = relative_error(&[a], &[n], 1e-7);
                worst[g] = worst[g].max(err);
                if err > LIMIT && detail.is_none() {
                    detail = Some(format!(
                        "seed {seed} probe {probe} group {g}: relative error {err:e} (x = {x:?}, label {label})"
                    ));
                }
            }
        }
        let overall = worst.iter().copied().fold(0.0, f64::max);
        rows.push(CheckRow::new(
            format!("gradient seed={seed} ({groups} groups)"),
            probes,
            overall,
            LIMIT,
            detail,
        ));
    }
    Ok(rows)
}

/// Every campaign at the given sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifySizes {
    pub lemma1_pairs: usize,
    pub lemma2_sets: usize,
    pub lemma2_probes: usize,
    pub markov_draws: usize,
    pub stability_draws: usize,
    pub gradient_probes: usize,
}

impl Default for VerifySizes {
    fn default() -> Self {
        Self {
            lemma1_pairs: 1000,
            lemma2_sets: 20,
            lemma2_probes: 100,
            markov_draws: 10_000,
            stability_draws: 1000,
            gradient_probes: 10,
        }
    }
}

pub fn run_all(seed: u64, sizes: &VerifySizes, fault: GradientFault) -> Result<Vec<CheckRow>> {
    let mut rows = lemma1_campaign(seed, sizes.lemma1_pairs, &[2, 16, 64]);
    rows.push(lemma2_campaign(seed, sizes.lemma2_sets, 50, sizes.lemma2_probes, 16)?);
    rows.extend(markov_campaign(seed, sizes.markov_draws, 100)?);
    rows.push(stability_campaign(seed, sizes.stability_draws, 16)?);
    rows.extend(gradient_battery(&[seed, seed + 1, seed + 2], sizes.gradient_probes, fault)?);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_campaigns_pass() {
        let sizes = VerifySizes {
            lemma1_pairs: 50,
            lemma2_sets: 3,
            lemma2_probes: 10,
            markov_draws: 400,
            stability_draws: 50,
            gradient_probes: 2,
        };
        for row in run_all(7, &sizes, GradientFault::None).unwrap() {
            assert!(row.pass, "{row:?}");
        }
    }

    #[test]
    fn sign_flip_is_caught() {
        let rows = gradient_battery(&[1], 2, GradientFault::SignFlip).unwrap();
        assert!(rows.iter().all(|r| !r.pass));
    }

    #[test]
    fn empty_campaigns_are_vacuous() {
        let sizes = VerifySizes {
            lemma1_pairs: 0,
            lemma2_sets: 0,
            lemma2_probes: 0,
            markov_draws: 0,
            stability_draws: 0,
            gradient_probes: 0,
        };
        let rows = run_all(1, &sizes, GradientFault::None).unwrap();
        assert!(rows.iter().all(|r| r.pass && r.is_vacuous()));
    }
}
