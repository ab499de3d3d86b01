//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::process::{Command, ExitCode};
use std::time::Instant;

use acl_cli::run::RunRecord;
use acl_cli::{cmd_run, RunConfig, RunSummary, Variant};
use acl_core::data::SyntheticSpec;
use acl_core::metrics::{AccuracyMatrix, PlasticityMode};
use acl_core::verify::{gradient_battery, lemma1_campaign, lemma2_campaign, markov_campaign, GradientFault};
use acl_core::Error;

const SEED: u64 = 20240917;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn chord_identity() -> Outcome {
    let t = Instant::now();
    let rows = lemma1_campaign(SEED, 1000, &[2, 16, 64]);
    let secs = t.elapsed().as_secs_f64();
    let worst = rows.iter().map(|r| r.worst).fold(0.0, f64::max);
    let pass = rows.iter().all(|r| r.pass && r.cases == 1000) && secs < 1.0;
    outcome(pass, format!("max residual {worst:.2e} over d = 2, 16, 64; {secs:.3}s"))
}

fn mean_minimizer() -> Outcome {
    let t = Instant::now();
    let row = match lemma2_campaign(SEED, 20, 50, 100, 16) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let secs = t.elapsed().as_secs_f64();
    outcome(
        row.pass && row.cases == 20 && secs < 5.0,
        format!("20 sets x 100 probes, max gradient at mean {:.2e}; {secs:.3}s", row.worst),
    )
}

fn threshold() -> Outcome {
    match markov_campaign(SEED, 10_000, 100) {
        Ok(rows) => {
            let r = &rows[0];
            outcome(r.pass && r.cases == 10_000, format!("{} violations in {} draws", r.worst, r.cases))
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn markov_live(summary: &RunSummary, bounds_csv: &str) -> Outcome {
    let batches: Vec<_> = summary
        .records
        .iter()
        .flat_map(|r| &r.reports)
        .flat_map(|t| &t.report.batches)
        .collect();
    let failed = batches.iter().filter(|b| !b.report.pass).count();
    let logged: Vec<&str> = bounds_csv.lines().filter(|l| l.contains(",markov_batch,")).collect();
    let logged_ok = logged.len() == batches.len() && logged.iter().all(|l| l.ends_with(",true"));
    let seeds_done = summary.records.iter().all(|r| r.completed());
    outcome(
        failed == 0 && logged_ok && seeds_done && !batches.is_empty(),
        format!("{} batches checked, {failed} violations, {} rows in bounds.csv", batches.len(), logged.len()),
    )
}

fn stability(summary: &RunSummary) -> Outcome {
    let epochs: Vec<_> = summary
        .records
        .iter()
        .flat_map(|r| &r.reports)
        .flat_map(|t| &t.report.epochs)
        .collect();
    let failed = epochs.iter().filter(|e| !e.stability.pass).count();
    let tightest = epochs.iter().map(|e| e.stability.slack).fold(f64::INFINITY, f64::min);
    outcome(
        failed == 0 && !epochs.is_empty(),
        format!("{} epochs checked, {failed} violations, smallest slack {tightest:.3e}", epochs.len()),
    )
}

fn gradients() -> Outcome {
    let t = Instant::now();
    let rows = match gradient_battery(&[SEED, SEED + 1, SEED + 2], 10, GradientFault::None) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let secs = t.elapsed().as_secs_f64();
    let worst = rows.iter().map(|r| r.worst).fold(0.0, f64::max);
    outcome(
        rows.len() == 3 && rows.iter().all(|r| r.pass && r.cases == 10) && secs < 30.0,
        format!("worst relative error {worst:.2e} over 3 seeds x 10 probes; {secs:.3}s"),
    )
}

fn per_seed(summary: &RunSummary, v: Variant) -> Vec<&RunRecord> {
    summary.of(v).collect()
}

fn mean_of(records: &[&RunRecord], f: impl Fn(&RunRecord) -> Option<f64>) -> Option<f64> {
    let xs: Vec<f64> = records.iter().map(|r| f(r)).collect::<Option<_>>()?;
    Some(xs.iter().sum::<f64>() / xs.len() as f64)
}

fn la(r: &RunRecord) -> Option<f64> {
    r.metrics().map(|m| m.last_accuracy)
}

fn directional(summary: &RunSummary, secs: f64) -> Outcome {
    let acl = per_seed(summary, Variant::Acl);
    let frozen = per_seed(summary, Variant::Frozen);
    if acl.len() != 5 || frozen.len() != 5 {
        return outcome(false, "expected 5 seeds per variant");
    }
    let wins = acl.iter().zip(&frozen).filter(|(a, f)| match (la(a), la(f)) {
        (Some(x), Some(y)) => x > y,
        _ => false,
    });
    let wins = wins.count();
    let plast = |r: &RunRecord| r.metrics().map(|m| m.plasticity);
    let forget = |r: &RunRecord| r.metrics().and_then(|m| m.forgetting);
    let (Some(pa), Some(pf), Some(fa), Some(ff)) =
        (mean_of(&acl, plast), mean_of(&frozen, plast), mean_of(&acl, forget), mean_of(&frozen, forget))
    else {
        return outcome(false, "a run did not complete");
    };
    let pass = wins == 5 && pa > pf && fa <= ff + 0.05 && secs < 300.0;
    outcome(
        pass,
        format!(
            "LA higher on {wins}/5 seeds; plasticity {pa:.4} vs {pf:.4}; forgetting {fa:.4} vs {ff:.4}; {secs:.1}s"
        ),
    )
}

fn ablation(summary: &RunSummary) -> Outcome {
    let means: Vec<Option<f64>> = [Variant::Acl, Variant::FirstTaskOnly, Variant::Frozen]
        .iter()
        .map(|&v| mean_of(&per_seed(summary, v), la))
        .collect();
    let (Some(c), Some(o), Some(f)) = (means[0], means[1], means[2]) else {
        return outcome(false, "a run did not complete");
    };
    outcome(
        c >= o && o >= f,
        format!("mean LA continual {c:.4}, first task only {o:.4}, frozen {f:.4}"),
    )
}

struct Expected {
    rows: Vec<Vec<f64>>,
    la: f64,
    aia: f64,
    forgetting: Option<f64>,
    plasticity: f64,
    just_learned: f64,
}

fn metric_cases() -> Outcome {
    let cases = [
        Expected {
            rows: vec![vec![0.75]],
            la: 0.75,
            aia: 0.75,
            forgetting: None,
            plasticity: 0.75,
            just_learned: 0.75,
        },
        Expected {
            rows: vec![vec![1.0], vec![0.5, 1.0]],
            la: 0.75,
            aia: 0.875,
            forgetting: Some(0.5),
            plasticity: 1.0,
            just_learned: 1.0,
        },
        Expected {
            rows: vec![vec![0.5], vec![0.75, 0.25]],
            la: 0.5,
            aia: 0.5,
            forgetting: Some(-0.25),
            plasticity: 0.5,
            just_learned: 0.375,
        },
        Expected {
            rows: vec![vec![1.0], vec![0.5, 1.0], vec![0.25, 0.25, 1.0]],
            la: 0.5,
            aia: 0.75,
            forgetting: Some(0.75),
            plasticity: 1.0,
            just_learned: 1.0,
        },
        Expected {
            rows: vec![
                vec![1.0],
                vec![0.75, 1.0],
                vec![0.5, 1.0, 0.75],
                vec![0.25, 0.5, 0.5, 0.75],
            ],
            la: 0.5,
            aia: 0.78125,
            forgetting: Some(0.5),
            plasticity: 0.875,
            just_learned: 0.875,
        },
        Expected {
            rows: vec![
                vec![0.5],
                vec![0.5, 0.5],
                vec![0.5, 0.5, 0.5],
                vec![1.0, 1.0, 1.0, 1.0],
            ],
            la: 1.0,
            aia: 0.625,
            forgetting: Some(-0.5),
            plasticity: 1.0,
            just_learned: 0.625,
        },
    ];
    let mut bad = Vec::new();
    for (i, c) in cases.iter().enumerate() {
        let m = match AccuracyMatrix::from_rows(c.rows.clone()) {
            Ok(m) => m,
            Err(e) => return outcome(false, format!("matrix {}: {e}", i + 1)),
        };
        let forgetting = match m.forgetting() {
            Ok(f) => Some(f),
            Err(Error::SingleTask) => None,
            Err(e) => return outcome(false, format!("matrix {}: {e}", i + 1)),
        };
        let ok = m.last_accuracy().ok() == Some(c.la)
            && m.avg_incremental_accuracy().ok() == Some(c.aia)
            && forgetting == c.forgetting
            && m.plasticity().ok() == Some(c.plasticity)
            && m.plasticity_with(PlasticityMode::JustLearned).ok() == Some(c.just_learned);
        if !ok {
            bad.push(i + 1);
        }
    }
    outcome(bad.is_empty(), format!("{} matrices, mismatches in {bad:?}", cases.len()))
}

fn determinism() -> Outcome {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return outcome(false, e.to_string()),
    };
    let cfg = dir.path().join("det.conf");
    let text = "core.strategy = ncm\nrun.variants = acl, frozen\nrun.seeds = 1993\n";
    if let Err(e) = fs::write(&cfg, text) {
        return outcome(false, e.to_string());
    }
    for name in ["a", "b"] {
        let status = Command::new(env!("CARGO_BIN_EXE_acl"))
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join(name))
            .output();
        match status {
            Ok(o) if o.status.success() => {}
            Ok(o) => return outcome(false, format!("run exited with {:?}", o.status.code())),
            Err(e) => return outcome(false, e.to_string()),
        }
    }
    let files = [
        "acl/accuracy_matrix_1993.csv",
        "frozen/accuracy_matrix_1993.csv",
        "metrics.csv",
        "bounds.csv",
    ];
    let differing: Vec<&str> = files
        .iter()
        .copied()
        .filter(|f| {
            let a = fs::read(dir.path().join("a").join(f));
            let b = fs::read(dir.path().join("b").join(f));
            !matches!((a, b), (Ok(x), Ok(y)) if x == y)
        })
        .collect();
    outcome(differing.is_empty(), format!("{} files compared, differing: {differing:?}", files.len()))
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("chord identity", chord_identity()));
    results.push(("mean minimizes squared distance", mean_minimizer()));
    results.push(("misclassification threshold", threshold()));

    let benchmark = RunConfig::parse("core.strategy = ncm\nrun.variants = acl, frozen, first_task_only\n")
        .expect("benchmark config");
    assert_eq!(benchmark.data, SyntheticSpec::default());
    assert_eq!((benchmark.data.shift, benchmark.data.n_tasks), (2.0, 4));
    let dir = tempfile::tempdir().expect("temp dir");
    let cfg = RunConfig {
        out_dir: dir.path().to_path_buf(),
        ..benchmark
    };
    let t = Instant::now();
    let run = cmd_run(&cfg);
    let secs = t.elapsed().as_secs_f64();
    match run {
        Ok(summary) => {
            let bounds = fs::read_to_string(dir.path().join("bounds.csv")).unwrap_or_default();
            results.push(("markov bound on every batch", markov_live(&summary, &bounds)));
            results.push(("feature drift bound", stability(&summary)));
            results.push(("gradient check", gradients()));
            results.push(("adaptation beats frozen backbone", directional(&summary, secs)));
            results.push(("continual >= first task only >= frozen", ablation(&summary)));
        }
        Err(e) => {
            for name in [
                "markov bound on every batch",
                "feature drift bound",
                "adaptation beats frozen backbone",
                "continual >= first task only >= frozen",
            ] {
                results.push((name, outcome(false, format!("benchmark run failed: {e}"))));
            }
            results.push(("gradient check", gradients()));
        }
    }
    results.push(("metric hand cases", metric_cases()));
    results.push(("byte-identical reruns", determinism()));

    let order = [
        "chord identity",
        "mean minimizes squared distance",
        "misclassification threshold",
        "markov bound on every batch",
        "feature drift bound",
        "gradient check",
        "adaptation beats frozen backbone",
        "continual >= first task only >= frozen",
        "metric hand cases",
        "byte-identical reruns",
    ];
    let mut all = true;
    for (i, name) in order.iter().enumerate() {
        let (_, o) = results.iter().find(|(n, _)| n == name).expect("every criterion ran");
        all &= o.pass;
        println!(
            "criterion {:>2} {:<40} {}  {}",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
