use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn acl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acl")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn missing_required_key_is_a_config_error_with_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.conf", "adapt.mode = acl\n");
    let out = dir.path().join("out");
    let res = acl(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn frozen_baseline_has_no_adaptation_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "frozen.conf", "core.strategy = ncm\nadapt.mode = disabled\n");
    let out = dir.path().join("out");
    let res = acl(&["run", "--config", &cfg, "--seeds", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    assert!(out.join("frozen/accuracy_matrix_7.csv").exists());
    assert!(out.join("frozen/checkpoint_7.txt").exists());
    assert!(out.join("manifest.txt").exists());
    assert_eq!(lines(&out.join("bounds.csv")).len(), 1);
    assert_eq!(lines(&out.join("metrics.csv")).len(), 2);
}

#[test]
fn five_seeds_give_five_metric_rows_per_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "two.conf", "core.strategy = ncm\nrun.variants = acl, frozen\n");
    let out = dir.path().join("out");
    let res = acl(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    let rows = lines(&out.join("metrics.csv"));
    for mode in ["acl", "frozen"] {
        let n = rows.iter().filter(|r| r.split(',').nth(2) == Some(mode)).count();
        assert_eq!(n, 5, "{mode}");
    }
    let bounds = lines(&out.join("bounds.csv"));
    assert!(bounds.len() > 1);
    assert!(bounds[1..].iter().all(|r| r.ends_with(",true")));
}

#[test]
fn run_failure_exits_one_and_still_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "boom.conf",
        "core.strategy = ncm\nadapt.mode = acl\nadapt.learning_rate = 1e300\n",
    );
    let out = dir.path().join("out");
    let res = acl(&["run", "--config", &cfg, "--seeds", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("acl-1 failed"));
    assert!(manifest.contains("adapt.learning_rate = 1e300"));
    let metrics = lines(&out.join("metrics.csv"));
    assert!(metrics[1].ends_with(",failed"));
    assert!(out.join("acl/accuracy_matrix_1.csv").exists());
}

#[test]
fn single_value_sweep_matches_a_plain_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.conf", "core.strategy = ncm\nadapt.mode = acl\n");
    let sweep_out = dir.path().join("sweep");
    let run_out = dir.path().join("run");
    let res = acl(&[
        "sweep", "--config", &cfg, "--axis", "temperature", "--values", "0.1", "--seeds", "3,4",
        "--out", sweep_out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0));
    let res = acl(&["run", "--config", &cfg, "--seeds", "3,4", "--out", run_out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    for f in ["metrics.csv", "bounds.csv", "acl/accuracy_matrix_4.csv"] {
        assert_eq!(
            fs::read(sweep_out.join("temperature_0.1").join(f)).unwrap(),
            fs::read(run_out.join(f)).unwrap(),
            "{f}"
        );
    }
    assert_eq!(lines(&sweep_out.join("sweep.csv")).len(), 3);
    let summary = lines(&sweep_out.join("sweep_summary.csv"));
    assert_eq!(summary[0], "variant,metric,temperature=0.1");
}

#[test]
fn temperature_grid_gives_five_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.conf", "core.strategy = ncm\nadapt.mode = acl\n");
    let out = dir.path().join("out");
    let res = acl(&[
        "sweep", "--config", &cfg, "--axis", "temperature", "--values", "0.02,0.05,0.1,0.2,0.5",
        "--seeds", "1", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0));
    let summary = lines(&out.join("sweep_summary.csv"));
    assert!(summary.iter().all(|l| l.split(',').count() == 7));
}

#[test]
fn sweep_rejects_bad_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.conf", "core.strategy = ncm\nadapt.mode = acl\n");
    let out = dir.path().join("out");
    for (axis, values) in [("temperature", "0"), ("temperature", ","), ("epochs", "1.5"), ("width", "1")] {
        let res = acl(&["sweep", "--config", &cfg, "--axis", axis, "--values", values, "--out", out.to_str().unwrap()]);
        assert_eq!(res.status.code(), Some(2), "{axis} {values}");
    }
}

#[test]
fn verify_exit_codes() {
    let ok = acl(&["verify", "--size", "3"]);
    assert_eq!(ok.status.code(), Some(0));
    let flipped = acl(&["verify", "--size", "3", "--inject-fault", "sign-flip"]);
    assert_eq!(flipped.status.code(), Some(1));
    let text = String::from_utf8(flipped.stdout).unwrap();
    assert!(text.contains("FAIL") && text.contains("x = ["));
    let empty = acl(&["verify", "--size", "0"]);
    assert_eq!(empty.status.code(), Some(0));
    assert!(String::from_utf8(empty.stdout).unwrap().contains("warning"));
}

#[test]
fn dump_embeddings_rows_and_norms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "d.conf", "core.strategy = ncm\nadapt.mode = acl\nrun.seeds = 9\n");
    let out = dir.path().join("out");
    assert_eq!(acl(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]).status.code(), Some(0));
    let ckpt = out.join("acl/checkpoint_9.txt");
    let emb = dir.path().join("emb.csv");
    let res = acl(&[
        "dump-embeddings", "--checkpoint", ckpt.to_str().unwrap(), "--config", &cfg, "--splits", "test",
        "--out", emb.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0));
    let rows = lines(&emb);
    assert_eq!(rows[0].split(',').count(), 3 + 16);
    assert_eq!(rows.len() - 1, 8 * 50);
    for r in &rows[1..] {
        let cells: Vec<&str> = r.split(',').collect();
        assert_eq!(cells[2], "test");
        let n: f64 = cells[3..].iter().map(|c| c.parse::<f64>().unwrap().powi(2)).sum();
        assert!((n.sqrt() - 1.0).abs() < 1e-9);
    }

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "not a checkpoint\n").unwrap();
    let res = acl(&["dump-embeddings", "--checkpoint", bad.to_str().unwrap(), "--out", emb.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
}
