//! Seed × variant benchmark runs and their artifacts.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use acl_core::adaptation::CHORD_TOLERANCE;
use acl_core::continual::{run_acl, ExperimentState, TaskReport};
use acl_core::data::{generate_synthetic, pretrain_backbone, SyntheticBenchmark};
use acl_core::metrics::AccuracyMatrix;
use acl_core::model::{init_model, write_checkpoint, AdapterModule, Backbone};
use acl_core::numerics::RngState;
use rayon::prelude::*;

use crate::config::{RunConfig, Variant};
use crate::CliError;

const INIT_STREAM: u64 = 10;
const PRETRAIN_STREAM: u64 = 11;
const RUN_STREAM: u64 = 12;

/// Data and pretrained model for one seed, shared by every variant.
#[derive(Debug, Clone)]
pub struct SeedMaterial {
    pub seed: u64,
    pub bench: SyntheticBenchmark<f64>,
    pub backbone: Backbone<f64>,
    pub adapter: AdapterModule<f64>,
    pub timings: Vec<(&'static str, f64)>,
}

pub fn prepare_seed(cfg: &RunConfig, seed: u64) -> Result<SeedMaterial, acl_core::Error> {
    let mut timings = Vec::new();
    let t = Instant::now();
    let spec = acl_core::data::SyntheticSpec {
        seed,
        ..cfg.data.clone()
    };
    let bench = generate_synthetic::<f64>(&spec)?;
    timings.push(("generate", t.elapsed().as_secs_f64()));

    let t = Instant::now();
    let root = RngState::new(seed);
    let (backbone, adapter) = init_model::<f64>(&cfg.model, &mut root.fork(INIT_STREAM));
    let backbone = pretrain_backbone(
        &backbone,
        &bench.pretrain_train,
        &cfg.pretrain,
        &mut root.fork(PRETRAIN_STREAM),
    )?;
    timings.push(("pretrain", t.elapsed().as_secs_f64()));
    Ok(SeedMaterial {
        seed,
        bench,
        backbone,
        adapter,
        timings,
    })
}

/// Outcome of one (seed, variant) run. On failure `matrix` and `reports`
/// hold whatever completed before the failing task.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub seed: u64,
    pub variant: Variant,
    pub matrix: AccuracyMatrix<f64>,
    pub reports: Vec<TaskReport<f64>>,
    pub state: Option<ExperimentState<f64>>,
    pub error: Option<String>,
    pub timings: Vec<(&'static str, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    pub last_accuracy: f64,
    pub avg_incremental_accuracy: f64,
    /// Absent for single-task streams.
    pub forgetting: Option<f64>,
    pub plasticity: f64,
}

impl RunRecord {
    pub fn run_id(&self) -> String {
        format!("{}-{}", self.variant, self.seed)
    }

    pub fn completed(&self) -> bool {
        self.error.is_none()
    }

    pub fn bounds_pass(&self) -> bool {
        self.reports.iter().all(|r| r.report.all_bounds_pass())
    }

    /// `ok`, `bound_violation` or `failed`.
    pub fn status(&self) -> &'static str {
        if !self.completed() {
            "failed"
        } else if !self.bounds_pass() {
            "bound_violation"
        } else {
            "ok"
        }
    }

    pub fn metrics(&self) -> Option<RunMetrics> {
        if !self.completed() {
            return None;
        }
        Some(RunMetrics {
            last_accuracy: self.matrix.last_accuracy().ok()?,
            avg_incremental_accuracy: self.matrix.avg_incremental_accuracy().ok()?,
            forgetting: self.matrix.forgetting().ok(),
            plasticity: self.matrix.plasticity().ok()?,
        })
    }
}

pub fn run_variant(cfg: &RunConfig, material: &SeedMaterial, variant: Variant) -> RunRecord {
    let t = Instant::now();
    let adapt_cfg = variant.apply(&cfg.adapt);
    let outcome = run_acl(
        &material.bench.stream,
        &material.backbone,
        &material.adapter,
        &adapt_cfg,
        cfg.strategy,
        &cfg.linear,
        &RngState::new(material.seed).fork(RUN_STREAM),
    );
    let mut timings = material.timings.clone();
    timings.push(("run", t.elapsed().as_secs_f64()));
    match outcome {
        Ok(out) => RunRecord {
            seed: material.seed,
            variant,
            matrix: out.matrix,
            reports: out.reports,
            state: Some(out.state),
            error: None,
            timings,
        },
        Err(fail) => RunRecord {
            seed: material.seed,
            variant,
            error: Some(fail.to_string()),
            matrix: fail.matrix,
            reports: fail.reports,
            state: None,
            timings,
        },
    }
}

fn failed_record(cfg: &RunConfig, seed: u64, variant: Variant, error: &acl_core::Error) -> RunRecord {
    RunRecord {
        seed,
        variant,
        matrix: AccuracyMatrix::new(cfg.data.n_tasks),
        reports: Vec::new(),
        state: None,
        error: Some(format!("preparation failed: {error}")),
        timings: Vec::new(),
    }
}

/// Every run of a config, ordered by seed then by variant.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub records: Vec<RunRecord>,
    /// Files written, relative to the output directory.
    pub files: Vec<PathBuf>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.records.iter().all(|r| r.status() == "ok") {
            crate::EXIT_OK
        } else {
            crate::EXIT_RUN_FAILURE
        }
    }

    pub fn of(&self, variant: Variant) -> impl Iterator<Item = &RunRecord> {
        self.records.iter().filter(move |r| r.variant == variant)
    }
}

/// Runs every variant on the given seed materials in parallel.
pub fn execute_on(
    cfg: &RunConfig,
    materials: &[Result<SeedMaterial, acl_core::Error>],
) -> Vec<RunRecord> {
    let seeds: Vec<u64> = cfg.seeds.clone();
    seeds
        .par_iter()
        .zip(materials.par_iter())
        .flat_map_iter(|(&seed, material)| {
            let records: Vec<RunRecord> = match material {
                Ok(m) => cfg.variants.par_iter().map(|&v| run_variant(cfg, m, v)).collect(),
                Err(e) => cfg.variants.iter().map(|&v| failed_record(cfg, seed, v, e)).collect(),
            };
            records
        })
        .collect()
}

pub fn prepare_all(cfg: &RunConfig) -> Vec<Result<SeedMaterial, acl_core::Error>> {
    cfg.seeds.par_iter().map(|&s| prepare_seed(cfg, s)).collect()
}

/// Runs everything without touching the file system.
pub fn execute(cfg: &RunConfig) -> Vec<RunRecord> {
    execute_on(cfg, &prepare_all(cfg))
}

/// Runs the config and writes all artifacts under `cfg.out_dir`.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let started = Instant::now();
    let records = execute(cfg);
    let files = write_outputs(cfg, &cfg.out_dir, &records, "run", started)?;
    Ok(RunSummary { records, files })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Per-run files, the aggregate CSVs and the manifest. The manifest is
/// written last and lists everything else.
pub fn write_outputs(
    cfg: &RunConfig,
    dir: &Path,
    records: &[RunRecord],
    command: &str,
    started: Instant,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();

    for r in records {
        let sub = PathBuf::from(r.variant.label());
        let name = sub.join(format!("accuracy_matrix_{}.csv", r.seed));
        let mut out = create(&dir.join(&name))?;
        r.matrix.write_csv(&mut out)?;
        out.flush()?;
        files.push(name);
        if let Some(state) = &r.state {
            let name = sub.join(format!("checkpoint_{}.txt", r.seed));
            let mut out = create(&dir.join(&name))?;
            write_checkpoint(&mut out, &cfg.model, &state.backbone, &state.adapter)?;
            out.flush()?;
            files.push(name);
        }
    }

    let mut out = create(&dir.join("metrics.csv"))?;
    writeln!(out, "run_id,seed,mode,last_accuracy,avg_incremental_accuracy,forgetting,plasticity,status")?;
    for r in records {
        let m = r.metrics();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.run_id(),
            r.seed,
            r.variant,
            fmt_opt(m.map(|m| m.last_accuracy)),
            fmt_opt(m.map(|m| m.avg_incremental_accuracy)),
            fmt_opt(m.and_then(|m| m.forgetting)),
            fmt_opt(m.map(|m| m.plasticity)),
            r.status()
        )?;
    }
    out.flush()?;
    files.push("metrics.csv".into());

    let mut out = create(&dir.join("bounds.csv"))?;
    write_bounds(&mut out, records)?;
    out.flush()?;
    files.push("bounds.csv".into());

    let mut out = create(&dir.join("adaptation.csv"))?;
    writeln!(out, "run_id,seed,variant,task,epoch,initial_acl_loss,mean_loss,end_acl_loss")?;
    for r in records {
        for t in &r.reports {
            for e in &t.report.epochs {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    r.run_id(),
                    r.seed,
                    r.variant,
                    t.task,
                    e.epoch,
                    fmt_opt(t.report.initial_acl_loss),
                    e.mean_loss,
                    e.end_acl_loss
                )?;
            }
        }
    }
    out.flush()?;
    files.push("adaptation.csv".into());

    files.push("manifest.txt".into());
    write_manifest(cfg, dir, records, &files, command, started)?;
    Ok(files)
}

fn write_bounds<W: Write>(out: &mut W, records: &[RunRecord]) -> Result<(), CliError> {
    writeln!(out, "run_id,seed,variant,task,epoch,batch,kind,lhs,rhs,slack,pass")?;
    for r in records {
        let id = r.run_id();
        let mut row = |task: usize, epoch: String, batch: String, kind: &str, lhs: f64, rhs: f64, pass: bool| {
            writeln!(
                out,
                "{id},{},{},{task},{epoch},{batch},{kind},{lhs},{rhs},{},{pass}",
                r.seed,
                r.variant,
                rhs - lhs
            )
        };
        for t in &r.reports {
            let rep = &t.report;
            for b in &rep.batches {
                let br = &b.report;
                row(t.task, b.epoch.to_string(), b.batch.to_string(), "markov_batch", br.lhs, br.rhs, br.pass)?;
            }
            for e in &rep.epochs {
                let ep = e.epoch.to_string();
                let m = &e.markov;
                row(t.task, ep.clone(), String::new(), "markov_epoch", m.lhs, m.rhs, m.pass)?;
                let s = &e.stability;
                row(t.task, ep.clone(), String::new(), "stability", s.lhs, s.rhs, s.pass)?;
                let c = e.chord_cosine_residual;
                row(t.task, ep, String::new(), "chord_identity", c, CHORD_TOLERANCE, c <= CHORD_TOLERANCE)?;
            }
            let v = rep.threshold_violations as f64;
            row(t.task, String::new(), String::new(), "threshold_violations", v, 0.0, v == 0.0)?;
        }
    }
    Ok(())
}

fn write_manifest(
    cfg: &RunConfig,
    dir: &Path,
    records: &[RunRecord],
    files: &[PathBuf],
    command: &str,
    started: Instant,
) -> Result<(), CliError> {
    let mut out = create(&dir.join("manifest.txt"))?;
    writeln!(out, "tool acl {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "command {command}")?;
    writeln!(out, "\n[config]")?;
    write!(out, "{}", cfg.source)?;
    if !cfg.source.is_empty() && !cfg.source.ends_with('\n') {
        writeln!(out)?;
    }
    writeln!(out, "\n[resolved]")?;
    write!(out, "{}", cfg.resolved())?;
    writeln!(out, "\n[runs]")?;
    for r in records {
        match &r.error {
            Some(e) => writeln!(out, "{} {}: {e}", r.run_id(), r.status())?,
            None => writeln!(out, "{} {}", r.run_id(), r.status())?,
        }
    }
    writeln!(out, "\n[files]")?;
    for f in files {
        writeln!(out, "{}", f.display())?;
    }
    writeln!(out, "\n[timings]")?;
    for r in records {
        for (phase, secs) in &r.timings {
            writeln!(out, "{} {phase} {secs:.3}s", r.run_id())?;
        }
    }
    writeln!(out, "total {:.3}s", started.elapsed().as_secs_f64())?;
    out.flush()?;
    Ok(())
}

/// Manifest for a run that failed before producing any record.
pub fn write_failure_manifest(cfg: &RunConfig, dir: &Path, command: &str, error: &CliError) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let mut out = create(&dir.join("manifest.txt"))?;
    writeln!(out, "tool acl {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "command {command}")?;
    writeln!(out, "\n[config]")?;
    write!(out, "{}", cfg.source)?;
    writeln!(out, "\n[error]\n{error}")?;
    out.flush()?;
    Ok(())
}
