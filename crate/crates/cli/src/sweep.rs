//! One-axis sweeps over adaptation temperature or epochs.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use crate::config::RunConfig;
use crate::run::{execute_on, prepare_all, write_outputs, RunMetrics, RunRecord};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Temperature,
    Epochs,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Temperature => "temperature",
            SweepAxis::Epochs => "epochs",
        }
    }

    /// Parses and checks one value for this axis; returns `cfg` with it set.
    fn apply(self, cfg: &RunConfig, raw: &str) -> Result<RunConfig, CliError> {
        let mut cell = cfg.clone();
        match self {
            SweepAxis::Temperature => {
                cell.adapt.temperature = raw
                    .parse()
                    .map_err(|_| CliError::Config(format!("bad temperature `{raw}`")))?;
            }
            SweepAxis::Epochs => {
                cell.adapt.epochs = raw
                    .parse()
                    .map_err(|_| CliError::Config(format!("bad epoch count `{raw}`")))?;
            }
        }
        cell.adapt
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        cell.out_dir = cell_dir(cfg, self, raw);
        Ok(cell)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "temperature" => Ok(SweepAxis::Temperature),
            "epochs" => Ok(SweepAxis::Epochs),
            other => Err(CliError::Config(format!("unknown sweep axis `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub value: String,
    pub records: Vec<RunRecord>,
}

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub axis: SweepAxis,
    pub cells: Vec<SweepCell>,
}

impl SweepSummary {
    pub fn exit_code(&self) -> i32 {
        let all_ok = self
            .cells
            .iter()
            .flat_map(|c| &c.records)
            .all(|r| r.status() == "ok");
        if all_ok {
            crate::EXIT_OK
        } else {
            crate::EXIT_RUN_FAILURE
        }
    }
}

type MetricPick = fn(&RunMetrics) -> f64;

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Runs every value on the same seed material. Each cell writes a full run
/// directory `<out>/<axis>_<value>/`; `sweep.csv` and `sweep_summary.csv`
/// go to `<out>`. Failed cells are recorded and the sweep moves on.
pub fn cmd_sweep(cfg: &RunConfig, axis: SweepAxis, values: &[String]) -> Result<SweepSummary, CliError> {
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    let cells_cfg: Vec<RunConfig> = values
        .iter()
        .map(|v| axis.apply(cfg, v))
        .collect::<Result<_, _>>()?;

    let materials = prepare_all(cfg);
    let mut cells = Vec::new();
    for (value, cell_cfg) in values.iter().zip(&cells_cfg) {
        let started = Instant::now();
        let records = execute_on(cell_cfg, &materials);
        write_outputs(cell_cfg, &cell_cfg.out_dir, &records, &format!("sweep {axis}={value}"), started)?;
        cells.push(SweepCell {
            value: value.clone(),
            records,
        });
    }

    fs::create_dir_all(&cfg.out_dir)?;
    let mut out = fs::File::create(cfg.out_dir.join("sweep.csv"))?;
    writeln!(out, "{axis},seed,variant,status,last_accuracy,avg_incremental_accuracy")?;
    for cell in &cells {
        for r in &cell.records {
            let m = r.metrics();
            writeln!(
                out,
                "{},{},{},{},{},{}",
                cell.value,
                r.seed,
                r.variant,
                r.status(),
                m.map(|m| m.last_accuracy.to_string()).unwrap_or_default(),
                m.map(|m| m.avg_incremental_accuracy.to_string()).unwrap_or_default()
            )?;
        }
    }

    let mut out = fs::File::create(cfg.out_dir.join("sweep_summary.csv"))?;
    let header: Vec<String> = values.iter().map(|v| format!("{axis}={v}")).collect();
    writeln!(out, "variant,metric,{}", header.join(","))?;
    for &variant in &cfg.variants {
        let metrics: [(&str, MetricPick); 2] = [
            ("mean_last_accuracy", |m| m.last_accuracy),
            ("mean_avg_incremental_accuracy", |m| m.avg_incremental_accuracy),
        ];
        for (metric, pick) in metrics {
            let cols: Vec<String> = cells
                .iter()
                .map(|cell| {
                    let xs: Vec<f64> = cell
                        .records
                        .iter()
                        .filter(|r| r.variant == variant)
                        .filter_map(|r| r.metrics())
                        .map(|m| pick(&m))
                        .collect();
                    mean(&xs).map(|x| x.to_string()).unwrap_or_default()
                })
                .collect();
            writeln!(out, "{variant},{metric},{}", cols.join(","))?;
        }
    }
    Ok(SweepSummary { axis, cells })
}

/// Cell directory for `value`.
pub fn cell_dir(cfg: &RunConfig, axis: SweepAxis, value: &str) -> PathBuf {
    cfg.out_dir.join(format!("{}_{value}", axis.name()))
}
