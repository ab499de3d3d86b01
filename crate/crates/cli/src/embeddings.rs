//! Raw embedding export for external plotting.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use acl_core::data::{generate_synthetic, Split, SyntheticSpec};
use acl_core::model::{embed, read_checkpoint, AdapterModule, Backbone};

use crate::CliError;

#[derive(Debug, Clone)]
pub struct DumpOptions {
    pub checkpoint: PathBuf,
    pub data: SyntheticSpec,
    pub seed: u64,
    pub splits: Vec<Split>,
    pub out: PathBuf,
}

/// Embeds every task sample of the selected splits with the checkpointed
/// model and writes `task,class,split,e_1..e_d`. Returns the row count.
pub fn cmd_dump_embeddings(opts: &DumpOptions) -> Result<usize, CliError> {
    let file = File::open(&opts.checkpoint)
        .map_err(|e| CliError::Checkpoint(format!("{}: {e}", opts.checkpoint.display())))?;
    let (model, backbone, adapter): (_, Backbone<f64>, AdapterModule<f64>) =
        read_checkpoint(BufReader::new(file)).map_err(|e| CliError::Checkpoint(e.to_string()))?;
    if model.input_dim != opts.data.input_dim {
        return Err(CliError::Config(format!(
            "checkpoint expects {}-dimensional inputs, data has {}",
            model.input_dim, opts.data.input_dim
        )));
    }
    let spec = SyntheticSpec {
        seed: opts.seed,
        ..opts.data.clone()
    };
    let bench = generate_synthetic::<f64>(&spec)?;

    if let Some(parent) = opts.out.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut out = BufWriter::new(File::create(&opts.out)?);
    let cols: Vec<String> = (1..=model.embed_dim).map(|i| format!("e_{i}")).collect();
    writeln!(out, "task,class,split,{}", cols.join(","))?;
    let mut rows = 0;
    for task in bench.stream.tasks() {
        for &split in &opts.splits {
            let data = match split {
                Split::Train => &task.train,
                Split::Test => &task.test,
            };
            for s in &data.samples {
                let e = embed(&backbone, Some(&adapter), &s.x)?;
                let values: Vec<String> = e.iter().map(f64::to_string).collect();
                writeln!(out, "{},{},{split},{}", task.index, s.y.0, values.join(","))?;
                rows += 1;
            }
        }
    }
    out.flush()?;
    Ok(rows)
}
