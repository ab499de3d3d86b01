use std::path::PathBuf;
use std::process::ExitCode;

use acl_cli::config::{parse_list, RunConfig, DEFAULT_SEEDS};
use acl_cli::run::write_failure_manifest;
use acl_cli::verify::uniform_sizes;
use acl_cli::{cmd_dump_embeddings, cmd_run, cmd_sweep, cmd_verify, CliError, DumpOptions, SweepAxis};
use acl_core::data::{Split, SyntheticSpec};
use acl_core::verify::{GradientFault, VerifySizes};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "acl", version, about = "Adapt-then-learn continual learning benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed and variant of a config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated seeds, overriding `run.seeds`.
        #[arg(long)]
        seeds: Option<String>,
        /// Output directory, overriding `run.out`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat a run over values of one adaptation setting.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long)]
        values: String,
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the loss guarantees and the analytic gradient.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Set every campaign size to N.
        #[arg(long)]
        size: Option<usize>,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<Fault>,
    },
    /// Export embeddings of the task data under a saved model.
    DumpEmbeddings {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Data settings; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated subset of train,test.
        #[arg(long, default_value = "train,test")]
        splits: String,
        #[arg(long, default_value = "embeddings.csv")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Fault {
    SignFlip,
}

fn load_config(path: &PathBuf, seeds: Option<&str>, out: Option<PathBuf>) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(s) = seeds {
        cfg.seeds = parse_list("--seeds", s)?;
    }
    if let Some(o) = out {
        cfg.out_dir = o;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { config, seeds, out } => {
            let cfg = load_config(&config, seeds.as_deref(), out)?;
            match cmd_run(&cfg) {
                Ok(summary) => {
                    for r in &summary.records {
                        match r.metrics() {
                            Some(m) => println!(
                                "{:<24} {:<16} LA {:.4}  AIA {:.4}  plasticity {:.4}",
                                r.run_id(),
                                r.status(),
                                m.last_accuracy,
                                m.avg_incremental_accuracy,
                                m.plasticity
                            ),
                            None => println!("{:<24} {}", r.run_id(), r.status()),
                        }
                    }
                    Ok(summary.exit_code())
                }
                Err(e) => {
                    let _ = write_failure_manifest(&cfg, &cfg.out_dir, "run", &e);
                    Err(e)
                }
            }
        }
        Command::Sweep {
            config,
            axis,
            values,
            seeds,
            out,
        } => {
            let cfg = load_config(&config, seeds.as_deref(), out)?;
            let axis: SweepAxis = axis.parse()?;
            let values: Vec<String> = parse_list("--values", &values)?;
            let summary = cmd_sweep(&cfg, axis, &values)?;
            for cell in &summary.cells {
                let failed = cell.records.iter().filter(|r| r.status() != "ok").count();
                println!("{axis}={} runs {} not ok {failed}", cell.value, cell.records.len());
            }
            Ok(summary.exit_code())
        }
        Command::Verify {
            seed,
            size,
            inject_fault,
        } => {
            let sizes = size.map(uniform_sizes).unwrap_or_else(VerifySizes::default);
            let fault = match inject_fault {
                Some(Fault::SignFlip) => GradientFault::SignFlip,
                None => GradientFault::None,
            };
            let (_, code) = cmd_verify(seed, &sizes, fault, &mut std::io::stdout().lock())?;
            Ok(code)
        }
        Command::DumpEmbeddings {
            checkpoint,
            config,
            seed,
            splits,
            out,
        } => {
            let (data, config_seed) = match config {
                Some(path) => {
                    let cfg = load_config(&path, None, None)?;
                    (cfg.data, cfg.seeds[0])
                }
                None => (SyntheticSpec::default(), DEFAULT_SEEDS[0]),
            };
            let splits: Vec<Split> = splits
                .split(',')
                .map(|s| s.trim().parse().map_err(|e: acl_core::Error| CliError::Config(e.to_string())))
                .collect::<Result<_, _>>()?;
            let opts = DumpOptions {
                checkpoint,
                data,
                seed: seed.unwrap_or(config_seed),
                splits,
                out,
            };
            let rows = cmd_dump_embeddings(&opts)?;
            println!("wrote {rows} rows to {}", opts.out.display());
            Ok(acl_cli::EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
