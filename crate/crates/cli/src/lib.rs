//! Command implementations behind the `acl` binary: benchmark runs, sweeps,
//! the verification suite and embedding export.

pub mod config;
pub mod embeddings;
pub mod run;
pub mod sweep;
pub mod verify;

pub use config::{RunConfig, Variant};
pub use embeddings::{cmd_dump_embeddings, DumpOptions};
pub use run::{cmd_run, execute, RunRecord, RunSummary};
pub use sweep::{cmd_sweep, SweepAxis, SweepSummary};
pub use verify::cmd_verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUN_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Core(#[from] acl_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            _ => EXIT_RUN_FAILURE,
        }
    }
}
