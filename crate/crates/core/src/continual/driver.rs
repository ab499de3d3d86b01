use std::fmt;

use super::learners::{core_learn_linear, core_learn_ncm, evaluate, LinearCoreConfig};
use super::{CoreStrategy, ExperimentState, TaskStream};
use crate::adaptation::{adapt, AdaptConfig, AdaptMode, AdaptReport};
use crate::error::Error;
use crate::metrics::AccuracyMatrix;
use crate::model::{AdapterModule, Backbone};
use crate::numerics::{RngState, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct TaskReport<T> {
    /// 1-based task index.
    pub task: usize,
    pub report: AdaptReport<T>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome<T> {
    pub matrix: AccuracyMatrix<T>,
    /// One entry per task on which adaptation actually ran.
    pub reports: Vec<TaskReport<T>>,
    pub state: ExperimentState<T>,
}

/// A run that stopped at `task`, with everything completed before it.
#[derive(Debug)]
pub struct RunFailure<T> {
    pub task: usize,
    pub matrix: AccuracyMatrix<T>,
    pub reports: Vec<TaskReport<T>>,
    pub error: Error,
}

impl<T> fmt::Display for RunFailure<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "run failed at task {}: {}", self.task, self.error)
    }
}

impl<T: fmt::Debug> std::error::Error for RunFailure<T> {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// For each task: adapt (unless disabled, or past the first task in
/// first-task-only mode), freeze the adapted backbone, core-learn, then
/// evaluate every task seen so far.
pub fn run_acl<T: Scalar>(
    stream: &TaskStream<T>,
    backbone: &Backbone<T>,
    adapter: &AdapterModule<T>,
    adapt_cfg: &AdaptConfig<T>,
    strategy: CoreStrategy,
    linear_cfg: &LinearCoreConfig<T>,
    rng: &RngState,
) -> Result<RunOutcome<T>, RunFailure<T>> {
    let mut matrix = AccuracyMatrix::new(stream.len());
    let mut reports = Vec::new();
    let mut state = ExperimentState::new(backbone.clone(), adapter.clone(), strategy);

    for task in stream.tasks() {
        let k = task.index;
        let mut adapt_rng = rng.fork(2 * k as u64);
        let mut core_rng = rng.fork(2 * k as u64 + 1);
        let fail = |matrix: &AccuracyMatrix<T>, reports: &Vec<TaskReport<T>>, error| RunFailure {
            task: k,
            matrix: matrix.clone(),
            reports: reports.clone(),
            error,
        };

        let skip = adapt_cfg.mode == AdaptMode::Disabled || (adapt_cfg.first_task_only && k > 1);
        if !skip {
            match adapt(&state.backbone, &state.adapter, &task.train, adapt_cfg, &mut adapt_rng) {
                Ok((b, a, report)) => {
                    state.backbone = b;
                    state.adapter = a;
                    reports.push(TaskReport { task: k, report });
                }
                Err(e) => return Err(fail(&matrix, &reports, e)),
            }
        }

        let learned = match strategy {
            CoreStrategy::Ncm => core_learn_ncm(&mut state, task),
            CoreStrategy::Linear => core_learn_linear(&mut state, task, linear_cfg, &mut core_rng),
        };
        if let Err(e) = learned {
            return Err(fail(&matrix, &reports, e));
        }

        let row = evaluate(&state, stream, k).and_then(|row| matrix.push_row(row));
        if let Err(e) = row {
            return Err(fail(&matrix, &reports, e));
        }
    }
    Ok(RunOutcome {
        matrix,
        reports,
        state,
    })
}
