use std::io::Write;

use crate::error::{Error, Result};
use crate::numerics::Scalar;

/// Which accuracy counts as a task's best during the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlasticityMode {
    /// Maximum over every evaluation of the task.
    #[default]
    MaxOverHistory,
    /// Accuracy right after the task was learned (the diagonal).
    JustLearned,
}

/// Lower-triangular matrix: row `b` holds accuracies on tasks `1..=b`
/// measured after learning task `b`. Indices are 0-based in the API.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyMatrix<T> {
    tasks: usize,
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> AccuracyMatrix<T> {
    pub fn new(tasks: usize) -> Self {
        Self {
            tasks,
            rows: Vec::new(),
        }
    }

    /// Builds a complete matrix from explicit rows.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let mut m = Self::new(rows.len());
        for r in rows {
            m.push_row(r)?;
        }
        Ok(m)
    }

    pub fn push_row(&mut self, row: Vec<T>) -> Result<()> {
        let b = self.rows.len();
        if b >= self.tasks {
            return Err(Error::ShapeMismatch("accuracy matrix already complete".into()));
        }
        if row.len() != b + 1 {
            return Err(Error::LengthMismatch {
                left: row.len(),
                right: b + 1,
            });
        }
        if row.iter().any(|&a| !(a >= T::zero() && a <= T::one())) {
            return Err(Error::ShapeMismatch("accuracies must lie in [0, 1]".into()));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn tasks(&self) -> usize {
        self.tasks
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn is_complete(&self) -> bool {
        self.rows.len() == self.tasks && self.tasks > 0
    }

    pub fn get(&self, after: usize, task: usize) -> Option<T> {
        self.rows.get(after).and_then(|r| r.get(task)).copied()
    }

    fn require_complete(&self) -> Result<()> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(Error::IncompleteMatrix {
                rows: self.rows.len(),
                tasks: self.tasks,
            })
        }
    }

    /// `A_b`: mean of row `b`.
    pub fn stage_accuracy(&self, b: usize) -> Option<T> {
        self.rows.get(b).map(|r| mean(r))
    }

    /// Mean accuracy over all tasks after the final one.
    pub fn last_accuracy(&self) -> Result<T> {
        self.require_complete()?;
        Ok(mean(&self.rows[self.tasks - 1]))
    }

    /// Mean of `A_b` over every stage.
    pub fn avg_incremental_accuracy(&self) -> Result<T> {
        self.require_complete()?;
        let stages: Vec<T> = self.rows.iter().map(|r| mean(r)).collect();
        Ok(mean(&stages))
    }

    /// Mean over earlier tasks of best-before-final minus final accuracy.
    /// Negative values (backward transfer) are kept.
    pub fn forgetting(&self) -> Result<T> {
        self.require_complete()?;
        let k = self.tasks;
        if k < 2 {
            return Err(Error::SingleTask);
        }
        let last = &self.rows[k - 1];
        let drops: Vec<T> = (0..k - 1)
            .map(|j| {
                let best = (j..k - 1)
                    .map(|b| self.rows[b][j])
                    .fold(T::neg_infinity(), T::max);
                best - last[j]
            })
            .collect();
        Ok(mean(&drops))
    }

    /// Mean over tasks of each task's best accuracy.
    pub fn plasticity(&self) -> Result<T> {
        self.plasticity_with(PlasticityMode::MaxOverHistory)
    }

    pub fn plasticity_with(&self, mode: PlasticityMode) -> Result<T> {
        self.require_complete()?;
        let k = self.tasks;
        let best: Vec<T> = (0..k)
            .map(|j| match mode {
                PlasticityMode::MaxOverHistory => {
                    (j..k).map(|b| self.rows[b][j]).fold(T::neg_infinity(), T::max)
                }
                PlasticityMode::JustLearned => self.rows[j][j],
            })
            .collect();
        Ok(mean(&best))
    }

    /// `after_task,task_1..task_K`, one row per completed task, blank cells
    /// above the diagonal.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let mut header = vec!["after_task".to_string()];
        header.extend((1..=self.tasks).map(|j| format!("task_{j}")));
        writeln!(out, "{}", header.join(","))?;
        for (b, row) in self.rows.iter().enumerate() {
            let mut cells = vec![(b + 1).to_string()];
            for j in 0..self.tasks {
                cells.push(row.get(j).map(|a| a.to_string()).unwrap_or_default());
            }
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

fn mean<T: Scalar>(xs: &[T]) -> T {
    xs.iter().copied().sum::<T>() / T::from_usize(xs.len()).unwrap()
}
