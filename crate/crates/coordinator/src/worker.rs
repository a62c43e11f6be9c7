//! One worker run: solve a model file under a budget and, if the budget
//! trips, write the split models next to it.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use modelsplit_core::dominion::{constraint_text, serialize_model, LoadError, SourceModel};
use modelsplit_core::engine::{Branching, Budget, Outcome, SearchMode, SolveOptions, Solver, Stats};
use modelsplit_core::nogood::{split_model, SplitError};
use modelsplit_core::{Assignment, Domain, VarRef};

use crate::spool::write_atomic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerJob {
    pub model_path: PathBuf,
    pub budget: Budget,
    pub mode: SearchMode,
    pub branching: Branching,
    pub split_factor: usize,
    /// Where split models go; `None` disables splitting.
    pub split_dir: Option<PathBuf>,
    /// File stem for split models: `<prefix>-base`, `<prefix>-1`, ...
    pub split_prefix: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportStatus {
    /// First mode found a solution.
    Solved,
    /// The search space of this model is exhausted.
    Exhausted,
    /// The budget tripped and split models were written.
    Split,
    /// The budget tripped and nothing was written.
    BudgetExhausted,
    /// The budget tripped, no variable could be partitioned, and the
    /// resumed base was searched to the end instead.
    Finished,
}

/// What a worker tells the coordinator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerReport {
    pub status: ReportStatus,
    pub solutions: Vec<Assignment>,
    /// Split model files, in partition order.
    #[serde(default)]
    pub children: Vec<PathBuf>,
    #[serde(default)]
    pub base: Option<PathBuf>,
    #[serde(default)]
    pub frontier: Option<VarRef>,
    #[serde(default)]
    pub partition: Vec<Domain>,
    /// Nogood constraints added to the base, as model text.
    #[serde(default)]
    pub nogoods: Vec<String>,
    /// Partition constraints of each part, as model text.
    #[serde(default)]
    pub part_constraints: Vec<Vec<String>>,
    pub stats: Stats,
}

#[derive(Debug, Error)]
pub enum WorkerError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("cannot write split models: {0}")]
    Io(#[from] io::Error),
    #[error("cannot split: {0}")]
    Split(SplitError),
    #[error("cancelled")]
    Cancelled,
}

/// Runs `job`, calling `on_solution` for each solution as it is found.
pub fn run_worker<F>(
    job: &WorkerJob,
    cancel: Option<Arc<AtomicBool>>,
    mut on_solution: F,
) -> Result<WorkerReport, WorkerError>
where
    F: FnMut(&Assignment),
{
    let source = SourceModel::load(&job.model_path)?;
    let model = &source.model;
    let solver = Solver::new(model);
    let options = SolveOptions {
        mode: job.mode,
        branching: job.branching,
        check_only: false,
        cancel: cancel.clone(),
    };
    let cancelled = || cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed));
    let outcome = solver
        .solve_streaming(job.budget, &options, |a| {
            on_solution(a);
            Ok::<(), std::convert::Infallible>(())
        })
        .unwrap_or_else(|a| match a.error {});
    if cancelled() {
        return Err(WorkerError::Cancelled);
    }
    let report = |status, solutions: Vec<Assignment>, stats| WorkerReport {
        status,
        solutions,
        children: Vec::new(),
        base: None,
        frontier: None,
        partition: Vec::new(),
        nogoods: Vec::new(),
        part_constraints: Vec::new(),
        stats,
    };
    match outcome {
        Outcome::SolutionFound { solution, stats } => Ok(report(ReportStatus::Solved, vec![solution], stats)),
        Outcome::Exhausted { solutions, stats } => Ok(report(ReportStatus::Exhausted, solutions, stats)),
        Outcome::BudgetExhausted {
            ref solutions, stats, ..
        } => {
            let Some(dir) = &job.split_dir else {
                return Ok(report(ReportStatus::BudgetExhausted, solutions.clone(), stats));
            };
            let mut before = solutions.clone();
            let split = match split_model(model, &outcome, job.split_factor) {
                Ok(s) => s,
                Err(SplitError::Unavailable) => {
                    // At most one candidate assignment remains; finish it here.
                    let rest = split_model(model, &outcome, 1).map_err(WorkerError::Split)?;
                    let tail = Solver::new(&rest.base)
                        .solve_streaming(Budget::unbounded(), &options, |a| {
                            on_solution(a);
                            Ok::<(), std::convert::Infallible>(())
                        })
                        .unwrap_or_else(|a| match a.error {});
                    if cancelled() {
                        return Err(WorkerError::Cancelled);
                    }
                    let mut total = stats;
                    total.nodes += tail.stats().nodes;
                    total.propagations += tail.stats().propagations;
                    total.wall_millis += tail.stats().wall_millis;
                    total.solutions_emitted += tail.stats().solutions_emitted;
                    let status = match tail {
                        Outcome::SolutionFound { .. } => ReportStatus::Solved,
                        _ => ReportStatus::Finished,
                    };
                    before.extend(tail.solutions().iter().cloned());
                    return Ok(report(status, before, total));
                }
                Err(e) => return Err(WorkerError::Split(e)),
            };
            fs::create_dir_all(dir)?;
            let base_path = dir.join(format!("{}-base.dominion", job.split_prefix));
            write_atomic(&base_path, serialize_model(&split.base).as_bytes())?;
            let mut children = Vec::with_capacity(split.parts.len());
            for (i, part) in split.parts.iter().enumerate() {
                let p = dir.join(format!("{}-{}.dominion", job.split_prefix, i + 1));
                write_atomic(&p, serialize_model(part).as_bytes())?;
                children.push(p);
            }
            let text = |c| constraint_text(&split.base, c);
            Ok(WorkerReport {
                status: ReportStatus::Split,
                solutions: before,
                children,
                base: Some(base_path),
                frontier: Some(split.frontier.clone()),
                partition: split.partition.clone(),
                nogoods: split.nogoods.iter().map(text).collect(),
                part_constraints: split
                    .part_constraints
                    .iter()
                    .map(|cs| cs.iter().map(text).collect())
                    .collect(),
                stats,
            })
        }
    }
}

pub fn write_report(path: &Path, report: &WorkerReport) -> io::Result<()> {
    crate::spool::write_json_atomic(path, report)
}

pub fn read_report(path: &Path) -> io::Result<WorkerReport> {
    let text = fs::read(path)?;
    serde_json::from_slice(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use modelsplit_core::samples::queens_source;

    fn job(dir: &Path, n: usize, budget: Budget, mode: SearchMode) -> WorkerJob {
        let model_path = dir.join("q.dominion");
        fs::write(&model_path, queens_source(n)).unwrap();
        WorkerJob {
            model_path,
            budget,
            mode,
            branching: Branching::NWay,
            split_factor: 2,
            split_dir: Some(dir.join("out")),
            split_prefix: "q".into(),
        }
    }

    #[test]
    fn solves_within_budget() {
        let dir = tempfile::tempdir().unwrap();
        let r = run_worker(
            &job(dir.path(), 4, Budget::nodes(1000), SearchMode::First),
            None,
            |_| {},
        )
        .unwrap();
        assert_eq!(r.status, ReportStatus::Solved);
        assert_eq!(r.solutions[0].flat(), vec![2, 4, 1, 3]);
        assert!(!dir.path().join("out").exists());
    }

    #[test]
    fn splits_when_the_budget_trips() {
        let dir = tempfile::tempdir().unwrap();
        let r = run_worker(&job(dir.path(), 4, Budget::nodes(4), SearchMode::First), None, |_| {}).unwrap();
        assert_eq!(r.status, ReportStatus::Split);
        assert_eq!(r.nogoods, vec!["resume_0 not(resume_0_i eq(queens[0], 1))"]);
        assert_eq!(
            r.part_constraints,
            vec![vec!["split_lo leq(queens[1], 2)"], vec!["split_hi leq(3, queens[1])"]]
        );
        assert_eq!(r.children.len(), 2);
        for c in &r.children {
            SourceModel::load(c).unwrap();
        }
        let right = WorkerJob {
            model_path: r.children[1].clone(),
            budget: Budget::unbounded(),
            split_dir: None,
            ..job(dir.path(), 4, Budget::unbounded(), SearchMode::First)
        };
        let solved = run_worker(&right, None, |_| {}).unwrap();
        assert_eq!(solved.solutions[0].flat(), vec![2, 4, 1, 3]);
    }

    #[test]
    fn cancelled_runs_report_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let flag = Arc::new(AtomicBool::new(true));
        let r = run_worker(
            &job(dir.path(), 6, Budget::unbounded(), SearchMode::All),
            Some(flag),
            |_| {},
        );
        assert!(matches!(r, Err(WorkerError::Cancelled)));
    }

    #[test]
    fn report_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let r = run_worker(&job(dir.path(), 5, Budget::nodes(3), SearchMode::All), None, |_| {}).unwrap();
        let p = dir.path().join("report.json");
        write_report(&p, &r).unwrap();
        assert_eq!(read_report(&p).unwrap(), r);
    }
}
