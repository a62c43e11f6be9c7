//! Distributed solving by recursive model splitting.
//!
//! The coordinator keeps a spool directory of model files and a journal of
//! item state transitions. Workers receive one model file and a budget and
//! answer with a report: solved, exhausted, or split into new model files.
//! Workers never talk to each other, and the spool alone is enough to
//! resume a run after any crash.

mod config;
mod coordinator;
pub mod journal;
pub mod launch;
pub mod spool;
pub mod worker;

pub use config::{next_budget, CoordinatorConfig};
pub use coordinator::{
    dist_solve, read_result, recover_state, resume, CoordError, DistOutcome, DistStats, RunOptions, Verdict, ROOT_ID,
};
pub use journal::WorkItem;
pub use launch::{Launcher, ProcessLauncher, ThreadLauncher};
pub use worker::{run_worker, ReportStatus, WorkerJob, WorkerReport};
