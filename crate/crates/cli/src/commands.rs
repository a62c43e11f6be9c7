use std::path::Path;

use modelsplit_coordinator::{
    dist_solve as run_dist, resume, run_worker, CoordError, CoordinatorConfig, DistOutcome, Launcher, ProcessLauncher,
    ReportStatus, RunOptions, ThreadLauncher, Verdict, WorkerJob, WorkerReport,
};
use modelsplit_core::dominion::SourceModel;
use modelsplit_core::engine::{Budget, SearchMode, Stats};
use modelsplit_core::oracle::{enumerate_with_cap, OracleError};

use crate::args::{DistArgs, OracleArgs, SolveArgs, SplitArgs};

pub const SAT: i32 = 0;
pub const UNSAT: i32 = 1;
pub const BUDGET: i32 = 2;
pub const INPUT: i32 = 3;
pub const HALTED: i32 = 4;
pub const FAILURE: i32 = 5;

fn stem(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .filter(|s| !s.is_empty())
        .unwrap_or("model")
        .to_owned()
}

fn stats_text(s: &Stats) -> String {
    format!(
        "nodes={} propagations={} millis={} solutions={}",
        s.nodes, s.propagations, s.wall_millis, s.solutions_emitted
    )
}

fn worker_failure(e: modelsplit_coordinator::worker::WorkerError) -> i32 {
    use modelsplit_coordinator::worker::WorkerError;
    eprintln!("error: {e}");
    match e {
        WorkerError::Load(_) => INPUT,
        _ => FAILURE,
    }
}

/// Exit status and status word for a finished worker run.
fn verdict(report: &WorkerReport) -> (i32, &'static str) {
    match report.status {
        ReportStatus::Solved => (SAT, "sat"),
        ReportStatus::Exhausted | ReportStatus::Finished if !report.solutions.is_empty() => (SAT, "sat"),
        ReportStatus::Exhausted | ReportStatus::Finished => (UNSAT, "unsat"),
        ReportStatus::Split => (BUDGET, "split"),
        ReportStatus::BudgetExhausted => (BUDGET, "budget-exhausted"),
    }
}

pub fn solve(a: SolveArgs) -> i32 {
    let job = WorkerJob {
        model_path: a.model.clone(),
        budget: a.budget(),
        mode: a.search.mode.into(),
        branching: a.search.branching.into(),
        split_factor: a.split_factor as usize,
        split_dir: a.emit_splits.clone(),
        split_prefix: a.split_prefix.clone().unwrap_or_else(|| stem(&a.model)),
    };
    let quiet = a.quiet;
    let report = match run_worker(&job, None, |s| {
        if !quiet {
            println!("{s}");
        }
    }) {
        Ok(r) => r,
        Err(e) => return worker_failure(e),
    };
    let (code, word) = verdict(&report);
    if !quiet {
        println!("status: {word} {}", stats_text(&report.stats));
        if let Some(base) = &report.base {
            println!("base: {}", base.display());
        }
        for child in &report.children {
            println!("split: {}", child.display());
        }
    }
    match &a.report {
        Some(path) => match modelsplit_coordinator::worker::write_report(path, &report) {
            Ok(()) => SAT,
            Err(e) => {
                eprintln!("error: cannot write report {}: {e}", path.display());
                FAILURE
            }
        },
        None => code,
    }
}

pub fn split(a: SplitArgs) -> i32 {
    let job = WorkerJob {
        model_path: a.model.clone(),
        budget: Budget::nodes(a.at_nodes),
        mode: a.search.mode.into(),
        branching: a.search.branching.into(),
        split_factor: a.split_factor as usize,
        split_dir: Some(a.out.clone()),
        split_prefix: stem(&a.model),
    };
    let report = match run_worker(&job, None, |s| println!("{s}")) {
        Ok(r) => r,
        Err(e) => return worker_failure(e),
    };
    let (code, word) = verdict(&report);
    println!("status: {word} {}", stats_text(&report.stats));
    if report.status != ReportStatus::Split {
        println!("nothing to split: the search finished within {} nodes", a.at_nodes);
        return code;
    }
    if let Some(f) = &report.frontier {
        println!("frontier: {f}");
    }
    for ng in &report.nogoods {
        println!("nogood: {ng}");
    }
    if let Some(base) = &report.base {
        println!("base: {}", base.display());
    }
    for (i, child) in report.children.iter().enumerate() {
        let part = report.partition.get(i).map(|d| d.to_string()).unwrap_or_default();
        println!("part: {} {part}", child.display());
        for c in report.part_constraints.get(i).into_iter().flatten() {
            println!("partition: {c}");
        }
    }
    code
}

fn print_outcome(out: &DistOutcome) -> i32 {
    let s = &out.stats;
    let tail = format!(
        "items={} splits={} crashes={} nodes={} millis={}",
        s.items, s.splits, s.crashes, s.nodes, s.wall_millis
    );
    match &out.verdict {
        Verdict::Sat(a) => {
            println!("{a}");
            println!("status: sat {tail}");
            SAT
        }
        Verdict::Unsat => {
            println!("status: unsat {tail}");
            UNSAT
        }
        Verdict::All(sols) => {
            for a in sols {
                println!("{a}");
            }
            let word = if sols.is_empty() { "unsat" } else { "sat" };
            println!("status: {word} {tail} solutions={}", sols.len());
            if sols.is_empty() {
                UNSAT
            } else {
                SAT
            }
        }
    }
}

pub fn dist_solve(a: DistArgs) -> i32 {
    let launcher: Box<dyn Launcher> = if a.in_process {
        Box::new(ThreadLauncher)
    } else {
        match std::env::current_exe() {
            Ok(exe) => Box::new(ProcessLauncher::new(exe)),
            Err(e) => {
                eprintln!("error: cannot locate the worker executable: {e}");
                return FAILURE;
            }
        }
    };
    let opts = RunOptions {
        halt_after_claims: a.halt_after_claims,
        ..RunOptions::default()
    };
    let result = if a.resume {
        resume(&a.spool, Some(a.workers), launcher.as_ref(), &opts)
    } else {
        let Some(path) = &a.model else {
            eprintln!("error: a model file is required unless --resume is given");
            return INPUT;
        };
        let source = match SourceModel::load(path) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {e}");
                return INPUT;
            }
        };
        let initial_budget = match (a.initial_budget_nodes, a.initial_budget_millis) {
            (None, None) => Budget::nodes(1000),
            (n, t) => Budget {
                max_nodes: n,
                max_millis: t,
            },
        };
        let cfg = CoordinatorConfig {
            split_factor: a.split_factor,
            worker_count: a.workers,
            initial_budget,
            budget_growth: a.budget_growth,
            max_budget: a.max_budget,
            mode: SearchMode::from(a.search.mode),
            branching: a.search.branching.into(),
            spool_dir: a.spool.clone(),
            ..CoordinatorConfig::new(&a.spool)
        };
        run_dist(&source.model, &cfg, launcher.as_ref(), &opts)
    };
    match result {
        Ok(out) => print_outcome(&out),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CoordError::Halted(_) => HALTED,
                CoordError::Config(_) | CoordError::SpoolInUse(_) | CoordError::NothingToResume(_) => INPUT,
                _ => FAILURE,
            }
        }
    }
}

pub fn oracle(a: OracleArgs) -> i32 {
    let source = match SourceModel::load(&a.model) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return INPUT;
        }
    };
    match enumerate_with_cap(&source.model, a.cap) {
        Ok(sols) => {
            for s in &sols {
                println!("{s}");
            }
            println!("count: {}", sols.len());
            if sols.is_empty() {
                UNSAT
            } else {
                SAT
            }
        }
        Err(e @ OracleError::CapExceeded { .. }) => {
            eprintln!("error: {e}");
            INPUT
        }
        Err(e) => {
            eprintln!("error: {e}");
            FAILURE
        }
    }
}
