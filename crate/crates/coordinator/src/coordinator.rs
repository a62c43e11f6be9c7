use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{debug, info, warn};

use modelsplit_core::dominion::{serialize_model, LoadError, SourceModel};
use modelsplit_core::engine::SearchMode;
use modelsplit_core::eval::satisfies_all;
use modelsplit_core::{Assignment, Model};

use crate::config::{next_budget, CoordinatorConfig};
use crate::journal::{
    journal_exists, read_events, ClaimPayload, DonePayload, Event, EventKind, FoundPayload, Journal, SolutionPayload,
    SplitPayload, SpoolState, WorkItem,
};
use crate::launch::{Attempt, Exit, Launcher, RunningWorker};
use crate::spool::{lineage, write_json_atomic, Spool};
use crate::worker::{read_report, ReportStatus, WorkerJob, WorkerReport};

pub const ROOT_ID: &str = "r";

#[derive(Debug, Error)]
pub enum CoordError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
    #[error("spool {0} already holds a run; resume it or pick another directory")]
    SpoolInUse(PathBuf),
    #[error("spool {0} holds no run to resume")]
    NothingToResume(PathBuf),
    #[error("cannot recover item `{id}`: {reason}")]
    Unrecoverable { id: String, reason: String },
    #[error("item `{id}` crashed {attempts} times; giving up")]
    RetryLimit { id: String, attempts: u32 },
    #[error("item `{id}` reported {solution}, which violates the original model")]
    InvalidSolution { id: String, solution: Assignment },
    #[error("halted after {0} claims")]
    Halted(u64),
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> CoordError {
    let context = context.into();
    move |source| CoordError::Io { context, source }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Sat(Assignment),
    Unsat,
    /// All mode: every solution, in commit order.
    All(Vec<Assignment>),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistStats {
    /// Items that finished.
    pub items: usize,
    pub splits: u64,
    pub crashes: u64,
    /// Engine nodes summed over finished items.
    pub nodes: u64,
    pub propagations: u64,
    /// Wall time of this coordinator session.
    pub wall_millis: u64,
    pub corrupt_journal_lines: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistOutcome {
    pub verdict: Verdict,
    pub stats: DistStats,
}

impl DistOutcome {
    pub fn is_sat(&self) -> bool {
        match &self.verdict {
            Verdict::Sat(_) => true,
            Verdict::Unsat => false,
            Verdict::All(s) => !s.is_empty(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ResultFile {
    status: String,
    solution: Option<Assignment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    solutions: Option<Vec<Assignment>>,
    stats: DistStats,
}

/// Knobs that do not belong in the persisted configuration.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Kill every worker and stop once this many items have been claimed
    /// in this session. A crash-testing hook.
    pub halt_after_claims: Option<u64>,
    pub poll_interval: Duration,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            halt_after_claims: None,
            poll_interval: Duration::from_millis(2),
        }
    }
}

struct Slot {
    item: WorkItem,
    attempt: u32,
    worker: usize,
    handle: Box<dyn RunningWorker>,
}

struct Run<'a> {
    cfg: CoordinatorConfig,
    spool: Spool,
    launcher: &'a dyn Launcher,
    opts: RunOptions,
    journal: Journal,
    state: SpoolState,
    original: Model,
    claims: u64,
    started: Instant,
}

/// Solves `model` by recursive splitting over the workers of `launcher`.
/// The spool directory must not hold a previous run.
pub fn dist_solve(
    model: &Model,
    cfg: &CoordinatorConfig,
    launcher: &dyn Launcher,
    opts: &RunOptions,
) -> Result<DistOutcome, CoordError> {
    cfg.validate().map_err(CoordError::Config)?;
    let spool = Spool::new(&cfg.spool_dir);
    if journal_exists(&spool.journal()) {
        return Err(CoordError::SpoolInUse(cfg.spool_dir.clone()));
    }
    spool.create_dirs().map_err(io_err("cannot create spool"))?;
    write_json_atomic(&spool.config(), cfg).map_err(io_err("cannot write spool config"))?;
    let rel = Spool::item_rel(ROOT_ID);
    crate::spool::write_atomic(&spool.resolve(&rel), serialize_model(model).as_bytes())
        .map_err(io_err("cannot write root item"))?;
    let root = WorkItem {
        id: ROOT_ID.into(),
        model_path: rel,
        depth: 0,
        budget: next_budget(0, cfg),
        parent_id: None,
    };
    let mut journal = Journal::open(&spool.journal()).map_err(io_err("cannot open journal"))?;
    journal
        .append(&Event::new(EventKind::Enqueue, ROOT_ID, None, &root))
        .map_err(io_err("cannot write journal"))?;
    let mut state = SpoolState::default();
    state.enqueue(root);
    let mut run = Run {
        cfg: cfg.clone(),
        spool,
        launcher,
        opts: opts.clone(),
        journal,
        state,
        original: model.clone(),
        claims: 0,
        started: Instant::now(),
    };
    run.drive()
}

/// Continues the run persisted in `spool_dir`. Items that were running
/// when the previous coordinator stopped are run again; `workers`
/// overrides the stored worker count.
pub fn resume(
    spool_dir: &Path,
    workers: Option<usize>,
    launcher: &dyn Launcher,
    opts: &RunOptions,
) -> Result<DistOutcome, CoordError> {
    let spool = Spool::new(spool_dir);
    if !journal_exists(&spool.journal()) {
        return Err(CoordError::NothingToResume(spool_dir.to_owned()));
    }
    let text = fs::read(spool.config()).map_err(io_err("cannot read spool config"))?;
    let mut cfg: CoordinatorConfig =
        serde_json::from_slice(&text).map_err(|e| CoordError::Config(format!("spool config is unreadable: {e}")))?;
    cfg.spool_dir = spool_dir.to_owned();
    if let Some(w) = workers {
        cfg.worker_count = w;
    }
    cfg.validate().map_err(CoordError::Config)?;
    let original = load_item(&spool, ROOT_ID)?;
    let mut state = recover_state(&spool, &cfg)?;
    if state.corrupt_lines > 0 {
        warn!(lines = state.corrupt_lines, "skipped unreadable journal lines");
    }
    state.reset_running();
    for item in state.pending() {
        load_item(&spool, &item.id)?;
    }
    info!(
        pending = state.queue.len(),
        done = state.done_count(),
        found = state.found.is_some(),
        "resuming spool"
    );
    let journal = Journal::open(&spool.journal()).map_err(io_err("cannot open journal"))?;
    let mut run = Run {
        cfg,
        spool,
        launcher,
        opts: opts.clone(),
        journal,
        state,
        original,
        claims: 0,
        started: Instant::now(),
    };
    run.drive()
}

fn load_item(spool: &Spool, id: &str) -> Result<Model, CoordError> {
    let path = spool.resolve(&Spool::item_rel(id));
    SourceModel::load(&path)
        .map(|s| s.model)
        .map_err(|e: LoadError| CoordError::Unrecoverable {
            id: id.to_owned(),
            reason: e.to_string(),
        })
}

/// Replays the journal. Events about items whose record was lost to a
/// corrupt line are honoured by rebuilding the item from its model file.
pub fn recover_state(spool: &Spool, cfg: &CoordinatorConfig) -> Result<SpoolState, CoordError> {
    let (events, corrupt) = read_events(&spool.journal()).map_err(io_err("cannot read journal"))?;
    let mut state = SpoolState::default();
    state.corrupt_lines = corrupt;
    for e in &events {
        let needs_item = !matches!(e.event, EventKind::Enqueue | EventKind::Found);
        if needs_item && !state.items.contains_key(&e.id) {
            adopt(spool, cfg, &mut state, &e.id)?;
        }
        state.apply(e);
    }
    Ok(state)
}

fn adopt(spool: &Spool, cfg: &CoordinatorConfig, state: &mut SpoolState, id: &str) -> Result<(), CoordError> {
    warn!(id, "rebuilding item from its model file");
    let (parent, _) = lineage(id);
    let mut ids = vec![id.to_owned()];
    if let Some(parent) = parent {
        // A child exists, so the parent split; its siblings are items too.
        state.assume_split(parent);
        let prefix = format!("{parent}-");
        let entries = fs::read_dir(spool.items_dir()).map_err(io_err("cannot list items"))?;
        for entry in entries {
            let name = entry.map_err(io_err("cannot list items"))?.file_name();
            let Some(stem) = name.to_str().and_then(|n| n.strip_suffix(".dominion")) else {
                continue;
            };
            let sibling = stem
                .strip_prefix(&prefix)
                .is_some_and(|k| !k.is_empty() && k.bytes().all(|b| b.is_ascii_digit()));
            if sibling && stem != id && !state.items.contains_key(stem) {
                ids.push(stem.to_owned());
            }
        }
        ids[1..].sort_by_key(|s| s.rsplit('-').next().and_then(|k| k.parse::<u64>().ok()));
    }
    for id in ids {
        load_item(spool, &id)?;
        let (parent, depth) = lineage(&id);
        state.enqueue(WorkItem {
            model_path: Spool::item_rel(&id),
            budget: next_budget(depth, cfg),
            parent_id: parent.map(str::to_owned),
            depth,
            id,
        });
    }
    Ok(())
}

impl Run<'_> {
    fn log(&mut self, e: Event) -> Result<(), CoordError> {
        self.journal.append(&e).map_err(io_err("cannot write journal"))
    }

    fn drive(&mut self) -> Result<DistOutcome, CoordError> {
        let mut slots: Vec<Slot> = Vec::new();
        let result = self.pump(&mut slots);
        for s in &mut slots {
            s.handle.kill();
        }
        result?;
        self.finish()
    }

    fn pump(&mut self, slots: &mut Vec<Slot>) -> Result<(), CoordError> {
        loop {
            if self.cfg.mode == SearchMode::First && self.state.found.is_some() {
                return Ok(());
            }
            while slots.len() < self.cfg.worker_count {
                let Some(id) = self.state.queue.front().cloned() else {
                    break;
                };
                let worker = (0..self.cfg.worker_count)
                    .find(|w| slots.iter().all(|s| s.worker != *w))
                    .expect("a free worker slot");
                slots.push(self.claim(&id, worker)?);
                self.claims += 1;
                if self.opts.halt_after_claims.is_some_and(|k| self.claims >= k) {
                    for s in slots.iter_mut() {
                        s.handle.kill();
                    }
                    slots.clear();
                    return Err(CoordError::Halted(self.claims));
                }
            }
            if slots.is_empty() {
                return Ok(());
            }
            let mut progressed = false;
            let mut i = 0;
            while i < slots.len() {
                match slots[i].handle.poll() {
                    Some(exit) => {
                        let slot = slots.swap_remove(i);
                        self.settle(slot, exit)?;
                        progressed = true;
                        if self.cfg.mode == SearchMode::First && self.state.found.is_some() {
                            return Ok(());
                        }
                    }
                    None => i += 1,
                }
            }
            if !progressed {
                std::thread::sleep(self.opts.poll_interval);
            }
        }
    }

    fn claim(&mut self, id: &str, worker: usize) -> Result<Slot, CoordError> {
        let item = self.state.items[id].0.clone();
        let name = format!("w{worker}");
        let attempt = self.state.claim(id, &name);
        self.log(Event::new(EventKind::Claim, id, Some(&name), &ClaimPayload { attempt }))?;
        let work_dir = self.spool.work_dir(id, attempt);
        if work_dir.exists() {
            fs::remove_dir_all(&work_dir).map_err(io_err("cannot clear work directory"))?;
        }
        fs::create_dir_all(&work_dir).map_err(io_err("cannot create work directory"))?;
        let work = Attempt {
            job: WorkerJob {
                model_path: self.spool.resolve(&item.model_path),
                budget: item.budget,
                mode: self.cfg.mode,
                branching: self.cfg.branching,
                split_factor: self.cfg.split_factor,
                split_dir: Some(work_dir.clone()),
                split_prefix: id.to_owned(),
            },
            report: self.spool.report(id, attempt),
            log: work_dir.join("worker.log"),
        };
        debug!(id, attempt, worker = %name, budget = ?item.budget, "claimed");
        let handle = self
            .launcher
            .launch(&work)
            .map_err(io_err(format!("cannot launch worker for `{id}`")))?;
        Ok(Slot {
            item,
            attempt,
            worker,
            handle,
        })
    }

    fn settle(&mut self, slot: Slot, exit: Exit) -> Result<(), CoordError> {
        let id = slot.item.id.clone();
        let report = match exit {
            Exit::Reported => {
                read_report(&self.spool.report(&id, slot.attempt)).map_err(|e| format!("unreadable report: {e}"))
            }
            Exit::Crashed(reason) => Err(reason),
        };
        let report = match report {
            Ok(r) if r.status != ReportStatus::BudgetExhausted => r,
            Ok(_) => return self.crashed(slot, "worker stopped without splitting".into()),
            Err(reason) => return self.crashed(slot, reason),
        };
        for s in &report.solutions {
            if !satisfies_all(self.original.constraints(), s).unwrap_or(false) {
                return Err(CoordError::InvalidSolution {
                    id,
                    solution: s.clone(),
                });
            }
        }
        match self.cfg.mode {
            SearchMode::First => {
                if let Some(s) = report.solutions.first() {
                    self.log(Event::new(
                        EventKind::Found,
                        &id,
                        None,
                        &FoundPayload { solution: s.clone() },
                    ))?;
                    self.state.found = Some(s.clone());
                    info!(id, solution = %s, "solution found");
                }
            }
            SearchMode::All => {
                for s in &report.solutions {
                    let payload = SolutionPayload {
                        attempt: slot.attempt,
                        solution: s.clone(),
                    };
                    self.log(Event::new(EventKind::Solution, &id, None, &payload))?;
                    self.state.stage(&id, slot.attempt, s.clone());
                }
            }
        }
        match report.status {
            ReportStatus::Split => self.commit_split(&slot, &report)?,
            _ => {
                let status = match report.status {
                    ReportStatus::Solved => "solved",
                    ReportStatus::Finished => "finished",
                    _ => "exhausted",
                };
                let payload = DonePayload {
                    attempt: slot.attempt,
                    status: status.into(),
                    stats: report.stats,
                };
                self.log(Event::new(EventKind::Done, &id, None, &payload))?;
                self.state.complete(&id, slot.attempt, &report.stats);
                debug!(id, status, nodes = report.stats.nodes, "done");
            }
        }
        let _ = fs::remove_dir_all(self.spool.work_dir(&id, slot.attempt));
        Ok(())
    }

    fn commit_split(&mut self, slot: &Slot, report: &WorkerReport) -> Result<(), CoordError> {
        let id = &slot.item.id;
        let depth = slot.item.depth + 1;
        let mut children = Vec::with_capacity(report.children.len());
        for (i, path) in report.children.iter().enumerate() {
            let child_id = format!("{id}-{}", i + 1);
            let rel = Spool::item_rel(&child_id);
            fs::rename(path, self.spool.resolve(&rel)).map_err(io_err(format!("cannot move split model of `{id}`")))?;
            children.push(WorkItem {
                id: child_id,
                model_path: rel,
                depth,
                budget: next_budget(depth, &self.cfg),
                parent_id: Some(id.clone()),
            });
        }
        if let Some(base) = &report.base {
            let _ = fs::rename(base, self.spool.items_dir().join(format!("{id}-base.dominion")));
        }
        let payload = SplitPayload {
            attempt: slot.attempt,
            children: children.clone(),
            frontier: report.frontier.clone().expect("split reports name a frontier"),
            partition: report.partition.clone(),
            stats: report.stats,
        };
        self.log(Event::new(EventKind::Split, id, None, &payload))?;
        info!(id, parts = children.len(), frontier = %payload.frontier, "split");
        self.state.record_split(id, slot.attempt, &report.stats, children);
        Ok(())
    }

    fn crashed(&mut self, slot: Slot, reason: String) -> Result<(), CoordError> {
        let id = slot.item.id.clone();
        warn!(id, attempt = slot.attempt, reason, "worker crashed");
        if slot.attempt >= self.cfg.max_attempts {
            return Err(CoordError::RetryLimit {
                id,
                attempts: slot.attempt,
            });
        }
        self.log(Event::new(EventKind::Enqueue, &id, None, &slot.item))?;
        self.state.requeue(slot.item);
        Ok(())
    }

    fn finish(&mut self) -> Result<DistOutcome, CoordError> {
        let stats = DistStats {
            items: self.state.done_count(),
            splits: self.state.splits,
            crashes: self.state.crashes,
            nodes: self.state.nodes,
            propagations: self.state.propagations,
            wall_millis: self.started.elapsed().as_millis() as u64,
            corrupt_journal_lines: self.state.corrupt_lines,
        };
        let (verdict, file) = match self.cfg.mode {
            SearchMode::First => match &self.state.found {
                Some(s) => (
                    Verdict::Sat(s.clone()),
                    ResultFile {
                        status: "sat".into(),
                        solution: Some(s.clone()),
                        solutions: None,
                        stats: stats.clone(),
                    },
                ),
                None => (
                    Verdict::Unsat,
                    ResultFile {
                        status: "unsat".into(),
                        solution: None,
                        solutions: None,
                        stats: stats.clone(),
                    },
                ),
            },
            SearchMode::All => {
                let sols = self.state.solutions.clone();
                let file = ResultFile {
                    status: if sols.is_empty() { "unsat" } else { "sat" }.into(),
                    solution: sols.first().cloned(),
                    solutions: Some(sols.clone()),
                    stats: stats.clone(),
                };
                (Verdict::All(sols), file)
            }
        };
        write_json_atomic(&self.spool.result(), &file).map_err(io_err("cannot write result"))?;
        Ok(DistOutcome { verdict, stats })
    }
}

/// Reads `result.json` of a finished spool.
pub fn read_result(spool_dir: &Path) -> io::Result<(String, Option<Assignment>)> {
    let text = fs::read(Spool::new(spool_dir).result())?;
    let r: ResultFile = serde_json::from_slice(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    Ok((r.status, r.solution))
}
