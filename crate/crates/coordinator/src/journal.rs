//! Write-ahead journal of item state transitions.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use modelsplit_core::engine::{Budget, Stats};
use modelsplit_core::{Assignment, Domain, VarRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Enqueue,
    Claim,
    Done,
    Split,
    Found,
    Solution,
}

/// One journal line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub event: EventKind,
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worker: Option<String>,
    pub ts: u64,
    #[serde(default)]
    pub payload: serde_json::Value,
}

/// A unit of work: one model file plus the budget to run it under.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkItem {
    pub id: String,
    /// Relative to the spool root.
    pub model_path: std::path::PathBuf,
    pub depth: u32,
    pub budget: Budget,
    pub parent_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimPayload {
    pub attempt: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionPayload {
    pub attempt: u32,
    pub solution: Assignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoundPayload {
    pub solution: Assignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DonePayload {
    pub attempt: u32,
    /// `solved`, `exhausted` or `finished` (searched to the end after an
    /// unavailable split).
    pub status: String,
    pub stats: Stats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPayload {
    pub attempt: u32,
    pub children: Vec<WorkItem>,
    pub frontier: VarRef,
    pub partition: Vec<Domain>,
    pub stats: Stats,
}

fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl Event {
    pub fn new<P: Serialize>(event: EventKind, id: &str, worker: Option<&str>, payload: &P) -> Self {
        Self {
            event,
            id: id.to_owned(),
            worker: worker.map(str::to_owned),
            ts: now_millis(),
            payload: serde_json::to_value(payload).expect("payloads serialize"),
        }
    }

    fn payload<P: DeserializeOwned>(&self) -> Option<P> {
        serde_json::from_value(self.payload.clone()).ok()
    }
}

/// Append handle on the journal file. Every append is flushed to disk
/// before returning.
#[derive(Debug)]
pub struct Journal {
    file: File,
}

impl Journal {
    pub fn open(path: &Path) -> io::Result<Self> {
        let mut file = OpenOptions::new().create(true).read(true).append(true).open(path)?;
        // A torn final line must not swallow the next event.
        let len = file.metadata()?.len();
        if len > 0 {
            file.seek(SeekFrom::Start(len - 1))?;
            let mut last = [0u8];
            file.read_exact(&mut last)?;
            if last[0] != b'\n' {
                file.write_all(b"\n")?;
            }
        }
        Ok(Self { file })
    }

    pub fn append(&mut self, e: &Event) -> io::Result<()> {
        let mut line = serde_json::to_vec(e).map_err(io::Error::other)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ItemStatus {
    Pending,
    Running { attempt: u32, worker: Option<String> },
    Done,
}

/// Everything the journal says about a spool.
#[derive(Debug, Clone, Default)]
pub struct SpoolState {
    pub items: BTreeMap<String, (WorkItem, ItemStatus)>,
    /// Pending ids in claim order.
    pub queue: VecDeque<String>,
    /// Claims recorded per item.
    pub attempts: HashMap<String, u32>,
    pub found: Option<Assignment>,
    /// Solutions whose attempt finished (All mode), in commit order.
    pub solutions: Vec<Assignment>,
    staged: HashMap<(String, u32), Vec<Assignment>>,
    pub splits: u64,
    pub crashes: u64,
    pub nodes: u64,
    pub propagations: u64,
    /// Lines that could not be parsed.
    pub corrupt_lines: usize,
    /// Ids referenced by events but missing an item record.
    pub unknown: BTreeSet<String>,
}

impl SpoolState {
    pub fn pending(&self) -> impl Iterator<Item = &WorkItem> {
        self.queue.iter().map(|id| &self.items[id].0)
    }

    pub fn running(&self) -> impl Iterator<Item = &WorkItem> {
        self.items
            .values()
            .filter(|(_, s)| matches!(s, ItemStatus::Running { .. }))
            .map(|(i, _)| i)
    }

    pub fn done_count(&self) -> usize {
        self.items.values().filter(|(_, s)| *s == ItemStatus::Done).count()
    }

    pub fn is_done(&self, id: &str) -> bool {
        matches!(self.items.get(id), Some((_, ItemStatus::Done)))
    }

    pub fn enqueue(&mut self, item: WorkItem) {
        if self.is_done(&item.id) {
            return;
        }
        let id = item.id.clone();
        self.items.insert(id.clone(), (item, ItemStatus::Pending));
        if !self.queue.contains(&id) {
            self.queue.push_back(id);
        }
    }

    fn set_running(&mut self, id: &str, attempt: u32, worker: Option<String>) {
        self.queue.retain(|q| q != id);
        if let Some((_, s)) = self.items.get_mut(id) {
            *s = ItemStatus::Running { attempt, worker };
        }
        let a = self.attempts.entry(id.to_owned()).or_default();
        *a = (*a).max(attempt);
    }

    fn finish(&mut self, id: &str, attempt: u32, stats: &Stats) {
        self.queue.retain(|q| q != id);
        if let Some((_, s)) = self.items.get_mut(id) {
            *s = ItemStatus::Done;
        }
        if let Some(sols) = self.staged.remove(&(id.to_owned(), attempt)) {
            self.solutions.extend(sols);
        }
        self.staged.retain(|(sid, _), _| sid != id);
        self.nodes += stats.nodes;
        self.propagations += stats.propagations;
    }

    /// Applies one event. Returns `false` when the event references an
    /// item the state has never seen.
    pub fn apply(&mut self, e: &Event) -> bool {
        let known = self.items.contains_key(&e.id);
        match e.event {
            EventKind::Enqueue => {
                let Some(item) = e.payload::<WorkItem>() else {
                    self.corrupt_lines += 1;
                    return true;
                };
                if known && !self.is_done(&e.id) && self.attempts.contains_key(&e.id) {
                    self.crashes += 1;
                }
                self.enqueue(item);
                true
            }
            EventKind::Claim => {
                let attempt = e.payload::<ClaimPayload>().map_or(1, |p| p.attempt);
                if known {
                    self.set_running(&e.id, attempt, e.worker.clone());
                }
                known
            }
            EventKind::Solution => {
                if let Some(p) = e.payload::<SolutionPayload>() {
                    self.staged
                        .entry((e.id.clone(), p.attempt))
                        .or_default()
                        .push(p.solution);
                }
                known
            }
            EventKind::Found => {
                if let Some(p) = e.payload::<FoundPayload>() {
                    self.found.get_or_insert(p.solution);
                }
                true
            }
            EventKind::Done => {
                if let Some(p) = e.payload::<DonePayload>() {
                    self.finish(&e.id, p.attempt, &p.stats);
                }
                known
            }
            EventKind::Split => {
                let Some(p) = e.payload::<SplitPayload>() else {
                    self.corrupt_lines += 1;
                    return known;
                };
                self.finish(&e.id, p.attempt, &p.stats);
                self.splits += 1;
                for child in p.children {
                    self.enqueue(child);
                }
                known
            }
        }
    }

    /// Marks `id` finished on the strength of evidence that it split (a
    /// child of it was claimed) even though its split event is missing.
    pub fn assume_split(&mut self, id: &str) {
        if self.is_done(id) {
            return;
        }
        let attempt = match self.items.get(id) {
            Some((_, ItemStatus::Running { attempt, .. })) => *attempt,
            _ => self.attempts.get(id).copied().unwrap_or(0),
        };
        self.finish(id, attempt, &Stats::default());
        self.splits += 1;
    }

    /// Stage a solution of a running attempt.
    pub fn stage(&mut self, id: &str, attempt: u32, solution: Assignment) {
        self.staged.entry((id.to_owned(), attempt)).or_default().push(solution);
    }

    pub fn claim(&mut self, id: &str, worker: &str) -> u32 {
        let attempt = self.attempts.get(id).copied().unwrap_or(0) + 1;
        self.set_running(id, attempt, Some(worker.to_owned()));
        attempt
    }

    pub fn complete(&mut self, id: &str, attempt: u32, stats: &Stats) {
        self.finish(id, attempt, stats);
    }

    pub fn record_split(&mut self, id: &str, attempt: u32, stats: &Stats, children: Vec<WorkItem>) {
        self.finish(id, attempt, stats);
        self.splits += 1;
        for c in children {
            self.enqueue(c);
        }
    }

    pub fn requeue(&mut self, item: WorkItem) {
        self.crashes += 1;
        let id = item.id.clone();
        self.staged.retain(|(sid, _), _| *sid != id);
        self.items.insert(id.clone(), (item, ItemStatus::Pending));
        self.queue.push_back(id);
    }

    /// Moves every running item back to the front of the queue.
    pub fn reset_running(&mut self) {
        let running: Vec<String> = self
            .items
            .iter()
            .filter(|(_, (_, s))| matches!(s, ItemStatus::Running { .. }))
            .map(|(id, _)| id.clone())
            .collect();
        for id in running.into_iter().rev() {
            self.staged.retain(|(sid, _), _| *sid != id);
            if let Some((_, s)) = self.items.get_mut(&id) {
                *s = ItemStatus::Pending;
            }
            self.queue.push_front(id);
        }
    }
}

/// Reads a journal, skipping lines that do not parse.
pub fn read_events(path: &Path) -> io::Result<(Vec<Event>, usize)> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok((Vec::new(), 0)),
        Err(e) => return Err(e),
    };
    let mut events = Vec::new();
    let mut corrupt = 0;
    for line in BufReader::new(file).split(b'\n') {
        let line = line?;
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        match serde_json::from_slice::<Event>(&line) {
            Ok(e) => events.push(e),
            Err(_) => corrupt += 1,
        }
    }
    Ok((events, corrupt))
}

/// Replays a journal into a state.
pub fn replay(path: &Path) -> io::Result<SpoolState> {
    let (events, corrupt) = read_events(path)?;
    let mut state = SpoolState {
        corrupt_lines: corrupt,
        ..SpoolState::default()
    };
    for e in &events {
        if !state.apply(e) {
            state.unknown.insert(e.id.clone());
        }
    }
    Ok(state)
}

pub fn journal_exists(path: &Path) -> bool {
    fs::metadata(path).map(|m| m.len() > 0).unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(id: &str, depth: u32) -> WorkItem {
        WorkItem {
            id: id.into(),
            model_path: format!("items/{id}.dominion").into(),
            depth,
            budget: Budget::nodes(10),
            parent_id: None,
        }
    }

    fn sol(v: i64) -> Assignment {
        Assignment::new(vec![("x".into(), vec![v])])
    }

    fn stats(nodes: u64) -> Stats {
        Stats {
            nodes,
            ..Stats::default()
        }
    }

    #[test]
    fn replay_tracks_lifecycle() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("journal.ndjson");
        let mut j = Journal::open(&path).unwrap();
        let events = [
            Event::new(EventKind::Enqueue, "r", None, &item("r", 0)),
            Event::new(EventKind::Claim, "r", Some("w0"), &ClaimPayload { attempt: 1 }),
            Event::new(
                EventKind::Solution,
                "r",
                Some("w0"),
                &SolutionPayload {
                    attempt: 1,
                    solution: sol(1),
                },
            ),
            Event::new(
                EventKind::Split,
                "r",
                Some("w0"),
                &SplitPayload {
                    attempt: 1,
                    children: vec![item("r-1", 1), item("r-2", 1)],
                    frontier: VarRef::new("x", 0),
                    partition: vec![Domain::singleton(2), Domain::singleton(3)],
                    stats: stats(7),
                },
            ),
            Event::new(EventKind::Claim, "r-1", Some("w0"), &ClaimPayload { attempt: 1 }),
            Event::new(
                EventKind::Solution,
                "r-1",
                Some("w0"),
                &SolutionPayload {
                    attempt: 1,
                    solution: sol(2),
                },
            ),
        ];
        for e in &events {
            j.append(e).unwrap();
        }
        let s = replay(&path).unwrap();
        assert_eq!(s.solutions, vec![sol(1)]);
        assert_eq!(s.queue, ["r-2"]);
        assert_eq!(s.running().map(|i| i.id.as_str()).collect::<Vec<_>>(), ["r-1"]);
        assert!(s.is_done("r"));
        assert_eq!(s.splits, 1);
        assert_eq!(s.nodes, 7);

        let mut s = s;
        s.reset_running();
        assert_eq!(s.queue, ["r-1", "r-2"]);
        assert_eq!(s.solutions, vec![sol(1)]);
    }

    #[test]
    fn corrupt_and_torn_lines_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("journal.ndjson");
        let good = serde_json::to_string(&Event::new(EventKind::Enqueue, "r", None, &item("r", 0))).unwrap();
        fs::write(&path, format!("{good}\n{{\"event\": nope}}\n{{\"event\":\"cla")).unwrap();
        let s = replay(&path).unwrap();
        assert_eq!(s.corrupt_lines, 2);
        assert_eq!(s.queue, ["r"]);

        let mut j = Journal::open(&path).unwrap();
        j.append(&Event::new(
            EventKind::Claim,
            "r",
            Some("w1"),
            &ClaimPayload { attempt: 1 },
        ))
        .unwrap();
        let s = replay(&path).unwrap();
        assert_eq!(s.corrupt_lines, 2);
        assert!(s.queue.is_empty());
    }

    #[test]
    fn done_items_are_never_resurrected() {
        let mut s = SpoolState::default();
        s.enqueue(item("r", 0));
        let a = s.claim("r", "w0");
        s.complete("r", a, &stats(3));
        s.enqueue(item("r", 0));
        assert!(s.queue.is_empty());
        assert!(s.is_done("r"));
    }

    #[test]
    fn requeued_attempt_discards_staged_solutions() {
        let mut s = SpoolState::default();
        s.enqueue(item("r", 0));
        let a = s.claim("r", "w0");
        s.stage("r", a, sol(1));
        s.requeue(item("r", 0));
        let b = s.claim("r", "w0");
        assert_eq!(b, 2);
        s.complete("r", b, &stats(1));
        assert!(s.solutions.is_empty());
        assert_eq!(s.crashes, 1);
    }
}
