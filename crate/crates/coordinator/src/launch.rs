//! Ways of running a worker: a child process (the default) or a thread.

use std::fs::{self, File};
use std::io;
use std::path::PathBuf;
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use modelsplit_core::engine::{Branching, SearchMode};

use crate::worker::{run_worker, write_report, WorkerJob};

/// Everything a worker needs to run one attempt.
#[derive(Debug, Clone)]
pub struct Attempt {
    pub job: WorkerJob,
    /// Where the worker must write its report.
    pub report: PathBuf,
    /// Diagnostics of the worker end up here.
    pub log: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Exit {
    /// The worker claims to have written its report.
    Reported,
    Crashed(String),
}

pub trait RunningWorker: Send {
    /// Non-blocking; `Some` once the worker has stopped.
    fn poll(&mut self) -> Option<Exit>;
    /// Stops the worker without letting it report.
    fn kill(&mut self);
}

pub trait Launcher {
    fn launch(&self, work: &Attempt) -> io::Result<Box<dyn RunningWorker>>;
}

/// Runs each attempt as `<exe> solve ...` in a separate process.
#[derive(Debug, Clone)]
pub struct ProcessLauncher {
    pub exe: PathBuf,
}

impl ProcessLauncher {
    pub fn new(exe: impl Into<PathBuf>) -> Self {
        Self { exe: exe.into() }
    }

    /// Command-line arguments of the worker for `work`.
    pub fn args(work: &Attempt) -> Vec<String> {
        let job = &work.job;
        let mut args = vec!["solve".to_owned(), job.model_path.display().to_string()];
        if let Some(n) = job.budget.max_nodes {
            args.extend(["--budget-nodes".to_owned(), n.to_string()]);
        }
        if let Some(t) = job.budget.max_millis {
            args.extend(["--budget-millis".to_owned(), t.to_string()]);
        }
        let mode = match job.mode {
            SearchMode::First => "first",
            SearchMode::All => "all",
        };
        let branching = match job.branching {
            Branching::TwoWay => "2way",
            Branching::NWay => "nway",
        };
        args.extend([
            "--mode".to_owned(),
            mode.to_owned(),
            "--branching".to_owned(),
            branching.to_owned(),
        ]);
        if let Some(dir) = &job.split_dir {
            args.extend([
                "--emit-splits".to_owned(),
                dir.display().to_string(),
                "--split-factor".to_owned(),
                job.split_factor.to_string(),
                "--split-prefix".to_owned(),
                job.split_prefix.clone(),
            ]);
        }
        args.extend([
            "--report".to_owned(),
            work.report.display().to_string(),
            "--quiet".to_owned(),
        ]);
        args
    }
}

struct ProcessWorker {
    child: Child,
}

impl RunningWorker for ProcessWorker {
    fn poll(&mut self) -> Option<Exit> {
        match self.child.try_wait() {
            Ok(None) => None,
            Ok(Some(status)) if status.success() => Some(Exit::Reported),
            Ok(Some(status)) => Some(Exit::Crashed(format!("worker exited with {status}"))),
            Err(e) => Some(Exit::Crashed(format!("cannot wait for worker: {e}"))),
        }
    }

    fn kill(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Launcher for ProcessLauncher {
    fn launch(&self, work: &Attempt) -> io::Result<Box<dyn RunningWorker>> {
        if let Some(dir) = work.log.parent() {
            fs::create_dir_all(dir)?;
        }
        let log = File::create(&work.log)?;
        let child = Command::new(&self.exe)
            .args(Self::args(work))
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(log)
            .env("NO_COLOR", "1")
            .spawn()?;
        Ok(Box::new(ProcessWorker { child }))
    }
}

/// Runs each attempt on a thread of the current process. Useful for tests
/// and embedding; a panicking worker counts as a crash.
#[derive(Debug, Clone, Default)]
pub struct ThreadLauncher;

struct ThreadWorker {
    cancel: Arc<AtomicBool>,
    handle: Option<JoinHandle<Result<(), String>>>,
}

impl RunningWorker for ThreadWorker {
    fn poll(&mut self) -> Option<Exit> {
        if !self.handle.as_ref()?.is_finished() {
            return None;
        }
        let handle = self.handle.take()?;
        Some(match handle.join() {
            Ok(Ok(())) => Exit::Reported,
            Ok(Err(e)) => Exit::Crashed(e),
            Err(_) => Exit::Crashed("worker thread panicked".into()),
        })
    }

    fn kill(&mut self) {
        self.cancel.store(true, Ordering::Relaxed);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

impl Launcher for ThreadLauncher {
    fn launch(&self, work: &Attempt) -> io::Result<Box<dyn RunningWorker>> {
        let cancel = Arc::new(AtomicBool::new(false));
        let flag = cancel.clone();
        let work = work.clone();
        let handle = std::thread::Builder::new()
            .name(format!("worker-{}", work.job.split_prefix))
            .spawn(move || {
                let report = run_worker(&work.job, Some(flag), |_| {}).map_err(|e| e.to_string())?;
                write_report(&work.report, &report).map_err(|e| e.to_string())
            })?;
        Ok(Box::new(ThreadWorker {
            cancel,
            handle: Some(handle),
        }))
    }
}
