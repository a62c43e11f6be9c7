//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Run with `cargo test -p modelsplit-cli --test acceptance`.

use std::fmt::Write as _;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode, Stdio};
use std::thread::sleep;
use std::time::{Duration, Instant};

use modelsplit_coordinator::journal::{read_events, EventKind};
use modelsplit_coordinator::{
    dist_solve, read_result, resume, CoordError, CoordinatorConfig, DistOutcome, Launcher, ProcessLauncher, RunOptions,
    ThreadLauncher, Verdict,
};
use modelsplit_core::dominion::{parse_model, serialize_model};
use modelsplit_core::engine::{solve, Branching, Budget, Outcome, SearchMode, SolveOptions};
use modelsplit_core::eval::satisfies_all;
use modelsplit_core::model::{ConstraintBody, Expr};
use modelsplit_core::nogood::{split_model, SplitError, SplitSet};
use modelsplit_core::oracle::enumerate_all;
use modelsplit_core::samples::{queens_source, random_csp, CspShape};
use modelsplit_core::{Assignment, Constraint, Model, VarRef};

const QUEENS_SIZES: [usize; 3] = [4, 5, 6];
const QUEENS_COUNTS: [usize; 3] = [2, 10, 4];
const RANDOM_MODELS: u64 = 60;
const RANDOM_SPACE_CAP: u64 = 10_000;
const STOP_BUDGETS: [u64; 5] = [0, 1, 3, 7, 15];
const SPLIT_FACTORS: [usize; 3] = [2, 3, 4];
const BRANCHINGS: [Branching; 2] = [Branching::NWay, Branching::TwoWay];
const ALLOWED_VIOLATIONS: usize = 0;

const GOLDEN_STOP_NODES: u64 = 4;
const GOLDEN_NOGOOD: &str = "not(eq(queens[0], 1))";
const GOLDEN_PARTS: [&str; 2] = ["leq(queens[1], 2)", "leq(3, queens[1])"];

const NO_DUP_MODELS: u64 = 12;
const NO_DUP_BUDGET: u64 = 2;
const NO_DUP_HALT_EVERY: u64 = 3;

const CRASH_TRIALS: usize = 10;
const CRASH_PASSES_REQUIRED: usize = 10;
const CRASH_KILL_ATTEMPTS: usize = 5;

const ROOMY_BUDGET: u64 = 1_000_000;

const OVERHEAD_BUDGET: u64 = 4;
const OVERHEAD_MIN_SPLITS: u64 = 3;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 golden split of the 4-queens model", golden),
        ("2 parts cover the solutions disjointly", cover),
        ("3 nested splits cover disjointly", nested),
        ("4 engine agrees with the oracle", engine_vs_oracle),
        ("5 no duplicate solutions across resumes", no_duplicates),
        ("6 crash recovery on 6-queens", crash_recovery),
        ("7 no split when the root budget suffices", fast_path),
        ("8 split models round-trip", round_trip),
        ("9 node overhead of distribution", overhead),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {name}: {detail} ({secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail} ({secs:.1}s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn queens(n: usize) -> Model {
    parse_model(&queens_source(n)).expect("queens model parses")
}

fn corpus() -> Vec<(String, Model)> {
    let shape = CspShape {
        max_space: RANDOM_SPACE_CAP,
        ..CspShape::default()
    };
    QUEENS_SIZES
        .iter()
        .map(|&n| (format!("queens{n}"), queens(n)))
        .chain((1..=RANDOM_MODELS).map(|s| (format!("csp{s}"), random_csp(s, shape))))
        .collect()
}

fn sorted(sols: &[Assignment]) -> Vec<Vec<i64>> {
    let mut v: Vec<Vec<i64>> = sols.iter().map(Assignment::flat).collect();
    v.sort();
    v
}

fn oracle(m: &Model) -> Vec<Vec<i64>> {
    sorted(&enumerate_all(m).expect("oracle within cap"))
}

fn all_options(branching: Branching) -> SolveOptions {
    SolveOptions::new(SearchMode::All, branching)
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_modelsplit"));
    c.env("NO_COLOR", "1").env_remove("RUST_LOG");
    c
}

/// The constraint with every label blanked.
fn unlabeled(c: &Constraint) -> Constraint {
    let body = match &c.body {
        ConstraintBody::Not(inner) => ConstraintBody::Not(Box::new(unlabeled(inner))),
        ConstraintBody::And(parts) => ConstraintBody::And(parts.iter().map(unlabeled).collect()),
        other => other.clone(),
    };
    Constraint::new("", body)
}

fn golden() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let src = dir.path().join("queens4.dominion");
    fs::write(&src, queens_source(4)).map_err(|e| e.to_string())?;
    let out_dir = dir.path().join("out");
    let out = bin()
        .args([
            "split",
            src.to_str().unwrap(),
            "--at-nodes",
            &GOLDEN_STOP_NODES.to_string(),
        ])
        .args(["--split-factor", "2", "--out", out_dir.to_str().unwrap()])
        .output()
        .map_err(|e| e.to_string())?;
    let text = String::from_utf8_lossy(&out.stdout);

    // The stop must fall right after the queens[0]=1 subtree closed.
    let m = queens(4);
    let stop = solve(&m, Budget::nodes(GOLDEN_STOP_NODES), &all_options(Branching::NWay));
    let Outcome::BudgetExhausted { path, frontier, .. } = &stop else {
        return Err("search did not stop".into());
    };
    let first = &path.levels[0];
    if first.closed != [1] || frontier != &VarRef::new("queens", 1) {
        return Err(format!("stopped at {path:?}, frontier {frontier}"));
    }

    let strip = |line: &str, prefix: &str| -> Option<String> {
        let rest = line.strip_prefix(prefix)?;
        let (_, body) = rest.split_once(' ')?;
        let mut s = body.to_owned();
        for stem in [
            "resume_0_i ",
            "split_lo_lo ",
            "split_lo_hi ",
            "split_hi_lo ",
            "split_hi_hi ",
        ] {
            s = s.replace(stem, "");
        }
        Some(s)
    };
    let nogoods: Vec<String> = text.lines().filter_map(|l| strip(l, "nogood: ")).collect();
    let parts: Vec<String> = text.lines().filter_map(|l| strip(l, "partition: ")).collect();
    if nogoods != [GOLDEN_NOGOOD] {
        return Err(format!("nogoods {nogoods:?}"));
    }
    if parts != GOLDEN_PARTS {
        return Err(format!("partition {parts:?}"));
    }

    let q1 = || Expr::Var(VarRef::new("queens", 1));
    let expected_nogood = unlabeled(&Constraint::not(
        "",
        Constraint::eq("", Expr::Var(VarRef::new("queens", 0)), Expr::IntLit(1)),
    ));
    let expected_parts = [
        unlabeled(&Constraint::leq("", q1(), Expr::IntLit(2))),
        unlabeled(&Constraint::leq("", Expr::IntLit(3), q1())),
    ];
    let original = m.constraints().len();
    let base = parse_model(&fs::read_to_string(out_dir.join("queens4-base.dominion")).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let added: Vec<Constraint> = base.constraints()[original..].iter().map(unlabeled).collect();
    if added != [expected_nogood] {
        return Err(format!("base file adds {added:?}"));
    }
    for (k, expected) in expected_parts.iter().enumerate() {
        let file = out_dir.join(format!("queens4-{}.dominion", k + 1));
        let part = parse_model(&fs::read_to_string(&file).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let tail: Vec<Constraint> = part.constraints()[original..].iter().map(unlabeled).collect();
        if tail.len() != 2 || &tail[1] != expected {
            return Err(format!("{} adds {tail:?}", file.display()));
        }
    }
    Ok(format!(
        "nogood {GOLDEN_NOGOOD}; parts {} | {}",
        GOLDEN_PARTS[0], GOLDEN_PARTS[1]
    ))
}

/// Splits a stopped run, falling back to the single base model when no
/// variable has two values left.
fn split_or_base(m: &Model, stop: &Outcome, n: usize) -> Result<SplitSet, SplitError> {
    match split_model(m, stop, n) {
        Err(SplitError::Unavailable) => split_model(m, stop, 1),
        other => other,
    }
}

#[derive(Default)]
struct Sweep {
    cases: usize,
    split_cases: usize,
    violations: Vec<String>,
    nested_cases: usize,
    nested_violations: Vec<String>,
    models_checked: usize,
    round_trip_failures: Vec<String>,
}

impl Sweep {
    fn round_trip(&mut self, tag: &str, m: &Model) {
        self.models_checked += 1;
        match parse_model(&serialize_model(m)) {
            Ok(back) if &back == m => {}
            Ok(_) => self.round_trip_failures.push(format!("{tag}: differs")),
            Err(e) => self.round_trip_failures.push(format!("{tag}: {e}")),
        }
    }
}

/// Checks oracle(m) = pre-stop solutions + the oracle of every part, as
/// multisets. Returns the split for further nesting.
fn check_cover(m: &Model, budget: u64, n: usize, branching: Branching) -> Result<Option<SplitSet>, String> {
    let expected = oracle(m);
    let stop = solve(m, Budget::nodes(budget), &all_options(branching));
    if !matches!(stop, Outcome::BudgetExhausted { .. }) {
        let got = sorted(stop.solutions());
        return if got == expected {
            Ok(None)
        } else {
            Err(format!("unsplit run found {} of {}", got.len(), expected.len()))
        };
    }
    let split = split_or_base(m, &stop, n).map_err(|e| e.to_string())?;
    let mut got: Vec<Vec<i64>> = stop.solutions().iter().map(Assignment::flat).collect();
    for part in &split.parts {
        if part.constraints()[..m.constraints().len()] != *m.constraints() {
            return Err("part drops an original constraint".into());
        }
        got.extend(oracle(part));
    }
    got.sort();
    if got != expected {
        return Err(format!("union has {} solutions, oracle {}", got.len(), expected.len()));
    }
    Ok(Some(split))
}

fn sweep() -> &'static Sweep {
    use std::sync::OnceLock;
    static SWEEP: OnceLock<Sweep> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let mut s = Sweep::default();
        for (name, m) in corpus() {
            for &branching in &BRANCHINGS {
                for &budget in &STOP_BUDGETS {
                    for &n in &SPLIT_FACTORS {
                        let tag = format!("{name} {branching:?} budget={budget} n={n}");
                        s.cases += 1;
                        let split = match check_cover(&m, budget, n, branching) {
                            Ok(Some(split)) => split,
                            Ok(None) => continue,
                            Err(e) => {
                                s.violations.push(format!("{tag}: {e}"));
                                continue;
                            }
                        };
                        s.split_cases += 1;
                        s.round_trip(&format!("{tag} base"), &split.base);
                        for (k, part) in split.parts.iter().enumerate() {
                            s.round_trip(&format!("{tag} part {k}"), part);
                            s.nested_cases += 1;
                            match check_cover(part, budget, n, branching) {
                                Ok(Some(inner)) => {
                                    for (j, sub) in inner.parts.iter().enumerate() {
                                        s.round_trip(&format!("{tag} part {k}.{j}"), sub);
                                    }
                                }
                                Ok(None) => {}
                                Err(e) => s.nested_violations.push(format!("{tag} part {k}: {e}")),
                            }
                        }
                    }
                }
            }
        }
        s
    })
}

fn verdict(violations: &[String], detail: String) -> Check {
    match violations.get(ALLOWED_VIOLATIONS) {
        None => Ok(detail),
        Some(_) => Err(format!("{} violations, first: {}", violations.len(), violations[0])),
    }
}

fn cover() -> Check {
    let s = sweep();
    verdict(
        &s.violations,
        format!(
            "{} cases ({} split), {} violations",
            s.cases,
            s.split_cases,
            s.violations.len()
        ),
    )
}

fn nested() -> Check {
    let s = sweep();
    verdict(
        &s.nested_violations,
        format!(
            "{} parts re-split, {} violations",
            s.nested_cases,
            s.nested_violations.len()
        ),
    )
}

fn round_trip() -> Check {
    let s = sweep();
    // The golden split files are checked here too.
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let src = dir.path().join("queens4.dominion");
    fs::write(&src, queens_source(4)).map_err(|e| e.to_string())?;
    let out_dir = dir.path().join("out");
    bin()
        .args([
            "split",
            src.to_str().unwrap(),
            "--at-nodes",
            &GOLDEN_STOP_NODES.to_string(),
        ])
        .args(["--out", out_dir.to_str().unwrap()])
        .output()
        .map_err(|e| e.to_string())?;
    let mut failures = s.round_trip_failures.clone();
    let mut files = 0;
    for entry in fs::read_dir(&out_dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let text = fs::read_to_string(&path).map_err(|e| e.to_string())?;
        files += 1;
        match parse_model(&text) {
            Ok(m) if serialize_model(&m) == text && parse_model(&serialize_model(&m)).as_ref() == Ok(&m) => {}
            _ => failures.push(path.display().to_string()),
        }
    }
    verdict(
        &failures,
        format!(
            "{} generated models and {files} emitted files, {} failures",
            s.models_checked,
            failures.len()
        ),
    )
}

fn engine_vs_oracle() -> Check {
    let mut mismatches = Vec::new();
    let mut runs = 0;
    for (name, m) in corpus() {
        let expected = oracle(&m);
        for &branching in &BRANCHINGS {
            runs += 1;
            let out = solve(&m, Budget::unbounded(), &all_options(branching));
            if !matches!(out, Outcome::Exhausted { .. }) || sorted(out.solutions()) != expected {
                mismatches.push(format!("{name} {branching:?}"));
            }
        }
    }
    let mut counts = Vec::new();
    for (&n, &want) in QUEENS_SIZES.iter().zip(&QUEENS_COUNTS) {
        let got = oracle(&queens(n)).len();
        counts.push(format!("n={n}:{got}"));
        if got != want {
            mismatches.push(format!("queens{n} has {got} solutions, expected {want}"));
        }
    }
    verdict(
        &mismatches,
        format!("{runs} runs match; queens counts {}", counts.join(" ")),
    )
}

fn all_mode_config(spool: &Path, budget: u64) -> CoordinatorConfig {
    CoordinatorConfig {
        worker_count: 1,
        initial_budget: Budget::nodes(budget),
        mode: SearchMode::All,
        ..CoordinatorConfig::new(spool)
    }
}

/// Runs to completion, halting every few claims and resuming.
fn run_with_halts(m: &Model, cfg: &CoordinatorConfig, launcher: &dyn Launcher) -> Result<(DistOutcome, usize), String> {
    let opts = RunOptions {
        halt_after_claims: Some(NO_DUP_HALT_EVERY),
        ..RunOptions::default()
    };
    let mut cycles = 0;
    let mut result = dist_solve(m, cfg, launcher, &opts);
    loop {
        match result {
            Ok(out) => return Ok((out, cycles)),
            Err(CoordError::Halted(_)) => {
                cycles += 1;
                result = resume(&cfg.spool_dir, None, launcher, &opts);
            }
            Err(e) => return Err(e.to_string()),
        }
    }
}

fn no_duplicates() -> Check {
    let shape = CspShape {
        max_space: RANDOM_SPACE_CAP,
        ..CspShape::default()
    };
    let models: Vec<(String, Model)> = QUEENS_SIZES
        .iter()
        .map(|&n| (format!("queens{n}"), queens(n)))
        .chain((1..=NO_DUP_MODELS).map(|s| (format!("csp{s}"), random_csp(s, shape))))
        .collect();
    let process = ProcessLauncher::new(env!("CARGO_BIN_EXE_modelsplit"));
    let mut failures = Vec::new();
    let (mut runs, mut cycles, mut solutions) = (0, 0, 0);
    for (i, (name, m)) in models.iter().enumerate() {
        // Worker processes for the queens models, threads for the rest.
        let launcher: &dyn Launcher = if i < QUEENS_SIZES.len() {
            &process
        } else {
            &ThreadLauncher
        };
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let cfg = all_mode_config(dir.path(), NO_DUP_BUDGET);
        runs += 1;
        match run_with_halts(m, &cfg, launcher) {
            Ok((out, c)) => {
                cycles += c;
                let Verdict::All(sols) = out.verdict else {
                    failures.push(format!("{name}: not an all-solutions verdict"));
                    continue;
                };
                solutions += sols.len();
                if sorted(&sols) != oracle(m) {
                    failures.push(format!("{name}: {} reported, oracle {}", sols.len(), oracle(m).len()));
                }
            }
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    verdict(
        &failures,
        format!("{runs} runs, {cycles} halt/resume cycles, {solutions} solutions each reported once"),
    )
}

fn reference_verdict() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dist_solve(
        &queens(6),
        &CoordinatorConfig {
            initial_budget: Budget::nodes(ROOMY_BUDGET),
            ..CoordinatorConfig::new(dir.path())
        },
        &ThreadLauncher,
        &RunOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    Ok(if out.is_sat() { "sat" } else { "unsat" }.to_owned())
}

fn crash_args(src: &Path, spool: &Path) -> Vec<String> {
    [
        "dist-solve",
        src.to_str().unwrap(),
        "--spool",
        spool.to_str().unwrap(),
        "--workers",
        "2",
        "--initial-budget-nodes",
        "1",
        "--mode",
        "first",
    ]
    .map(str::to_owned)
    .to_vec()
}

fn claims(spool: &Path) -> usize {
    read_events(&spool.join("journal.ndjson"))
        .map(|(events, _)| events.iter().filter(|e| e.event == EventKind::Claim).count())
        .unwrap_or(0)
}

/// Starts a run in its own process group and kills the whole group once
/// the journal shows a claim. Returns false if the run finished first.
#[cfg(unix)]
fn kill_mid_run(src: &Path, spool: &Path) -> Result<bool, String> {
    use std::os::unix::process::CommandExt;
    let mut child = bin()
        .args(crash_args(src, spool))
        .process_group(0)
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| e.to_string())?;
    let deadline = Instant::now() + Duration::from_secs(30);
    while claims(spool) == 0 && Instant::now() < deadline {
        if child.try_wait().map_err(|e| e.to_string())?.is_some() {
            break;
        }
        sleep(Duration::from_micros(200));
    }
    Command::new("kill")
        .args(["-s", "KILL", "--", &format!("-{}", child.id())])
        .status()
        .map_err(|e| e.to_string())?;
    let _ = child.wait();
    Ok(!spool.join("result.json").exists())
}

#[cfg(not(unix))]
fn kill_mid_run(_: &Path, _: &Path) -> Result<bool, String> {
    Ok(false)
}

fn crash_trial(trial: usize, reference: &str) -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let src = dir.path().join("queens6.dominion");
    fs::write(&src, queens_source(6)).map_err(|e| e.to_string())?;
    let how;
    let spool = if trial.is_multiple_of(2) {
        // Halt from inside: the coordinator kills every worker and exits.
        let spool = dir.path().join("spool");
        let halt = (trial / 2 + 1).to_string();
        let status = bin()
            .args(crash_args(&src, &spool))
            .args(["--halt-after-claims", &halt])
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status()
            .map_err(|e| e.to_string())?;
        if status.code() != Some(4) {
            return Err(format!("halted run exited with {status}"));
        }
        how = format!("halt after {halt} claims");
        spool
    } else {
        // Kill from outside: SIGKILL to the coordinator and its workers.
        let mut interrupted = None;
        for attempt in 0..CRASH_KILL_ATTEMPTS {
            let spool = dir.path().join(format!("spool{attempt}"));
            if kill_mid_run(&src, &spool)? {
                interrupted = Some(spool);
                break;
            }
        }
        how = "SIGKILL".to_owned();
        interrupted.ok_or("run always finished before the kill")?
    };
    let out = bin()
        .args(["dist-solve", "--resume", "--spool", spool.to_str().unwrap()])
        .stderr(Stdio::null())
        .output()
        .map_err(|e| e.to_string())?;
    let (status, solution) = read_result(&spool).map_err(|e| e.to_string())?;
    if status != reference {
        return Err(format!(
            "{how}: verdict {status}, reference {reference} (exit {})",
            out.status
        ));
    }
    if let Some(s) = solution {
        if !satisfies_all(queens(6).constraints(), &s).map_err(|e| e.to_string())? {
            return Err(format!("{how}: {s:?} violates the model"));
        }
    }
    Ok(how)
}

fn crash_recovery() -> Check {
    let reference = reference_verdict()?;
    let mut passes = 0;
    let mut failures = Vec::new();
    let mut kinds = String::new();
    for trial in 0..CRASH_TRIALS {
        match crash_trial(trial, &reference) {
            Ok(how) => {
                passes += 1;
                if trial < 2 {
                    let _ = write!(kinds, "{}{how}", if kinds.is_empty() { "" } else { ", " });
                }
            }
            Err(e) => failures.push(format!("trial {trial}: {e}")),
        }
    }
    let detail = format!("{passes}/{CRASH_TRIALS} trials recover verdict {reference} ({kinds})");
    if passes >= CRASH_PASSES_REQUIRED {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", failures.join("; ")))
    }
}

fn fast_path() -> Check {
    let mut failures = Vec::new();
    let mut runs = 0;
    for (name, m) in corpus().into_iter().take(QUEENS_SIZES.len() + 5) {
        for mode in [SearchMode::First, SearchMode::All] {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let cfg = CoordinatorConfig {
                initial_budget: Budget::nodes(ROOMY_BUDGET),
                mode,
                ..CoordinatorConfig::new(dir.path())
            };
            runs += 1;
            let out = dist_solve(&m, &cfg, &ThreadLauncher, &RunOptions::default()).map_err(|e| e.to_string())?;
            let (events, _) = read_events(&dir.path().join("journal.ndjson")).map_err(|e| e.to_string())?;
            let splits = events.iter().filter(|e| e.event == EventKind::Split).count();
            if splits != 0 || out.stats.items != 1 {
                failures.push(format!("{name} {mode:?}: {splits} splits, {} items", out.stats.items));
            }
        }
    }
    verdict(&failures, format!("{runs} runs, zero split events"))
}

fn overhead() -> Check {
    let m = queens(6);
    let mut lines = Vec::new();
    for mode in [SearchMode::First, SearchMode::All] {
        let single = solve(&m, Budget::unbounded(), &SolveOptions::new(mode, Branching::NWay));
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let cfg = CoordinatorConfig {
            worker_count: 1,
            initial_budget: Budget::nodes(OVERHEAD_BUDGET),
            mode,
            ..CoordinatorConfig::new(dir.path())
        };
        let out = dist_solve(&m, &cfg, &ThreadLauncher, &RunOptions::default()).map_err(|e| e.to_string())?;
        if out.stats.splits < OVERHEAD_MIN_SPLITS {
            return Err(format!("{mode:?}: only {} splits", out.stats.splits));
        }
        let base = single.stats().nodes;
        lines.push(format!(
            "{mode:?}: single run {base} nodes, {} items over {} splits {} nodes ({:.2}x)",
            out.stats.items,
            out.stats.splits,
            out.stats.nodes,
            out.stats.nodes as f64 / base.max(1) as f64
        ));
    }
    Ok(format!("informational; {}", lines.join("; ")))
}
