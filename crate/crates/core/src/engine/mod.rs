//! Budgeted depth-first search with propagation.
//!
//! Variables are branched on in declaration order (every variable gets a
//! decision, even when propagation already fixed it) and values ascend.
//! The search can stop at any Assign decision point; it then reports the
//! exact [`SearchPath`] so the explored region can be described by restart
//! nogoods.

mod props;
mod search;
mod store;

use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::model::{Assignment, Model, VarRef};

pub use search::Solver;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branching {
    /// Left `x = v`, right `x != v`.
    #[serde(rename = "2way")]
    TwoWay,
    /// One child per value.
    #[default]
    #[serde(rename = "nway")]
    NWay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    #[default]
    First,
    All,
}

/// Search limits. Node budgets are deterministic; wall-clock budgets are
/// for production use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Budget {
    pub max_nodes: Option<u64>,
    pub max_millis: Option<u64>,
}

impl Budget {
    pub fn unbounded() -> Self {
        Self::default()
    }

    pub fn nodes(n: u64) -> Self {
        Self {
            max_nodes: Some(n),
            max_millis: None,
        }
    }

    pub fn millis(t: u64) -> Self {
        Self {
            max_nodes: None,
            max_millis: Some(t),
        }
    }

    pub fn is_unbounded(&self) -> bool {
        self.max_nodes.is_none() && self.max_millis.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecisionKind {
    Assign,
    Exclude,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub var: VarRef,
    pub value: i64,
    pub kind: DecisionKind,
    pub level: usize,
}

/// One level of the current search path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathLevel {
    pub var: VarRef,
    /// The value currently assigned at this level, if any.
    pub current: Option<i64>,
    /// Values whose subtrees under the positive prefix above are fully
    /// explored, in exploration order.
    pub closed: Vec<i64>,
}

/// The path from the root to the stop point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchPath {
    pub branching: Branching,
    pub levels: Vec<PathLevel>,
}

impl SearchPath {
    pub fn empty(branching: Branching) -> Self {
        Self {
            branching,
            levels: Vec::new(),
        }
    }

    /// Decisions from the root in the order they were taken. Under 2-way
    /// branching a level contributes its `Exclude`s before its `Assign`.
    pub fn decisions(&self) -> Vec<Decision> {
        let mut out = Vec::new();
        for (level, l) in self.levels.iter().enumerate() {
            if self.branching == Branching::TwoWay {
                for &c in &l.closed {
                    out.push(Decision {
                        var: l.var.clone(),
                        value: c,
                        kind: DecisionKind::Exclude,
                        level,
                    });
                }
            }
            if let Some(v) = l.current {
                out.push(Decision {
                    var: l.var.clone(),
                    value: v,
                    kind: DecisionKind::Assign,
                    level,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Stats {
    /// Branching decisions taken (Assign and Exclude).
    pub nodes: u64,
    /// Propagator executions.
    pub propagations: u64,
    pub wall_millis: u64,
    pub solutions_emitted: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    SolutionFound {
        solution: Assignment,
        stats: Stats,
    },
    Exhausted {
        solutions: Vec<Assignment>,
        stats: Stats,
    },
    BudgetExhausted {
        path: SearchPath,
        frontier: VarRef,
        /// Declared domain of the frontier variable.
        frontier_root_domain: Domain,
        /// Solutions emitted before the stop (All mode).
        solutions: Vec<Assignment>,
        stats: Stats,
    },
}

impl Outcome {
    pub fn stats(&self) -> &Stats {
        match self {
            Outcome::SolutionFound { stats, .. }
            | Outcome::Exhausted { stats, .. }
            | Outcome::BudgetExhausted { stats, .. } => stats,
        }
    }

    /// Every solution reported by this run.
    pub fn solutions(&self) -> &[Assignment] {
        match self {
            Outcome::SolutionFound { solution, .. } => std::slice::from_ref(solution),
            Outcome::Exhausted { solutions, .. } | Outcome::BudgetExhausted { solutions, .. } => solutions,
        }
    }
}

/// A streaming search stopped because the solution callback failed.
#[derive(Debug)]
pub struct Aborted<E> {
    pub error: E,
    pub stats: Stats,
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    pub mode: SearchMode,
    pub branching: Branching,
    /// Disables propagation: constraints are only checked once every
    /// variable is assigned.
    pub check_only: bool,
    /// External stop request, honoured at decision points like a budget.
    pub cancel: Option<Arc<AtomicBool>>,
}

impl SolveOptions {
    pub fn new(mode: SearchMode, branching: Branching) -> Self {
        Self {
            mode,
            branching,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Propagation {
    Consistent(Vec<Domain>),
    Wipeout(VarRef),
}

/// Propagates `domains` (one per variable, static order) to fixpoint under
/// the constraints of `m`.
pub fn propagate(m: &Model, domains: &[Domain]) -> Propagation {
    Solver::new(m).propagate_domains(domains)
}

/// Runs a search without observing solutions as they are found.
pub fn solve(m: &Model, budget: Budget, options: &SolveOptions) -> Outcome {
    Solver::new(m).solve(budget, options)
}

/// Runs a search, calling `on_solution` once per solution in discovery
/// order. An `Err` from the callback aborts the search.
pub fn solve_streaming<E, F>(
    m: &Model,
    budget: Budget,
    options: &SolveOptions,
    on_solution: F,
) -> Result<Outcome, Aborted<E>>
where
    F: FnMut(&Assignment) -> Result<(), E>,
{
    Solver::new(m).solve_streaming(budget, options, on_solution)
}
