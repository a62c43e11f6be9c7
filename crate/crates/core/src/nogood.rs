//! Restart nogoods and model splitting.
//!
//! A stopped search is turned into a resumed base model (the original model
//! plus one nogood per closed branch) and `n` parts that each add bound
//! constraints confining one variable to one slice of its values. The parts
//! are pairwise disjoint and together cover every solution the search had
//! not yet reported.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::Domain;
use crate::engine::{Branching, Outcome, SearchPath};
use crate::eval::eval_with;
use crate::model::{Constraint, Expr, Model, ModelError, VarRef};

/// "Not all of these assignments hold at once."
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Nogood {
    pub literals: Vec<(VarRef, i64)>,
}

impl Nogood {
    /// Whether the assignment given by `lookup` violates this nogood.
    pub fn violated_by<F: Fn(&VarRef) -> Option<i64>>(&self, lookup: F) -> bool {
        self.literals.iter().all(|(r, v)| lookup(r) == Some(*v))
    }

    /// Renders as a labelled constraint; `stem` names the outer `not`.
    pub fn to_constraint(&self, stem: &str) -> Constraint {
        let inner = format!("{stem}_i");
        let eq = |label: String, (r, v): &(VarRef, i64)| Constraint::eq(label, Expr::Var(r.clone()), Expr::IntLit(*v));
        let body = match self.literals.as_slice() {
            [single] => eq(inner, single),
            lits => Constraint::and(
                inner.clone(),
                lits.iter()
                    .enumerate()
                    .map(|(j, l)| eq(format!("{inner}_{j}"), l))
                    .collect(),
            ),
        };
        Constraint::not(stem, body)
    }
}

impl fmt::Display for Nogood {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("not(")?;
        for (i, (r, v)) in self.literals.iter().enumerate() {
            if i > 0 {
                f.write_str(" and ")?;
            }
            write!(f, "{r} = {v}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("level {level}: closed value {value} is also the current assignment")]
    ClosedIsCurrent { level: usize, value: i64 },
    #[error("level {level}: value {value} closed twice")]
    ClosedTwice { level: usize, value: i64 },
    #[error("level {level} has no assignment but is not the deepest level")]
    OpenInterior { level: usize },
    #[error("variable `{0}` is branched on at two levels")]
    RepeatedVariable(VarRef),
    #[error("path was recorded under {found:?} branching, expected {expected:?}")]
    BranchingMismatch { expected: Branching, found: Branching },
}

/// One nogood per closed value per level, in path order. The positive
/// prefix of a level is the chain of assignments above it.
pub fn extract_restart_nogoods(path: &SearchPath, branching: Branching) -> Result<Vec<Nogood>, PathError> {
    if path.branching != branching {
        return Err(PathError::BranchingMismatch {
            expected: branching,
            found: path.branching,
        });
    }
    let mut prefix: Vec<(VarRef, i64)> = Vec::new();
    let mut seen_vars = HashSet::new();
    let mut out = Vec::new();
    let last = path.levels.len().saturating_sub(1);
    for (level, l) in path.levels.iter().enumerate() {
        if !seen_vars.insert(&l.var) {
            return Err(PathError::RepeatedVariable(l.var.clone()));
        }
        let mut closed = HashSet::new();
        for &c in &l.closed {
            if l.current == Some(c) {
                return Err(PathError::ClosedIsCurrent { level, value: c });
            }
            if !closed.insert(c) {
                return Err(PathError::ClosedTwice { level, value: c });
            }
            let mut literals = prefix.clone();
            literals.push((l.var.clone(), c));
            out.push(Nogood { literals });
        }
        match l.current {
            Some(v) => prefix.push((l.var.clone(), v)),
            None if level != last => return Err(PathError::OpenInterior { level }),
            None => {}
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SplitError {
    #[error("the search did not stop on its budget; there is nothing to split")]
    NotStopped,
    #[error("split factor must be at least 1")]
    ZeroFactor,
    #[error("malformed search path: {0}")]
    Path(#[from] PathError),
    #[error("no variable has two or more values left to partition")]
    Unavailable,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The result of splitting a stopped search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSet {
    /// Original constraints plus the nogoods; no partition constraint.
    pub base: Model,
    /// The nogood constraints appended to `base`, in order.
    pub nogoods: Vec<Constraint>,
    /// Each part is `base` plus `part_constraints[i]`.
    pub parts: Vec<Model>,
    pub part_constraints: Vec<Vec<Constraint>>,
    /// The variable whose values were partitioned.
    pub frontier: VarRef,
    pub partition: Vec<Domain>,
}

/// Splits `m` at the stop point recorded in `stop` into `n` parts.
pub fn split_model(m: &Model, stop: &Outcome, n: usize) -> Result<SplitSet, SplitError> {
    let Outcome::BudgetExhausted { path, frontier, .. } = stop else {
        return Err(SplitError::NotStopped);
    };
    split_at(m, path, frontier, n)
}

/// As [`split_model`], from an explicit path and frontier variable.
pub fn split_at(m: &Model, path: &SearchPath, frontier: &VarRef, n: usize) -> Result<SplitSet, SplitError> {
    if n == 0 {
        return Err(SplitError::ZeroFactor);
    }
    let nogoods = extract_restart_nogoods(path, path.branching)?;
    let mut taken: BTreeSet<String> = m.labels().into_iter().map(str::to_owned).collect();
    let mut k = 0usize;
    let mut ng_constraints = Vec::with_capacity(nogoods.len());
    for ng in &nogoods {
        let c = loop {
            let c = ng.to_constraint(&format!("resume_{k}"));
            k += 1;
            if c.labels().iter().all(|l| !taken.contains(*l)) {
                break c;
            }
        };
        taken.extend(c.labels().into_iter().map(str::to_owned));
        ng_constraints.push(c);
    }
    let base = m.with_constraints(ng_constraints.clone())?;

    let start = base
        .flat_index(frontier)
        .ok_or_else(|| ModelError::UnresolvedRef(frontier.clone()))?;
    if n == 1 {
        let set = partitionable(&base, frontier);
        return Ok(SplitSet {
            parts: vec![base.clone()],
            part_constraints: vec![Vec::new()],
            base,
            nogoods: ng_constraints,
            frontier: frontier.clone(),
            partition: vec![set],
        });
    }

    let count = base.var_count();
    let (frontier, set) = (start..count)
        .chain(0..start)
        .map(|i| base.var_at(i).expect("in range"))
        .map(|r| {
            let set = partitionable(&base, &r);
            (r, set)
        })
        .find(|(_, set)| set.len() >= 2)
        .ok_or(SplitError::Unavailable)?;

    let partition = set.partition(n);
    let declared = base.declared_domain(&frontier).expect("declared");
    let stems: Vec<String> = if partition.len() == 2 {
        vec!["split_lo".into(), "split_hi".into()]
    } else {
        (1..=partition.len()).map(|i| format!("split_{i}")).collect()
    };
    let mut parts = Vec::with_capacity(partition.len());
    let mut part_constraints = Vec::with_capacity(partition.len());
    for (part, stem) in partition.iter().zip(&stems) {
        let cs = bound_constraints(part, declared, &frontier, stem, &taken);
        parts.push(base.with_constraints(cs.clone())?);
        part_constraints.push(cs);
    }
    Ok(SplitSet {
        base,
        nogoods: ng_constraints,
        parts,
        part_constraints,
        frontier,
        partition,
    })
}

/// The declared domain of `r` filtered by every constraint of `m` that
/// mentions `r` and nothing else.
pub fn partitionable(m: &Model, r: &VarRef) -> Domain {
    let declared = m.declared_domain(r).expect("declared");
    let unary: Vec<&Constraint> = m
        .constraints()
        .iter()
        .filter(|c| {
            let vars = c.vars();
            !vars.is_empty() && vars.iter().all(|v| *v == r)
        })
        .collect();
    declared.retain(|v| {
        unary
            .iter()
            .all(|c| eval_with(c, &|q: &VarRef| (q == r).then_some(v)).unwrap_or(true))
    })
}

fn bound_constraints(
    part: &Domain,
    declared: &Domain,
    x: &VarRef,
    stem: &str,
    taken: &BTreeSet<String>,
) -> Vec<Constraint> {
    let lo = part.min().expect("non-empty part");
    let hi = part.max().expect("non-empty part");
    let lower = (Some(lo) != declared.min()).then_some(lo);
    let upper = (Some(hi) != declared.max()).then_some(hi);
    let var = || Expr::Var(x.clone());
    let free = |l: &str| !taken.contains(l);
    let mut label = stem.to_owned();
    let mut suffix = 2;
    while !(free(&label) && free(&format!("{label}_lo")) && free(&format!("{label}_hi"))) {
        label = format!("{stem}{suffix}");
        suffix += 1;
    }
    let c = match (lower, upper) {
        (Some(lo), Some(hi)) => Constraint::and(
            label.clone(),
            vec![
                Constraint::leq(format!("{label}_lo"), Expr::IntLit(lo), var()),
                Constraint::leq(format!("{label}_hi"), var(), Expr::IntLit(hi)),
            ],
        ),
        (Some(lo), None) => Constraint::leq(label, Expr::IntLit(lo), var()),
        (None, Some(hi)) => Constraint::leq(label, var(), Expr::IntLit(hi)),
        (None, None) => return Vec::new(),
    };
    vec![c]
}
