//! Constraint compilation and propagators.
//!
//! Every binary Eq/Leq/Neq over `x + a` / constant terms is filtered to arc
//! consistency. AllDiff becomes its pairwise disequalities. Negated
//! conjunctions of such relations (restart nogoods) become clauses. Anything
//! else falls back to a checker that fires once all its variables are fixed.

use std::collections::VecDeque;

use super::store::Store;
use crate::model::{Constraint, ConstraintBody, Expr, Model};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Term {
    Const(i64),
    /// `var + offset`
    Var(usize, i64),
}

impl Term {
    fn shift(self, k: i64) -> Term {
        match self {
            Term::Const(c) => Term::Const(c + k),
            Term::Var(x, a) => Term::Var(x, a + k),
        }
    }

    fn var(self) -> Option<usize> {
        match self {
            Term::Var(x, _) => Some(x),
            Term::Const(_) => None,
        }
    }

    fn min(self, s: &Store) -> i64 {
        match self {
            Term::Const(c) => c,
            Term::Var(x, a) => s.dom(x).min().expect("non-empty domain") + a,
        }
    }

    fn max(self, s: &Store) -> i64 {
        match self {
            Term::Const(c) => c,
            Term::Var(x, a) => s.dom(x).max().expect("non-empty domain") + a,
        }
    }

    fn fixed(self, s: &Store) -> Option<i64> {
        match self {
            Term::Const(c) => Some(c),
            Term::Var(x, a) => s.value(x).map(|v| v + a),
        }
    }

    fn can_be(self, s: &Store, v: i64) -> bool {
        match self {
            Term::Const(c) => c == v,
            Term::Var(x, a) => s.dom(x).contains(v - a),
        }
    }

    fn values(self, s: &Store) -> Vec<i64> {
        match self {
            Term::Const(c) => vec![c],
            Term::Var(x, a) => s.dom(x).iter().map(|v| v + a).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RelOp {
    Eq,
    Neq,
    Leq,
}

/// `lhs op rhs`
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Rel {
    pub lhs: Term,
    pub op: RelOp,
    pub rhs: Term,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Entailed,
    Disentailed,
    Unknown,
}

impl Rel {
    fn negate(self) -> Rel {
        match self.op {
            RelOp::Eq => Rel { op: RelOp::Neq, ..self },
            RelOp::Neq => Rel { op: RelOp::Eq, ..self },
            // not(l <= r)  <=>  r + 1 <= l
            RelOp::Leq => Rel {
                lhs: self.rhs.shift(1),
                op: RelOp::Leq,
                rhs: self.lhs,
            },
        }
    }

    fn holds(self, l: i64, r: i64) -> bool {
        match self.op {
            RelOp::Eq => l == r,
            RelOp::Neq => l != r,
            RelOp::Leq => l <= r,
        }
    }

    fn vars(self) -> impl Iterator<Item = usize> {
        self.lhs.var().into_iter().chain(self.rhs.var())
    }

    fn status(self, s: &Store) -> Status {
        if let (Term::Var(x, a), Term::Var(y, b)) = (self.lhs, self.rhs) {
            if x == y {
                return if self.holds(a, b) {
                    Status::Entailed
                } else {
                    Status::Disentailed
                };
            }
        }
        if let (Some(l), Some(r)) = (self.lhs.fixed(s), self.rhs.fixed(s)) {
            return if self.holds(l, r) {
                Status::Entailed
            } else {
                Status::Disentailed
            };
        }
        match self.op {
            RelOp::Leq => {
                if self.lhs.max(s) <= self.rhs.min(s) {
                    Status::Entailed
                } else if self.lhs.min(s) > self.rhs.max(s) {
                    Status::Disentailed
                } else {
                    Status::Unknown
                }
            }
            RelOp::Eq | RelOp::Neq => {
                let overlap = self.lhs.values(s).into_iter().any(|v| self.rhs.can_be(s, v));
                match (self.op, overlap) {
                    (RelOp::Eq, false) => Status::Disentailed,
                    (RelOp::Neq, false) => Status::Entailed,
                    _ => Status::Unknown,
                }
            }
        }
    }

    /// Arc-consistency filtering. Returns the first wiped-out variable.
    fn filter(self, s: &mut Store) -> Result<(), usize> {
        match (self.lhs, self.rhs) {
            (Term::Const(l), Term::Const(r)) => {
                if self.holds(l, r) {
                    Ok(())
                } else {
                    Err(0)
                }
            }
            (Term::Var(x, a), Term::Var(y, b)) if x == y => {
                if !self.holds(a, b) {
                    s.retain(x, |_| false);
                }
                nonempty(s, x)
            }
            (Term::Var(x, a), Term::Const(c)) => {
                s.retain(x, |v| self.holds(v + a, c));
                nonempty(s, x)
            }
            (Term::Const(c), Term::Var(y, b)) => {
                s.retain(y, |w| self.holds(c, w + b));
                nonempty(s, y)
            }
            (Term::Var(x, a), Term::Var(y, b)) => {
                match self.op {
                    RelOp::Eq => {
                        let ys = s.dom(y).clone();
                        s.retain(x, |v| ys.contains(v + a - b));
                        nonempty(s, x)?;
                        let xs = s.dom(x).clone();
                        s.retain(y, |w| xs.contains(w + b - a));
                        nonempty(s, y)?;
                    }
                    RelOp::Neq => {
                        if let Some(u) = s.value(x) {
                            s.remove(y, u + a - b);
                            nonempty(s, y)?;
                        }
                        if let Some(w) = s.value(y) {
                            s.remove(x, w + b - a);
                            nonempty(s, x)?;
                        }
                    }
                    RelOp::Leq => {
                        let ymax = s.dom(y).max().expect("non-empty") + b;
                        s.retain(x, |v| v + a <= ymax);
                        nonempty(s, x)?;
                        let xmin = s.dom(x).min().expect("non-empty") + a;
                        s.retain(y, |w| xmin <= w + b);
                        nonempty(s, y)?;
                    }
                }
                Ok(())
            }
        }
    }
}

fn nonempty(s: &Store, var: usize) -> Result<(), usize> {
    if s.dom(var).is_empty() {
        Err(var)
    } else {
        Ok(())
    }
}

/// Tree form used by the fallback checker and by check-only search.
#[derive(Debug, Clone)]
pub(crate) enum Cond {
    Rel(Rel),
    AllDiff(Vec<usize>),
    Not(Box<Cond>),
    And(Vec<Cond>),
}

impl Cond {
    fn eval(&self, value: &dyn Fn(usize) -> i64) -> bool {
        let term = |t: Term| match t {
            Term::Const(c) => c,
            Term::Var(x, a) => value(x) + a,
        };
        match self {
            Cond::Rel(r) => r.holds(term(r.lhs), term(r.rhs)),
            Cond::AllDiff(vs) => {
                let vals: Vec<i64> = vs.iter().map(|&v| value(v)).collect();
                vals.iter()
                    .enumerate()
                    .all(|(i, a)| vals[i + 1..].iter().all(|b| a != b))
            }
            Cond::Not(c) => !c.eval(value),
            Cond::And(cs) => cs.iter().all(|c| c.eval(value)),
        }
    }

    fn collect_vars(&self, out: &mut Vec<usize>) {
        match self {
            Cond::Rel(r) => out.extend(r.vars()),
            Cond::AllDiff(vs) => out.extend(vs.iter().copied()),
            Cond::Not(c) => c.collect_vars(out),
            Cond::And(cs) => cs.iter().for_each(|c| c.collect_vars(out)),
        }
    }

    fn vars(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Evaluates under a store where every involved variable is fixed.
    pub(crate) fn holds_fixed(&self, s: &Store) -> bool {
        self.eval(&|x| s.value(x).expect("variable fixed"))
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Propagator {
    Rel(Rel),
    /// At least one relation must be false.
    Clause(Vec<Rel>),
    Checker {
        cond: Cond,
        vars: Vec<usize>,
    },
}

impl Propagator {
    pub(crate) fn vars(&self) -> Vec<usize> {
        let mut out: Vec<usize> = match self {
            Propagator::Rel(r) => r.vars().collect(),
            Propagator::Clause(lits) => lits.iter().flat_map(|r| r.vars()).collect(),
            Propagator::Checker { vars, .. } => vars.clone(),
        };
        out.sort_unstable();
        out.dedup();
        out
    }

    pub(crate) fn run(&self, s: &mut Store) -> Result<(), usize> {
        match self {
            Propagator::Rel(r) => r.filter(s),
            Propagator::Clause(lits) => {
                let mut unknown = None;
                let mut n_unknown = 0;
                for lit in lits {
                    match lit.status(s) {
                        Status::Disentailed => return Ok(()),
                        Status::Unknown => {
                            n_unknown += 1;
                            unknown = Some(*lit);
                        }
                        Status::Entailed => {}
                    }
                }
                match (n_unknown, unknown) {
                    (0, _) => Err(lits.iter().flat_map(|r| r.vars()).next().unwrap_or(0)),
                    (1, Some(lit)) => lit.negate().filter(s),
                    _ => Ok(()),
                }
            }
            Propagator::Checker { cond, vars } => {
                if vars.iter().all(|&v| s.is_fixed(v)) && !cond.holds_fixed(s) {
                    Err(vars.first().copied().unwrap_or(0))
                } else {
                    Ok(())
                }
            }
        }
    }
}

fn term(m: &Model, e: &Expr) -> Term {
    match e {
        Expr::IntLit(c) => Term::Const(*c),
        Expr::Var(r) => Term::Var(m.flat_index(r).expect("validated reference"), 0),
        Expr::Add(base, k) => term(m, base).shift(*k),
    }
}

fn as_rel(m: &Model, c: &Constraint, negated: bool) -> Option<Rel> {
    let rel = match &c.body {
        ConstraintBody::Eq(l, r) => Rel {
            lhs: term(m, l),
            op: RelOp::Eq,
            rhs: term(m, r),
        },
        ConstraintBody::Leq(l, r) => Rel {
            lhs: term(m, l),
            op: RelOp::Leq,
            rhs: term(m, r),
        },
        ConstraintBody::Not(inner) => return as_rel(m, inner, !negated),
        _ => return None,
    };
    Some(if negated { rel.negate() } else { rel })
}

pub(crate) fn to_cond(m: &Model, c: &Constraint) -> Cond {
    if let Some(r) = as_rel(m, c, false) {
        return Cond::Rel(r);
    }
    match &c.body {
        ConstraintBody::AllDiff(vs) => Cond::AllDiff(
            vs.iter()
                .map(|r| m.flat_index(r).expect("validated reference"))
                .collect(),
        ),
        ConstraintBody::Not(inner) => Cond::Not(Box::new(to_cond(m, inner))),
        ConstraintBody::And(parts) => Cond::And(parts.iter().map(|p| to_cond(m, p)).collect()),
        ConstraintBody::Eq(..) | ConstraintBody::Leq(..) => unreachable!("handled by as_rel"),
    }
}

fn checker(cond: Cond) -> Propagator {
    let vars = cond.vars();
    Propagator::Checker { cond, vars }
}

fn compile_into(m: &Model, c: &Constraint, negated: bool, out: &mut Vec<Propagator>) {
    if let Some(r) = as_rel(m, c, negated) {
        out.push(Propagator::Rel(r));
        return;
    }
    match (&c.body, negated) {
        (ConstraintBody::AllDiff(vs), false) => {
            let idx: Vec<usize> = vs
                .iter()
                .map(|r| m.flat_index(r).expect("validated reference"))
                .collect();
            for i in 0..idx.len() {
                for j in i + 1..idx.len() {
                    out.push(Propagator::Rel(Rel {
                        lhs: Term::Var(idx[i], 0),
                        op: RelOp::Neq,
                        rhs: Term::Var(idx[j], 0),
                    }));
                }
            }
        }
        (ConstraintBody::Not(inner), _) => compile_into(m, inner, !negated, out),
        (ConstraintBody::And(parts), false) => {
            for p in parts {
                compile_into(m, p, false, out);
            }
        }
        (ConstraintBody::And(parts), true) => {
            let lits: Option<Vec<Rel>> = parts.iter().map(|p| as_rel(m, p, false)).collect();
            match lits {
                Some(lits) => out.push(Propagator::Clause(lits)),
                None => out.push(checker(Cond::Not(Box::new(to_cond(m, c))))),
            }
        }
        (ConstraintBody::AllDiff(_), true) => out.push(checker(Cond::Not(Box::new(to_cond(m, c))))),
        (ConstraintBody::Eq(..) | ConstraintBody::Leq(..), _) => unreachable!("handled by as_rel"),
    }
}

pub(crate) fn compile(m: &Model) -> Vec<Propagator> {
    let mut out = Vec::new();
    for c in m.constraints() {
        compile_into(m, c, false, &mut out);
    }
    out
}

/// Propagators indexed by the variables they watch.
#[derive(Debug, Clone)]
pub(crate) struct PropagatorSet {
    props: Vec<Propagator>,
    watchers: Vec<Vec<usize>>,
}

impl PropagatorSet {
    pub(crate) fn new(props: Vec<Propagator>, n_vars: usize) -> Self {
        let mut watchers = vec![Vec::new(); n_vars];
        for (i, p) in props.iter().enumerate() {
            for v in p.vars() {
                watchers[v].push(i);
            }
        }
        Self { props, watchers }
    }

    pub(crate) fn len(&self) -> usize {
        self.props.len()
    }

    /// Runs to fixpoint starting from `seed` (or every propagator when
    /// `seed` is `None`). Returns the first variable whose domain emptied.
    pub(crate) fn fixpoint(&self, s: &mut Store, seed: Option<&[usize]>, runs: &mut u64) -> Result<(), usize> {
        let mut queued = vec![false; self.props.len()];
        let mut queue = VecDeque::new();
        let push = |i: usize, queue: &mut VecDeque<usize>, queued: &mut Vec<bool>| {
            if !queued[i] {
                queued[i] = true;
                queue.push_back(i);
            }
        };
        match seed {
            None => (0..self.props.len()).for_each(|i| push(i, &mut queue, &mut queued)),
            Some(vars) => {
                for &v in vars {
                    for &i in &self.watchers[v] {
                        push(i, &mut queue, &mut queued);
                    }
                }
            }
        }
        s.take_dirty();
        while let Some(i) = queue.pop_front() {
            queued[i] = false;
            *runs += 1;
            self.props[i].run(s)?;
            for v in s.take_dirty() {
                for &j in &self.watchers[v] {
                    push(j, &mut queue, &mut queued);
                }
            }
        }
        Ok(())
    }
}
