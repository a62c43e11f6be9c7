use std::sync::atomic::Ordering;
use std::time::Instant;

use super::props::{compile, to_cond, Cond, PropagatorSet};
use super::store::{BitDomain, Store};
use super::{Aborted, Branching, Budget, Outcome, PathLevel, Propagation, SearchMode, SearchPath, SolveOptions, Stats};
use crate::domain::Domain;
use crate::model::{Assignment, Model};

/// A model compiled for search. Owns no per-run state, so one solver can
/// run many searches and be moved between threads between runs.
#[derive(Debug, Clone)]
pub struct Solver {
    model: Model,
    props: PropagatorSet,
    conds: Vec<Cond>,
    roots: Vec<BitDomain>,
}

struct Level {
    var: usize,
    current: Option<i64>,
    closed: Vec<i64>,
    entry_mark: usize,
    assign_mark: usize,
}

enum Step {
    Descend,
    Refute,
    Backtrack,
}

struct Run<'a> {
    solver: &'a Solver,
    options: &'a SolveOptions,
    budget: Budget,
    store: Store,
    levels: Vec<Level>,
    stats: Stats,
    solutions: Vec<Assignment>,
    started: Instant,
}

impl Solver {
    pub fn new(model: &Model) -> Self {
        let n = model.var_count();
        let props = PropagatorSet::new(compile(model), n);
        let conds = model.constraints().iter().map(|c| to_cond(model, c)).collect();
        let roots = model
            .var_refs()
            .map(|r| BitDomain::from_domain(model.declared_domain(&r).expect("declared")))
            .collect();
        Self {
            model: model.clone(),
            props,
            conds,
            roots,
        }
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn propagator_count(&self) -> usize {
        self.props.len()
    }

    pub(crate) fn propagate_domains(&self, domains: &[Domain]) -> Propagation {
        assert_eq!(domains.len(), self.model.var_count(), "one domain per variable");
        let mut store = Store::new(domains.iter().map(BitDomain::from_domain).collect());
        if let Some(v) = (0..store.len()).find(|&v| store.dom(v).is_empty()) {
            return Propagation::Wipeout(self.model.var_at(v).expect("in range"));
        }
        let mut runs = 0;
        match self.props.fixpoint(&mut store, None, &mut runs) {
            Ok(()) => Propagation::Consistent(store.domains()),
            Err(v) => Propagation::Wipeout(self.model.var_at(v).expect("in range")),
        }
    }

    pub fn solve(&self, budget: Budget, options: &SolveOptions) -> Outcome {
        match self.solve_streaming(budget, options, |_| Ok::<(), std::convert::Infallible>(())) {
            Ok(o) => o,
            Err(a) => match a.error {},
        }
    }

    pub fn solve_streaming<E, F>(
        &self,
        budget: Budget,
        options: &SolveOptions,
        on_solution: F,
    ) -> Result<Outcome, Aborted<E>>
    where
        F: FnMut(&Assignment) -> Result<(), E>,
    {
        let mut run = Run {
            solver: self,
            options,
            budget,
            store: Store::new(self.roots.clone()),
            levels: Vec::new(),
            stats: Stats::default(),
            solutions: Vec::new(),
            started: Instant::now(),
        };
        run.search(on_solution)
    }
}

impl Run<'_> {
    fn n_vars(&self) -> usize {
        self.store.len()
    }

    fn tripped(&self) -> bool {
        if self.budget.max_nodes.is_some_and(|max| self.stats.nodes >= max) {
            return true;
        }
        if self
            .budget
            .max_millis
            .is_some_and(|max| self.started.elapsed().as_millis() >= u128::from(max))
        {
            return true;
        }
        self.options.cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed))
    }

    fn finish_stats(&mut self) -> Stats {
        self.stats.wall_millis = self.started.elapsed().as_millis() as u64;
        self.stats
    }

    /// Propagates after the domain of `var` changed. In check-only mode
    /// nothing is pruned; leaves are checked in `Descend`.
    fn propagate(&mut self, seed: Option<&[usize]>) -> bool {
        if self.options.check_only {
            return true;
        }
        self.solver
            .props
            .fixpoint(&mut self.store, seed, &mut self.stats.propagations)
            .is_ok()
    }

    fn leaf_ok(&mut self) -> bool {
        if !self.options.check_only {
            return true;
        }
        self.stats.propagations += self.solver.conds.len() as u64;
        self.solver.conds.iter().all(|c| c.holds_fixed(&self.store))
    }

    fn assignment(&self) -> Assignment {
        let values: Vec<i64> = (0..self.n_vars())
            .map(|v| self.store.value(v).expect("all variables fixed at a leaf"))
            .collect();
        Assignment::from_flat(&self.solver.model, &values)
    }

    fn stop(&mut self, frontier: usize) -> Outcome {
        let m = &self.solver.model;
        let levels = self
            .levels
            .iter()
            .map(|l| PathLevel {
                var: m.var_at(l.var).expect("in range"),
                current: l.current,
                closed: l.closed.clone(),
            })
            .collect();
        let frontier = m.var_at(frontier).expect("in range");
        let frontier_root_domain = m.declared_domain(&frontier).expect("declared").clone();
        Outcome::BudgetExhausted {
            path: SearchPath {
                branching: self.options.branching,
                levels,
            },
            frontier,
            frontier_root_domain,
            solutions: std::mem::take(&mut self.solutions),
            stats: self.finish_stats(),
        }
    }

    fn exhausted(&mut self) -> Outcome {
        Outcome::Exhausted {
            solutions: std::mem::take(&mut self.solutions),
            stats: self.finish_stats(),
        }
    }

    /// A model without variables has exactly one (empty) assignment.
    fn empty_model<E, F>(&mut self, mut on_solution: F) -> Result<Outcome, Aborted<E>>
    where
        F: FnMut(&Assignment) -> Result<(), E>,
    {
        if !self.leaf_ok() {
            return Ok(self.exhausted());
        }
        let a = self.assignment();
        self.stats.solutions_emitted += 1;
        if let Err(error) = on_solution(&a) {
            return Err(Aborted {
                error,
                stats: self.finish_stats(),
            });
        }
        if self.options.mode == SearchMode::First {
            return Ok(Outcome::SolutionFound {
                solution: a,
                stats: self.finish_stats(),
            });
        }
        self.solutions.push(a);
        Ok(self.exhausted())
    }

    fn search<E, F>(&mut self, mut on_solution: F) -> Result<Outcome, Aborted<E>>
    where
        F: FnMut(&Assignment) -> Result<(), E>,
    {
        if self.tripped() && self.n_vars() > 0 {
            return Ok(self.stop(0));
        }
        if !self.propagate(None) {
            return Ok(self.exhausted());
        }
        let n = self.n_vars();
        if n == 0 {
            return self.empty_model(on_solution);
        }
        let mut step = Step::Descend;
        loop {
            step = match step {
                Step::Descend => {
                    let complete = self.levels.len() == n && self.levels.last().is_some_and(|l| l.current.is_some());
                    if complete {
                        if !self.leaf_ok() {
                            Step::Refute
                        } else {
                            let a = self.assignment();
                            self.stats.solutions_emitted += 1;
                            if let Err(error) = on_solution(&a) {
                                return Err(Aborted {
                                    error,
                                    stats: self.finish_stats(),
                                });
                            }
                            if self.options.mode == SearchMode::First {
                                return Ok(Outcome::SolutionFound {
                                    solution: a,
                                    stats: self.finish_stats(),
                                });
                            }
                            self.solutions.push(a);
                            Step::Refute
                        }
                    } else {
                        if self.levels.last().is_none_or(|l| l.current.is_some()) {
                            let var = self.levels.len();
                            self.levels.push(Level {
                                var,
                                current: None,
                                closed: Vec::new(),
                                entry_mark: self.store.mark(),
                                assign_mark: 0,
                            });
                        }
                        let top = self.levels.last().expect("level pushed above");
                        let var = top.var;
                        let dom = self.store.dom(var);
                        let value = match self.options.branching {
                            Branching::TwoWay => dom.min(),
                            Branching::NWay => match top.closed.last() {
                                Some(&last) => dom.next_above(last),
                                None => dom.min(),
                            },
                        };
                        match value {
                            None => Step::Backtrack,
                            Some(value) => {
                                if self.tripped() {
                                    return Ok(self.stop(var));
                                }
                                self.stats.nodes += 1;
                                let mark = self.store.mark();
                                let top = self.levels.last_mut().expect("level exists");
                                top.assign_mark = mark;
                                top.current = Some(value);
                                self.store.retain(var, |v| v == value);
                                if self.propagate(Some(&[var])) {
                                    Step::Descend
                                } else {
                                    Step::Refute
                                }
                            }
                        }
                    }
                }
                Step::Refute => {
                    let top = self.levels.last_mut().expect("refuting an existing level");
                    let var = top.var;
                    let value = top.current.take().expect("refuted level has an assignment");
                    let mark = top.assign_mark;
                    top.closed.push(value);
                    self.store.undo(mark);
                    match self.options.branching {
                        Branching::NWay => Step::Descend,
                        Branching::TwoWay => {
                            if self.store.dom(var).len() <= 1 {
                                Step::Backtrack
                            } else {
                                self.stats.nodes += 1;
                                self.store.remove(var, value);
                                if self.propagate(Some(&[var])) {
                                    Step::Descend
                                } else {
                                    Step::Backtrack
                                }
                            }
                        }
                    }
                }
                Step::Backtrack => {
                    let top = self.levels.pop().expect("backtracking from an existing level");
                    self.store.undo(top.entry_mark);
                    if self.levels.is_empty() {
                        return Ok(self.exhausted());
                    }
                    Step::Refute
                }
            };
        }
    }
}
