//! Reference semantics for constraints over complete assignments.
//!
//! This evaluator is what the brute-force oracle trusts. The search engine
//! compiles constraints into its own propagators and never calls in here.

use std::collections::HashSet;

use thiserror::Error;

use crate::model::{Assignment, Constraint, ConstraintBody, Expr, VarRef};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no value for `{0}`")]
    Unassigned(VarRef),
    #[error("integer overflow evaluating constraint `{0}`")]
    Overflow(String),
}

/// Evaluates `c` under a complete assignment.
pub fn eval_constraint(c: &Constraint, a: &Assignment) -> Result<bool, EvalError> {
    eval_with(c, &|r: &VarRef| a.get(r))
}

/// Evaluates `c` with an arbitrary variable lookup; used for partial
/// assignments where only the constraint's own variables are bound.
pub fn eval_with<F>(c: &Constraint, lookup: &F) -> Result<bool, EvalError>
where
    F: Fn(&VarRef) -> Option<i64>,
{
    match &c.body {
        ConstraintBody::AllDiff(vs) => {
            let mut seen = HashSet::with_capacity(vs.len());
            for r in vs {
                let v = lookup(r).ok_or_else(|| EvalError::Unassigned(r.clone()))?;
                if !seen.insert(v) {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        ConstraintBody::Eq(l, r) => Ok(eval_expr(l, lookup, &c.label)? == eval_expr(r, lookup, &c.label)?),
        ConstraintBody::Leq(l, r) => Ok(eval_expr(l, lookup, &c.label)? <= eval_expr(r, lookup, &c.label)?),
        ConstraintBody::Not(inner) => Ok(!eval_with(inner, lookup)?),
        ConstraintBody::And(parts) => {
            for p in parts {
                if !eval_with(p, lookup)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

fn eval_expr<F>(e: &Expr, lookup: &F, label: &str) -> Result<i64, EvalError>
where
    F: Fn(&VarRef) -> Option<i64>,
{
    match e {
        Expr::IntLit(v) => Ok(*v),
        Expr::Var(r) => lookup(r).ok_or_else(|| EvalError::Unassigned(r.clone())),
        Expr::Add(base, k) => eval_expr(base, lookup, label)?
            .checked_add(*k)
            .ok_or_else(|| EvalError::Overflow(label.to_owned())),
    }
}

/// True when every constraint of `constraints` holds under `a`.
pub fn satisfies_all(constraints: &[Constraint], a: &Assignment) -> Result<bool, EvalError> {
    for c in constraints {
        if !eval_constraint(c, a)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(vs: [i64; 4]) -> Assignment {
        Assignment::new(vec![("queens".into(), vs.to_vec())])
    }

    #[test]
    fn diagonal_instance_on_first_solution() {
        // 2 != 4 + 1
        let c = Constraint::not(
            "d",
            Constraint::eq("e", Expr::var("queens", 0), Expr::plus(Expr::var("queens", 1), 1)),
        );
        assert_eq!(eval_constraint(&c, &q([2, 4, 1, 3])), Ok(true));
    }

    #[test]
    fn alldiff_and_leq() {
        let all: Vec<VarRef> = (0..4).map(|i| VarRef::new("queens", i)).collect();
        let ad = Constraint::alldiff("ad", all);
        assert_eq!(eval_constraint(&ad, &q([2, 4, 1, 3])), Ok(true));
        assert_eq!(eval_constraint(&ad, &q([2, 4, 2, 3])), Ok(false));
        let left = Constraint::leq("left", Expr::var("queens", 1), Expr::IntLit(2));
        assert_eq!(eval_constraint(&left, &q([2, 4, 1, 3])), Ok(false));
    }

    #[test]
    fn conjunction_and_negation() {
        let c = Constraint::not(
            "ng",
            Constraint::and(
                "ng_i",
                vec![
                    Constraint::eq("a", Expr::var("queens", 0), Expr::IntLit(2)),
                    Constraint::eq("b", Expr::var("queens", 1), Expr::IntLit(4)),
                ],
            ),
        );
        assert_eq!(eval_constraint(&c, &q([2, 4, 1, 3])), Ok(false));
        assert_eq!(eval_constraint(&c, &q([3, 1, 4, 2])), Ok(true));
    }

    #[test]
    fn missing_variable_is_a_structural_error() {
        let c = Constraint::eq("e", Expr::var("other", 0), Expr::IntLit(1));
        assert_eq!(
            eval_constraint(&c, &q([1, 2, 3, 4])),
            Err(EvalError::Unassigned(VarRef::new("other", 0)))
        );
    }
}
