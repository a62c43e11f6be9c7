use std::fmt::Write;

use crate::domain::Domain;
use crate::model::{Constraint, ConstraintBody, Expr, Model};

pub(crate) fn serialize(m: &Model) -> String {
    let mut out = String::from("language Dominion 0.1\n");
    for (name, v) in m.params() {
        let _ = writeln!(out, "letting {name} = {v}");
    }
    for a in m.arrays() {
        let _ = writeln!(out, "dim {}[{}]: int", a.name, a.len);
    }
    for a in m.arrays() {
        let _ = writeln!(out, "find {}[..]: int {}", a.name, domain_text(&a.domain));
    }
    out.push_str("such that\n");
    for c in m.constraints() {
        out.push_str(&constraint_text(m, c));
        out.push('\n');
    }
    out
}

fn domain_text(d: &Domain) -> String {
    let parts: Vec<String> = d
        .intervals()
        .iter()
        .map(|&(lo, hi)| {
            if lo == hi {
                lo.to_string()
            } else {
                format!("{lo}..{hi}")
            }
        })
        .collect();
    format!("{{{}}}", parts.join(", "))
}

/// `label atom` for one ground constraint.
pub(crate) fn constraint_text(m: &Model, c: &Constraint) -> String {
    let mut s = String::new();
    write_labeled(m, c, &mut s);
    s
}

fn write_labeled(m: &Model, c: &Constraint, out: &mut String) {
    out.push_str(&c.label);
    out.push(' ');
    write_atom(m, &c.body, out);
}

fn write_atom(m: &Model, body: &ConstraintBody, out: &mut String) {
    match body {
        ConstraintBody::AllDiff(vs) => {
            let whole = vs.first().and_then(|first| {
                let arr = m.array(&first.array)?;
                let is_whole =
                    vs.len() == arr.len && vs.iter().enumerate().all(|(i, r)| r.array == arr.name && r.index == i);
                is_whole.then_some(&arr.name)
            });
            match whole {
                Some(name) => {
                    let _ = write!(out, "alldiff({name}[..])");
                }
                None => {
                    let refs: Vec<String> = vs.iter().map(|r| r.to_string()).collect();
                    let _ = write!(out, "alldiff({})", refs.join(", "));
                }
            }
        }
        ConstraintBody::Eq(l, r) => {
            let _ = write!(out, "eq({}, {})", expr_text(l), expr_text(r));
        }
        ConstraintBody::Leq(l, r) => {
            let _ = write!(out, "leq({}, {})", expr_text(l), expr_text(r));
        }
        ConstraintBody::Not(inner) => {
            out.push_str("not(");
            write_labeled(m, inner, out);
            out.push(')');
        }
        ConstraintBody::And(parts) => {
            out.push_str("and(");
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_labeled(m, p, out);
            }
            out.push(')');
        }
    }
}

fn expr_text(e: &Expr) -> String {
    match e {
        Expr::IntLit(v) => v.to_string(),
        Expr::Var(r) => r.to_string(),
        Expr::Add(base, k) => format!("add({}, {k})", expr_text(base)),
    }
}
