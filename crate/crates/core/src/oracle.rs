//! Brute-force enumeration over complete assignments.
//!
//! Shares nothing with the search engine: every point of the Cartesian
//! product is checked with [`eval_constraint`].

use thiserror::Error;

use crate::eval::{eval_constraint, EvalError};
use crate::model::{Assignment, Model};

pub const DEFAULT_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("search space of {size} assignments exceeds the cap of {cap}")]
    CapExceeded { size: u128, cap: u64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Every solution of `m` in lexicographic order (declaration order,
/// ascending values).
pub fn enumerate_all(m: &Model) -> Result<Vec<Assignment>, OracleError> {
    enumerate_with_cap(m, DEFAULT_CAP)
}

pub fn enumerate_with_cap(m: &Model, cap: u64) -> Result<Vec<Assignment>, OracleError> {
    let values: Vec<Vec<i64>> = m
        .var_refs()
        .map(|r| m.declared_domain(&r).expect("declared").values())
        .collect();
    let size = values.iter().map(|v| v.len() as u128).product::<u128>();
    if size > u128::from(cap) {
        return Err(OracleError::CapExceeded { size, cap });
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; values.len()];
    loop {
        let point: Vec<i64> = idx.iter().zip(&values).map(|(&i, vs)| vs[i]).collect();
        let a = Assignment::from_flat(m, &point);
        let mut ok = true;
        for c in m.constraints() {
            if !eval_constraint(c, &a)? {
                ok = false;
                break;
            }
        }
        if ok {
            out.push(a);
        }
        // Odometer step: the last variable varies fastest.
        let mut pos = idx.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < values[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Number of solutions of `m`.
pub fn count(m: &Model) -> Result<usize, OracleError> {
    enumerate_all(m).map(|s| s.len())
}
