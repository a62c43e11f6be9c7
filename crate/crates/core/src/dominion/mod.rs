//! Reader and writer for the Dominion 0.1 model subset.
//!
//! ```text
//! language Dominion 0.1
//! letting n = 4
//! dim queens[n]: int
//! find queens[..]: int {1..n}
//! such that
//! alldifferent alldiff(queens[..])
//! diagonals1 [ not(eq1 eq(queens[i], add(queens[j], j-i))) |
//!     i in {0..n-2}, j in {i+1..n-1} ]
//! ```
//!
//! Parsing substitutes lettings and expands comprehensions, so a parsed
//! [`Model`] only holds ground constraints. Expanded instances get their
//! generator values appended to every label they contain
//! (`diagonals1_0_1`, `eq1_0_1`; negative values are written `m3`).
//! The writer emits ground models only and `parse_model(serialize_model(m))`
//! reproduces `m` exactly.
//!
//! Beyond the figure above the reader accepts `#` comments, `and(...)`,
//! explicit `alldiff(x[0], y[2])` lists and gapped domains
//! `{1..3, 7, 9..10}`.

mod lexer;
mod parser;
mod serialize;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::{Constraint, Model, ModelError};

pub use parser::{AtomTemplate, Comprehension, ExprTemplate, Generator, IntExpr, LabeledTemplate};

/// 1-based line and column.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DominionError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: unbound identifier `{name}`")]
    Unbound { name: String, pos: Pos },
    #[error("{pos}: empty domain for `{array}`")]
    EmptyDomain { array: String, pos: Pos },
    #[error("{pos}: duplicate {what}")]
    Duplicate { what: String, pos: Pos },
    #[error("{pos}: reference `{reference}` is out of range")]
    BadReference { reference: String, pos: Pos },
    #[error("invalid model: {0}")]
    Model(#[from] ModelError),
}

impl DominionError {
    pub fn pos(&self) -> Option<Pos> {
        match self {
            DominionError::Syntax { pos, .. }
            | DominionError::Unbound { pos, .. }
            | DominionError::EmptyDomain { pos, .. }
            | DominionError::Duplicate { pos, .. }
            | DominionError::BadReference { pos, .. } => Some(*pos),
            DominionError::Model(_) => None,
        }
    }
}

/// Parses model text into a ground [`Model`].
pub fn parse_model(text: &str) -> Result<Model, DominionError> {
    parser::parse(text)
}

/// Writes a model in the grammar accepted by [`parse_model`]. Output is a
/// pure function of the model value.
pub fn serialize_model(m: &Model) -> String {
    serialize::serialize(m)
}

/// The `label atom` text of a single constraint, as it would appear in a
/// serialized model.
pub fn constraint_text(m: &Model, c: &Constraint) -> String {
    serialize::constraint_text(m, c)
}

/// Parses a single comprehension item, e.g.
/// `d [ leq(x[i], i) | i in {0..2} ]`.
pub fn parse_comprehension(text: &str) -> Result<Comprehension, DominionError> {
    parser::parse_comprehension(text)
}

/// Expands a comprehension into ground constraints under the given lettings.
///
/// Whole-array `alldiff(x[..])` templates need array lengths and report `x`
/// as unbound here; use [`parse_model`] for those.
pub fn expand_comprehension(
    c: &Comprehension,
    params: &BTreeMap<String, i64>,
) -> Result<Vec<Constraint>, DominionError> {
    let arrays = HashMap::new();
    parser::Scope::new(params, &arrays).expand(c)
}

/// Where a model came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    File(PathBuf),
    Generated,
}

/// A parsed model together with its source text.
#[derive(Debug, Clone)]
pub struct SourceModel {
    pub text: String,
    pub model: Model,
    pub provenance: Provenance,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: DominionError,
    },
}

impl SourceModel {
    pub fn load(path: &Path) -> Result<Self, LoadError> {
        let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
            path: path.to_owned(),
            source,
        })?;
        let model = parse_model(&text).map_err(|source| LoadError::Parse {
            path: path.to_owned(),
            source,
        })?;
        Ok(Self {
            text,
            model,
            provenance: Provenance::File(path.to_owned()),
        })
    }

    pub fn generated(model: Model) -> Self {
        Self {
            text: serialize_model(&model),
            model,
            provenance: Provenance::Generated,
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::domain::Domain;
    use crate::model::{ConstraintBody, Expr, VarArray, VarRef};
    use proptest::prelude::*;

    pub(crate) const QUEENS4: &str = "language Dominion 0.1
letting n = 4
dim queens[n]: int
find queens[..]: int {1..n}
such that
alldifferent alldiff(queens[..])
diagonals1 [ not(eq1 eq(queens[i], add(queens[j], j-i))) |
    i in {0..n-2}, j in {i+1..n-1} ]
diagonals2 [ not(eq2 eq(queens[i], add(queens[j], i-j))) |
    i in {0..n-2}, j in {i+1..n-1} ]
";

    #[test]
    fn figure_model_expands_to_thirteen_constraints() {
        let m = parse_model(QUEENS4).unwrap();
        assert_eq!(m.arrays(), &[VarArray::new("queens", 4, Domain::range(1, 4))]);
        assert_eq!(m.params().get("n"), Some(&4));
        assert_eq!(m.constraints().len(), 13);
        let labels: Vec<&str> = m.constraints().iter().map(|c| c.label.as_str()).collect();
        assert_eq!(labels[0], "alldifferent");
        assert_eq!(labels[1], "diagonals1_0_1");
        assert_eq!(labels[6], "diagonals1_2_3");
        assert_eq!(labels[7], "diagonals2_0_1");
        assert_eq!(
            m.constraints()[1],
            Constraint::not(
                "diagonals1_0_1",
                Constraint::eq("eq1_0_1", Expr::var("queens", 0), Expr::plus(Expr::var("queens", 1), 1))
            )
        );
        // i - j is negative for the second family
        assert_eq!(
            constraint_text(&m, &m.constraints()[12]),
            "diagonals2_2_3 not(eq2_2_3 eq(queens[2], add(queens[3], -1)))"
        );
    }

    #[test]
    fn minimal_model() {
        let m = parse_model("language Dominion 0.1\nletting n = 1\ndim x[n]: int\nfind x[..]: int {1..1}\nsuch that\n")
            .unwrap();
        assert_eq!(m.var_count(), 1);
        assert_eq!(m.arrays()[0].domain, Domain::singleton(1));
        assert!(m.constraints().is_empty());
    }

    #[test]
    fn empty_domain_is_reported_with_position() {
        let err = parse_model("language Dominion 0.1\ndim x[1]: int\nfind x[..]: int {2..1}\nsuch that\n").unwrap_err();
        assert_eq!(
            err,
            DominionError::EmptyDomain {
                array: "x".into(),
                pos: Pos { line: 3, col: 1 }
            }
        );
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let err =
            parse_model("language Dominion 0.1\ndim x[1]: int\nfind x[..]: int {1..2}\nsuch that\nc leq(x[0] 2)\n")
                .unwrap_err();
        assert_eq!(err.pos(), Some(Pos { line: 5, col: 12 }));
        assert!(err.to_string().starts_with("5:12: syntax error"), "{err}");
    }

    #[test]
    fn unbound_identifier_and_duplicate_label() {
        let err = parse_model("language Dominion 0.1\ndim x[m]: int\nfind x[..]: int {1..2}\nsuch that\n").unwrap_err();
        assert!(matches!(err, DominionError::Unbound { ref name, .. } if name == "m"));
        let err = parse_model(
            "language Dominion 0.1\ndim x[2]: int\nfind x[..]: int {1..2}\nsuch that\nc leq(x[0], 1)\nc leq(x[1], 1)\n",
        )
        .unwrap_err();
        assert!(matches!(err, DominionError::Duplicate { .. }));
        let err =
            parse_model("language Dominion 0.1\ndim x[2]: int\nfind x[..]: int {1..2}\nsuch that\nc leq(x[2], 1)\n")
                .unwrap_err();
        assert!(matches!(err, DominionError::BadReference { .. }));
    }

    #[test]
    fn comprehension_expansion_order_and_offsets() {
        let c = parse_comprehension(
            "diagonals1 [ not(eq1 eq(queens[i], add(queens[j], j-i))) | i in {0..n-2}, j in {i+1..n-1} ]",
        )
        .unwrap();
        let params = BTreeMap::from([("n".to_owned(), 4)]);
        let out = expand_comprehension(&c, &params).unwrap();
        assert_eq!(out.len(), 6);
        assert_eq!(
            out[0].body,
            ConstraintBody::Not(Box::new(Constraint::eq(
                "eq1_0_1",
                Expr::var("queens", 0),
                Expr::plus(Expr::var("queens", 1), 1)
            )))
        );

        let nested = parse_comprehension("p [ leq(x[i], x[j]) | i in {0..1}, j in {i+1..2} ]").unwrap();
        let pairs: Vec<String> = expand_comprehension(&nested, &BTreeMap::new())
            .unwrap()
            .into_iter()
            .map(|c| c.label)
            .collect();
        assert_eq!(pairs, ["p_0_1", "p_0_2", "p_1_2"]);

        let empty = parse_comprehension("e [ leq(x[i], 1) | i in {0..-1} ]").unwrap();
        assert!(expand_comprehension(&empty, &BTreeMap::new()).unwrap().is_empty());

        let unbound = parse_comprehension("u [ leq(x[i], k) | i in {0..1} ]").unwrap();
        assert!(matches!(
            expand_comprehension(&unbound, &BTreeMap::new()),
            Err(DominionError::Unbound { .. })
        ));
    }

    #[test]
    fn figure_model_round_trips() {
        let m = parse_model(QUEENS4).unwrap();
        let text = serialize_model(&m);
        assert_eq!(parse_model(&text).unwrap(), m);
        assert_eq!(serialize_model(&parse_model(&text).unwrap()), text);
        assert!(text.contains("alldifferent alldiff(queens[..])\n"));
    }

    #[test]
    fn extensions_parse() {
        let m = parse_model(
            "language Dominion 0.1 # header
dim x[3]: int
dim y[1]: int
find x[..]: int {1..3, 7}
find y[..]: int {-2..2}
such that
a alldiff(x[0], x[2])
b and(b1 leq(y[0], -1), b2 eq(add(2, 3), x[1]))
",
        )
        .unwrap();
        assert_eq!(m.arrays()[0].domain, Domain::from_values([1, 2, 3, 7]));
        assert_eq!(
            m.constraints()[0].body,
            ConstraintBody::AllDiff(vec![VarRef::new("x", 0), VarRef::new("x", 2)])
        );
        assert_eq!(parse_model(&serialize_model(&m)).unwrap(), m);
    }

    #[test]
    fn nested_add_is_flattened() {
        let m = parse_model(
            "language Dominion 0.1\ndim x[2]: int\nfind x[..]: int {1..4}\nsuch that\nc eq(x[0], add(add(x[1], 1), 2))\n",
        )
        .unwrap();
        assert_eq!(
            m.constraints()[0].body,
            ConstraintBody::Eq(Expr::var("x", 0), Expr::plus(Expr::var("x", 1), 3))
        );
    }

    // Random ground models for the serializer/parser fuzz.
    fn arb_expr(arrays: Vec<(String, usize)>) -> BoxedStrategy<Expr> {
        let var = (0..arrays.len()).prop_flat_map(move |a| {
            let (name, len) = arrays[a].clone();
            (0..len).prop_map(move |i| Expr::var(name.clone(), i))
        });
        let lit = (-20i64..20).prop_map(Expr::IntLit);
        let base = prop_oneof![var, lit];
        (base, proptest::option::of(-5i64..5))
            .prop_map(|(b, off)| match off {
                Some(k) => Expr::plus(b, k),
                None => b,
            })
            .boxed()
    }

    fn arb_body(arrays: Vec<(String, usize)>, depth: u32) -> BoxedStrategy<ConstraintBody> {
        let e = arb_expr(arrays.clone());
        let leaf = prop_oneof![
            (e.clone(), e.clone()).prop_map(|(l, r)| ConstraintBody::Eq(l, r)),
            (e.clone(), e).prop_map(|(l, r)| ConstraintBody::Leq(l, r)),
        ];
        if depth == 0 {
            return leaf.boxed();
        }
        let inner = arb_body(arrays, depth - 1);
        prop_oneof![
            3 => leaf,
            1 => inner.clone().prop_map(|b| ConstraintBody::Not(Box::new(Constraint::new("", b)))),
            1 => proptest::collection::vec(inner, 2..4)
                .prop_map(|bs| ConstraintBody::And(bs.into_iter().map(|b| Constraint::new("", b)).collect())),
        ]
        .boxed()
    }

    fn relabel(c: &mut Constraint, next: &mut usize) {
        c.label = format!("c{next}");
        *next += 1;
        match &mut c.body {
            ConstraintBody::Not(inner) => relabel(inner, next),
            ConstraintBody::And(parts) => parts.iter_mut().for_each(|p| relabel(p, next)),
            _ => {}
        }
    }

    fn arb_model() -> impl Strategy<Value = Model> {
        proptest::collection::vec((1usize..4, -5i64..5, 0i64..5, any::<bool>()), 1..4)
            .prop_flat_map(|specs| {
                let arrays: Vec<VarArray> = specs
                    .iter()
                    .enumerate()
                    .map(|(i, &(len, lo, w, gap))| {
                        let dom = if gap {
                            Domain::from_intervals([(lo, lo + w), (lo + w + 2, lo + w + 3)])
                        } else {
                            Domain::range(lo, lo + w)
                        };
                        VarArray::new(format!("v{i}"), len, dom)
                    })
                    .collect();
                let names: Vec<(String, usize)> = arrays.iter().map(|a| (a.name.clone(), a.len)).collect();
                let alldiff = proptest::collection::vec(
                    (0..names.len()).prop_flat_map({
                        let names = names.clone();
                        move |a| {
                            let (n, len) = names[a].clone();
                            (0..len).prop_map(move |i| VarRef::new(n.clone(), i))
                        }
                    }),
                    1..4,
                )
                .prop_map(ConstraintBody::AllDiff);
                let body = prop_oneof![4 => arb_body(names.clone(), 2), 1 => alldiff];
                let params = proptest::collection::btree_map("[a-z]{1,3}", -100i64..100, 0..3);
                (Just(arrays), params, proptest::collection::vec(body, 0..6))
            })
            .prop_map(|(arrays, params, bodies)| {
                let mut next = 0;
                let cs = bodies
                    .into_iter()
                    .map(|b| {
                        let mut c = Constraint::new("", b);
                        relabel(&mut c, &mut next);
                        c
                    })
                    .collect();
                Model::new(params, arrays, cs).unwrap()
            })
    }

    proptest! {
        #[test]
        fn serializer_output_always_reparses_identically(m in arb_model()) {
            let text = serialize_model(&m);
            let back = parse_model(&text);
            prop_assert!(back.is_ok(), "{:?}\n{}", back, text);
            prop_assert_eq!(back.unwrap(), m);
        }

        #[test]
        fn expansion_count_matches_brute_force(n in 0i64..7, a in -2i64..3, b in -2i64..3) {
            let c = parse_comprehension(
                "t [ leq(x[0], i + j) | i in {a..n}, j in {i+b..n} ]",
            ).unwrap();
            let params = BTreeMap::from([("n".to_owned(), n), ("a".to_owned(), a), ("b".to_owned(), b)]);
            let got = expand_comprehension(&c, &params).unwrap();
            let mut expected = 0;
            for i in a..=n {
                for _j in (i + b)..=n {
                    expected += 1;
                }
            }
            prop_assert_eq!(got.len(), expected);
        }
    }
}
