//! Model value types: variable arrays, constraint ASTs and assignments.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::domain::Domain;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("duplicate constraint label `{0}`")]
    DuplicateLabel(String),
    #[error("duplicate variable array `{0}`")]
    DuplicateArray(String),
    #[error("variable array `{0}` has an empty domain")]
    EmptyDomain(String),
    #[error("variable array `{0}` has length zero")]
    EmptyArray(String),
    #[error("reference `{0}` does not resolve to a declared variable")]
    UnresolvedRef(VarRef),
    #[error("constraint `{0}`: and() needs at least two parts")]
    ShortConjunction(String),
    #[error("constraint `{0}`: add() may only wrap a variable or an integer literal")]
    NestedAdd(String),
    #[error("constraint `{0}`: alldiff() needs at least one variable")]
    EmptyAllDiff(String),
}

/// One element of a variable array, e.g. `queens[2]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarRef {
    pub array: String,
    pub index: usize,
}

impl VarRef {
    pub fn new(array: impl Into<String>, index: usize) -> Self {
        Self {
            array: array.into(),
            index,
        }
    }
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.array, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    IntLit(i64),
    Var(VarRef),
    /// `base + offset`; `base` is a variable or a literal.
    Add(Box<Expr>, i64),
}

impl Expr {
    pub fn var(array: impl Into<String>, index: usize) -> Self {
        Expr::Var(VarRef::new(array, index))
    }

    pub fn plus(base: Expr, offset: i64) -> Self {
        Expr::Add(Box::new(base), offset)
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a VarRef>) {
        match self {
            Expr::IntLit(_) => {}
            Expr::Var(r) => out.push(r),
            Expr::Add(base, _) => base.collect_vars(out),
        }
    }
}

/// A labeled constraint.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub label: String,
    pub body: ConstraintBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ConstraintBody {
    AllDiff(Vec<VarRef>),
    Eq(Expr, Expr),
    Leq(Expr, Expr),
    Not(Box<Constraint>),
    And(Vec<Constraint>),
}

impl Constraint {
    pub fn new(label: impl Into<String>, body: ConstraintBody) -> Self {
        Self {
            label: label.into(),
            body,
        }
    }

    pub fn eq(label: impl Into<String>, lhs: Expr, rhs: Expr) -> Self {
        Self::new(label, ConstraintBody::Eq(lhs, rhs))
    }

    pub fn leq(label: impl Into<String>, lhs: Expr, rhs: Expr) -> Self {
        Self::new(label, ConstraintBody::Leq(lhs, rhs))
    }

    pub fn not(label: impl Into<String>, inner: Constraint) -> Self {
        Self::new(label, ConstraintBody::Not(Box::new(inner)))
    }

    pub fn and(label: impl Into<String>, parts: Vec<Constraint>) -> Self {
        Self::new(label, ConstraintBody::And(parts))
    }

    pub fn alldiff(label: impl Into<String>, vars: Vec<VarRef>) -> Self {
        Self::new(label, ConstraintBody::AllDiff(vars))
    }

    /// This constraint's label followed by every nested label, depth first.
    pub fn labels(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_labels(&mut out);
        out
    }

    fn collect_labels<'a>(&'a self, out: &mut Vec<&'a str>) {
        out.push(&self.label);
        match &self.body {
            ConstraintBody::Not(inner) => inner.collect_labels(out),
            ConstraintBody::And(parts) => parts.iter().for_each(|p| p.collect_labels(out)),
            _ => {}
        }
    }

    /// Variables mentioned anywhere in the constraint, in syntactic order
    /// (duplicates kept).
    pub fn vars(&self) -> Vec<&VarRef> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a VarRef>) {
        match &self.body {
            ConstraintBody::AllDiff(vs) => out.extend(vs.iter()),
            ConstraintBody::Eq(l, r) | ConstraintBody::Leq(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            ConstraintBody::Not(inner) => inner.collect_vars(out),
            ConstraintBody::And(parts) => parts.iter().for_each(|p| p.collect_vars(out)),
        }
    }

    fn check_shape(&self) -> Result<(), ModelError> {
        let nested_add = |e: &Expr| matches!(e, Expr::Add(b, _) if matches!(**b, Expr::Add(..)));
        match &self.body {
            ConstraintBody::AllDiff(vs) if vs.is_empty() => Err(ModelError::EmptyAllDiff(self.label.clone())),
            ConstraintBody::AllDiff(_) => Ok(()),
            ConstraintBody::Eq(l, r) | ConstraintBody::Leq(l, r) => {
                if nested_add(l) || nested_add(r) {
                    Err(ModelError::NestedAdd(self.label.clone()))
                } else {
                    Ok(())
                }
            }
            ConstraintBody::Not(inner) => inner.check_shape(),
            ConstraintBody::And(parts) => {
                if parts.len() < 2 {
                    return Err(ModelError::ShortConjunction(self.label.clone()));
                }
                parts.iter().try_for_each(Constraint::check_shape)
            }
        }
    }
}

/// A declared variable array `name[len]` with a shared declared domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VarArray {
    pub name: String,
    pub len: usize,
    pub domain: Domain,
}

impl VarArray {
    pub fn new(name: impl Into<String>, len: usize, domain: Domain) -> Self {
        Self {
            name: name.into(),
            len,
            domain,
        }
    }
}

/// A validated constraint model. Cloning is cheap enough for desk-scale
/// models and every transformation returns a new value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    params: BTreeMap<String, i64>,
    arrays: Vec<VarArray>,
    constraints: Vec<Constraint>,
}

impl Model {
    pub fn new(
        params: BTreeMap<String, i64>,
        arrays: Vec<VarArray>,
        constraints: Vec<Constraint>,
    ) -> Result<Self, ModelError> {
        let mut names = HashSet::new();
        for a in &arrays {
            if !names.insert(a.name.as_str()) {
                return Err(ModelError::DuplicateArray(a.name.clone()));
            }
            if a.len == 0 {
                return Err(ModelError::EmptyArray(a.name.clone()));
            }
            if a.domain.is_empty() {
                return Err(ModelError::EmptyDomain(a.name.clone()));
            }
        }
        let model = Self {
            params,
            arrays,
            constraints: Vec::new(),
        };
        model.with_constraints(constraints)
    }

    pub fn params(&self) -> &BTreeMap<String, i64> {
        &self.params
    }

    pub fn arrays(&self) -> &[VarArray] {
        &self.arrays
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn array(&self, name: &str) -> Option<&VarArray> {
        self.arrays.iter().find(|a| a.name == name)
    }

    /// Total number of scalar variables.
    pub fn var_count(&self) -> usize {
        self.arrays.iter().map(|a| a.len).sum()
    }

    /// All variables in the static ordering: declaration order, then index.
    pub fn var_refs(&self) -> impl Iterator<Item = VarRef> + '_ {
        self.arrays
            .iter()
            .flat_map(|a| (0..a.len).map(move |i| VarRef::new(a.name.clone(), i)))
    }

    /// Position of `r` in the static ordering.
    pub fn flat_index(&self, r: &VarRef) -> Option<usize> {
        let mut offset = 0;
        for a in &self.arrays {
            if a.name == r.array {
                return (r.index < a.len).then_some(offset + r.index);
            }
            offset += a.len;
        }
        None
    }

    /// Inverse of [`Model::flat_index`].
    pub fn var_at(&self, mut flat: usize) -> Option<VarRef> {
        for a in &self.arrays {
            if flat < a.len {
                return Some(VarRef::new(a.name.clone(), flat));
            }
            flat -= a.len;
        }
        None
    }

    pub fn declared_domain(&self, r: &VarRef) -> Option<&Domain> {
        self.array(&r.array).filter(|a| r.index < a.len).map(|a| &a.domain)
    }

    /// Every label in the model, nested labels included.
    pub fn labels(&self) -> BTreeSet<&str> {
        self.constraints.iter().flat_map(|c| c.labels()).collect()
    }

    /// Returns a new model with `cs` appended in order. `self` is untouched.
    pub fn with_constraints(&self, cs: Vec<Constraint>) -> Result<Model, ModelError> {
        let mut seen: HashSet<String> = self.labels().into_iter().map(str::to_owned).collect();
        for c in &cs {
            c.check_shape()?;
            for label in c.labels() {
                if !seen.insert(label.to_owned()) {
                    return Err(ModelError::DuplicateLabel(label.to_owned()));
                }
            }
            for r in c.vars() {
                if self.flat_index(r).is_none() {
                    return Err(ModelError::UnresolvedRef(r.clone()));
                }
            }
        }
        let mut out = self.clone();
        out.constraints.extend(cs);
        Ok(out)
    }
}

/// Appends constraints to a model, returning the new model.
pub fn add_constraints(m: &Model, cs: Vec<Constraint>) -> Result<Model, ModelError> {
    m.with_constraints(cs)
}

/// A complete assignment, grouped by array in declaration order.
///
/// Serializes as a JSON object `{"queens": [2, 4, 1, 3]}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    arrays: Vec<(String, Vec<i64>)>,
}

impl Assignment {
    pub fn new(arrays: Vec<(String, Vec<i64>)>) -> Self {
        Self { arrays }
    }

    /// Rebuilds the array grouping of `model` from values in static order.
    pub fn from_flat(model: &Model, values: &[i64]) -> Self {
        assert_eq!(values.len(), model.var_count(), "assignment must be total");
        let mut arrays = Vec::with_capacity(model.arrays().len());
        let mut offset = 0;
        for a in model.arrays() {
            arrays.push((a.name.clone(), values[offset..offset + a.len].to_vec()));
            offset += a.len;
        }
        Self { arrays }
    }

    pub fn arrays(&self) -> &[(String, Vec<i64>)] {
        &self.arrays
    }

    pub fn get(&self, r: &VarRef) -> Option<i64> {
        self.arrays
            .iter()
            .find(|(name, _)| *name == r.array)
            .and_then(|(_, vs)| vs.get(r.index).copied())
    }

    /// Values in static order.
    pub fn flat(&self) -> Vec<i64> {
        self.arrays.iter().flat_map(|(_, vs)| vs.iter().copied()).collect()
    }
}

impl fmt::Display for Assignment {
    /// `queens = [2, 4, 1, 3]`, arrays separated by `; `.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (name, vs)) in self.arrays.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{name} = [")?;
            for (j, v) in vs.iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{v}")?;
            }
            f.write_str("]")?;
        }
        Ok(())
    }
}

impl Serialize for Assignment {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.arrays.len()))?;
        for (name, vs) in &self.arrays {
            map.serialize_entry(name, vs)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Assignment {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct AssignmentVisitor;

        impl<'de> Visitor<'de> for AssignmentVisitor {
            type Value = Assignment;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from array name to values")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Assignment, A::Error> {
                let mut arrays = Vec::new();
                while let Some((k, v)) = access.next_entry::<String, Vec<i64>>()? {
                    arrays.push((k, v));
                }
                Ok(Assignment { arrays })
            }
        }

        deserializer.deserialize_map(AssignmentVisitor)
    }
}
