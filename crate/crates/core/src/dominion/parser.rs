//! Recursive-descent parser producing a surface AST, followed by elaboration
//! (letting substitution, comprehension expansion) into a ground [`Model`].

use std::collections::{BTreeMap, HashMap};

use super::lexer::{tokenize, Tok, Token};
use super::{DominionError, Pos};
use crate::domain::Domain;
use crate::model::{Constraint, ConstraintBody, Expr, Model, VarArray, VarRef};

/// Integer arithmetic over literals, lettings and generator names.
#[derive(Debug, Clone, PartialEq)]
pub enum IntExpr {
    Lit(i64),
    Name(String, Pos),
    Neg(Box<IntExpr>),
    Add(Box<IntExpr>, Box<IntExpr>),
    Sub(Box<IntExpr>, Box<IntExpr>),
    Mul(Box<IntExpr>, Box<IntExpr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprTemplate {
    Var { array: String, index: IntExpr, pos: Pos },
    Int(IntExpr),
    Add(Box<ExprTemplate>, IntExpr),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AtomTemplate {
    AllDiffArray { array: String, pos: Pos },
    AllDiffList(Vec<(String, IntExpr, Pos)>),
    Eq(ExprTemplate, ExprTemplate),
    Leq(ExprTemplate, ExprTemplate),
    Not(Box<LabeledTemplate>),
    And(Vec<LabeledTemplate>),
}

/// A constraint whose integer positions may mention unbound names.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTemplate {
    pub label: String,
    pub pos: Pos,
    pub atom: AtomTemplate,
}

/// `name in {lo..hi}`; bounds may mention earlier generators.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub name: String,
    pub lo: IntExpr,
    pub hi: IntExpr,
    pub pos: Pos,
}

/// `label [ atom | gen, gen, ... ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Comprehension {
    pub template: LabeledTemplate,
    pub generators: Vec<Generator>,
}

enum CItem {
    Single(LabeledTemplate),
    Comprehension(Comprehension),
}

struct DomainRange {
    lo: IntExpr,
    hi: Option<IntExpr>,
}

enum Decl {
    Letting {
        name: String,
        value: IntExpr,
        pos: Pos,
    },
    Dim {
        name: String,
        len: IntExpr,
        pos: Pos,
    },
    Find {
        name: String,
        ranges: Vec<DomainRange>,
        pos: Pos,
    },
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self, DominionError> {
        Ok(Self {
            toks: tokenize(text)?,
            at: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        let i = (self.at + ahead).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T, DominionError> {
        Err(DominionError::Syntax {
            pos: self.pos(),
            msg: format!("expected {expected}, found {}", self.peek().describe()),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<Pos, DominionError> {
        if *self.peek() == tok {
            Ok(self.next().pos)
        } else {
            self.error(&tok.describe())
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<Pos, DominionError> {
        match self.peek() {
            Tok::Ident(s) if s == kw => Ok(self.next().pos),
            _ => self.error(&format!("`{kw}`")),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self) -> Result<(String, Pos), DominionError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let pos = self.next().pos;
                Ok((s, pos))
            }
            _ => self.error("an identifier"),
        }
    }

    fn header(&mut self) -> Result<(), DominionError> {
        self.keyword("language")?;
        self.keyword("Dominion")?;
        let pos = self.pos();
        let ok = self.next().tok == Tok::Int(0) && self.next().tok == Tok::Dot && self.next().tok == Tok::Int(1);
        if !ok {
            return Err(DominionError::Syntax {
                pos,
                msg: "expected language version `0.1`".into(),
            });
        }
        Ok(())
    }

    fn decls(&mut self) -> Result<Vec<Decl>, DominionError> {
        let mut out = Vec::new();
        loop {
            if self.is_keyword("letting") {
                let pos = self.next().pos;
                let (name, _) = self.ident()?;
                self.expect(Tok::Equals)?;
                let value = self.int_expr()?;
                out.push(Decl::Letting { name, value, pos });
            } else if self.is_keyword("dim") {
                let pos = self.next().pos;
                let (name, _) = self.ident()?;
                self.expect(Tok::LBracket)?;
                let len = self.int_expr()?;
                self.expect(Tok::RBracket)?;
                self.expect(Tok::Colon)?;
                self.keyword("int")?;
                out.push(Decl::Dim { name, len, pos });
            } else if self.is_keyword("find") {
                let pos = self.next().pos;
                let (name, _) = self.ident()?;
                self.whole_array_suffix()?;
                self.expect(Tok::Colon)?;
                self.keyword("int")?;
                self.expect(Tok::LBrace)?;
                let mut ranges = Vec::new();
                loop {
                    let lo = self.int_expr()?;
                    let hi = if *self.peek() == Tok::DotDot {
                        self.next();
                        Some(self.int_expr()?)
                    } else {
                        None
                    };
                    ranges.push(DomainRange { lo, hi });
                    if *self.peek() == Tok::Comma {
                        self.next();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RBrace)?;
                out.push(Decl::Find { name, ranges, pos });
            } else if self.is_keyword("such") {
                self.next();
                self.keyword("that")?;
                return Ok(out);
            } else {
                return self.error("`letting`, `dim`, `find` or `such that`");
            }
        }
    }

    fn whole_array_suffix(&mut self) -> Result<(), DominionError> {
        self.expect(Tok::LBracket)?;
        self.expect(Tok::DotDot)?;
        self.expect(Tok::RBracket)?;
        Ok(())
    }

    fn citems(&mut self) -> Result<Vec<CItem>, DominionError> {
        let mut out = Vec::new();
        while *self.peek() != Tok::Eof {
            let (label, pos) = self.ident()?;
            if *self.peek() == Tok::LBracket {
                self.next();
                let atom = self.atom()?;
                self.expect(Tok::Pipe)?;
                let mut generators = vec![self.generator()?];
                while *self.peek() == Tok::Comma {
                    self.next();
                    generators.push(self.generator()?);
                }
                self.expect(Tok::RBracket)?;
                out.push(CItem::Comprehension(Comprehension {
                    template: LabeledTemplate { label, pos, atom },
                    generators,
                }));
            } else {
                let atom = self.atom()?;
                out.push(CItem::Single(LabeledTemplate { label, pos, atom }));
            }
        }
        Ok(out)
    }

    fn generator(&mut self) -> Result<Generator, DominionError> {
        let (name, pos) = self.ident()?;
        self.keyword("in")?;
        self.expect(Tok::LBrace)?;
        let lo = self.int_expr()?;
        self.expect(Tok::DotDot)?;
        let hi = self.int_expr()?;
        self.expect(Tok::RBrace)?;
        Ok(Generator { name, lo, hi, pos })
    }

    fn labeled(&mut self) -> Result<LabeledTemplate, DominionError> {
        let (label, pos) = self.ident()?;
        let atom = self.atom()?;
        Ok(LabeledTemplate { label, pos, atom })
    }

    fn atom(&mut self) -> Result<AtomTemplate, DominionError> {
        let (head, _) = match self.peek() {
            Tok::Ident(_) => self.ident()?,
            _ => return self.error("a constraint (`alldiff`, `eq`, `leq`, `not`, `and`)"),
        };
        self.expect(Tok::LParen)?;
        let atom = match head.as_str() {
            "alldiff" => {
                let (array, pos) = self.ident()?;
                self.expect(Tok::LBracket)?;
                if *self.peek() == Tok::DotDot {
                    self.next();
                    self.expect(Tok::RBracket)?;
                    AtomTemplate::AllDiffArray { array, pos }
                } else {
                    let index = self.int_expr()?;
                    self.expect(Tok::RBracket)?;
                    let mut refs = vec![(array, index, pos)];
                    while *self.peek() == Tok::Comma {
                        self.next();
                        let (array, pos) = self.ident()?;
                        self.expect(Tok::LBracket)?;
                        let index = self.int_expr()?;
                        self.expect(Tok::RBracket)?;
                        refs.push((array, index, pos));
                    }
                    AtomTemplate::AllDiffList(refs)
                }
            }
            "eq" | "leq" => {
                let lhs = self.expr()?;
                self.expect(Tok::Comma)?;
                let rhs = self.expr()?;
                if head == "eq" {
                    AtomTemplate::Eq(lhs, rhs)
                } else {
                    AtomTemplate::Leq(lhs, rhs)
                }
            }
            "not" => AtomTemplate::Not(Box::new(self.labeled()?)),
            "and" => {
                let mut parts = vec![self.labeled()?];
                while *self.peek() == Tok::Comma {
                    self.next();
                    parts.push(self.labeled()?);
                }
                if parts.len() < 2 {
                    return self.error("`,` (and() needs at least two parts)");
                }
                AtomTemplate::And(parts)
            }
            other => {
                return Err(DominionError::Syntax {
                    pos: self.toks[self.at.saturating_sub(2)].pos,
                    msg: format!("unknown constraint `{other}`"),
                })
            }
        };
        self.expect(Tok::RParen)?;
        Ok(atom)
    }

    fn expr(&mut self) -> Result<ExprTemplate, DominionError> {
        match (self.peek().clone(), self.peek_at(1).clone()) {
            (Tok::Ident(s), Tok::LParen) if s == "add" => {
                self.next();
                self.next();
                let base = self.expr()?;
                self.expect(Tok::Comma)?;
                let offset = self.int_expr()?;
                self.expect(Tok::RParen)?;
                Ok(ExprTemplate::Add(Box::new(base), offset))
            }
            (Tok::Ident(array), Tok::LBracket) => {
                let pos = self.next().pos;
                self.next();
                let index = self.int_expr()?;
                self.expect(Tok::RBracket)?;
                Ok(ExprTemplate::Var { array, index, pos })
            }
            _ => Ok(ExprTemplate::Int(self.int_expr()?)),
        }
    }

    fn int_expr(&mut self) -> Result<IntExpr, DominionError> {
        let mut lhs = self.int_term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.next();
                    lhs = IntExpr::Add(Box::new(lhs), Box::new(self.int_term()?));
                }
                Tok::Minus => {
                    self.next();
                    lhs = IntExpr::Sub(Box::new(lhs), Box::new(self.int_term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn int_term(&mut self) -> Result<IntExpr, DominionError> {
        let mut lhs = self.int_factor()?;
        while *self.peek() == Tok::Star {
            self.next();
            lhs = IntExpr::Mul(Box::new(lhs), Box::new(self.int_factor()?));
        }
        Ok(lhs)
    }

    fn int_factor(&mut self) -> Result<IntExpr, DominionError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.next();
                Ok(IntExpr::Lit(v))
            }
            Tok::Ident(name) => {
                let pos = self.next().pos;
                Ok(IntExpr::Name(name, pos))
            }
            Tok::Minus => {
                self.next();
                Ok(IntExpr::Neg(Box::new(self.int_factor()?)))
            }
            Tok::LParen => {
                self.next();
                let e = self.int_expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => self.error("an integer expression"),
        }
    }
}

/// Names visible while elaborating: lettings, generator bindings and array
/// lengths (for `alldiff(x[..])`).
pub(crate) struct Scope<'a> {
    params: &'a BTreeMap<String, i64>,
    arrays: &'a HashMap<String, usize>,
    bindings: Vec<(String, i64)>,
}

impl<'a> Scope<'a> {
    pub(crate) fn new(params: &'a BTreeMap<String, i64>, arrays: &'a HashMap<String, usize>) -> Self {
        Self {
            params,
            arrays,
            bindings: Vec::new(),
        }
    }

    fn lookup(&self, name: &str) -> Option<i64> {
        self.bindings
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|&(_, v)| v)
            .or_else(|| self.params.get(name).copied())
    }

    fn eval(&self, e: &IntExpr) -> Result<i64, DominionError> {
        let overflow = || DominionError::Syntax {
            pos: e.pos().unwrap_or_default(),
            msg: "integer overflow in expression".into(),
        };
        match e {
            IntExpr::Lit(v) => Ok(*v),
            IntExpr::Name(n, pos) => self.lookup(n).ok_or_else(|| DominionError::Unbound {
                name: n.clone(),
                pos: *pos,
            }),
            IntExpr::Neg(a) => self.eval(a)?.checked_neg().ok_or_else(overflow),
            IntExpr::Add(a, b) => self.eval(a)?.checked_add(self.eval(b)?).ok_or_else(overflow),
            IntExpr::Sub(a, b) => self.eval(a)?.checked_sub(self.eval(b)?).ok_or_else(overflow),
            IntExpr::Mul(a, b) => self.eval(a)?.checked_mul(self.eval(b)?).ok_or_else(overflow),
        }
    }

    fn index(&self, e: &IntExpr, array: &str, pos: Pos) -> Result<usize, DominionError> {
        let v = self.eval(e)?;
        usize::try_from(v).map_err(|_| DominionError::BadReference {
            reference: format!("{array}[{v}]"),
            pos,
        })
    }

    fn ground_expr(&self, e: &ExprTemplate) -> Result<Expr, DominionError> {
        Ok(match e {
            ExprTemplate::Int(i) => Expr::IntLit(self.eval(i)?),
            ExprTemplate::Var { array, index, pos } => {
                Expr::Var(VarRef::new(array.clone(), self.index(index, array, *pos)?))
            }
            ExprTemplate::Add(base, off) => {
                let k = self.eval(off)?;
                match self.ground_expr(base)? {
                    // add(add(x, a), b) == add(x, a + b)
                    Expr::Add(inner, a) => Expr::Add(
                        inner,
                        a.checked_add(k).ok_or_else(|| DominionError::Syntax {
                            pos: off.pos().unwrap_or_default(),
                            msg: "integer overflow in expression".into(),
                        })?,
                    ),
                    b => Expr::Add(Box::new(b), k),
                }
            }
        })
    }

    fn ground(&self, t: &LabeledTemplate, suffix: &str) -> Result<Constraint, DominionError> {
        let body = match &t.atom {
            AtomTemplate::AllDiffArray { array, pos } => {
                let len = *self.arrays.get(array).ok_or_else(|| DominionError::Unbound {
                    name: array.clone(),
                    pos: *pos,
                })?;
                ConstraintBody::AllDiff((0..len).map(|i| VarRef::new(array.clone(), i)).collect())
            }
            AtomTemplate::AllDiffList(refs) => ConstraintBody::AllDiff(
                refs.iter()
                    .map(|(a, i, pos)| Ok(VarRef::new(a.clone(), self.index(i, a, *pos)?)))
                    .collect::<Result<_, DominionError>>()?,
            ),
            AtomTemplate::Eq(l, r) => ConstraintBody::Eq(self.ground_expr(l)?, self.ground_expr(r)?),
            AtomTemplate::Leq(l, r) => ConstraintBody::Leq(self.ground_expr(l)?, self.ground_expr(r)?),
            AtomTemplate::Not(inner) => ConstraintBody::Not(Box::new(self.ground(inner, suffix)?)),
            AtomTemplate::And(parts) => {
                ConstraintBody::And(parts.iter().map(|p| self.ground(p, suffix)).collect::<Result<_, _>>()?)
            }
        };
        Ok(Constraint::new(format!("{}{suffix}", t.label), body))
    }

    /// Instances in lexicographic generator order.
    pub(crate) fn expand(&mut self, c: &Comprehension) -> Result<Vec<Constraint>, DominionError> {
        let mut out = Vec::new();
        self.expand_from(c, 0, &mut String::new(), &mut out)?;
        Ok(out)
    }

    fn expand_from(
        &mut self,
        c: &Comprehension,
        depth: usize,
        suffix: &mut String,
        out: &mut Vec<Constraint>,
    ) -> Result<(), DominionError> {
        let Some(g) = c.generators.get(depth) else {
            out.push(self.ground(&c.template, suffix)?);
            return Ok(());
        };
        let lo = self.eval(&g.lo)?;
        let hi = self.eval(&g.hi)?;
        for v in lo..=hi {
            let mark = suffix.len();
            suffix.push('_');
            if v < 0 {
                suffix.push('m');
            }
            suffix.push_str(&v.unsigned_abs().to_string());
            self.bindings.push((g.name.clone(), v));
            let r = self.expand_from(c, depth + 1, suffix, out);
            self.bindings.pop();
            suffix.truncate(mark);
            r?;
        }
        Ok(())
    }
}

impl IntExpr {
    fn pos(&self) -> Option<Pos> {
        match self {
            IntExpr::Lit(_) => None,
            IntExpr::Name(_, p) => Some(*p),
            IntExpr::Neg(a) => a.pos(),
            IntExpr::Add(a, b) | IntExpr::Sub(a, b) | IntExpr::Mul(a, b) => a.pos().or_else(|| b.pos()),
        }
    }
}

pub(crate) fn parse_comprehension(text: &str) -> Result<Comprehension, DominionError> {
    let mut p = Parser::new(text)?;
    let items = p.citems()?;
    match items.into_iter().next() {
        Some(CItem::Comprehension(c)) if *p.peek() == Tok::Eof => Ok(c),
        _ => Err(DominionError::Syntax {
            pos: Pos::default(),
            msg: "expected exactly one comprehension `label [ atom | generators ]`".into(),
        }),
    }
}

pub(crate) fn parse(text: &str) -> Result<Model, DominionError> {
    let mut p = Parser::new(text)?;
    p.header()?;
    let decls = p.decls()?;
    let items = p.citems()?;

    let empty_arrays = HashMap::new();
    let mut params: BTreeMap<String, i64> = BTreeMap::new();
    let mut dims: Vec<(String, usize, Pos)> = Vec::new();
    let mut finds: HashMap<String, (Domain, Pos)> = HashMap::new();

    for d in decls {
        match d {
            Decl::Letting { name, value, pos } => {
                let v = Scope::new(&params, &empty_arrays).eval(&value)?;
                if params.insert(name.clone(), v).is_some() {
                    return Err(DominionError::Duplicate {
                        what: format!("letting `{name}`"),
                        pos,
                    });
                }
            }
            Decl::Dim { name, len, pos } => {
                let n = Scope::new(&params, &empty_arrays).eval(&len)?;
                if n < 1 {
                    return Err(DominionError::Syntax {
                        pos,
                        msg: format!("array `{name}` must have positive length, got {n}"),
                    });
                }
                if dims.iter().any(|(d, _, _)| *d == name) {
                    return Err(DominionError::Duplicate {
                        what: format!("array `{name}`"),
                        pos,
                    });
                }
                dims.push((name, n as usize, pos));
            }
            Decl::Find { name, ranges, pos } => {
                let scope = Scope::new(&params, &empty_arrays);
                let mut ivs = Vec::new();
                for r in &ranges {
                    let lo = scope.eval(&r.lo)?;
                    let hi = match &r.hi {
                        Some(h) => scope.eval(h)?,
                        None => lo,
                    };
                    ivs.push((lo, hi));
                }
                let dom = Domain::from_intervals(ivs);
                if dom.is_empty() {
                    return Err(DominionError::EmptyDomain { array: name, pos });
                }
                if finds.insert(name.clone(), (dom, pos)).is_some() {
                    return Err(DominionError::Duplicate {
                        what: format!("find for `{name}`"),
                        pos,
                    });
                }
            }
        }
    }

    let mut arrays = Vec::with_capacity(dims.len());
    for (name, len, pos) in &dims {
        let Some((dom, _)) = finds.remove(name) else {
            return Err(DominionError::Syntax {
                pos: *pos,
                msg: format!("array `{name}` has no `find` declaration"),
            });
        };
        arrays.push(VarArray::new(name.clone(), *len, dom));
    }
    if let Some((name, (_, pos))) = finds.into_iter().min_by_key(|(_, (_, p))| *p) {
        return Err(DominionError::Unbound { name, pos });
    }

    let lengths: HashMap<String, usize> = arrays.iter().map(|a| (a.name.clone(), a.len)).collect();
    let mut scope = Scope::new(&params, &lengths);
    let mut constraints = Vec::new();
    let mut seen: HashMap<String, Pos> = HashMap::new();
    for item in &items {
        let (pos, produced) = match item {
            CItem::Single(t) => (t.pos, vec![scope.ground(t, "")?]),
            CItem::Comprehension(c) => (c.template.pos, scope.expand(c)?),
        };
        for c in &produced {
            for label in c.labels() {
                if seen.insert(label.to_owned(), pos).is_some() {
                    return Err(DominionError::Duplicate {
                        what: format!("label `{label}`"),
                        pos,
                    });
                }
            }
            for r in c.vars() {
                if lengths.get(&r.array).is_none_or(|&len| r.index >= len) {
                    return Err(DominionError::BadReference {
                        reference: r.to_string(),
                        pos,
                    });
                }
            }
        }
        constraints.extend(produced);
    }

    Ok(Model::new(params, arrays, constraints)?)
}
