//! The base distributive monoidal signature.
//!
//! Objects are kept in strict monoidal normal form: tensors are flat lists
//! with no unit factors, and the unit is the empty tensor. Coproducts and
//! stacks are atoms as far as tensor flattening is concerned. A
//! [`Valuation`] realizes the signature in finite sets and tables so that
//! morphism terms can be evaluated on concrete [`Value`]s.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Object expression over the base signature.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjExpr {
    Gen(String),
    Unit,
    Tensor(Vec<ObjExpr>),
    Sum(Box<ObjExpr>, Box<ObjExpr>),
    Stack(Box<ObjExpr>),
}

impl ObjExpr {
    pub fn gen(name: impl Into<String>) -> Self {
        ObjExpr::Gen(name.into())
    }

    pub fn tensor(a: ObjExpr, b: ObjExpr) -> Self {
        ObjExpr::Tensor(vec![a, b]).normalize()
    }

    pub fn tensor_all(parts: impl IntoIterator<Item = ObjExpr>) -> Self {
        ObjExpr::Tensor(parts.into_iter().collect()).normalize()
    }

    pub fn sum(a: ObjExpr, b: ObjExpr) -> Self {
        ObjExpr::Sum(Box::new(a.normalize()), Box::new(b.normalize()))
    }

    pub fn stack(a: ObjExpr) -> Self {
        ObjExpr::Stack(Box::new(a.normalize()))
    }

    /// Flat normal form. Idempotent.
    pub fn normalize(&self) -> ObjExpr {
        Self::from_factors(self.factors())
    }

    /// The tensor factors of the normal form, in order.
    pub fn factors(&self) -> Vec<ObjExpr> {
        let mut out = Vec::new();
        self.push_factors(&mut out);
        out
    }

    fn push_factors(&self, out: &mut Vec<ObjExpr>) {
        match self {
            ObjExpr::Unit => {}
            ObjExpr::Tensor(parts) => parts.iter().for_each(|p| p.push_factors(out)),
            ObjExpr::Gen(n) => out.push(ObjExpr::Gen(n.clone())),
            ObjExpr::Sum(a, b) => out.push(ObjExpr::Sum(
                Box::new(a.normalize()),
                Box::new(b.normalize()),
            )),
            ObjExpr::Stack(a) => out.push(ObjExpr::Stack(Box::new(a.normalize()))),
        }
    }

    pub fn from_factors(mut factors: Vec<ObjExpr>) -> ObjExpr {
        match factors.len() {
            0 => ObjExpr::Unit,
            1 => factors.pop().unwrap(),
            _ => ObjExpr::Tensor(factors),
        }
    }

    /// Number of tensor factors in normal form.
    pub fn arity(&self) -> usize {
        match self {
            ObjExpr::Unit => 0,
            ObjExpr::Tensor(parts) => parts.iter().map(ObjExpr::arity).sum(),
            _ => 1,
        }
    }

    pub fn is_unit(&self) -> bool {
        self.arity() == 0
    }

    pub fn mentions_stack(&self) -> bool {
        match self {
            ObjExpr::Stack(_) => true,
            ObjExpr::Gen(_) | ObjExpr::Unit => false,
            ObjExpr::Tensor(ps) => ps.iter().any(ObjExpr::mentions_stack),
            ObjExpr::Sum(a, b) => a.mentions_stack() || b.mentions_stack(),
        }
    }

    fn gen_names(&self, out: &mut BTreeSet<String>) {
        match self {
            ObjExpr::Gen(n) => {
                out.insert(n.clone());
            }
            ObjExpr::Unit => {}
            ObjExpr::Tensor(ps) => ps.iter().for_each(|p| p.gen_names(out)),
            ObjExpr::Sum(a, b) => {
                a.gen_names(out);
                b.gen_names(out);
            }
            ObjExpr::Stack(a) => a.gen_names(out),
        }
    }

    fn collect_stacks(&self, out: &mut BTreeSet<ObjExpr>) {
        match self {
            ObjExpr::Stack(a) => {
                out.insert(self.normalize());
                a.collect_stacks(out);
            }
            ObjExpr::Gen(_) | ObjExpr::Unit => {}
            ObjExpr::Tensor(ps) => ps.iter().for_each(|p| p.collect_stacks(out)),
            ObjExpr::Sum(a, b) => {
                a.collect_stacks(out);
                b.collect_stacks(out);
            }
        }
    }
}

/// Morphism terms of the base category.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MorExpr {
    Gen(String),
    Id(ObjExpr),
    Compose(Box<MorExpr>, Box<MorExpr>),
    Tensor(Box<MorExpr>, Box<MorExpr>),
    Braid(ObjExpr, ObjExpr),
    Inj0(ObjExpr, ObjExpr),
    Inj1(ObjExpr, ObjExpr),
    Copair(Box<MorExpr>, Box<MorExpr>),
    /// `(A ⊕ B) ⊗ C → (A ⊗ C) ⊕ (B ⊗ C)`
    DistR(ObjExpr, ObjExpr, ObjExpr),
    UndistR(ObjExpr, ObjExpr, ObjExpr),
    /// `C ⊗ (A ⊕ B) → (C ⊗ A) ⊕ (C ⊗ B)`
    DistL(ObjExpr, ObjExpr, ObjExpr),
    UndistL(ObjExpr, ObjExpr, ObjExpr),
    Nil(ObjExpr),
    Push(ObjExpr),
    Pop(ObjExpr),
    /// A point `I → A`.
    Const(ObjExpr, Value),
}

impl MorExpr {
    pub fn gen(name: impl Into<String>) -> Self {
        MorExpr::Gen(name.into())
    }

    pub fn then(self, next: MorExpr) -> Self {
        MorExpr::Compose(Box::new(self), Box::new(next))
    }

    pub fn tensor(self, other: MorExpr) -> Self {
        MorExpr::Tensor(Box::new(self), Box::new(other))
    }

    pub fn copair(f: MorExpr, g: MorExpr) -> Self {
        MorExpr::Copair(Box::new(f), Box::new(g))
    }

    /// True when the term is built from identities only.
    pub fn is_identity(&self) -> bool {
        match self {
            MorExpr::Id(_) => true,
            MorExpr::Compose(f, g) | MorExpr::Tensor(f, g) => f.is_identity() && g.is_identity(),
            _ => false,
        }
    }
}

/// Elements of interpreted objects.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Unit,
    Atom(String),
    Tuple(Vec<Value>),
    Inl(Box<Value>),
    Inr(Box<Value>),
    List(Vec<Value>),
}

impl Value {
    pub fn atom(name: impl Into<String>) -> Self {
        Value::Atom(name.into())
    }

    pub fn inl(v: Value) -> Self {
        Value::Inl(Box::new(v))
    }

    pub fn inr(v: Value) -> Self {
        Value::Inr(Box::new(v))
    }

    pub fn factors(&self) -> Vec<Value> {
        match self {
            Value::Unit => Vec::new(),
            Value::Tuple(vs) => vs.clone(),
            v => vec![v.clone()],
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Value::Unit => 0,
            Value::Tuple(vs) => vs.len(),
            _ => 1,
        }
    }

    pub fn from_factors(mut factors: Vec<Value>) -> Value {
        match factors.len() {
            0 => Value::Unit,
            1 => factors.pop().unwrap(),
            _ => Value::Tuple(factors),
        }
    }

    /// Strict tensor of two values.
    pub fn tensor(&self, other: &Value) -> Value {
        let mut fs = self.factors();
        fs.extend(other.factors());
        Value::from_factors(fs)
    }

    /// Splits off the first `k` tensor factors.
    pub fn split_at(&self, k: usize) -> Option<(Value, Value)> {
        let fs = self.factors();
        if k > fs.len() {
            return None;
        }
        let (l, r) = fs.split_at(k);
        Some((Value::from_factors(l.to_vec()), Value::from_factors(r.to_vec())))
    }
}


impl ObjExpr {
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        // 0: sum position, 1: tensor factor, 2: argument of a prefix operator
        match self {
            ObjExpr::Unit => write!(f, "I"),
            ObjExpr::Gen(n) => write!(f, "{n}"),
            ObjExpr::Tensor(parts) => {
                if prec > 0 {
                    write!(f, "(")?;
                }
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, " * ")?;
                    }
                    p.fmt_prec(f, 1)?;
                }
                if prec > 0 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            ObjExpr::Sum(a, b) => {
                if prec > 0 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 0)?;
                write!(f, " (+) ")?;
                b.fmt_prec(f, 1)?;
                if prec > 0 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            ObjExpr::Stack(a) => {
                if prec > 1 {
                    write!(f, "(")?;
                }
                write!(f, "stack ")?;
                a.fmt_prec(f, 2)?;
                if prec > 1 {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }

    /// Prints in argument position: atoms bare, anything else parenthesized.
    pub fn fmt_atom(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 2)
    }
}

impl fmt::Display for ObjExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => write!(f, "()"),
            Value::Atom(a) => write!(f, "{a}"),
            Value::Tuple(vs) => {
                write!(f, "(")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
            Value::Inl(v) => write!(f, "inl {v}"),
            Value::Inr(v) => write!(f, "inr {v}"),
            Value::List(vs) => {
                write!(f, "[")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// Morphism terms print in the file syntax.
impl fmt::Display for MorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl MorExpr {
    // 0: composition, 1: tensor, 2: atom
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        let three = |f: &mut fmt::Formatter<'_>, kw: &str, a: &ObjExpr, b: &ObjExpr, c: &ObjExpr| {
            write!(f, "{kw}({a}, {b}, {c})")
        };
        match self {
            MorExpr::Gen(n) => write!(f, "{n}"),
            MorExpr::Id(a) => {
                write!(f, "id ")?;
                a.fmt_atom(f)
            }
            MorExpr::Compose(a, b) => {
                if prec > 0 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 0)?;
                write!(f, " ; ")?;
                b.fmt_prec(f, 1)?;
                if prec > 0 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            MorExpr::Tensor(a, b) => {
                if prec > 1 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 1)?;
                write!(f, " * ")?;
                b.fmt_prec(f, 2)?;
                if prec > 1 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            MorExpr::Braid(a, b) => write!(f, "braid({a}, {b})"),
            MorExpr::Inj0(a, b) => write!(f, "inj0({a}, {b})"),
            MorExpr::Inj1(a, b) => write!(f, "inj1({a}, {b})"),
            MorExpr::Copair(a, b) => write!(f, "copair({a}, {b})"),
            MorExpr::DistR(a, b, c) => three(f, "distr", a, b, c),
            MorExpr::UndistR(a, b, c) => three(f, "undistr", a, b, c),
            MorExpr::DistL(a, b, c) => three(f, "distl", a, b, c),
            MorExpr::UndistL(a, b, c) => three(f, "undistl", a, b, c),
            MorExpr::Nil(a) => {
                write!(f, "nil ")?;
                a.fmt_atom(f)
            }
            MorExpr::Push(a) => {
                write!(f, "push ")?;
                a.fmt_atom(f)
            }
            MorExpr::Pop(a) => {
                write!(f, "pop ")?;
                a.fmt_atom(f)
            }
            MorExpr::Const(a, v) => write!(f, "const({a}, {v})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SigError {
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("composition mismatch: expected {expected}, found {found}")]
    CompositionMismatch { expected: ObjExpr, found: ObjExpr },
    #[error("value {value} does not inhabit {expected}")]
    IllTypedValue { value: Value, expected: ObjExpr },
    #[error("object {0} is not enumerable")]
    NotEnumerable(ObjExpr),
    #[error("invalid valuation: {0}")]
    InvalidValuation(String),
}

/// Presentation of the base category: generator objects and typed
/// generator morphisms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    pub objects: BTreeSet<String>,
    pub morphisms: BTreeMap<String, (ObjExpr, ObjExpr)>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_object(&mut self, name: impl Into<String>) {
        self.objects.insert(name.into());
    }

    pub fn add_morphism(
        &mut self,
        name: impl Into<String>,
        dom: ObjExpr,
        cod: ObjExpr,
    ) -> Result<(), SigError> {
        self.check_obj(&dom)?;
        self.check_obj(&cod)?;
        self.morphisms
            .insert(name.into(), (dom.normalize(), cod.normalize()));
        Ok(())
    }

    /// Every generator leaf of `e` must be declared.
    pub fn check_obj(&self, e: &ObjExpr) -> Result<(), SigError> {
        let mut names = BTreeSet::new();
        e.gen_names(&mut names);
        match names.into_iter().find(|n| !self.objects.contains(n)) {
            Some(n) => Err(SigError::UnknownName(n)),
            None => Ok(()),
        }
    }

    /// Stack objects mentioned by generator morphism types.
    pub fn stack_objects(&self) -> BTreeSet<ObjExpr> {
        let mut out = BTreeSet::new();
        for (d, c) in self.morphisms.values() {
            d.collect_stacks(&mut out);
            c.collect_stacks(&mut out);
        }
        out
    }

    /// Infers `(domain, codomain)` in normal form.
    pub fn infer_mor_type(&self, m: &MorExpr) -> Result<(ObjExpr, ObjExpr), SigError> {
        use ObjExpr as O;
        let ty = match m {
            MorExpr::Gen(n) => self
                .morphisms
                .get(n)
                .cloned()
                .ok_or_else(|| SigError::UnknownName(n.clone()))?,
            MorExpr::Id(a) => {
                self.check_obj(a)?;
                (a.clone(), a.clone())
            }
            MorExpr::Compose(f, g) => {
                let (df, cf) = self.infer_mor_type(f)?;
                let (dg, cg) = self.infer_mor_type(g)?;
                if cf != dg {
                    return Err(SigError::CompositionMismatch {
                        expected: cf,
                        found: dg,
                    });
                }
                (df, cg)
            }
            MorExpr::Tensor(f, g) => {
                let (df, cf) = self.infer_mor_type(f)?;
                let (dg, cg) = self.infer_mor_type(g)?;
                (O::tensor(df, dg), O::tensor(cf, cg))
            }
            MorExpr::Braid(a, b) => {
                self.check_obj(a)?;
                self.check_obj(b)?;
                (O::tensor(a.clone(), b.clone()), O::tensor(b.clone(), a.clone()))
            }
            MorExpr::Inj0(a, b) => {
                self.check_obj(a)?;
                self.check_obj(b)?;
                (a.clone(), O::sum(a.clone(), b.clone()))
            }
            MorExpr::Inj1(a, b) => {
                self.check_obj(a)?;
                self.check_obj(b)?;
                (b.clone(), O::sum(a.clone(), b.clone()))
            }
            MorExpr::Copair(f, g) => {
                let (df, cf) = self.infer_mor_type(f)?;
                let (dg, cg) = self.infer_mor_type(g)?;
                if cf != cg {
                    return Err(SigError::CompositionMismatch {
                        expected: cf,
                        found: cg,
                    });
                }
                (O::sum(df, dg), cf)
            }
            MorExpr::DistR(a, b, c) | MorExpr::UndistR(a, b, c) => {
                for o in [a, b, c] {
                    self.check_obj(o)?;
                }
                let lhs = O::tensor(O::sum(a.clone(), b.clone()), c.clone());
                let rhs = O::sum(O::tensor(a.clone(), c.clone()), O::tensor(b.clone(), c.clone()));
                if matches!(m, MorExpr::DistR(..)) {
                    (lhs, rhs)
                } else {
                    (rhs, lhs)
                }
            }
            MorExpr::DistL(a, b, c) | MorExpr::UndistL(a, b, c) => {
                for o in [a, b, c] {
                    self.check_obj(o)?;
                }
                let lhs = O::tensor(c.clone(), O::sum(a.clone(), b.clone()));
                let rhs = O::sum(O::tensor(c.clone(), a.clone()), O::tensor(c.clone(), b.clone()));
                if matches!(m, MorExpr::DistL(..)) {
                    (lhs, rhs)
                } else {
                    (rhs, lhs)
                }
            }
            MorExpr::Nil(a) => {
                self.check_obj(a)?;
                (O::Unit, O::stack(a.clone()))
            }
            MorExpr::Push(a) => {
                self.check_obj(a)?;
                (O::tensor(a.clone(), O::stack(a.clone())), O::stack(a.clone()))
            }
            MorExpr::Pop(a) => {
                self.check_obj(a)?;
                (
                    O::stack(a.clone()),
                    O::sum(O::Unit, O::tensor(a.clone(), O::stack(a.clone()))),
                )
            }
            MorExpr::Const(a, _) => {
                self.check_obj(a)?;
                (O::Unit, a.clone())
            }
        };
        Ok((ty.0.normalize(), ty.1.normalize()))
    }
}

/// Carrier of a generator object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Carrier {
    Finite(Vec<String>),
    /// Countable carrier of opaque atoms; never enumerated.
    Countable,
}

/// Set-theoretic realization of a [`Signature`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Valuation {
    sig: Signature,
    carriers: BTreeMap<String, Carrier>,
    tables: BTreeMap<String, BTreeMap<Value, Value>>,
}

impl Valuation {
    /// Builds and validates a valuation.
    pub fn new(
        sig: Signature,
        carriers: BTreeMap<String, Carrier>,
        tables: BTreeMap<String, BTreeMap<Value, Value>>,
    ) -> Result<Self, SigError> {
        let val = Valuation {
            sig,
            carriers,
            tables,
        };
        val.validate()?;
        Ok(val)
    }

    fn validate(&self) -> Result<(), SigError> {
        for obj in &self.sig.objects {
            match self.carriers.get(obj) {
                None => {
                    return Err(SigError::InvalidValuation(format!(
                        "object `{obj}` has no carrier"
                    )))
                }
                Some(Carrier::Finite(atoms)) => {
                    if atoms.is_empty() {
                        return Err(SigError::InvalidValuation(format!(
                            "carrier of `{obj}` is empty"
                        )));
                    }
                    let uniq: BTreeSet<_> = atoms.iter().collect();
                    if uniq.len() != atoms.len() {
                        return Err(SigError::InvalidValuation(format!(
                            "carrier of `{obj}` has duplicates"
                        )));
                    }
                }
                Some(Carrier::Countable) => {}
            }
        }
        for name in self.carriers.keys() {
            if !self.sig.objects.contains(name) {
                return Err(SigError::UnknownName(name.clone()));
            }
        }
        for (name, (dom, cod)) in &self.sig.morphisms {
            let table = self.tables.get(name).ok_or_else(|| {
                SigError::InvalidValuation(format!("morphism `{name}` has no table"))
            })?;
            for (input, output) in table {
                if !self.check_value(input, dom) {
                    return Err(SigError::IllTypedValue {
                        value: input.clone(),
                        expected: dom.clone(),
                    });
                }
                if !self.check_value(output, cod) {
                    return Err(SigError::IllTypedValue {
                        value: output.clone(),
                        expected: cod.clone(),
                    });
                }
            }
            if let Ok(domain) = self.enumerate_values(dom) {
                if let Some(missing) = domain.iter().find(|v| !table.contains_key(*v)) {
                    return Err(SigError::InvalidValuation(format!(
                        "table for `{name}` is not total: missing {missing}"
                    )));
                }
            }
        }
        for name in self.tables.keys() {
            if !self.sig.morphisms.contains_key(name) {
                return Err(SigError::UnknownName(name.clone()));
            }
        }
        Ok(())
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn carrier(&self, obj: &str) -> Option<&Carrier> {
        self.carriers.get(obj)
    }

    pub fn table(&self, mor: &str) -> Option<&BTreeMap<Value, Value>> {
        self.tables.get(mor)
    }

    /// Whether `v` inhabits `e`.
    pub fn check_value(&self, v: &Value, e: &ObjExpr) -> bool {
        let e = e.normalize();
        match (&e, v) {
            (ObjExpr::Unit, Value::Unit) => true,
            (ObjExpr::Gen(n), Value::Atom(a)) => match self.carriers.get(n) {
                Some(Carrier::Finite(atoms)) => atoms.iter().any(|x| x == a),
                Some(Carrier::Countable) => true,
                None => false,
            },
            (ObjExpr::Tensor(parts), Value::Tuple(vs)) => {
                parts.len() == vs.len()
                    && parts.iter().zip(vs).all(|(p, v)| self.check_value(v, p))
            }
            (ObjExpr::Sum(a, _), Value::Inl(x)) => self.check_value(x, a),
            (ObjExpr::Sum(_, b), Value::Inr(x)) => self.check_value(x, b),
            (ObjExpr::Stack(a), Value::List(xs)) => xs.iter().all(|x| self.check_value(x, a)),
            _ => false,
        }
    }

    /// Whether every value of `e` can be listed.
    pub fn is_enumerable(&self, e: &ObjExpr) -> bool {
        match e {
            ObjExpr::Unit => true,
            ObjExpr::Gen(n) => matches!(self.carriers.get(n), Some(Carrier::Finite(_))),
            ObjExpr::Tensor(ps) => ps.iter().all(|p| self.is_enumerable(p)),
            ObjExpr::Sum(a, b) => self.is_enumerable(a) && self.is_enumerable(b),
            ObjExpr::Stack(_) => false,
        }
    }

    /// Every value of `e`, each exactly once, in a fixed order.
    pub fn enumerate_values(&self, e: &ObjExpr) -> Result<Vec<Value>, SigError> {
        let e = e.normalize();
        if !self.is_enumerable(&e) {
            return Err(SigError::NotEnumerable(e));
        }
        Ok(self.enumerate_unchecked(&e))
    }

    fn enumerate_unchecked(&self, e: &ObjExpr) -> Vec<Value> {
        match e {
            ObjExpr::Unit => vec![Value::Unit],
            ObjExpr::Gen(n) => match self.carriers.get(n) {
                Some(Carrier::Finite(atoms)) => atoms.iter().map(Value::atom).collect(),
                _ => Vec::new(),
            },
            ObjExpr::Tensor(ps) => {
                let mut acc: Vec<Vec<Value>> = vec![Vec::new()];
                for p in ps {
                    let vals = self.enumerate_unchecked(p);
                    acc = acc
                        .into_iter()
                        .flat_map(|prefix| {
                            vals.iter().map(move |v| {
                                let mut next = prefix.clone();
                                next.push(v.clone());
                                next
                            })
                        })
                        .collect();
                }
                acc.into_iter().map(Value::from_factors).collect()
            }
            ObjExpr::Sum(a, b) => self
                .enumerate_unchecked(a)
                .into_iter()
                .map(Value::inl)
                .chain(self.enumerate_unchecked(b).into_iter().map(Value::inr))
                .collect(),
            ObjExpr::Stack(_) => Vec::new(),
        }
    }

    /// Evaluates `m` at `v`, checking `v` against the domain first.
    pub fn eval_mor(&self, m: &MorExpr, v: &Value) -> Result<Value, SigError> {
        let (dom, _) = self.sig.infer_mor_type(m)?;
        if !self.check_value(v, &dom) {
            return Err(SigError::IllTypedValue {
                value: v.clone(),
                expected: dom,
            });
        }
        self.eval(m, v)
    }

    fn eval(&self, m: &MorExpr, v: &Value) -> Result<Value, SigError> {
        let ill = |expected: ObjExpr| SigError::IllTypedValue {
            value: v.clone(),
            expected,
        };
        let split = |k: usize, expected: ObjExpr| v.split_at(k).ok_or_else(|| ill(expected));
        match m {
            MorExpr::Gen(n) => {
                let table = self
                    .tables
                    .get(n)
                    .ok_or_else(|| SigError::UnknownName(n.clone()))?;
                table.get(v).cloned().ok_or_else(|| {
                    let (dom, _) = self.sig.morphisms[n].clone();
                    ill(dom)
                })
            }
            MorExpr::Id(_) => Ok(v.clone()),
            MorExpr::Compose(f, g) => {
                let mid = self.eval(f, v)?;
                self.eval(g, &mid)
            }
            MorExpr::Tensor(f, g) => {
                let (df, _) = self.sig.infer_mor_type(f)?;
                let (l, r) = split(df.arity(), df)?;
                Ok(self.eval(f, &l)?.tensor(&self.eval(g, &r)?))
            }
            MorExpr::Braid(a, b) => {
                let (l, r) = split(a.arity(), ObjExpr::tensor(a.clone(), b.clone()))?;
                Ok(r.tensor(&l))
            }
            MorExpr::Inj0(..) => Ok(Value::inl(v.clone())),
            MorExpr::Inj1(..) => Ok(Value::inr(v.clone())),
            MorExpr::Copair(f, g) => match v {
                Value::Inl(x) => self.eval(f, x),
                Value::Inr(x) => self.eval(g, x),
                _ => Err(ill(self.sig.infer_mor_type(m)?.0)),
            },
            MorExpr::DistR(a, b, c) => {
                let dom = ObjExpr::tensor(ObjExpr::sum(a.clone(), b.clone()), c.clone());
                let (s, rest) = split(1, dom.clone())?;
                match s {
                    Value::Inl(x) => Ok(Value::inl(x.tensor(&rest))),
                    Value::Inr(x) => Ok(Value::inr(x.tensor(&rest))),
                    _ => Err(ill(dom)),
                }
            }
            MorExpr::UndistR(a, b, c) => {
                let (inner, k, left) = match v {
                    Value::Inl(x) => (x, a.arity(), true),
                    Value::Inr(x) => (x, b.arity(), false),
                    _ => return Err(ill(self.sig.infer_mor_type(m)?.0)),
                };
                let (s, rest) = inner
                    .split_at(k)
                    .ok_or_else(|| ill(ObjExpr::sum(a.clone(), b.clone())))?;
                let s = if left { Value::inl(s) } else { Value::inr(s) };
                let _ = c;
                Ok(s.tensor(&rest))
            }
            MorExpr::DistL(a, b, c) => {
                let dom = ObjExpr::tensor(c.clone(), ObjExpr::sum(a.clone(), b.clone()));
                let (ctx, s) = split(c.arity(), dom.clone())?;
                match s {
                    Value::Inl(x) => Ok(Value::inl(ctx.tensor(&x))),
                    Value::Inr(x) => Ok(Value::inr(ctx.tensor(&x))),
                    _ => Err(ill(dom)),
                }
            }
            MorExpr::UndistL(a, b, c) => {
                let (inner, left) = match v {
                    Value::Inl(x) => (x, true),
                    Value::Inr(x) => (x, false),
                    _ => return Err(ill(self.sig.infer_mor_type(m)?.0)),
                };
                let (ctx, s) = inner
                    .split_at(c.arity())
                    .ok_or_else(|| ill(ObjExpr::sum(a.clone(), b.clone())))?;
                let s = if left { Value::inl(s) } else { Value::inr(s) };
                Ok(ctx.tensor(&s))
            }
            MorExpr::Nil(_) => Ok(Value::List(Vec::new())),
            MorExpr::Push(a) => {
                let (head, tail) = split(a.arity(), ObjExpr::stack(a.clone()))?;
                match tail {
                    Value::List(mut xs) => {
                        xs.insert(0, head);
                        Ok(Value::List(xs))
                    }
                    _ => Err(ill(ObjExpr::stack(a.clone()))),
                }
            }
            MorExpr::Pop(a) => match v {
                Value::List(xs) if xs.is_empty() => Ok(Value::inl(Value::Unit)),
                Value::List(xs) => Ok(Value::inr(xs[0].tensor(&Value::List(xs[1..].to_vec())))),
                _ => Err(ill(ObjExpr::stack(a.clone()))),
            },
            MorExpr::Const(a, c) => {
                if self.check_value(c, a) {
                    Ok(c.clone())
                } else {
                    Err(SigError::IllTypedValue {
                        value: c.clone(),
                        expected: a.clone(),
                    })
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(n: &str) -> ObjExpr {
        ObjExpr::gen(n)
    }

    fn small() -> Valuation {
        let mut sig = Signature::new();
        for n in ["A", "B", "C"] {
            sig.add_object(n);
        }
        sig.add_morphism("f", o("A"), o("B")).unwrap();
        sig.add_morphism("g", o("B"), o("B")).unwrap();
        let carriers = BTreeMap::from([
            ("A".to_string(), Carrier::Finite(vec!["a1".into(), "a2".into()])),
            ("B".to_string(), Carrier::Finite(vec!["b1".into(), "b2".into()])),
            ("C".to_string(), Carrier::Finite(vec!["c1".into()])),
        ]);
        let tables = BTreeMap::from([
            (
                "f".to_string(),
                BTreeMap::from([
                    (Value::atom("a1"), Value::atom("b1")),
                    (Value::atom("a2"), Value::atom("b2")),
                ]),
            ),
            (
                "g".to_string(),
                BTreeMap::from([
                    (Value::atom("b1"), Value::atom("b2")),
                    (Value::atom("b2"), Value::atom("b1")),
                ]),
            ),
        ]);
        Valuation::new(sig, carriers, tables).unwrap()
    }

    #[test]
    fn normalize_flattens_and_drops_units() {
        let e = ObjExpr::Tensor(vec![ObjExpr::Tensor(vec![o("A"), o("B")]), ObjExpr::Unit]);
        assert_eq!(e.normalize(), ObjExpr::Tensor(vec![o("A"), o("B")]));
        assert_eq!(ObjExpr::Unit.normalize(), ObjExpr::Unit);
        let s = ObjExpr::Tensor(vec![o("A"), ObjExpr::sum(o("B"), o("C"))]);
        assert_eq!(s.normalize(), s);
    }

    #[test]
    fn structural_types() {
        let sig = small().signature().clone();
        let (d, c) = sig
            .infer_mor_type(&MorExpr::DistR(o("A"), o("B"), o("C")))
            .unwrap();
        assert_eq!(d, ObjExpr::tensor(ObjExpr::sum(o("A"), o("B")), o("C")));
        assert_eq!(
            c,
            ObjExpr::sum(ObjExpr::tensor(o("A"), o("C")), ObjExpr::tensor(o("B"), o("C")))
        );
        let (d, c) = sig.infer_mor_type(&MorExpr::Pop(o("A"))).unwrap();
        assert_eq!(d, ObjExpr::stack(o("A")));
        assert_eq!(
            c,
            ObjExpr::sum(ObjExpr::Unit, ObjExpr::tensor(o("A"), ObjExpr::stack(o("A"))))
        );
        let bad = MorExpr::gen("f").then(MorExpr::gen("f"));
        assert!(matches!(
            sig.infer_mor_type(&bad),
            Err(SigError::CompositionMismatch { .. })
        ));
        assert!(matches!(
            sig.infer_mor_type(&MorExpr::gen("nope")),
            Err(SigError::UnknownName(_))
        ));
    }

    #[test]
    fn eval_structural() {
        let val = small();
        let v = Value::Tuple(vec![Value::inl(Value::atom("a1")), Value::atom("c1")]);
        let out = val
            .eval_mor(&MorExpr::DistR(o("A"), o("B"), o("C")), &v)
            .unwrap();
        assert_eq!(
            out,
            Value::inl(Value::Tuple(vec![Value::atom("a1"), Value::atom("c1")]))
        );
        let m = MorExpr::Inj0(o("A"), o("B"))
            .then(MorExpr::copair(MorExpr::gen("f"), MorExpr::gen("g")));
        assert_eq!(
            val.eval_mor(&m, &Value::atom("a2")).unwrap(),
            val.eval_mor(&MorExpr::gen("f"), &Value::atom("a2")).unwrap()
        );
        let pop = val
            .eval_mor(&MorExpr::Pop(o("A")), &Value::List(vec![Value::atom("a1")]))
            .unwrap();
        assert_eq!(
            pop,
            Value::inr(Value::Tuple(vec![Value::atom("a1"), Value::List(vec![])]))
        );
    }

    #[test]
    fn ill_typed_input_rejected() {
        let val = small();
        assert!(matches!(
            val.eval_mor(&MorExpr::gen("f"), &Value::atom("b1")),
            Err(SigError::IllTypedValue { .. })
        ));
    }

    #[test]
    fn enumeration_counts() {
        let val = small();
        assert_eq!(val.enumerate_values(&ObjExpr::Unit).unwrap(), vec![Value::Unit]);
        assert_eq!(
            val.enumerate_values(&ObjExpr::sum(o("A"), o("A"))).unwrap().len(),
            4
        );
        assert!(matches!(
            val.enumerate_values(&ObjExpr::stack(o("A"))),
            Err(SigError::NotEnumerable(_))
        ));
    }

    #[test]
    fn distributors_inverse_and_injections_distribute() {
        let val = small();
        let (a, b, c) = (o("A"), o("B"), o("C"));
        let dist = MorExpr::DistR(a.clone(), b.clone(), c.clone());
        let undist = MorExpr::UndistR(a.clone(), b.clone(), c.clone());
        let dom = ObjExpr::tensor(ObjExpr::sum(a.clone(), b.clone()), c.clone());
        for v in val.enumerate_values(&dom).unwrap() {
            let there = val.eval_mor(&dist, &v).unwrap();
            assert_eq!(val.eval_mor(&undist, &there).unwrap(), v);
        }
        let cod = ObjExpr::sum(ObjExpr::tensor(a.clone(), c.clone()), ObjExpr::tensor(b.clone(), c.clone()));
        for v in val.enumerate_values(&cod).unwrap() {
            let back = val.eval_mor(&undist, &v).unwrap();
            assert_eq!(val.eval_mor(&dist, &back).unwrap(), v);
        }
        let lhs = MorExpr::Inj0(a.clone(), b.clone())
            .tensor(MorExpr::Id(c.clone()))
            .then(dist);
        let rhs = MorExpr::Inj0(ObjExpr::tensor(a.clone(), c.clone()), ObjExpr::tensor(b.clone(), c.clone()));
        for v in val.enumerate_values(&ObjExpr::tensor(a, c)).unwrap() {
            assert_eq!(val.eval_mor(&lhs, &v).unwrap(), val.eval_mor(&rhs, &v).unwrap());
        }
    }

    #[test]
    fn braid_is_symmetric() {
        let val = small();
        let a = ObjExpr::tensor(o("A"), o("C"));
        let b = o("B");
        let there_and_back = MorExpr::Braid(a.clone(), b.clone()).then(MorExpr::Braid(b.clone(), a.clone()));
        for v in val.enumerate_values(&ObjExpr::tensor(a, b)).unwrap() {
            assert_eq!(val.eval_mor(&there_and_back, &v).unwrap(), v);
        }
    }

    #[test]
    fn valuation_rejects_partial_tables() {
        let mut sig = Signature::new();
        sig.add_object("A");
        sig.add_morphism("f", o("A"), o("A")).unwrap();
        let carriers = BTreeMap::from([(
            "A".to_string(),
            Carrier::Finite(vec!["x".into(), "y".into()]),
        )]);
        let tables = BTreeMap::from([(
            "f".to_string(),
            BTreeMap::from([(Value::atom("x"), Value::atom("y"))]),
        )]);
        assert!(Valuation::new(sig, carriers, tables).is_err());
    }
}
