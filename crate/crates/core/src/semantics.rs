//! Stateful-transformation interpreter.
//!
//! A protocol `U` acts on payloads as a functor and a cell
//! `[U | A -> B | W]` denotes a payload-polymorphic map `U(X) * A -> W(X * B)`.
//! Sequencing is functor composition, outermost first. A [`PValue`] is an
//! element of such a functor image: its leaves are payloads, and a leaf
//! carrying extra objects is a [`PValue::With`] node. Payloads are opaque to
//! every cell, so naturality and strength hold by construction.
//!
//! `U^x` elements are lazy handles that unfold one `I x (U * U^x)` layer when
//! forced; `U^+` elements are finite trees of `inl`/`inr` tags.

use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cell::{annotate, Boundary, Cell, CellError, Typed};
use crate::protocol::Protocol;
use crate::signature::{Carrier, ObjExpr, SigError, Valuation, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemError {
    #[error("receive over {0}, which has no finite carrier")]
    InfiniteRecvCarrier(ObjExpr),
    #[error("protocol {0} cannot be enumerated")]
    NotEnumerable(Protocol),
    #[error("value does not match its protocol: {0}")]
    Shape(String),
    #[error("boundaries differ: {0} vs {1}")]
    BoundaryMismatch(Box<Boundary>, Box<Boundary>),
    #[error(transparent)]
    Sig(#[from] SigError),
    #[error(transparent)]
    Cell(#[from] CellError),
}

pub type Result<T> = std::result::Result<T, SemError>;

type Force = Box<dyn Fn() -> Result<PValue> + Send + Sync>;

/// Deferred layer of a `^x` element. Forcing is memoized and observably pure.
pub struct Thunk {
    memo: OnceLock<Result<PValue>>,
    run: Force,
}

impl Thunk {
    fn new(run: impl Fn() -> Result<PValue> + Send + Sync + 'static) -> Self {
        Thunk {
            memo: OnceLock::new(),
            run: Box::new(run),
        }
    }

    pub fn force(&self) -> Result<PValue> {
        self.memo.get_or_init(|| (self.run)()).clone()
    }
}

impl fmt::Debug for Thunk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Thunk")
    }
}

#[derive(Debug, Clone)]
pub enum PValue {
    Payload(Value),
    /// A leaf extended by further tensor factors.
    With(Arc<PValue>, Value),
    /// `A°`: the sent value and the continuation.
    Msg(Value, Arc<PValue>),
    /// `A•`: one continuation per element of the carrier.
    Table(Arc<Vec<(Value, PValue)>>),
    /// `U x W`
    Pair(Arc<PValue>, Arc<PValue>),
    /// Left tag of `U + W`; `stop` of `U^+`.
    Inl(Arc<PValue>),
    /// Right tag of `U + W`; `step` of `U^+`.
    Inr(Arc<PValue>),
    /// `U^x` handle.
    Lazy(Arc<Thunk>),
    /// Placeholder for a state of a sampled coalgebra; never escapes sampling.
    Hole(u64, usize),
}

impl PValue {
    pub fn payload(v: Value) -> Self {
        PValue::Payload(v)
    }

    fn lazy(run: impl Fn() -> Result<PValue> + Send + Sync + 'static) -> Self {
        PValue::Lazy(Arc::new(Thunk::new(run)))
    }

    /// Forces a handle; other values are returned as they are.
    pub fn force(&self) -> Result<PValue> {
        match self {
            PValue::Lazy(t) => t.force(),
            other => Ok(other.clone()),
        }
    }

    pub fn force_pair(&self) -> Result<(PValue, PValue)> {
        match self.force()? {
            PValue::Pair(l, r) => Ok(((*l).clone(), (*r).clone())),
            other => Err(SemError::Shape(format!("expected a pair, found {other}"))),
        }
    }
}

/// Attaches `b` to a leaf, merging with factors already attached.
pub fn with(p: PValue, b: Value) -> PValue {
    if b == Value::Unit {
        return p;
    }
    match p {
        PValue::With(inner, b0) => PValue::With(inner, b0.tensor(&b)),
        other => PValue::With(Arc::new(other), b),
    }
}

/// Detaches the last `k` factors from a leaf.
pub fn split(leaf: &PValue, k: usize) -> Result<(PValue, Value)> {
    if k == 0 {
        return Ok((leaf.clone(), Value::Unit));
    }
    match leaf {
        PValue::With(inner, b) => {
            let fs = b.factors();
            if k > fs.len() {
                return Err(SemError::Shape(format!("leaf {leaf} has fewer than {k} factors")));
            }
            let cut = fs.len() - k;
            let rest = Value::from_factors(fs[cut..].to_vec());
            let kept = if cut == 0 {
                (**inner).clone()
            } else {
                PValue::With(inner.clone(), Value::from_factors(fs[..cut].to_vec()))
            };
            Ok((kept, rest))
        }
        _ => Err(SemError::Shape(format!("leaf {leaf} carries no factors"))),
    }
}

type LeafFn = Arc<dyn Fn(PValue) -> Result<PValue> + Send + Sync>;

/// Applies `f` to every leaf of `pv`, read along the protocol factors `items`.
pub fn fmap(items: &[Protocol], pv: &PValue, f: &LeafFn) -> Result<PValue> {
    let Some((head, rest)) = items.split_first() else {
        return f(pv.clone());
    };
    let cat = |front: &Protocol, with_head: bool| {
        let mut v = front.items();
        if with_head {
            v.push(head.clone());
        }
        v.extend_from_slice(rest);
        v
    };
    match head {
        Protocol::Send(_) => match pv {
            PValue::Msg(v, p) => Ok(PValue::Msg(v.clone(), Arc::new(fmap(rest, p, f)?))),
            other => Err(SemError::Shape(format!("expected a message, found {other}"))),
        },
        Protocol::Recv(_) => match pv {
            PValue::Table(entries) => {
                let mapped = entries
                    .iter()
                    .map(|(k, p)| Ok((k.clone(), fmap(rest, p, f)?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(PValue::Table(Arc::new(mapped)))
            }
            other => Err(SemError::Shape(format!("expected a table, found {other}"))),
        },
        Protocol::Choose(u, w) => {
            let (l, r) = pv.force_pair()?;
            Ok(PValue::Pair(
                Arc::new(fmap(&cat(u, false), &l, f)?),
                Arc::new(fmap(&cat(w, false), &r, f)?),
            ))
        }
        Protocol::Offer(u, w) => match pv {
            PValue::Inl(p) => Ok(PValue::Inl(Arc::new(fmap(&cat(u, false), p, f)?))),
            PValue::Inr(p) => Ok(PValue::Inr(Arc::new(fmap(&cat(w, false), p, f)?))),
            other => Err(SemError::Shape(format!("expected a tag, found {other}"))),
        },
        Protocol::StarP(u) => match pv {
            PValue::Inl(p) => Ok(PValue::Inl(Arc::new(fmap(rest, p, f)?))),
            PValue::Inr(p) => Ok(PValue::Inr(Arc::new(fmap(&cat(u, true), p, f)?))),
            other => Err(SemError::Shape(format!("expected a tree node, found {other}"))),
        },
        Protocol::StarX(u) => {
            let (stop_items, step_items) = (rest.to_vec(), cat(u, true));
            let (pv, f) = (pv.clone(), f.clone());
            Ok(PValue::lazy(move || {
                let (l, r) = pv.force_pair()?;
                Ok(PValue::Pair(
                    Arc::new(fmap(&stop_items, &l, &f)?),
                    Arc::new(fmap(&step_items, &r, &f)?),
                ))
            }))
        }
        Protocol::Done | Protocol::Seq(_) => {
            // items() never yields these
            let mut v = head.items();
            v.extend_from_slice(rest);
            fmap(&v, pv, f)
        }
    }
}

/// The compositional meaning of a typechecked cell.
#[derive(Clone)]
pub struct Denotation {
    typed: Arc<Typed>,
    val: Arc<Valuation>,
}

impl Denotation {
    pub fn boundary(&self) -> &Boundary {
        &self.typed.boundary
    }

    /// Runs the cell on a left-boundary value and a top value.
    pub fn apply(&self, left: &PValue, input: &Value) -> Result<PValue> {
        eval(&self.typed, &self.val, left.clone(), input.clone())
    }
}

/// Typechecks `c` and builds its denotation.
pub fn denote(c: &Cell, val: &Arc<Valuation>) -> Result<Denotation> {
    let typed = annotate(c, val.signature())?;
    check_recv_carriers(&typed, val)?;
    Ok(Denotation {
        typed,
        val: val.clone(),
    })
}

fn check_recv_carriers(t: &Typed, val: &Valuation) -> Result<()> {
    if let Cell::GetR(a) = &t.cell {
        if !val.is_enumerable(a) {
            return Err(SemError::InfiniteRecvCarrier(a.clone()));
        }
    }
    t.kids.iter().try_for_each(|k| check_recv_carriers(k, val))
}

fn eval(t: &Arc<Typed>, val: &Arc<Valuation>, x: PValue, a: Value) -> Result<PValue> {
    let kid = |i: usize| &t.kids[i];
    match &t.cell {
        Cell::Promote(f) => Ok(with(x, val.eval_mor(f, &a)?)),
        Cell::GetL(_) => match x {
            PValue::Msg(v, rest) => Ok(with((*rest).clone(), v)),
            other => Err(SemError::Shape(format!("expected a message, found {other}"))),
        },
        Cell::PutR(_) => Ok(PValue::Msg(a, Arc::new(x))),
        Cell::GetR(obj) => {
            let entries = val
                .enumerate_values(obj)
                .map_err(|_| SemError::InfiniteRecvCarrier(obj.clone()))?
                .into_iter()
                .map(|v| (v.clone(), with(x.clone(), v)))
                .collect();
            Ok(PValue::Table(Arc::new(entries)))
        }
        Cell::PutL(_) => match &x {
            PValue::Table(entries) => entries
                .iter()
                .find(|(k, _)| *k == a)
                .map(|(_, p)| p.clone())
                .ok_or_else(|| SemError::Shape(format!("table has no entry for {a}"))),
            other => Err(SemError::Shape(format!("expected a table, found {other}"))),
        },
        Cell::IdV(_) => Ok(with(x, a)),
        Cell::IdH(_) => Ok(x),
        Cell::HComp(..) => {
            let k = kid(0).boundary.top.arity();
            let (a1, a2) = a
                .split_at(k)
                .ok_or_else(|| SemError::Shape(format!("input {a} too short")))?;
            let mid = eval(kid(0), val, x, a1)?;
            eval(kid(1), val, mid, a2)
        }
        Cell::VComp(..) => {
            let upper = eval(kid(0), val, x, a)?;
            let k = kid(0).boundary.bottom.arity();
            let lower = kid(1).clone();
            let val2 = val.clone();
            let f: LeafFn = Arc::new(move |leaf| {
                let (inner, c) = split(&leaf, k)?;
                eval(&lower, &val2, inner, c)
            });
            fmap(&kid(0).boundary.right.items(), &upper, &f)
        }
        Cell::Pi0(..) => Ok(x.force_pair()?.0),
        Cell::Pi1(..) => Ok(x.force_pair()?.1),
        Cell::Times(..) => Ok(PValue::Pair(
            Arc::new(eval(kid(0), val, x.clone(), a.clone())?),
            Arc::new(eval(kid(1), val, x, a)?),
        )),
        Cell::Inj0(..) => Ok(PValue::Inl(Arc::new(x))),
        Cell::Inj1(..) => Ok(PValue::Inr(Arc::new(x))),
        Cell::Plus(..) => match x {
            PValue::Inl(p) => eval(kid(0), val, (*p).clone(), a),
            PValue::Inr(p) => eval(kid(1), val, (*p).clone(), a),
            other => Err(SemError::Shape(format!("expected a tag, found {other}"))),
        },
        Cell::CopairC(..) => match a {
            Value::Inl(v) => eval(kid(0), val, x, *v),
            Value::Inr(v) => eval(kid(1), val, x, *v),
            other => Err(SemError::Shape(format!("expected a tagged input, found {other}"))),
        },
        Cell::IterX(..) => Ok(unfold(t.clone(), val.clone(), x, a)),
        Cell::IterP(..) => fold(t, val, x, a),
    }
}

/// `IterX(alpha, f, g)`: the coalgebra step `w ↦ (f(w), alpha(g(w)))`, unfolded lazily.
fn unfold(t: Arc<Typed>, val: Arc<Valuation>, x: PValue, a: Value) -> PValue {
    PValue::lazy(move || {
        let (alpha, f, g) = (&t.kids[0], &t.kids[1], &t.kids[2]);
        let stop = eval(f, &val, x.clone(), a.clone())?;
        let layer = eval(g, &val, x.clone(), Value::Unit)?;
        let stepped = eval(alpha, &val, layer, a.clone())?;
        let k = alpha.boundary.top.arity();
        let (t2, val2) = (t.clone(), val.clone());
        let again: LeafFn = Arc::new(move |leaf| {
            let (w, a2) = split(&leaf, k)?;
            Ok(unfold(t2.clone(), val2.clone(), w, a2))
        });
        let cont = fmap(&alpha.boundary.right.items(), &stepped, &again)?;
        Ok(PValue::Pair(Arc::new(stop), Arc::new(cont)))
    })
}

/// `IterP(alpha, f, g)`: structural fold over a finite `U^+` tree.
fn fold(t: &Arc<Typed>, val: &Arc<Valuation>, x: PValue, a: Value) -> Result<PValue> {
    let (alpha, f, g) = (&t.kids[0], &t.kids[1], &t.kids[2]);
    match x {
        PValue::Inl(k) => eval(f, val, (*k).clone(), a),
        PValue::Inr(u) => {
            let stepped = eval(alpha, val, (*u).clone(), a)?;
            let k = alpha.boundary.top.arity();
            let (t2, val2) = (t.clone(), val.clone());
            let again: LeafFn = Arc::new(move |leaf| {
                let (sub, a2) = split(&leaf, k)?;
                fold(&t2, &val2, sub, a2)
            });
            let folded = fmap(&alpha.boundary.right.items(), &stepped, &again)?;
            eval(g, val, folded, Value::Unit)
        }
        other => Err(SemError::Shape(format!("expected a tree node, found {other}"))),
    }
}

/// Observational equality. Each forced handle costs one unit of `depth`;
/// at depth zero handles are considered equal.
pub fn pval_equal(p: &PValue, q: &PValue, depth: usize) -> Result<bool> {
    use PValue as P;
    match (p, q) {
        (P::Lazy(_), _) | (_, P::Lazy(_)) => {
            if depth == 0 {
                return Ok(true);
            }
            let (l1, r1) = p.force_pair()?;
            let (l2, r2) = q.force_pair()?;
            Ok(pval_equal(&l1, &l2, depth - 1)? && pval_equal(&r1, &r2, depth - 1)?)
        }
        (P::Payload(v), P::Payload(w)) => Ok(v == w),
        (P::With(p1, b1), P::With(p2, b2)) => Ok(b1 == b2 && pval_equal(p1, p2, depth)?),
        (P::Msg(v1, p1), P::Msg(v2, p2)) => Ok(v1 == v2 && pval_equal(p1, p2, depth)?),
        (P::Table(t1), P::Table(t2)) => {
            if t1.len() != t2.len() {
                return Ok(false);
            }
            for ((k1, p1), (k2, p2)) in t1.iter().zip(t2.iter()) {
                if k1 != k2 || !pval_equal(p1, p2, depth)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        (P::Pair(a1, b1), P::Pair(a2, b2)) => {
            Ok(pval_equal(a1, a2, depth)? && pval_equal(b1, b2, depth)?)
        }
        (P::Inl(p1), P::Inl(p2)) | (P::Inr(p1), P::Inr(p2)) => pval_equal(p1, p2, depth),
        (P::Hole(i, j), P::Hole(k, l)) => Ok(i == k && j == l),
        _ => Ok(false),
    }
}

/// Every element of `U` over the given payloads, in a fixed order.
pub fn enumerate_pvals(u: &Protocol, payloads: &[Value], val: &Valuation) -> Result<Vec<PValue>> {
    if !u.is_iteration_free() {
        return Err(SemError::NotEnumerable(u.clone()));
    }
    enumerate_items(&u.items(), payloads, val)
}

fn enumerate_items(items: &[Protocol], payloads: &[Value], val: &Valuation) -> Result<Vec<PValue>> {
    let Some((head, rest)) = items.split_first() else {
        return Ok(payloads.iter().cloned().map(PValue::Payload).collect());
    };
    let cat = |front: &Protocol| {
        let mut v = front.items();
        v.extend_from_slice(rest);
        v
    };
    match head {
        Protocol::Send(a) => {
            let heads = val
                .enumerate_values(a)
                .map_err(|_| SemError::NotEnumerable(head.clone()))?;
            let tails = enumerate_items(rest, payloads, val)?;
            Ok(heads
                .iter()
                .flat_map(|v| {
                    tails
                        .iter()
                        .map(move |p| PValue::Msg(v.clone(), Arc::new(p.clone())))
                })
                .collect())
        }
        Protocol::Recv(a) => {
            let keys = val
                .enumerate_values(a)
                .map_err(|_| SemError::InfiniteRecvCarrier(a.clone()))?;
            let tails = enumerate_items(rest, payloads, val)?;
            let mut tables: Vec<Vec<(Value, PValue)>> = vec![Vec::new()];
            for k in &keys {
                tables = tables
                    .into_iter()
                    .flat_map(|t| {
                        tails.iter().map(move |p| {
                            let mut t2 = t.clone();
                            t2.push((k.clone(), p.clone()));
                            t2
                        })
                    })
                    .collect();
            }
            Ok(tables.into_iter().map(|t| PValue::Table(Arc::new(t))).collect())
        }
        Protocol::Choose(u, w) => {
            let ls = enumerate_items(&cat(u), payloads, val)?;
            let rs = enumerate_items(&cat(w), payloads, val)?;
            Ok(ls
                .iter()
                .flat_map(|l| {
                    rs.iter()
                        .map(move |r| PValue::Pair(Arc::new(l.clone()), Arc::new(r.clone())))
                })
                .collect())
        }
        Protocol::Offer(u, w) => {
            let mut out: Vec<PValue> = enumerate_items(&cat(u), payloads, val)?
                .into_iter()
                .map(|p| PValue::Inl(Arc::new(p)))
                .collect();
            out.extend(
                enumerate_items(&cat(w), payloads, val)?
                    .into_iter()
                    .map(|p| PValue::Inr(Arc::new(p))),
            );
            Ok(out)
        }
        _ => Err(SemError::NotEnumerable(head.clone())),
    }
}

/// Number of elements [`enumerate_pvals`] would produce, saturating.
pub fn count_pvals(u: &Protocol, payloads: usize, val: &Valuation) -> Option<u128> {
    if !u.is_iteration_free() {
        return None;
    }
    count_items(&u.items(), payloads as u128, val)
}

fn count_items(items: &[Protocol], payloads: u128, val: &Valuation) -> Option<u128> {
    let Some((head, rest)) = items.split_first() else {
        return Some(payloads);
    };
    let cat = |front: &Protocol| {
        let mut v = front.items();
        v.extend_from_slice(rest);
        v
    };
    let size = |a: &ObjExpr| val.enumerate_values(a).ok().map(|v| v.len() as u128);
    match head {
        Protocol::Send(a) => size(a)?.checked_mul(count_items(rest, payloads, val)?),
        Protocol::Recv(a) => {
            let base = count_items(rest, payloads, val)?;
            let n = size(a)?;
            let exp = u32::try_from(n).ok()?;
            base.checked_pow(exp)
        }
        Protocol::Choose(u, w) => {
            count_items(&cat(u), payloads, val)?.checked_mul(count_items(&cat(w), payloads, val)?)
        }
        Protocol::Offer(u, w) => {
            count_items(&cat(u), payloads, val)?.checked_add(count_items(&cat(w), payloads, val)?)
        }
        _ => None,
    }
}

#[derive(Clone, Copy)]
enum LeafGen {
    Payload,
    Hole(u64, usize),
}

/// Deterministic pseudo-random generator of protocol elements and values.
pub struct Sampler<'a> {
    val: &'a Valuation,
    payloads: &'a [Value],
    rng: ChaCha8Rng,
    next_id: u64,
}

impl<'a> Sampler<'a> {
    pub fn new(val: &'a Valuation, payloads: &'a [Value], seed: u64) -> Self {
        Sampler {
            val,
            payloads,
            rng: ChaCha8Rng::seed_from_u64(seed),
            next_id: 0,
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// A random element of `e`; stacks get at most three elements.
    pub fn value(&mut self, e: &ObjExpr) -> Value {
        match e {
            ObjExpr::Unit => Value::Unit,
            ObjExpr::Gen(n) => match self.val.carrier(n) {
                Some(Carrier::Finite(atoms)) => {
                    Value::atom(atoms[self.rng.gen_range(0..atoms.len())].clone())
                }
                _ => Value::atom(format!("{n}{}", self.rng.gen_range(0..4))),
            },
            ObjExpr::Tensor(ps) => Value::from_factors(ps.iter().map(|p| self.value(p)).collect()),
            ObjExpr::Sum(a, b) => {
                if self.rng.gen_bool(0.5) {
                    Value::inl(self.value(a))
                } else {
                    Value::inr(self.value(b))
                }
            }
            ObjExpr::Stack(a) => {
                let n = self.rng.gen_range(0..=3);
                Value::List((0..n).map(|_| self.value(a)).collect())
            }
        }
    }

    /// A random element of `u`. `^+` trees have height at most `depth`;
    /// `^x` elements are finite coalgebras with at most `depth` states.
    pub fn pvalue(&mut self, u: &Protocol, depth: usize) -> Result<PValue> {
        self.items(&u.items(), depth, LeafGen::Payload)
    }

    fn leaf(&mut self, gen: LeafGen) -> PValue {
        match gen {
            LeafGen::Payload => {
                let i = self.rng.gen_range(0..self.payloads.len().max(1));
                PValue::Payload(self.payloads.get(i).cloned().unwrap_or(Value::Unit))
            }
            LeafGen::Hole(id, n) => PValue::Hole(id, self.rng.gen_range(0..n)),
        }
    }

    fn items(&mut self, items: &[Protocol], depth: usize, gen: LeafGen) -> Result<PValue> {
        let Some((head, rest)) = items.split_first() else {
            return Ok(self.leaf(gen));
        };
        let cat = |front: &Protocol, with_head: bool| {
            let mut v = front.items();
            if with_head {
                v.push(head.clone());
            }
            v.extend_from_slice(rest);
            v
        };
        match head {
            Protocol::Send(a) => {
                let v = self.value(a);
                Ok(PValue::Msg(v, Arc::new(self.items(rest, depth, gen)?)))
            }
            Protocol::Recv(a) => {
                let keys = self
                    .val
                    .enumerate_values(a)
                    .map_err(|_| SemError::InfiniteRecvCarrier(a.clone()))?;
                let entries = keys
                    .into_iter()
                    .map(|k| Ok((k, self.items(rest, depth, gen)?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(PValue::Table(Arc::new(entries)))
            }
            Protocol::Choose(u, w) => {
                let l = self.items(&cat(u, false), depth, gen)?;
                let r = self.items(&cat(w, false), depth, gen)?;
                Ok(PValue::Pair(Arc::new(l), Arc::new(r)))
            }
            Protocol::Offer(u, w) => {
                if self.rng.gen_bool(0.5) {
                    Ok(PValue::Inl(Arc::new(self.items(&cat(u, false), depth, gen)?)))
                } else {
                    Ok(PValue::Inr(Arc::new(self.items(&cat(w, false), depth, gen)?)))
                }
            }
            Protocol::StarP(u) => {
                if depth == 0 || self.rng.gen_bool(0.35) {
                    Ok(PValue::Inl(Arc::new(self.items(rest, depth, gen)?)))
                } else {
                    Ok(PValue::Inr(Arc::new(self.items(&cat(u, true), depth - 1, gen)?)))
                }
            }
            Protocol::StarX(u) => {
                let id = self.next_id;
                self.next_id += 1;
                let n = self.rng.gen_range(1..=depth.max(1));
                let mut states = Vec::with_capacity(n);
                for _ in 0..n {
                    let stop = self.items(rest, depth, gen)?;
                    let step = self.items(&u.items(), depth, LeafGen::Hole(id, n))?;
                    states.push((stop, step));
                }
                let start = self.rng.gen_range(0..n);
                Ok(coalgebra_state(Arc::new(states), id, start))
            }
            Protocol::Done | Protocol::Seq(_) => {
                let mut v = head.items();
                v.extend_from_slice(rest);
                self.items(&v, depth, gen)
            }
        }
    }
}

fn coalgebra_state(states: Arc<Vec<(PValue, PValue)>>, id: u64, i: usize) -> PValue {
    PValue::lazy(move || {
        let (stop, step) = &states[i];
        let step = fill_holes(step, id, &states);
        Ok(PValue::Pair(Arc::new(stop.clone()), Arc::new(step)))
    })
}

fn fill_holes(p: &PValue, id: u64, states: &Arc<Vec<(PValue, PValue)>>) -> PValue {
    use PValue as P;
    match p {
        P::Hole(h, i) if *h == id => coalgebra_state(states.clone(), id, *i),
        P::Hole(..) | P::Payload(_) => p.clone(),
        P::With(q, b) => P::With(Arc::new(fill_holes(q, id, states)), b.clone()),
        P::Msg(v, q) => P::Msg(v.clone(), Arc::new(fill_holes(q, id, states))),
        P::Table(t) => P::Table(Arc::new(
            t.iter()
                .map(|(k, q)| (k.clone(), fill_holes(q, id, states)))
                .collect(),
        )),
        P::Pair(a, b) => P::Pair(
            Arc::new(fill_holes(a, id, states)),
            Arc::new(fill_holes(b, id, states)),
        ),
        P::Inl(q) => P::Inl(Arc::new(fill_holes(q, id, states))),
        P::Inr(q) => P::Inr(Arc::new(fill_holes(q, id, states))),
        P::Lazy(_) => {
            let (p, states) = (p.clone(), states.clone());
            PValue::lazy(move || Ok(fill_holes(&p.force()?, id, &states)))
        }
    }
}

/// `n` pseudo-random elements of `u`, deterministic in `seed`.
pub fn sample_pvals(
    u: &Protocol,
    payloads: &[Value],
    val: &Valuation,
    depth: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<PValue>> {
    let mut s = Sampler::new(val, payloads, seed);
    (0..n).map(|_| s.pvalue(u, depth)).collect()
}

/// Bounds for extensional comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckConfig {
    pub depth: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            depth: 4,
            samples: 64,
            seed: 0xFCC,
        }
    }
}

/// Past this many inputs, exhaustive checking gives way to sampling.
pub const ENUMERATION_LIMIT: u128 = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Holds { instances: usize, exhaustive: bool },
    Fails { witness: String },
    Skipped,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds { .. })
    }

    pub fn fails(&self) -> bool {
        matches!(self, Verdict::Fails { .. })
    }
}

fn payload_atoms() -> Vec<Value> {
    vec![Value::atom("x0"), Value::atom("x1")]
}

/// Left and top values to run a cell on.
pub type Inputs = Vec<(PValue, Value)>;

/// Inputs `(left, top)` for the boundary: all of them when few enough and
/// enumerable, else `cfg.samples` random ones. `None` means there is
/// nothing to run (sampling disabled on a non-enumerable boundary).
pub fn test_inputs(
    b: &Boundary,
    val: &Valuation,
    cfg: &CheckConfig,
) -> Result<Option<(Inputs, bool)>> {
    let payloads = payload_atoms();
    let tops = val.enumerate_values(&b.top).ok();
    let lefts = count_pvals(&b.left, payloads.len(), val);
    if let (Some(tops), Some(nl)) = (&tops, lefts) {
        if nl.saturating_mul(tops.len() as u128) <= ENUMERATION_LIMIT {
            let lefts = enumerate_pvals(&b.left, &payloads, val)?;
            let inputs = lefts
                .iter()
                .flat_map(|l| tops.iter().map(move |t| (l.clone(), t.clone())))
                .collect();
            return Ok(Some((inputs, true)));
        }
    }
    if cfg.samples == 0 {
        return Ok(None);
    }
    let mut s = Sampler::new(val, &payloads, cfg.seed);
    let inputs = (0..cfg.samples)
        .map(|_| {
            let l = s.pvalue(&b.left, cfg.depth)?;
            let t = s.value(&b.top);
            Ok((l, t))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Some((inputs, false)))
}

/// Compares two denotations on the given inputs.
pub fn agree_on(
    d1: &Denotation,
    d2: &Denotation,
    inputs: &[(PValue, Value)],
    depth: usize,
) -> Result<Option<String>> {
    for (l, t) in inputs {
        let o1 = d1.apply(l, t)?;
        let o2 = d2.apply(l, t)?;
        if !pval_equal(&o1, &o2, depth)? {
            return Ok(Some(format!(
                "left {l}, top {t}: {} vs {}",
                Shown(&o1, depth),
                Shown(&o2, depth)
            )));
        }
    }
    Ok(None)
}

/// Extensional equality of two cells with the same boundary.
pub fn cells_equal(c1: &Cell, c2: &Cell, val: &Arc<Valuation>, cfg: &CheckConfig) -> Result<Verdict> {
    let d1 = denote(c1, val)?;
    let d2 = denote(c2, val)?;
    if !d1.boundary().equiv(d2.boundary()) {
        return Err(SemError::BoundaryMismatch(
            Box::new(d1.boundary().clone()),
            Box::new(d2.boundary().clone()),
        ));
    }
    let Some((inputs, exhaustive)) = test_inputs(d1.boundary(), val, cfg)? else {
        return Ok(Verdict::Skipped);
    };
    Ok(match agree_on(&d1, &d2, &inputs, cfg.depth)? {
        None => Verdict::Holds {
            instances: inputs.len(),
            exhaustive,
        },
        Some(witness) => Verdict::Fails { witness },
    })
}

/// Display helper that unfolds handles to a bounded depth.
pub struct Shown<'a>(pub &'a PValue, pub usize);

impl fmt::Display for Shown<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Shown(p, depth) = *self;
        match p {
            PValue::Lazy(_) if depth == 0 => write!(f, "#handle"),
            PValue::Lazy(_) => match p.force_pair() {
                Ok((l, r)) => write!(f, "#<{}, {}>", Shown(&l, depth - 1), Shown(&r, depth - 1)),
                Err(e) => write!(f, "#error({e})"),
            },
            PValue::Payload(v) => write!(f, "{v}"),
            PValue::With(q, b) => write!(f, "{} @ {b}", Shown(q, depth)),
            PValue::Msg(v, q) => write!(f, "({v}, {})", Shown(q, depth)),
            PValue::Table(t) => {
                write!(f, "{{")?;
                for (i, (k, q)) in t.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{k} -> {}", Shown(q, depth))?;
                }
                write!(f, "}}")
            }
            PValue::Pair(a, b) => write!(f, "<{}, {}>", Shown(a, depth), Shown(b, depth)),
            PValue::Inl(q) => write!(f, "L {}", Shown(q, depth)),
            PValue::Inr(q) => write!(f, "R {}", Shown(q, depth)),
            PValue::Hole(i, j) => write!(f, "?{i}.{j}"),
        }
    }
}

impl fmt::Display for PValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", Shown(self, 0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::{MorExpr, Signature};
    use std::collections::BTreeMap;

    fn o(n: &str) -> ObjExpr {
        ObjExpr::gen(n)
    }

    fn val() -> Arc<Valuation> {
        let mut sig = Signature::new();
        sig.add_object("A");
        sig.add_object("N");
        sig.add_morphism("f", o("A"), o("A")).unwrap();
        let carriers = BTreeMap::from([
            ("A".to_string(), Carrier::Finite(vec!["a0".into(), "a1".into()])),
            ("N".to_string(), Carrier::Countable),
        ]);
        let tables = BTreeMap::from([(
            "f".to_string(),
            BTreeMap::from([
                (Value::atom("a0"), Value::atom("a1")),
                (Value::atom("a1"), Value::atom("a1")),
            ]),
        )]);
        Arc::new(Valuation::new(sig, carriers, tables).unwrap())
    }

    #[test]
    fn zigzag_equals_identity() {
        let v = val();
        let cfg = CheckConfig::default();
        let zig = Cell::hcomp(Cell::PutR(o("A")), Cell::GetL(o("A")));
        assert!(cells_equal(&zig, &Cell::IdV(o("A")), &v, &cfg).unwrap().holds());
        let zag = Cell::hcomp(Cell::GetR(o("A")), Cell::PutL(o("A")));
        assert!(cells_equal(&zag, &Cell::IdV(o("A")), &v, &cfg).unwrap().holds());
        let snake = Cell::vcomp(Cell::GetR(o("A")), Cell::PutL(o("A")));
        assert!(cells_equal(&snake, &Cell::IdH(Protocol::recv(o("A"))), &v, &cfg)
            .unwrap()
            .holds());
    }

    #[test]
    fn promote_identity_carries_payload() {
        let v = val();
        let d = denote(&Cell::Promote(MorExpr::Id(o("A"))), &v).unwrap();
        let out = d
            .apply(&PValue::Payload(Value::atom("x")), &Value::atom("a0"))
            .unwrap();
        assert!(pval_equal(
            &out,
            &with(PValue::Payload(Value::atom("x")), Value::atom("a0")),
            0
        )
        .unwrap());
    }

    #[test]
    fn different_promotes_differ() {
        let v = val();
        let cfg = CheckConfig::default();
        let verdict = cells_equal(
            &Cell::Promote(MorExpr::gen("f")),
            &Cell::IdV(o("A")),
            &v,
            &cfg,
        )
        .unwrap();
        assert!(verdict.fails());
    }

    #[test]
    fn enumeration_counts() {
        let v = val();
        let xs = [Value::atom("x1"), Value::atom("x2")];
        assert_eq!(enumerate_pvals(&Protocol::Done, &xs, &v).unwrap().len(), 2);
        assert_eq!(
            enumerate_pvals(&Protocol::send(o("A")), &xs[..1], &v)
                .unwrap()
                .len(),
            2
        );
        assert!(matches!(
            enumerate_pvals(&Protocol::star_p(Protocol::send(o("A"))), &xs, &v),
            Err(SemError::NotEnumerable(_))
        ));
        let recv = Protocol::recv(o("A"));
        assert_eq!(enumerate_pvals(&recv, &xs, &v).unwrap().len(), 4);
        assert_eq!(count_pvals(&recv, 2, &v), Some(4));
    }

    #[test]
    fn tables_differing_in_one_entry_are_unequal() {
        let v = val();
        let xs = [Value::atom("x1"), Value::atom("x2")];
        let all = enumerate_pvals(&Protocol::recv(o("A")), &xs, &v).unwrap();
        assert!(!pval_equal(&all[0], &all[1], 4).unwrap());
        assert!(pval_equal(&all[1], &all[1], 4).unwrap());
    }

    fn tree_height(p: &PValue) -> usize {
        match p {
            PValue::Inl(_) => 0,
            PValue::Inr(q) => match &**q {
                PValue::Msg(_, rest) => 1 + tree_height(rest),
                _ => unreachable!(),
            },
            _ => unreachable!(),
        }
    }

    #[test]
    fn sampling_is_deterministic_and_bounded() {
        let v = val();
        let xs = [Value::atom("x")];
        let u = Protocol::star_p(Protocol::send(o("A")));
        let s1 = sample_pvals(&u, &xs, &v, 2, 50, 7).unwrap();
        let s2 = sample_pvals(&u, &xs, &v, 2, 50, 7).unwrap();
        for (p, q) in s1.iter().zip(&s2) {
            assert!(pval_equal(p, q, 8).unwrap());
            assert!(tree_height(p) <= 2);
        }
        assert!(sample_pvals(&u, &xs, &v, 2, 0, 7).unwrap().is_empty());
    }

    #[test]
    fn sampled_handles_are_productive() {
        let v = val();
        let xs = [Value::atom("x")];
        let u = Protocol::star_x(Protocol::seq([
            Protocol::send(o("A")),
            Protocol::recv(o("A")),
        ]));
        for p in sample_pvals(&u, &xs, &v, 3, 10, 1).unwrap() {
            let mut cur = p;
            for _ in 0..10 {
                let (_, step) = cur.force_pair().unwrap();
                let PValue::Msg(_, t) = step else { panic!() };
                let PValue::Table(t) = &*t else { panic!() };
                cur = t[0].1.clone();
            }
        }
    }

    #[test]
    fn countable_receive_is_rejected() {
        let v = val();
        assert!(matches!(
            denote(&Cell::GetR(o("N")), &v),
            Err(SemError::InfiniteRecvCarrier(_))
        ));
    }
}
