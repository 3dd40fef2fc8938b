//! Random generators: objects, protocols, well-typed cells with a chosen
//! left side and top, and finite Mealy machines.
//!
//! Cells are built boundary-first, so every generated term typechecks.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cell::{infer_boundary, Boundary, Cell};
use crate::derived::{crossing, mealy_cell, p_tail, simple_iter_p, simple_iter_x, x_tail};
use crate::protocol::Protocol;
use crate::signature::{Carrier, MorExpr, ObjExpr, Signature, Valuation, Value};

pub struct Gen<'a> {
    val: &'a Valuation,
    rng: ChaCha8Rng,
    atoms: Vec<ObjExpr>,
    mors: Vec<(MorExpr, ObjExpr, ObjExpr)>,
}

impl<'a> Gen<'a> {
    pub fn new(val: &'a Valuation, seed: u64) -> Self {
        let sig = val.signature();
        let atoms: Vec<ObjExpr> = sig
            .objects
            .iter()
            .map(ObjExpr::gen)
            .filter(|o| val.is_enumerable(o))
            .collect();
        let mors = sig
            .morphisms
            .iter()
            .filter(|(_, (d, c))| val.is_enumerable(d) && val.is_enumerable(c))
            .map(|(n, (d, c))| (MorExpr::gen(n.clone()), d.normalize(), c.normalize()))
            .collect();
        Gen {
            val,
            rng: ChaCha8Rng::seed_from_u64(seed),
            atoms,
            mors,
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn signature(&self) -> &Signature {
        self.val.signature()
    }

    /// Generator objects with finite carriers.
    pub fn atoms(&self) -> &[ObjExpr] {
        &self.atoms
    }

    pub fn boundary(&self, c: &Cell) -> Boundary {
        infer_boundary(c, self.signature()).expect("generated cells typecheck")
    }

    pub fn atom(&mut self) -> ObjExpr {
        self.atoms.choose(&mut self.rng).cloned().unwrap_or(ObjExpr::Unit)
    }

    pub fn object(&mut self, size: usize) -> ObjExpr {
        if size == 0 || self.atoms.is_empty() {
            return if self.rng.gen_bool(0.1) {
                ObjExpr::Unit
            } else {
                self.atom()
            };
        }
        match self.rng.gen_range(0..10) {
            0..=5 => self.atom(),
            6..=8 => ObjExpr::tensor(self.object(size - 1), self.object(size - 1)),
            _ => ObjExpr::sum(self.object(size - 1), self.object(size - 1)),
        }
    }

    pub fn value(&mut self, e: &ObjExpr) -> Value {
        let all = self.val.enumerate_values(e).expect("enumerable object");
        all.choose(&mut self.rng).cloned().expect("nonempty carrier")
    }

    pub fn protocol(&mut self, size: usize, iterate: bool) -> Protocol {
        if size == 0 || self.atoms.is_empty() {
            return match self.rng.gen_range(0..5) {
                0 => Protocol::Done,
                1 | 2 => Protocol::send(self.atom()),
                _ => Protocol::recv(self.atom()),
            };
        }
        let n = if iterate { 8 } else { 6 };
        match self.rng.gen_range(0..n) {
            0 | 1 => self.protocol(0, iterate),
            2 | 3 => Protocol::seq([self.protocol(size - 1, iterate), self.protocol(size - 1, iterate)]),
            4 => Protocol::choose(self.protocol(size - 1, iterate), self.protocol(size - 1, iterate)),
            5 => Protocol::offer(self.protocol(size - 1, iterate), self.protocol(size - 1, iterate)),
            6 => Protocol::star_x(self.protocol(size - 1, false)),
            _ => Protocol::star_p(self.protocol(size - 1, false)),
        }
    }

    /// A protocol with no `recv`, so that it has a producer cell.
    pub fn send_protocol(&mut self, size: usize) -> Protocol {
        if size == 0 || self.atoms.is_empty() {
            return if self.rng.gen_bool(0.2) {
                Protocol::Done
            } else {
                Protocol::send(self.atom())
            };
        }
        match self.rng.gen_range(0..7) {
            0 | 1 => self.send_protocol(0),
            2 => Protocol::seq([self.send_protocol(size - 1), self.send_protocol(size - 1)]),
            3 => Protocol::choose(self.send_protocol(size - 1), self.send_protocol(size - 1)),
            4 => Protocol::offer(self.send_protocol(size - 1), self.send_protocol(size - 1)),
            5 => Protocol::star_x(self.send_protocol(size - 1)),
            _ => Protocol::star_p(self.send_protocol(size - 1)),
        }
    }

    /// A random morphism out of `a`, with its codomain.
    pub fn morphism_from(&mut self, a: &ObjExpr, size: usize) -> (MorExpr, ObjExpr) {
        let a = a.normalize();
        let mut options: Vec<(MorExpr, ObjExpr)> = vec![(MorExpr::Id(a.clone()), a.clone())];
        for (m, d, c) in &self.mors {
            if *d == a {
                options.push((m.clone(), c.clone()));
                options.push((m.clone(), c.clone()));
            }
        }
        let fs = a.factors();
        if fs.len() >= 2 {
            let k = self.rng.gen_range(1..fs.len());
            let (x, y) = (
                ObjExpr::from_factors(fs[..k].to_vec()),
                ObjExpr::from_factors(fs[k..].to_vec()),
            );
            options.push((MorExpr::Braid(x.clone(), y.clone()), ObjExpr::tensor(y, x)));
        }
        if a.is_unit() && !self.atoms.is_empty() {
            let b = self.atom();
            let v = self.value(&b);
            options.push((MorExpr::Const(b.clone(), v), b));
        }
        if !self.atoms.is_empty() {
            let b = self.atom();
            options.push((MorExpr::Inj0(a.clone(), b.clone()), ObjExpr::sum(a.clone(), b.clone())));
            options.push((MorExpr::Inj1(b.clone(), a.clone()), ObjExpr::sum(b, a.clone())));
        }
        if let ObjExpr::Sum(x, y) = &a {
            let swap = MorExpr::copair(
                MorExpr::Inj1((**y).clone(), (**x).clone()),
                MorExpr::Inj0((**y).clone(), (**x).clone()),
            );
            options.push((swap, ObjExpr::sum((**y).clone(), (**x).clone())));
        }
        if let Some(ObjExpr::Sum(x, y)) = fs.first() {
            if fs.len() >= 2 {
                let rest = ObjExpr::from_factors(fs[1..].to_vec());
                let cod = ObjExpr::sum(
                    ObjExpr::tensor((**x).clone(), rest.clone()),
                    ObjExpr::tensor((**y).clone(), rest.clone()),
                );
                options.push((MorExpr::DistR((**x).clone(), (**y).clone(), rest), cod));
            }
        }
        let (m, cod) = options.choose(&mut self.rng).cloned().expect("identity is always possible");
        if size > 0 && self.rng.gen_bool(0.3) {
            let (n, cod2) = self.morphism_from(&cod, size - 1);
            return (m.then(n), cod2);
        }
        (m, cod.normalize())
    }

    /// Makes the two cells' bottoms agree by injecting both into a sum.
    pub fn join_bottoms(&mut self, a: Cell, b: Cell) -> (Cell, Cell) {
        let (ba, bb) = (self.boundary(&a).bottom, self.boundary(&b).bottom);
        if ba == bb {
            return (a, b);
        }
        (
            Cell::vcomp(a, Cell::Promote(MorExpr::Inj0(ba.clone(), bb.clone()))),
            Cell::vcomp(b, Cell::Promote(MorExpr::Inj1(ba, bb))),
        )
    }

    /// A random cell with left side `left` and top `top`.
    pub fn cell(&mut self, left: &Protocol, top: &ObjExpr, size: usize) -> Cell {
        self.build(left, top, size, false)
    }

    /// Like [`Gen::cell`], aiming for right side `I`; `None` if that failed.
    pub fn closed_cell(&mut self, left: &Protocol, top: &ObjExpr, size: usize) -> Option<Cell> {
        for _ in 0..8 {
            let c = self.build(left, top, size, true);
            if self.boundary(&c).right.is_done() {
                return Some(c);
            }
        }
        None
    }

    /// A cell with left `left` and top and bottom both `top`.
    pub fn square(&mut self, left: &Protocol, top: &ObjExpr, size: usize) -> Cell {
        let top = top.normalize();
        for _ in 0..6 {
            let c = self.build(left, &top, size, false);
            if self.boundary(&c).bottom == top {
                return c;
            }
        }
        crossing(left, &top)
    }

    /// A free-standing random cell.
    pub fn any_cell(&mut self, size: usize) -> Cell {
        let left = self.protocol(1, true);
        let top = self.object(1);
        self.cell(&left, &top, size)
    }

    fn build(&mut self, left: &Protocol, top: &ObjExpr, size: usize, closed: bool) -> Cell {
        let left = left.normalize();
        let top = top.normalize();
        if size == 0 {
            return self.leaf(&left, &top, closed);
        }
        let items = left.items();
        let half = size / 2;
        match self.rng.gen_range(0..9) {
            0 | 1 => {
                let k = self.rng.gen_range(0..=items.len());
                let l1 = Protocol::from_items(items[..k].to_vec());
                let l2 = Protocol::from_items(items[k..].to_vec());
                let x = self.build(&l1, &top, half, closed);
                let bx = self.boundary(&x).bottom;
                let y = self.build(&l2, &bx, half, closed);
                Cell::vcomp(x, y)
            }
            2 | 3 => {
                let fs = top.factors();
                let k = self.rng.gen_range(0..=fs.len());
                let (t1, t2) = (
                    ObjExpr::from_factors(fs[..k].to_vec()),
                    ObjExpr::from_factors(fs[k..].to_vec()),
                );
                let x = self.build(&left, &t1, half, false);
                let rx = self.boundary(&x).right;
                let y = self.build(&rx, &t2, half, closed);
                Cell::hcomp(x, y)
            }
            4 if !closed => {
                let a = self.build(&left, &top, half, false);
                let b = self.build(&left, &top, half, false);
                let (a, b) = self.join_bottoms(a, b);
                Cell::times(a, b)
            }
            5 => {
                if let ObjExpr::Sum(x, y) = &top {
                    let a = self.closed_cell(&left, x, half);
                    let b = self.closed_cell(&left, y, half);
                    if let (Some(a), Some(b)) = (a, b) {
                        let (a, b) = self.join_bottoms(a, b);
                        return Cell::copair(a, b);
                    }
                }
                self.leaf(&left, &top, closed)
            }
            6 => {
                let (m, cod) = self.morphism_from(&top, 1);
                let rest = self.build(&left, &cod, size - 1, closed);
                Cell::vcomp(Cell::Promote(m), rest)
            }
            _ => self.leaf(&left, &top, closed),
        }
    }

    fn leaf(&mut self, left: &Protocol, top: &ObjExpr, closed: bool) -> Cell {
        let items = left.items();
        match items.len() {
            0 => self.closed_leaf(top, closed),
            1 => self.item_leaf(&items[0], top, closed),
            _ => {
                let x = self.item_leaf(&items[0], top, closed);
                let bx = self.boundary(&x).bottom;
                let rest = Protocol::from_items(items[1..].to_vec());
                let y = self.leaf(&rest, &bx, closed);
                Cell::vcomp(x, y)
            }
        }
    }

    fn closed_leaf(&mut self, top: &ObjExpr, closed: bool) -> Cell {
        let n = if closed { 2 } else { 4 };
        match self.rng.gen_range(0..n) {
            0 => Cell::IdV(top.clone()),
            1 => Cell::Promote(self.morphism_from(top, 1).0),
            2 if !top.is_unit() => Cell::PutR(top.clone()),
            _ => {
                let b = self.atom();
                Cell::hcomp(Cell::IdV(top.clone()), Cell::GetR(b))
            }
        }
    }

    fn item_leaf(&mut self, item: &Protocol, top: &ObjExpr, closed: bool) -> Cell {
        let open_crossing = !closed && self.rng.gen_bool(0.3);
        if open_crossing {
            return crossing(item, top);
        }
        match item {
            Protocol::Send(a) => Cell::hcomp(Cell::GetL(a.clone()), Cell::IdV(top.clone())),
            Protocol::Recv(a) => {
                if *top == *a {
                    return Cell::PutL(a.clone());
                }
                let v = self.value(a);
                Cell::vcomp(
                    Cell::Promote(MorExpr::Const(a.clone(), v).tensor(MorExpr::Id(top.clone()))),
                    Cell::hcomp(Cell::PutL(a.clone()), Cell::IdV(top.clone())),
                )
            }
            Protocol::Choose(u, w) => {
                let pick = self.rng.gen_bool(0.5);
                let (p, next) = if pick {
                    (Cell::Pi1((**u).clone(), (**w).clone()), (**w).clone())
                } else {
                    (Cell::Pi0((**u).clone(), (**w).clone()), (**u).clone())
                };
                Cell::hcomp(p, self.leaf(&next, top, closed))
            }
            Protocol::Offer(u, w) => {
                let a = self.leaf(u, top, true);
                let b = self.leaf(w, top, true);
                let (ra, rb) = (self.boundary(&a).right, self.boundary(&b).right);
                if ra.is_done() && rb.is_done() {
                    let (a, b) = self.join_bottoms(a, b);
                    Cell::plus(a, b)
                } else {
                    crossing(item, top)
                }
            }
            Protocol::StarX(u) => {
                if closed || self.rng.gen_bool(0.5) {
                    Cell::hcomp(Cell::Pi0(Protocol::Done, x_tail(u)), self.closed_leaf(top, closed))
                } else {
                    let alpha = self.square(u, top, 0);
                    simple_iter_x(&alpha, self.signature()).expect("square")
                }
            }
            Protocol::StarP(u) => {
                if !closed && self.rng.gen_bool(0.6) {
                    let alpha = self.square(u, top, 0);
                    return simple_iter_p(&alpha, self.signature()).expect("square");
                }
                // Closed: absorb each step into the state when possible.
                let alpha = self.build(u, top, 0, true);
                let b = self.boundary(&alpha);
                if b.right.is_done() && b.bottom == b.top {
                    Cell::iter_p(alpha, Cell::IdV(top.clone()), Cell::IdH(Protocol::Done))
                } else {
                    crossing(item, top)
                }
            }
            Protocol::Done | Protocol::Seq(_) => self.leaf(item, top, closed),
        }
    }

    /// A horizontal cell `[left | I -> I | W]` for some `W`.
    pub fn hcell(&mut self, left: &Protocol) -> Cell {
        let items = left.normalize().items();
        let cells: Vec<Cell> = items.iter().map(|p| self.hcell_item(p)).collect();
        if cells.is_empty() {
            return Cell::IdH(Protocol::Done);
        }
        Cell::vcomp_all(cells)
    }

    fn hcell_item(&mut self, p: &Protocol) -> Cell {
        if self.rng.gen_bool(0.15) {
            return Cell::IdH(p.clone());
        }
        match p {
            Protocol::Send(a) => {
                let (m, b) = self.morphism_from(a, 1);
                Cell::vcomp_all([Cell::GetL(a.clone()), Cell::Promote(m), Cell::PutR(b)])
            }
            Protocol::Recv(a) => {
                let into: Vec<MorExpr> = self
                    .mors
                    .iter()
                    .filter(|(_, _, c)| c == a)
                    .map(|(m, _, _)| m.clone())
                    .collect();
                let (m, b) = match into.choose(&mut self.rng) {
                    Some(m) if self.rng.gen_bool(0.6) => {
                        let (d, _) = self.signature().infer_mor_type(m).expect("typed");
                        (m.clone(), d)
                    }
                    _ => (MorExpr::Id(a.clone()), a.clone()),
                };
                Cell::vcomp_all([Cell::GetR(b), Cell::Promote(m), Cell::PutL(a.clone())])
            }
            Protocol::Choose(u, w) => {
                let (u, w) = ((**u).clone(), (**w).clone());
                match self.rng.gen_range(0..3) {
                    0 => Cell::hcomp(Cell::Pi0(u.clone(), w), self.hcell(&u)),
                    1 => Cell::hcomp(Cell::Pi1(u, w.clone()), self.hcell(&w)),
                    _ => Cell::times(
                        Cell::hcomp(Cell::Pi0(u.clone(), w.clone()), self.hcell(&u)),
                        Cell::hcomp(Cell::Pi1(u.clone(), w.clone()), self.hcell(&w)),
                    ),
                }
            }
            Protocol::Offer(u, w) => {
                let (a, b) = (self.hcell(u), self.hcell(w));
                let (x, y) = (self.boundary(&a).right, self.boundary(&b).right);
                Cell::plus(
                    Cell::hcomp(a, Cell::Inj0(x.clone(), y.clone())),
                    Cell::hcomp(b, Cell::Inj1(x, y)),
                )
            }
            Protocol::StarX(u) => {
                let h = self.hcell(u);
                simple_iter_x(&h, self.signature()).expect("square")
            }
            Protocol::StarP(u) => {
                let h = self.hcell(u);
                simple_iter_p(&h, self.signature()).expect("square")
            }
            Protocol::Done | Protocol::Seq(_) => self.hcell(p),
        }
    }

    /// A cell `[I | I -> I | right]`; `None` when `right` receives.
    pub fn producer(&mut self, right: &Protocol, fuel: usize) -> Option<Cell> {
        let items = right.normalize().items();
        let mut cells = Vec::with_capacity(items.len());
        for p in &items {
            cells.push(self.produce_item(p, fuel)?);
        }
        if cells.is_empty() {
            return Some(Cell::IdH(Protocol::Done));
        }
        Some(Cell::vcomp_all(cells))
    }

    fn produce_item(&mut self, p: &Protocol, fuel: usize) -> Option<Cell> {
        Some(match p {
            Protocol::Send(a) => {
                let v = self.value(a);
                Cell::vcomp(Cell::Promote(MorExpr::Const(a.clone(), v)), Cell::PutR(a.clone()))
            }
            Protocol::Recv(_) => return None,
            Protocol::Choose(u, w) => Cell::times(self.producer(u, fuel)?, self.producer(w, fuel)?),
            Protocol::Offer(u, w) => {
                if self.rng.gen_bool(0.5) {
                    Cell::hcomp(self.producer(u, fuel)?, Cell::Inj0((**u).clone(), (**w).clone()))
                } else {
                    Cell::hcomp(self.producer(w, fuel)?, Cell::Inj1((**u).clone(), (**w).clone()))
                }
            }
            Protocol::StarX(u) => Cell::iter_x(
                self.producer(u, fuel)?,
                Cell::IdH(Protocol::Done),
                Cell::IdH(Protocol::Done),
            ),
            Protocol::StarP(u) => {
                if fuel == 0 || self.rng.gen_bool(0.4) {
                    Cell::Inj0(Protocol::Done, p_tail(u))
                } else {
                    let step = self.producer(u, fuel - 1)?;
                    let more = self.produce_item(p, fuel - 1)?;
                    Cell::hcomp(Cell::vcomp(step, more), Cell::Inj1(Protocol::Done, p_tail(u)))
                }
            }
            Protocol::Done | Protocol::Seq(_) => self.producer(p, fuel)?,
        })
    }
}

/// A finite Mealy machine: `table[a][s] = (s', b)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mealy {
    pub states: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub table: Vec<Vec<(usize, usize)>>,
}

impl Mealy {
    pub fn random(rng: &mut impl Rng, states: usize, inputs: usize, outputs: usize) -> Self {
        let table = (0..inputs)
            .map(|_| {
                (0..states)
                    .map(|_| (rng.gen_range(0..states), rng.gen_range(0..outputs)))
                    .collect()
            })
            .collect();
        Mealy {
            states,
            inputs,
            outputs,
            table,
        }
    }

    pub fn state(i: usize) -> Value {
        Value::atom(format!("s{i}"))
    }

    pub fn input(i: usize) -> Value {
        Value::atom(format!("i{i}"))
    }

    pub fn output(i: usize) -> Value {
        Value::atom(format!("o{i}"))
    }

    /// Objects `A`, `S`, `B` and the step morphism `m : A * S -> S * B`.
    pub fn valuation(&self) -> Arc<Valuation> {
        let mut sig = Signature::new();
        for o in ["A", "S", "B"] {
            sig.add_object(o);
        }
        let (a, s, b) = (ObjExpr::gen("A"), ObjExpr::gen("S"), ObjExpr::gen("B"));
        sig.add_morphism("m", ObjExpr::tensor(a, s.clone()), ObjExpr::tensor(s, b))
            .expect("objects declared");
        let names = |n: usize, p: &str| (0..n).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
        let carriers = BTreeMap::from([
            ("A".to_string(), Carrier::Finite(names(self.inputs, "i"))),
            ("S".to_string(), Carrier::Finite(names(self.states, "s"))),
            ("B".to_string(), Carrier::Finite(names(self.outputs, "o"))),
        ]);
        let mut table = BTreeMap::new();
        for (a, row) in self.table.iter().enumerate() {
            for (s, &(s2, b)) in row.iter().enumerate() {
                table.insert(
                    Value::from_factors(vec![Self::input(a), Self::state(s)]),
                    Value::from_factors(vec![Self::state(s2), Self::output(b)]),
                );
            }
        }
        let tables = BTreeMap::from([("m".to_string(), table)]);
        Arc::new(Valuation::new(sig, carriers, tables).expect("total table"))
    }

    /// The step cell `[A° | S -> S | B°]`.
    pub fn cell(&self) -> Cell {
        mealy_cell(
            &ObjExpr::gen("A"),
            &ObjExpr::gen("S"),
            &ObjExpr::gen("B"),
            MorExpr::gen("m"),
        )
    }
}
