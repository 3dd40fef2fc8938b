//! Directed rewriting of cell terms.
//!
//! Strategy is leftmost-innermost. Composites are first brought into
//! left-nested form, so a rule for `x | y` also fires on `(p | x) | y`,
//! and likewise for `/`. When no rule applies to `x | y`, a vertical
//! composite on either side may be slid past the other by interchange.

use std::fmt;

use crate::cell::{Cell, Path};
use crate::protocol::Protocol;
use crate::signature::{MorExpr, ObjExpr, Signature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleId {
    YankHCircle,
    YankVCircle,
    YankHBullet,
    YankVBullet,
    CornerCompose,
    CornerTensor,
    CornerId,
    BetaPi0,
    BetaPi1,
    BetaInj0,
    BetaInj1,
    BetaCopair0,
    BetaCopair1,
    BetaIterX0,
    BetaIterX1,
    BetaIterP0,
    BetaIterP1,
    UnitElim,
    InterchangeAssoc,
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A deliberately wrong variant of one rule, used to check that the
/// soundness suite notices broken rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// `times(a, b) | pi0` rewrites to `b`.
    BetaPi0PicksSecond,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteReport {
    pub steps: Vec<(RuleId, Path)>,
    pub result: Cell,
    pub budget_exhausted: bool,
}

/// One leftmost-innermost rewrite step, with the rule and the position it
/// fired at.
pub fn rewrite_step(c: &Cell) -> Option<(Cell, RuleId, Path)> {
    rewrite_step_with(c, None)
}

pub fn rewrite_step_with(c: &Cell, mutation: Option<Mutation>) -> Option<(Cell, RuleId, Path)> {
    let mut path = Vec::new();
    find(c, &mut path, mutation)
}

/// Rewrites to a normal form or until `budget` steps have been taken.
pub fn normalize_cell(c: &Cell, budget: usize) -> RewriteReport {
    normalize_cell_with(c, budget, None)
}

pub fn normalize_cell_with(c: &Cell, budget: usize, mutation: Option<Mutation>) -> RewriteReport {
    let mut cur = c.clone();
    let mut steps = Vec::new();
    while steps.len() < budget {
        match rewrite_step_with(&cur, mutation) {
            Some((next, rule, pos)) => {
                steps.push((rule, pos));
                cur = next;
            }
            None => break,
        }
    }
    let budget_exhausted = steps.len() == budget && rewrite_step_with(&cur, mutation).is_some();
    RewriteReport {
        steps,
        result: cur,
        budget_exhausted,
    }
}

/// Applies the recorded rule at each recorded position.
pub fn replay(c: &Cell, steps: &[(RuleId, Path)]) -> Option<Cell> {
    let mut cur = c.clone();
    for (rule, pos) in steps {
        let sub = cur.at(pos)?;
        let (new, fired) = root_rule(sub, None)?;
        if fired != *rule {
            return None;
        }
        *cur.at_mut(pos)? = new;
    }
    Some(cur)
}

fn find(c: &Cell, path: &mut Path, m: Option<Mutation>) -> Option<(Cell, RuleId, Path)> {
    for (i, kid) in c.children().into_iter().enumerate() {
        path.push(i);
        if let Some((new_kid, rule, pos)) = find(kid, path, m) {
            let mut out = c.clone();
            *out.children_mut().into_iter().nth(i).expect("child") = new_kid;
            return Some((out, rule, pos));
        }
        path.pop();
    }
    root_rule(c, m).map(|(out, rule)| (out, rule, path.clone()))
}

/// Domain of a morphism built from identities only.
fn identity_obj(f: &MorExpr) -> Option<ObjExpr> {
    match f {
        MorExpr::Id(a) => Some(a.normalize()),
        MorExpr::Compose(g, h) => {
            let (a, b) = (identity_obj(g)?, identity_obj(h)?);
            (a == b).then_some(a)
        }
        MorExpr::Tensor(g, h) => Some(ObjExpr::tensor(identity_obj(g)?, identity_obj(h)?)),
        _ => None,
    }
}

fn is_hunit(c: &Cell) -> bool {
    match c {
        Cell::IdH(_) => true,
        Cell::IdV(a) => a.is_unit(),
        _ => false,
    }
}

fn is_vunit(c: &Cell) -> bool {
    match c {
        Cell::IdV(_) => true,
        Cell::IdH(u) => u.is_done(),
        _ => false,
    }
}

fn root_rule(c: &Cell, m: Option<Mutation>) -> Option<(Cell, RuleId)> {
    match c {
        Cell::Promote(f) => identity_obj(f).map(|a| (Cell::IdV(a), RuleId::CornerId)),
        Cell::HComp(l, r) => {
            if let Cell::HComp(b, c2) = &**r {
                let assoc = Cell::hcomp(Cell::hcomp((**l).clone(), (**b).clone()), (**c2).clone());
                return Some((assoc, RuleId::InterchangeAssoc));
            }
            if is_hunit(r) {
                return Some(((**l).clone(), RuleId::UnitElim));
            }
            if is_hunit(l) {
                return Some(((**r).clone(), RuleId::UnitElim));
            }
            let (prefix, last) = match &**l {
                Cell::HComp(p, q) => (Some(&**p), &**q),
                other => (None, other),
            };
            if let Some((z, rule)) = pair_h(last, r, m) {
                return Some((
                    match prefix {
                        Some(p) => Cell::hcomp(p.clone(), z),
                        None => z,
                    },
                    rule,
                ));
            }
            slide(l, r).map(|z| (z, RuleId::InterchangeAssoc))
        }
        Cell::VComp(u, d) => {
            if let Cell::VComp(b, c2) = &**d {
                let assoc = Cell::vcomp(Cell::vcomp((**u).clone(), (**b).clone()), (**c2).clone());
                return Some((assoc, RuleId::InterchangeAssoc));
            }
            if is_vunit(d) {
                return Some(((**u).clone(), RuleId::UnitElim));
            }
            if is_vunit(u) {
                return Some(((**d).clone(), RuleId::UnitElim));
            }
            let (prefix, last) = match &**u {
                Cell::VComp(p, q) => (Some(&**p), &**q),
                other => (None, other),
            };
            let (z, rule) = pair_v(last, d)?;
            Some((
                match prefix {
                    Some(p) => Cell::vcomp(p.clone(), z),
                    None => z,
                },
                rule,
            ))
        }
        _ => None,
    }
}

/// Interchange with identity padding:
/// `(a / b) | x = (a | 1) / (b | x)` when `a` has right side `I`, and
/// `y | (c / d) = (y | c) / (1 | d)` when `d` has left side `I`.
/// Fires only when the padding object can be read off without a signature.
fn slide(l: &Cell, r: &Cell) -> Option<Cell> {
    if let Cell::VComp(a, b) = l {
        if !is_vunit(r) && sides(a).1.is_done() {
            if let Some(t) = top_of(r) {
                return Some(Cell::vcomp(
                    Cell::hcomp((**a).clone(), Cell::IdV(t)),
                    Cell::hcomp((**b).clone(), r.clone()),
                ));
            }
        }
    }
    if let Cell::VComp(c, d) = r {
        if !is_vunit(l) && sides(d).0.is_done() {
            if let Some(t) = bottom_of(l) {
                return Some(Cell::vcomp(
                    Cell::hcomp(l.clone(), (**c).clone()),
                    Cell::hcomp(Cell::IdV(t), (**d).clone()),
                ));
            }
        }
    }
    None
}

/// Left and right sides of a cell; these never depend on the signature.
fn sides(c: &Cell) -> (Protocol, Protocol) {
    use Cell as C;
    let done = Protocol::Done;
    match c {
        C::Promote(_) | C::IdV(_) => (done.clone(), done),
        C::GetL(a) => (Protocol::send(a.clone()), done),
        C::PutR(a) => (done, Protocol::send(a.clone())),
        C::GetR(a) => (done, Protocol::recv(a.clone())),
        C::PutL(a) => (Protocol::recv(a.clone()), done),
        C::IdH(u) => (u.clone(), u.clone()),
        C::HComp(a, b) => (sides(a).0, sides(b).1),
        C::VComp(a, b) => {
            let ((al, ar), (bl, br)) = (sides(a), sides(b));
            (Protocol::seq([al, bl]), Protocol::seq([ar, br]))
        }
        C::Pi0(u, w) => (Protocol::choose(u.clone(), w.clone()), u.clone()),
        C::Pi1(u, w) => (Protocol::choose(u.clone(), w.clone()), w.clone()),
        C::Inj0(u, w) => (u.clone(), Protocol::offer(u.clone(), w.clone())),
        C::Inj1(u, w) => (w.clone(), Protocol::offer(u.clone(), w.clone())),
        C::Times(a, b) => (sides(a).0, Protocol::choose(sides(a).1, sides(b).1)),
        C::Plus(a, b) => (Protocol::offer(sides(a).0, sides(b).0), sides(a).1),
        C::CopairC(a, _) => sides(a),
        C::IterX(alpha, f, _) => {
            let (fl, fr) = sides(f);
            (fl, Protocol::seq([Protocol::star_x(sides(alpha).1), fr]))
        }
        C::IterP(alpha, f, _) => {
            let (fl, fr) = sides(f);
            (Protocol::seq([Protocol::star_p(sides(alpha).0), fl]), fr)
        }
    }
}

/// Type of a morphism built without generator morphisms.
fn mor_type(f: &MorExpr) -> Option<(ObjExpr, ObjExpr)> {
    let mut sig = Signature::new();
    mor_objects(f, &mut sig);
    sig.infer_mor_type(f).ok()
}

fn mor_objects(f: &MorExpr, sig: &mut Signature) {
    fn names(e: &ObjExpr, sig: &mut Signature) {
        match e {
            ObjExpr::Gen(n) => sig.add_object(n.clone()),
            ObjExpr::Unit => {}
            ObjExpr::Tensor(ps) => ps.iter().for_each(|p| names(p, sig)),
            ObjExpr::Sum(a, b) => {
                names(a, sig);
                names(b, sig);
            }
            ObjExpr::Stack(a) => names(a, sig),
        }
    }
    match f {
        MorExpr::Gen(_) => {}
        MorExpr::Compose(g, h) | MorExpr::Tensor(g, h) | MorExpr::Copair(g, h) => {
            mor_objects(g, sig);
            mor_objects(h, sig);
        }
        MorExpr::Id(a) | MorExpr::Nil(a) | MorExpr::Push(a) | MorExpr::Pop(a) | MorExpr::Const(a, _) => {
            names(a, sig)
        }
        MorExpr::Braid(a, b) | MorExpr::Inj0(a, b) | MorExpr::Inj1(a, b) => {
            names(a, sig);
            names(b, sig);
        }
        MorExpr::DistR(a, b, c)
        | MorExpr::UndistR(a, b, c)
        | MorExpr::DistL(a, b, c)
        | MorExpr::UndistL(a, b, c) => {
            names(a, sig);
            names(b, sig);
            names(c, sig);
        }
    }
}

fn top_of(c: &Cell) -> Option<ObjExpr> {
    use Cell as C;
    Some(match c {
        C::Promote(f) => mor_type(f)?.0,
        C::PutR(a) | C::PutL(a) | C::IdV(a) => a.clone(),
        C::GetL(_) | C::GetR(_) | C::IdH(_) => ObjExpr::Unit,
        C::Pi0(..) | C::Pi1(..) | C::Inj0(..) | C::Inj1(..) => ObjExpr::Unit,
        C::HComp(a, b) => ObjExpr::tensor(top_of(a)?, top_of(b)?),
        C::VComp(a, _) | C::Times(a, _) | C::Plus(a, _) => top_of(a)?,
        C::CopairC(a, b) => ObjExpr::sum(top_of(a)?, top_of(b)?),
        C::IterX(alpha, _, _) | C::IterP(alpha, _, _) => top_of(alpha)?,
    })
}

fn bottom_of(c: &Cell) -> Option<ObjExpr> {
    use Cell as C;
    Some(match c {
        C::Promote(f) => mor_type(f)?.1,
        C::GetL(a) | C::GetR(a) | C::IdV(a) => a.clone(),
        C::PutR(_) | C::PutL(_) | C::IdH(_) => ObjExpr::Unit,
        C::Pi0(..) | C::Pi1(..) | C::Inj0(..) | C::Inj1(..) => ObjExpr::Unit,
        C::HComp(a, b) => ObjExpr::tensor(bottom_of(a)?, bottom_of(b)?),
        C::VComp(_, b) => bottom_of(b)?,
        C::Times(a, _) | C::Plus(a, _) | C::CopairC(a, _) => bottom_of(a)?,
        C::IterX(_, f, _) | C::IterP(_, f, _) => bottom_of(f)?,
    })
}

/// `pi_i` on its own, or `pi_i / id K`.
fn projection(c: &Cell) -> Option<bool> {
    match c {
        Cell::Pi0(..) => Some(false),
        Cell::Pi1(..) => Some(true),
        Cell::VComp(p, k) if matches!(&**k, Cell::IdH(_)) => match &**p {
            Cell::Pi0(..) => Some(false),
            Cell::Pi1(..) => Some(true),
            _ => None,
        },
        _ => None,
    }
}

/// `in_i` on its own, or `in_i / id K`.
fn injection(c: &Cell) -> Option<bool> {
    match c {
        Cell::Inj0(..) => Some(false),
        Cell::Inj1(..) => Some(true),
        Cell::VComp(p, k) if matches!(&**k, Cell::IdH(_)) => match &**p {
            Cell::Inj0(..) => Some(false),
            Cell::Inj1(..) => Some(true),
            _ => None,
        },
        _ => None,
    }
}

fn pair_h(x: &Cell, y: &Cell, m: Option<Mutation>) -> Option<(Cell, RuleId)> {
    use Cell as C;
    let out = match (x, y) {
        (C::PutR(a), C::GetL(b)) if a == b => (C::IdV(a.clone()), RuleId::YankHCircle),
        (C::GetR(a), C::PutL(b)) if a == b => (C::IdV(a.clone()), RuleId::YankHBullet),
        (C::Promote(f), C::Promote(g)) => (
            C::Promote(f.clone().tensor(g.clone())),
            RuleId::CornerTensor,
        ),
        (C::Promote(f), C::IdV(b)) => (
            C::Promote(f.clone().tensor(MorExpr::Id(b.clone()))),
            RuleId::CornerTensor,
        ),
        (C::IdV(a), C::Promote(g)) => (
            C::Promote(MorExpr::Id(a.clone()).tensor(g.clone())),
            RuleId::CornerTensor,
        ),
        (C::IdV(a), C::IdV(b)) => (
            C::IdV(ObjExpr::tensor(a.clone(), b.clone())),
            RuleId::CornerTensor,
        ),
        (C::Times(a, b), C::Pi0(..)) => {
            if m == Some(Mutation::BetaPi0PicksSecond) {
                ((**b).clone(), RuleId::BetaPi0)
            } else {
                ((**a).clone(), RuleId::BetaPi0)
            }
        }
        (C::Times(_, b), C::Pi1(..)) => ((**b).clone(), RuleId::BetaPi1),
        (C::Inj0(..), C::Plus(a, _)) => ((**a).clone(), RuleId::BetaInj0),
        (C::Inj1(..), C::Plus(_, b)) => ((**b).clone(), RuleId::BetaInj1),
        (C::IterX(alpha, f, g), proj) => match projection(proj)? {
            false => ((**f).clone(), RuleId::BetaIterX0),
            true => (
                C::hcomp((**g).clone(), C::vcomp((**alpha).clone(), x.clone())),
                RuleId::BetaIterX1,
            ),
        },
        (inj, C::IterP(alpha, f, g)) => match injection(inj)? {
            false => ((**f).clone(), RuleId::BetaIterP0),
            true => (
                C::hcomp(C::vcomp((**alpha).clone(), y.clone()), (**g).clone()),
                RuleId::BetaIterP1,
            ),
        },
        _ => return None,
    };
    Some(out)
}

fn pair_v(x: &Cell, y: &Cell) -> Option<(Cell, RuleId)> {
    use Cell as C;
    let out = match (x, y) {
        (C::GetL(a), C::PutR(b)) if a == b => (
            C::IdH(crate::protocol::Protocol::send(a.clone())),
            RuleId::YankVCircle,
        ),
        (C::GetR(a), C::PutL(b)) if a == b => (
            C::IdH(crate::protocol::Protocol::recv(a.clone())),
            RuleId::YankVBullet,
        ),
        (C::Promote(f), C::Promote(g)) => (C::Promote(f.clone().then(g.clone())), RuleId::CornerCompose),
        (C::Promote(MorExpr::Inj0(..)), C::CopairC(a, _)) => ((**a).clone(), RuleId::BetaCopair0),
        (C::Promote(MorExpr::Inj1(..)), C::CopairC(_, b)) => ((**b).clone(), RuleId::BetaCopair1),
        _ => return None,
    };
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::infer_boundary;
    use crate::derived::crossing;

    fn a() -> ObjExpr {
        ObjExpr::gen("A")
    }

    fn sig() -> Signature {
        let mut s = Signature::new();
        s.add_object("A");
        s.add_object("B");
        s
    }

    #[test]
    fn yank_fires() {
        let c = Cell::hcomp(Cell::PutR(a()), Cell::GetL(a()));
        let (out, rule, pos) = rewrite_step(&c).unwrap();
        assert_eq!(out, Cell::IdV(a()));
        assert_eq!(rule, RuleId::YankHCircle);
        assert!(pos.is_empty());
    }

    #[test]
    fn projection_of_pairing() {
        let x = Cell::hcomp(Cell::GetL(a()), Cell::PutR(a()));
        let y = Cell::IdH(Protocol::send(a()));
        let c = Cell::hcomp(
            Cell::times(x.clone(), y),
            Cell::Pi0(Protocol::send(a()), Protocol::send(a())),
        );
        let report = normalize_cell(&c, 100);
        assert_eq!(report.steps[0].0, RuleId::BetaPi0);
        assert_eq!(report.result, x);
    }

    #[test]
    fn normal_forms_are_fixed() {
        assert!(rewrite_step(&Cell::IdV(a())).is_none());
        let it = Cell::iter_x(
            Cell::IdH(Protocol::send(a())),
            Cell::IdH(Protocol::star_x(Protocol::send(a()))),
            Cell::Pi1(
                Protocol::Done,
                Protocol::seq([Protocol::send(a()), Protocol::star_x(Protocol::send(a()))]),
            ),
        );
        let report = normalize_cell(&it, 0);
        assert_eq!(report.result, it);
        assert!(!report.budget_exhausted);
        assert!(report.steps.is_empty());
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let c = Cell::hcomp(Cell::PutR(a()), Cell::GetL(a()));
        let report = normalize_cell(&c, 0);
        assert!(report.budget_exhausted);
        assert_eq!(report.result, c);
    }

    #[test]
    fn assoc_exposes_redex() {
        let c = Cell::hcomp(
            Cell::IdV(ObjExpr::gen("B")),
            Cell::hcomp(Cell::PutR(a()), Cell::GetL(a())),
        );
        let report = normalize_cell(&c, 100);
        assert_eq!(report.result, Cell::IdV(ObjExpr::tensor(ObjExpr::gen("B"), a())));
    }

    #[test]
    fn steps_replay_and_preserve_boundaries() {
        let sig = sig();
        let c = crossing(&Protocol::send(ObjExpr::gen("B")), &a());
        let report = normalize_cell(&c, 1000);
        assert_eq!(replay(&c, &report.steps).unwrap(), report.result);
        let mut cur = c.clone();
        let before = infer_boundary(&c, &sig).unwrap();
        while let Some((next, _, _)) = rewrite_step(&cur) {
            assert!(infer_boundary(&next, &sig).unwrap().equiv(&before));
            cur = next;
        }
    }

    #[test]
    fn mutation_changes_result() {
        let x = Cell::IdH(Protocol::send(a()));
        let y = Cell::hcomp(Cell::GetL(a()), Cell::PutR(a()));
        let c = Cell::hcomp(
            Cell::times(x.clone(), y.clone()),
            Cell::Pi0(Protocol::send(a()), Protocol::send(a())),
        );
        let (out, _, _) = rewrite_step_with(&c, Some(Mutation::BetaPi0PicksSecond)).unwrap();
        assert_eq!(out, y);
    }
}
