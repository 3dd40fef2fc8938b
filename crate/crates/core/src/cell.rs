//! Cell terms and their four-sided boundary typing.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::protocol::{proto_equal, refold, Protocol};
use crate::signature::{MorExpr, ObjExpr, SigError, Signature};

/// `[left | top -> bottom | right]`
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Boundary {
    pub left: Protocol,
    pub top: ObjExpr,
    pub bottom: ObjExpr,
    pub right: Protocol,
}

impl Boundary {
    pub fn new(left: Protocol, top: ObjExpr, bottom: ObjExpr, right: Protocol) -> Self {
        Boundary {
            left: refold(&left),
            top: top.normalize(),
            bottom: bottom.normalize(),
            right: refold(&right),
        }
    }

    /// Equality with protocols compared up to unfolding.
    pub fn equiv(&self, other: &Boundary) -> bool {
        self.top == other.top
            && self.bottom == other.bottom
            && proto_equal(&self.left, &other.left)
            && proto_equal(&self.right, &other.right)
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{} | {} -> {} | {}]",
            self.left, self.top, self.bottom, self.right
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Cell {
    Promote(MorExpr),
    GetL(ObjExpr),
    PutR(ObjExpr),
    GetR(ObjExpr),
    PutL(ObjExpr),
    IdV(ObjExpr),
    IdH(Protocol),
    HComp(Box<Cell>, Box<Cell>),
    VComp(Box<Cell>, Box<Cell>),
    Pi0(Protocol, Protocol),
    Pi1(Protocol, Protocol),
    Times(Box<Cell>, Box<Cell>),
    Inj0(Protocol, Protocol),
    Inj1(Protocol, Protocol),
    Plus(Box<Cell>, Box<Cell>),
    CopairC(Box<Cell>, Box<Cell>),
    IterX(Box<Cell>, Box<Cell>, Box<Cell>),
    IterP(Box<Cell>, Box<Cell>, Box<Cell>),
}

/// Child-index path from the root of a cell term.
pub type Path = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CellError {
    #[error("boundary mismatch at {site}: expected {expected}, found {found}")]
    BoundaryMismatch {
        site: String,
        path: Path,
        expected: String,
        found: String,
    },
    #[error("ill-typed subterm: {source}")]
    IllTypedSubterm {
        path: Path,
        #[source]
        source: SigError,
    },
    #[error("cell is not square: top {top} differs from bottom {bottom}")]
    NotSquare { top: ObjExpr, bottom: ObjExpr },
}

impl CellError {
    pub fn path(&self) -> &[usize] {
        match self {
            CellError::BoundaryMismatch { path, .. } | CellError::IllTypedSubterm { path, .. } => path,
            CellError::NotSquare { .. } => &[],
        }
    }
}

impl Cell {
    pub fn hcomp(a: Cell, b: Cell) -> Cell {
        Cell::HComp(Box::new(a), Box::new(b))
    }

    pub fn vcomp(a: Cell, b: Cell) -> Cell {
        Cell::VComp(Box::new(a), Box::new(b))
    }

    pub fn times(a: Cell, b: Cell) -> Cell {
        Cell::Times(Box::new(a), Box::new(b))
    }

    pub fn plus(a: Cell, b: Cell) -> Cell {
        Cell::Plus(Box::new(a), Box::new(b))
    }

    pub fn copair(a: Cell, b: Cell) -> Cell {
        Cell::CopairC(Box::new(a), Box::new(b))
    }

    pub fn iter_x(alpha: Cell, f: Cell, g: Cell) -> Cell {
        Cell::IterX(Box::new(alpha), Box::new(f), Box::new(g))
    }

    pub fn iter_p(alpha: Cell, f: Cell, g: Cell) -> Cell {
        Cell::IterP(Box::new(alpha), Box::new(f), Box::new(g))
    }

    /// Horizontal composite of a non-empty sequence, nested to the left.
    pub fn hcomp_all(cells: impl IntoIterator<Item = Cell>) -> Cell {
        let mut it = cells.into_iter();
        let first = it.next().expect("non-empty");
        it.fold(first, Cell::hcomp)
    }

    /// Vertical composite of a non-empty sequence, nested to the left.
    pub fn vcomp_all(cells: impl IntoIterator<Item = Cell>) -> Cell {
        let mut it = cells.into_iter();
        let first = it.next().expect("non-empty");
        it.fold(first, Cell::vcomp)
    }

    pub fn children(&self) -> Vec<&Cell> {
        match self {
            Cell::HComp(a, b)
            | Cell::VComp(a, b)
            | Cell::Times(a, b)
            | Cell::Plus(a, b)
            | Cell::CopairC(a, b) => vec![a, b],
            Cell::IterX(a, f, g) | Cell::IterP(a, f, g) => vec![a, f, g],
            _ => Vec::new(),
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Cell> {
        match self {
            Cell::HComp(a, b)
            | Cell::VComp(a, b)
            | Cell::Times(a, b)
            | Cell::Plus(a, b)
            | Cell::CopairC(a, b) => vec![a, b],
            Cell::IterX(a, f, g) | Cell::IterP(a, f, g) => vec![a, f, g],
            _ => Vec::new(),
        }
    }

    pub fn at(&self, path: &[usize]) -> Option<&Cell> {
        match path.split_first() {
            None => Some(self),
            Some((i, rest)) => self.children().get(*i)?.at(rest),
        }
    }

    pub fn at_mut(&mut self, path: &[usize]) -> Option<&mut Cell> {
        match path.split_first() {
            None => Some(self),
            Some((i, rest)) => self.children_mut().into_iter().nth(*i)?.at_mut(rest),
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn site_name(&self) -> &'static str {
        match self {
            Cell::Promote(_) => "promote",
            Cell::GetL(_) => "getL",
            Cell::PutR(_) => "putR",
            Cell::GetR(_) => "getR",
            Cell::PutL(_) => "putL",
            Cell::IdV(_) => "1",
            Cell::IdH(_) => "id",
            Cell::HComp(..) => "|",
            Cell::VComp(..) => "/",
            Cell::Pi0(..) => "pi0",
            Cell::Pi1(..) => "pi1",
            Cell::Times(..) => "times",
            Cell::Inj0(..) => "in0",
            Cell::Inj1(..) => "in1",
            Cell::Plus(..) => "plus",
            Cell::CopairC(..) => "copair",
            Cell::IterX(..) => "iterX",
            Cell::IterP(..) => "iterP",
        }
    }
}

/// A cell annotated with the boundaries of all its subterms.
#[derive(Debug, Clone)]
pub struct Typed {
    pub cell: Cell,
    pub boundary: Boundary,
    pub kids: Vec<Arc<Typed>>,
}

/// Infers the boundary of `c`.
pub fn infer_boundary(c: &Cell, sig: &Signature) -> Result<Boundary, CellError> {
    Ok(annotate(c, sig)?.boundary.clone())
}

/// Typechecks `c`, keeping the boundary of every subterm.
pub fn annotate(c: &Cell, sig: &Signature) -> Result<Arc<Typed>, CellError> {
    let mut path = Vec::new();
    annotate_at(c, sig, &mut path)
}

/// True iff the left boundary is `I`.
pub fn check_closed_left(c: &Cell, sig: &Signature) -> Result<bool, CellError> {
    Ok(infer_boundary(c, sig)?.left.is_done())
}

fn mismatch(site: &str, path: &[usize], expected: impl fmt::Display, found: impl fmt::Display) -> CellError {
    CellError::BoundaryMismatch {
        site: site.to_string(),
        path: path.to_vec(),
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

fn annotate_at(c: &Cell, sig: &Signature, path: &mut Path) -> Result<Arc<Typed>, CellError> {
    use Protocol as P;
    let obj = |e: &ObjExpr, path: &Path| {
        sig.check_obj(e).map_err(|source| CellError::IllTypedSubterm {
            path: path.clone(),
            source,
        })
    };
    let proto = |p: &Protocol, path: &Path| -> Result<(), CellError> {
        let mut objs = Vec::new();
        collect_proto_objs(p, &mut objs);
        objs.iter().try_for_each(|e| obj(e, path))
    };
    let mut kids = Vec::new();
    for (i, k) in c.children().into_iter().enumerate() {
        path.push(i);
        kids.push(annotate_at(k, sig, path)?);
        path.pop();
    }
    let kb = |i: usize| -> &Boundary { &kids[i].boundary };
    let site = c.site_name();
    let b = match c {
        Cell::Promote(f) => {
            let (a, b) = sig
                .infer_mor_type(f)
                .map_err(|source| CellError::IllTypedSubterm {
                    path: path.clone(),
                    source,
                })?;
            Boundary::new(P::Done, a, b, P::Done)
        }
        Cell::GetL(a) => {
            obj(a, path)?;
            Boundary::new(P::send(a.clone()), ObjExpr::Unit, a.clone(), P::Done)
        }
        Cell::PutR(a) => {
            obj(a, path)?;
            Boundary::new(P::Done, a.clone(), ObjExpr::Unit, P::send(a.clone()))
        }
        Cell::GetR(a) => {
            obj(a, path)?;
            Boundary::new(P::Done, ObjExpr::Unit, a.clone(), P::recv(a.clone()))
        }
        Cell::PutL(a) => {
            obj(a, path)?;
            Boundary::new(P::recv(a.clone()), a.clone(), ObjExpr::Unit, P::Done)
        }
        Cell::IdV(a) => {
            obj(a, path)?;
            Boundary::new(P::Done, a.clone(), a.clone(), P::Done)
        }
        Cell::IdH(u) => {
            proto(u, path)?;
            Boundary::new(u.clone(), ObjExpr::Unit, ObjExpr::Unit, u.clone())
        }
        Cell::HComp(..) => {
            let (l, r) = (kb(0), kb(1));
            if !proto_equal(&l.right, &r.left) {
                return Err(mismatch(site, path, &l.right, &r.left));
            }
            Boundary::new(
                l.left.clone(),
                ObjExpr::tensor(l.top.clone(), r.top.clone()),
                ObjExpr::tensor(l.bottom.clone(), r.bottom.clone()),
                r.right.clone(),
            )
        }
        Cell::VComp(..) => {
            let (u, d) = (kb(0), kb(1));
            if u.bottom != d.top {
                return Err(mismatch(site, path, &u.bottom, &d.top));
            }
            Boundary::new(
                P::seq([u.left.clone(), d.left.clone()]),
                u.top.clone(),
                d.bottom.clone(),
                P::seq([u.right.clone(), d.right.clone()]),
            )
        }
        Cell::Pi0(u, w) | Cell::Pi1(u, w) => {
            proto(u, path)?;
            proto(w, path)?;
            let out = if matches!(c, Cell::Pi0(..)) { u } else { w };
            Boundary::new(
                P::choose(u.clone(), w.clone()),
                ObjExpr::Unit,
                ObjExpr::Unit,
                out.clone(),
            )
        }
        Cell::Inj0(u, w) | Cell::Inj1(u, w) => {
            proto(u, path)?;
            proto(w, path)?;
            let inp = if matches!(c, Cell::Inj0(..)) { u } else { w };
            Boundary::new(
                inp.clone(),
                ObjExpr::Unit,
                ObjExpr::Unit,
                P::offer(u.clone(), w.clone()),
            )
        }
        Cell::Times(..) => {
            let (a, b) = (kb(0), kb(1));
            same_proto(site, path, &a.left, &b.left)?;
            same_obj(site, path, &a.top, &b.top)?;
            same_obj(site, path, &a.bottom, &b.bottom)?;
            Boundary::new(
                a.left.clone(),
                a.top.clone(),
                a.bottom.clone(),
                P::choose(a.right.clone(), b.right.clone()),
            )
        }
        Cell::Plus(..) => {
            let (a, b) = (kb(0), kb(1));
            same_proto(site, path, &a.right, &b.right)?;
            same_obj(site, path, &a.top, &b.top)?;
            same_obj(site, path, &a.bottom, &b.bottom)?;
            Boundary::new(
                P::offer(a.left.clone(), b.left.clone()),
                a.top.clone(),
                a.bottom.clone(),
                a.right.clone(),
            )
        }
        Cell::CopairC(..) => {
            let (a, b) = (kb(0), kb(1));
            same_proto(site, path, &a.left, &b.left)?;
            same_obj(site, path, &a.bottom, &b.bottom)?;
            same_proto(site, path, &a.right, &b.right)?;
            Boundary::new(
                a.left.clone(),
                ObjExpr::sum(a.top.clone(), b.top.clone()),
                a.bottom.clone(),
                a.right.clone(),
            )
        }
        Cell::IterX(..) => {
            let (alpha, f, g) = (kb(0), kb(1), kb(2));
            same_obj(site, path, &alpha.top, &alpha.bottom)?;
            same_obj(site, path, &alpha.top, &f.top)?;
            same_proto(site, path, &f.left, &g.left)?;
            same_obj(site, path, &ObjExpr::Unit, &g.top)?;
            same_obj(site, path, &ObjExpr::Unit, &g.bottom)?;
            same_proto(
                site,
                path,
                &P::seq([alpha.left.clone(), f.left.clone()]),
                &g.right,
            )?;
            Boundary::new(
                f.left.clone(),
                alpha.top.clone(),
                f.bottom.clone(),
                P::seq([P::star_x(alpha.right.clone()), f.right.clone()]),
            )
        }
        Cell::IterP(..) => {
            let (alpha, f, g) = (kb(0), kb(1), kb(2));
            same_obj(site, path, &alpha.top, &alpha.bottom)?;
            same_obj(site, path, &alpha.top, &f.top)?;
            same_proto(site, path, &f.right, &g.right)?;
            same_obj(site, path, &ObjExpr::Unit, &g.top)?;
            same_obj(site, path, &ObjExpr::Unit, &g.bottom)?;
            same_proto(
                site,
                path,
                &P::seq([alpha.right.clone(), f.right.clone()]),
                &g.left,
            )?;
            Boundary::new(
                P::seq([P::star_p(alpha.left.clone()), f.left.clone()]),
                alpha.top.clone(),
                f.bottom.clone(),
                f.right.clone(),
            )
        }
    };
    Ok(Arc::new(Typed {
        cell: c.clone(),
        boundary: b,
        kids,
    }))
}

fn same_proto(site: &str, path: &[usize], a: &Protocol, b: &Protocol) -> Result<(), CellError> {
    if proto_equal(a, b) {
        Ok(())
    } else {
        Err(mismatch(site, path, a, b))
    }
}

fn same_obj(site: &str, path: &[usize], a: &ObjExpr, b: &ObjExpr) -> Result<(), CellError> {
    if a.normalize() == b.normalize() {
        Ok(())
    } else {
        Err(mismatch(site, path, a, b))
    }
}

fn collect_proto_objs(p: &Protocol, out: &mut Vec<ObjExpr>) {
    match p {
        Protocol::Send(a) | Protocol::Recv(a) => out.push(a.clone()),
        Protocol::Done => {}
        Protocol::Seq(ps) => ps.iter().for_each(|q| collect_proto_objs(q, out)),
        Protocol::Choose(u, w) | Protocol::Offer(u, w) => {
            collect_proto_objs(u, out);
            collect_proto_objs(w, out);
        }
        Protocol::StarX(u) | Protocol::StarP(u) => collect_proto_objs(u, out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> Signature {
        let mut s = Signature::new();
        s.add_object("A");
        s.add_object("B");
        s
    }

    fn a() -> ObjExpr {
        ObjExpr::gen("A")
    }

    #[test]
    fn zigzag_has_identity_boundary() {
        let c = Cell::hcomp(Cell::PutR(a()), Cell::GetL(a()));
        let b = infer_boundary(&c, &sig()).unwrap();
        assert_eq!(b, Boundary::new(Protocol::Done, a(), a(), Protocol::Done));
        assert!(check_closed_left(&c, &sig()).unwrap());
    }

    #[test]
    fn mismatched_hcomp_rejected() {
        let c = Cell::hcomp(Cell::GetL(a()), Cell::GetL(a()));
        match infer_boundary(&c, &sig()) {
            Err(CellError::BoundaryMismatch { site, path, .. }) => {
                assert_eq!(site, "|");
                assert!(path.is_empty());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn closed_left_checks() {
        assert!(check_closed_left(&Cell::GetR(a()), &sig()).unwrap());
        assert!(!check_closed_left(&Cell::GetL(a()), &sig()).unwrap());
    }

    #[test]
    fn errors_carry_paths() {
        let bad = Cell::hcomp(
            Cell::IdV(a()),
            Cell::vcomp(Cell::GetL(a()), Cell::GetL(ObjExpr::gen("B"))),
        );
        let err = infer_boundary(&bad, &sig()).unwrap_err();
        assert_eq!(err.path(), &[1]);
    }

    #[test]
    fn unknown_object_rejected() {
        let c = Cell::IdV(ObjExpr::gen("Z"));
        assert!(matches!(
            infer_boundary(&c, &sig()),
            Err(CellError::IllTypedSubterm { .. })
        ));
    }

    #[test]
    fn iter_x_boundary() {
        let u = Protocol::send(a());
        let star = Protocol::star_x(u.clone());
        let unfolded_tail = Protocol::seq([u.clone(), star.clone()]);
        let delta = Cell::iter_x(
            Cell::IdH(u.clone()),
            Cell::IdH(star.clone()),
            Cell::Pi1(Protocol::Done, unfolded_tail),
        );
        let b = infer_boundary(&delta, &sig()).unwrap();
        assert!(b.equiv(&Boundary::new(
            star.clone(),
            ObjExpr::Unit,
            ObjExpr::Unit,
            Protocol::seq([star.clone(), star])
        )));
    }
}
