//! Builders for derived cells: crossings, the tensor of cells, iteration
//! structure on `^x`/`^+` protocols, the isomorphisms relating sums of
//! objects to choices of protocols, and a few closing helpers.

use crate::cell::{infer_boundary, Cell, CellError};
use crate::protocol::Protocol;
use crate::signature::{MorExpr, ObjExpr, SigError, Signature, Valuation, Value};

/// `Seq[U, U^x]`, the step branch of an unfolded `U^x`.
pub fn x_tail(u: &Protocol) -> Protocol {
    Protocol::seq([u.clone(), Protocol::star_x(u.clone())])
}

/// `Seq[U, U^+]`, the step branch of an unfolded `U^+`.
pub fn p_tail(u: &Protocol) -> Protocol {
    Protocol::seq([u.clone(), Protocol::star_p(u.clone())])
}

/// The crossing cell `[U | A -> A | U]` that carries `A` across `U`.
pub fn crossing(u: &Protocol, a: &ObjExpr) -> Cell {
    let a = a.normalize();
    let items = u.items();
    if items.is_empty() {
        return Cell::IdV(a);
    }
    if items.len() > 1 {
        return Cell::vcomp_all(items.iter().map(|p| crossing(p, &a)));
    }
    match &items[0] {
        Protocol::Send(b) => Cell::vcomp_all([
            Cell::hcomp(Cell::GetL(b.clone()), Cell::IdV(a.clone())),
            Cell::Promote(MorExpr::Braid(b.clone(), a.clone())),
            Cell::hcomp(Cell::IdV(a.clone()), Cell::PutR(b.clone())),
        ]),
        Protocol::Recv(b) => Cell::vcomp_all([
            Cell::hcomp(Cell::IdV(a.clone()), Cell::GetR(b.clone())),
            Cell::Promote(MorExpr::Braid(a.clone(), b.clone())),
            Cell::hcomp(Cell::PutL(b.clone()), Cell::IdV(a.clone())),
        ]),
        Protocol::Choose(u1, w1) => Cell::times(
            Cell::hcomp(Cell::Pi0((**u1).clone(), (**w1).clone()), crossing(u1, &a)),
            Cell::hcomp(Cell::Pi1((**u1).clone(), (**w1).clone()), crossing(w1, &a)),
        ),
        Protocol::Offer(u1, w1) => Cell::plus(
            Cell::hcomp(crossing(u1, &a), Cell::Inj0((**u1).clone(), (**w1).clone())),
            Cell::hcomp(crossing(w1, &a), Cell::Inj1((**u1).clone(), (**w1).clone())),
        ),
        Protocol::StarX(v) => iter_x_square(crossing(v, &a), v, &a),
        Protocol::StarP(v) => iter_p_square(crossing(v, &a), v, v, &a),
        Protocol::Done | Protocol::Seq(_) => unreachable!("items are atoms"),
    }
}

fn iter_x_square(alpha: Cell, left: &Protocol, a: &ObjExpr) -> Cell {
    let done = Protocol::Done;
    Cell::iter_x(
        alpha,
        Cell::hcomp(Cell::Pi0(done.clone(), x_tail(left)), Cell::IdV(a.clone())),
        Cell::Pi1(done, x_tail(left)),
    )
}

fn iter_p_square(alpha: Cell, _left: &Protocol, right: &Protocol, a: &ObjExpr) -> Cell {
    let done = Protocol::Done;
    Cell::iter_p(
        alpha,
        Cell::hcomp(Cell::IdV(a.clone()), Cell::Inj0(done.clone(), p_tail(right))),
        Cell::Inj1(done, p_tail(right)),
    )
}

/// `a^x = IterX(a, pi0 | 1, pi1)` for a square `a : [U | A -> A | W]`,
/// giving `[U^x | A -> A | W^x]`.
pub fn simple_iter_x(a: &Cell, sig: &Signature) -> Result<Cell, CellError> {
    let b = infer_boundary(a, sig)?;
    if b.top != b.bottom {
        return Err(CellError::NotSquare {
            top: b.top,
            bottom: b.bottom,
        });
    }
    Ok(iter_x_square(a.clone(), &b.left, &b.top))
}

/// `a^+ = IterP(a, 1 | in0, in1)` for a square `a : [U | A -> A | W]`,
/// giving `[U^+ | A -> A | W^+]`.
pub fn simple_iter_p(a: &Cell, sig: &Signature) -> Result<Cell, CellError> {
    let b = infer_boundary(a, sig)?;
    if b.top != b.bottom {
        return Err(CellError::NotSquare {
            top: b.top,
            bottom: b.bottom,
        });
    }
    Ok(iter_p_square(a.clone(), &b.left, &b.right, &b.top))
}

/// The tensor of two cells: `a` runs first, its right boundary crossing
/// the top of `b`, then `b` runs with the bottom of `a` crossing its left.
pub fn tensor_cells(a: &Cell, b: &Cell, sig: &Signature) -> Result<Cell, CellError> {
    let ba = infer_boundary(a, sig)?;
    let bb = infer_boundary(b, sig)?;
    Ok(Cell::vcomp(
        Cell::hcomp(a.clone(), crossing(&ba.right, &bb.top)),
        Cell::hcomp(crossing(&bb.left, &ba.bottom), b.clone()),
    ))
}

/// The two ways of passing `c` past `alpha : [U | A -> B | W]`:
/// `alpha | cross{W, C}` and `braid ; (cross{U, C} | alpha) ; braid`.
pub fn crossing_swap_sides(
    alpha: &Cell,
    c: &ObjExpr,
    sig: &Signature,
) -> Result<(Cell, Cell), CellError> {
    let b = infer_boundary(alpha, sig)?;
    let lhs = Cell::hcomp(alpha.clone(), crossing(&b.right, c));
    let rhs = Cell::vcomp_all([
        Cell::Promote(MorExpr::Braid(b.top.clone(), c.clone())),
        Cell::hcomp(crossing(&b.left, c), alpha.clone()),
        Cell::Promote(MorExpr::Braid(c.clone(), b.bottom.clone())),
    ]);
    Ok((lhs, rhs))
}

/// Comultiplication `[U^x | I -> I | U^x * U^x]` and counit `[U^x | I -> I | I]`.
pub fn comonoid_x(u: &Protocol) -> (Cell, Cell) {
    let star = Protocol::star_x(u.clone());
    let delta = Cell::iter_x(
        Cell::IdH(u.clone()),
        Cell::IdH(star),
        Cell::Pi1(Protocol::Done, x_tail(u)),
    );
    (delta, Cell::Pi0(Protocol::Done, x_tail(u)))
}

/// Multiplication `[U^+ * U^+ | I -> I | U^+]` and unit `[I | I -> I | U^+]`.
pub fn monoid_p(u: &Protocol) -> (Cell, Cell) {
    let star = Protocol::star_p(u.clone());
    let nabla = Cell::iter_p(
        Cell::IdH(u.clone()),
        Cell::IdH(star),
        Cell::Inj1(Protocol::Done, p_tail(u)),
    );
    (nabla, Cell::Inj0(Protocol::Done, p_tail(u)))
}

/// Counit `[U^x | I -> I | U]` and comultiplication `[U^x | I -> I | U^x^x]`.
pub fn comonad_x(u: &Protocol) -> (Cell, Cell) {
    let eps = Cell::hcomp(
        Cell::Pi1(Protocol::Done, x_tail(u)),
        Cell::vcomp(Cell::IdH(u.clone()), Cell::Pi0(Protocol::Done, x_tail(u))),
    );
    let (delta, _) = comonoid_x(u);
    let dup = Cell::iter_x(
        Cell::IdH(Protocol::star_x(u.clone())),
        Cell::Pi0(Protocol::Done, x_tail(u)),
        delta,
    );
    (eps, dup)
}

/// Unit `[U | I -> I | U^+]` and multiplication `[U^+^+ | I -> I | U^+]`.
pub fn monad_p(u: &Protocol) -> (Cell, Cell) {
    let eta = Cell::hcomp(
        Cell::vcomp(Cell::IdH(u.clone()), Cell::Inj0(Protocol::Done, p_tail(u))),
        Cell::Inj1(Protocol::Done, p_tail(u)),
    );
    let (nabla, _) = monoid_p(u);
    let mu = Cell::iter_p(
        Cell::IdH(Protocol::star_p(u.clone())),
        Cell::Inj0(Protocol::Done, p_tail(u)),
        nabla,
    );
    (eta, mu)
}

/// `gamma : [A° + B° | I -> A (+) B | I]` and `delta : [I | A (+) B -> I | A° + B°]`.
pub fn moral_equiv_send(a: &ObjExpr, b: &ObjExpr) -> (Cell, Cell) {
    let (sa, sb) = (Protocol::send(a.clone()), Protocol::send(b.clone()));
    let gamma = Cell::plus(
        Cell::vcomp(Cell::GetL(a.clone()), Cell::Promote(MorExpr::Inj0(a.clone(), b.clone()))),
        Cell::vcomp(Cell::GetL(b.clone()), Cell::Promote(MorExpr::Inj1(a.clone(), b.clone()))),
    );
    let delta = Cell::copair(
        Cell::hcomp(Cell::PutR(a.clone()), Cell::Inj0(sa.clone(), sb.clone())),
        Cell::hcomp(Cell::PutR(b.clone()), Cell::Inj1(sa, sb)),
    );
    (gamma, delta)
}

/// Mutually inverse horizontal cells between `(A (+) B)°` and `A° + B°`.
pub fn send_sum_iso(a: &ObjExpr, b: &ObjExpr) -> (Cell, Cell) {
    let sum = ObjExpr::sum(a.clone(), b.clone());
    let (gamma, delta) = moral_equiv_send(a, b);
    (
        Cell::vcomp(Cell::GetL(sum.clone()), delta),
        Cell::vcomp(gamma, Cell::PutR(sum)),
    )
}

/// Mutually inverse horizontal cells between `(A (+) B)•` and `A• x B•`.
pub fn recv_sum_iso(a: &ObjExpr, b: &ObjExpr) -> (Cell, Cell) {
    let sum = ObjExpr::sum(a.clone(), b.clone());
    let (ra, rb) = (Protocol::recv(a.clone()), Protocol::recv(b.clone()));
    let restrict = |x: &ObjExpr, inj: MorExpr| {
        Cell::vcomp(
            Cell::GetR(x.clone()),
            Cell::vcomp(Cell::Promote(inj), Cell::PutL(sum.clone())),
        )
    };
    let to = Cell::times(
        restrict(a, MorExpr::Inj0(a.clone(), b.clone())),
        restrict(b, MorExpr::Inj1(a.clone(), b.clone())),
    );
    let from = Cell::vcomp(
        Cell::GetR(sum.clone()),
        Cell::copair(
            Cell::hcomp(Cell::Pi0(ra.clone(), rb.clone()), Cell::PutL(a.clone())),
            Cell::hcomp(Cell::Pi1(ra, rb), Cell::PutL(b.clone())),
        ),
    );
    (to, from)
}

/// `[I | I -> I | (A°)^+]`: takes the step branch and sends each value of
/// `word` in turn, then stops.
pub fn word_sender(word: &[Value], a: &ObjExpr, val: &Valuation) -> Result<Cell, SigError> {
    if let Some(bad) = word.iter().find(|v| !val.check_value(v, a)) {
        return Err(SigError::IllTypedValue {
            value: bad.clone(),
            expected: a.clone(),
        });
    }
    Ok(word_sender_cell(word, a))
}

/// As [`word_sender`] without checking the word against a valuation.
pub fn word_sender_cell(word: &[Value], a: &ObjExpr) -> Cell {
    let send = Protocol::send(a.clone());
    match word.split_first() {
        None => Cell::Inj0(Protocol::Done, p_tail(&send)),
        Some((v, rest)) => Cell::hcomp(
            Cell::vcomp_all([
                Cell::Promote(MorExpr::Const(a.clone(), v.clone())),
                Cell::PutR(a.clone()),
                word_sender_cell(rest, a),
            ]),
            Cell::Inj1(Protocol::Done, p_tail(&send)),
        ),
    }
}

/// Mealy machine step `[A° | S -> S | B°]` for `m : A * S -> S * B`.
pub fn mealy_cell(a: &ObjExpr, s: &ObjExpr, b: &ObjExpr, m: MorExpr) -> Cell {
    Cell::vcomp_all([
        Cell::hcomp(Cell::GetL(a.clone()), Cell::IdV(s.clone())),
        Cell::Promote(m),
        Cell::hcomp(Cell::IdV(s.clone()), Cell::PutR(b.clone())),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::Boundary;

    fn sig() -> Signature {
        let mut s = Signature::new();
        for n in ["A", "B", "S"] {
            s.add_object(n);
        }
        s
    }

    fn o(n: &str) -> ObjExpr {
        ObjExpr::gen(n)
    }

    fn check(c: &Cell, expect: Boundary) {
        let b = infer_boundary(c, &sig()).unwrap();
        assert!(b.equiv(&expect), "{b} vs {expect}");
    }

    #[test]
    fn crossing_boundaries() {
        let sig = sig();
        let protos = [
            Protocol::Done,
            Protocol::send(o("B")),
            Protocol::recv(o("B")),
            Protocol::choose(Protocol::send(o("B")), Protocol::recv(o("A"))),
            Protocol::offer(Protocol::Done, Protocol::send(o("B"))),
            Protocol::star_x(Protocol::send(o("B"))),
            Protocol::star_p(Protocol::seq([Protocol::send(o("B")), Protocol::recv(o("A"))])),
        ];
        for u in protos {
            for a in [ObjExpr::Unit, o("A"), ObjExpr::tensor(o("A"), o("S"))] {
                let b = infer_boundary(&crossing(&u, &a), &sig).unwrap();
                assert!(b.equiv(&Boundary::new(u.clone(), a.clone(), a.clone(), u.clone())));
            }
        }
        assert_eq!(crossing(&Protocol::Done, &o("A")), Cell::IdV(o("A")));
        let (u, w) = (Protocol::send(o("A")), Protocol::recv(o("B")));
        assert_eq!(
            crossing(&Protocol::seq([u.clone(), w.clone()]), &o("S")),
            Cell::vcomp(crossing(&u, &o("S")), crossing(&w, &o("S")))
        );
    }

    #[test]
    fn tensor_of_corners() {
        let c = tensor_cells(&Cell::PutR(o("A")), &Cell::GetL(o("B")), &sig()).unwrap();
        check(
            &c,
            Boundary::new(Protocol::send(o("B")), o("A"), o("B"), Protocol::send(o("A"))),
        );
    }

    #[test]
    fn simple_iterators() {
        let sig = sig();
        let mistyped = mealy_cell(&o("A"), &o("S"), &o("B"), MorExpr::Braid(o("A"), o("S")));
        assert!(simple_iter_p(&mistyped, &sig).is_err());
        let good = mealy_cell(&o("A"), &o("S"), &o("A"), MorExpr::Braid(o("A"), o("S")));
        let plus = simple_iter_p(&good, &sig).unwrap();
        check(
            &plus,
            Boundary::new(
                Protocol::star_p(Protocol::send(o("A"))),
                o("S"),
                o("S"),
                Protocol::star_p(Protocol::send(o("A"))),
            ),
        );
        let x = simple_iter_x(&crossing(&Protocol::send(o("B")), &o("A")), &sig).unwrap();
        let sx = Protocol::star_x(Protocol::send(o("B")));
        check(&x, Boundary::new(sx.clone(), o("A"), o("A"), sx));
        assert!(matches!(
            simple_iter_x(&Cell::GetL(o("A")), &sig),
            Err(CellError::NotSquare { .. })
        ));
    }

    #[test]
    fn iteration_structure_boundaries() {
        let u = Protocol::send(o("A"));
        let (sx, sp) = (Protocol::star_x(u.clone()), Protocol::star_p(u.clone()));
        let (d, e) = comonoid_x(&u);
        check(&d, Boundary::new(sx.clone(), ObjExpr::Unit, ObjExpr::Unit, Protocol::seq([sx.clone(), sx.clone()])));
        check(&e, Boundary::new(sx.clone(), ObjExpr::Unit, ObjExpr::Unit, Protocol::Done));
        assert_eq!(e, Cell::Pi0(Protocol::Done, Protocol::seq([u.clone(), sx.clone()])));
        let (n, z) = monoid_p(&u);
        check(&n, Boundary::new(Protocol::seq([sp.clone(), sp.clone()]), ObjExpr::Unit, ObjExpr::Unit, sp.clone()));
        check(&z, Boundary::new(Protocol::Done, ObjExpr::Unit, ObjExpr::Unit, sp.clone()));
        let (eps, dup) = comonad_x(&u);
        check(&eps, Boundary::new(sx.clone(), ObjExpr::Unit, ObjExpr::Unit, u.clone()));
        check(&dup, Boundary::new(sx.clone(), ObjExpr::Unit, ObjExpr::Unit, Protocol::star_x(sx.clone())));
        let (eta, mu) = monad_p(&u);
        check(&eta, Boundary::new(u.clone(), ObjExpr::Unit, ObjExpr::Unit, sp.clone()));
        check(&mu, Boundary::new(Protocol::star_p(sp.clone()), ObjExpr::Unit, ObjExpr::Unit, sp));
    }

    #[test]
    fn moral_equivalence_boundaries() {
        let (a, b) = (o("A"), o("B"));
        let sum = ObjExpr::sum(a.clone(), b.clone());
        let offer = Protocol::offer(Protocol::send(a.clone()), Protocol::send(b.clone()));
        let (g, d) = moral_equiv_send(&a, &b);
        check(&g, Boundary::new(offer.clone(), ObjExpr::Unit, sum.clone(), Protocol::Done));
        check(&d, Boundary::new(Protocol::Done, sum.clone(), ObjExpr::Unit, offer.clone()));
        let (to, from) = send_sum_iso(&a, &b);
        check(&to, Boundary::new(Protocol::send(sum.clone()), ObjExpr::Unit, ObjExpr::Unit, offer.clone()));
        check(&from, Boundary::new(offer, ObjExpr::Unit, ObjExpr::Unit, Protocol::send(sum.clone())));
        let choice = Protocol::choose(Protocol::recv(a.clone()), Protocol::recv(b.clone()));
        let (to, from) = recv_sum_iso(&a, &b);
        check(&to, Boundary::new(Protocol::recv(sum.clone()), ObjExpr::Unit, ObjExpr::Unit, choice.clone()));
        check(&from, Boundary::new(choice, ObjExpr::Unit, ObjExpr::Unit, Protocol::recv(sum)));
    }

    #[test]
    fn word_sender_boundary() {
        let sp = Protocol::star_p(Protocol::send(o("A")));
        for w in [vec![], vec![Value::atom("a")], vec![Value::atom("a"), Value::atom("b")]] {
            check(
                &word_sender_cell(&w, &o("A")),
                Boundary::new(Protocol::Done, ObjExpr::Unit, ObjExpr::Unit, sp.clone()),
            );
        }
    }
}
