//! Protocol types: the exchange monoid extended with choice and iteration.
//!
//! Equality is the monoid laws plus the two unfolding equations
//! `U^x = I x (U * U^x)` and `U^+ = I + (U * U^+)`. It is decided by a
//! bisimulation over regular trees.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::signature::ObjExpr;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    /// `A°`: the left participant hands the right one an `A`.
    Send(ObjExpr),
    /// `A•`: the right participant hands the left one an `A`.
    Recv(ObjExpr),
    Done,
    Seq(Vec<Protocol>),
    /// `U x W`: the right participant picks.
    Choose(Box<Protocol>, Box<Protocol>),
    /// `U + W`: the left participant picks.
    Offer(Box<Protocol>, Box<Protocol>),
    StarX(Box<Protocol>),
    StarP(Box<Protocol>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("protocol {0} is not an iteration")]
    NotAStar(Protocol),
}

impl Protocol {
    pub fn send(a: ObjExpr) -> Self {
        Protocol::Send(a.normalize())
    }

    pub fn recv(a: ObjExpr) -> Self {
        Protocol::Recv(a.normalize())
    }

    pub fn seq(parts: impl IntoIterator<Item = Protocol>) -> Self {
        Protocol::Seq(parts.into_iter().collect()).normalize()
    }

    pub fn choose(u: Protocol, w: Protocol) -> Self {
        Protocol::Choose(Box::new(u.normalize()), Box::new(w.normalize()))
    }

    pub fn offer(u: Protocol, w: Protocol) -> Self {
        Protocol::Offer(Box::new(u.normalize()), Box::new(w.normalize()))
    }

    pub fn star_x(u: Protocol) -> Self {
        Protocol::StarX(Box::new(u.normalize()))
    }

    pub fn star_p(u: Protocol) -> Self {
        Protocol::StarP(Box::new(u.normalize()))
    }

    /// Flat `Seq` normal form. Idempotent.
    pub fn normalize(&self) -> Protocol {
        Self::from_items(self.items())
    }

    /// The sequential factors of the normal form.
    pub fn items(&self) -> Vec<Protocol> {
        let mut out = Vec::new();
        self.push_items(&mut out);
        out
    }

    fn push_items(&self, out: &mut Vec<Protocol>) {
        match self {
            Protocol::Done => {}
            Protocol::Seq(ps) => ps.iter().for_each(|p| p.push_items(out)),
            Protocol::Send(a) => out.push(Protocol::Send(a.normalize())),
            Protocol::Recv(a) => out.push(Protocol::Recv(a.normalize())),
            Protocol::Choose(u, w) => out.push(Protocol::choose((**u).clone(), (**w).clone())),
            Protocol::Offer(u, w) => out.push(Protocol::offer((**u).clone(), (**w).clone())),
            Protocol::StarX(u) => out.push(Protocol::star_x((**u).clone())),
            Protocol::StarP(u) => out.push(Protocol::star_p((**u).clone())),
        }
    }

    pub fn from_items(mut items: Vec<Protocol>) -> Protocol {
        match items.len() {
            0 => Protocol::Done,
            1 => items.pop().unwrap(),
            _ => Protocol::Seq(items),
        }
    }

    pub fn is_done(&self) -> bool {
        self.items().is_empty()
    }

    /// True when no `^x` or `^+` occurs.
    pub fn is_iteration_free(&self) -> bool {
        match self {
            Protocol::Send(_) | Protocol::Recv(_) | Protocol::Done => true,
            Protocol::Seq(ps) => ps.iter().all(Protocol::is_iteration_free),
            Protocol::Choose(u, w) | Protocol::Offer(u, w) => {
                u.is_iteration_free() && w.is_iteration_free()
            }
            Protocol::StarX(_) | Protocol::StarP(_) => false,
        }
    }

    /// Objects appearing under `Recv`.
    pub fn recv_objects(&self) -> Vec<ObjExpr> {
        let mut out = Vec::new();
        self.collect_recv(&mut out);
        out
    }

    fn collect_recv(&self, out: &mut Vec<ObjExpr>) {
        match self {
            Protocol::Recv(a) => out.push(a.clone()),
            Protocol::Send(_) | Protocol::Done => {}
            Protocol::Seq(ps) => ps.iter().for_each(|p| p.collect_recv(out)),
            Protocol::Choose(u, w) | Protocol::Offer(u, w) => {
                u.collect_recv(out);
                w.collect_recv(out);
            }
            Protocol::StarX(u) | Protocol::StarP(u) => u.collect_recv(out),
        }
    }
}

/// `U^x ↦ I x (U * U^x)`.
pub fn unfold_star_x(p: &Protocol) -> Result<Protocol, ProtocolError> {
    match p.normalize() {
        Protocol::StarX(u) => {
            let again = Protocol::StarX(u.clone());
            Ok(Protocol::choose(Protocol::Done, Protocol::seq([*u, again])))
        }
        other => Err(ProtocolError::NotAStar(other)),
    }
}

/// `U^+ ↦ I + (U * U^+)`.
pub fn unfold_star_p(p: &Protocol) -> Result<Protocol, ProtocolError> {
    match p.normalize() {
        Protocol::StarP(u) => {
            let again = Protocol::StarP(u.clone());
            Ok(Protocol::offer(Protocol::Done, Protocol::seq([*u, again])))
        }
        other => Err(ProtocolError::NotAStar(other)),
    }
}

/// Rewrites one-step unfoldings `I x (U * U^x)` and `I + (U * U^+)` back to
/// `U^x` and `U^+`, bottom-up. The result is `proto_equal` to the input.
pub fn refold(p: &Protocol) -> Protocol {
    let folded = match p {
        Protocol::Done | Protocol::Send(_) | Protocol::Recv(_) => return p.normalize(),
        Protocol::Seq(ps) => return Protocol::seq(ps.iter().map(refold)),
        Protocol::StarX(u) => return Protocol::star_x(refold(u)),
        Protocol::StarP(u) => return Protocol::star_p(refold(u)),
        Protocol::Choose(u, w) => Protocol::choose(refold(u), refold(w)),
        Protocol::Offer(u, w) => Protocol::offer(refold(u), refold(w)),
    };
    let (Protocol::Choose(u, w) | Protocol::Offer(u, w)) = &folded else {
        unreachable!()
    };
    if !u.is_done() {
        return folded;
    }
    let mut items = w.items();
    let star = match (&folded, items.pop()) {
        (Protocol::Choose(..), Some(Protocol::StarX(body))) => Protocol::StarX(body),
        (Protocol::Offer(..), Some(Protocol::StarP(body))) => Protocol::StarP(body),
        _ => return folded,
    };
    let (Protocol::StarX(body) | Protocol::StarP(body)) = &star else {
        unreachable!()
    };
    if body.items() == items {
        star
    } else {
        folded
    }
}

fn unfold_any(p: &Protocol) -> Protocol {
    match p {
        Protocol::StarX(_) => unfold_star_x(p).expect("star"),
        Protocol::StarP(_) => unfold_star_p(p).expect("star"),
        _ => p.clone(),
    }
}

/// Equality up to the monoid and unfolding equations.
pub fn proto_equal(p: &Protocol, q: &Protocol) -> bool {
    let mut visited = HashSet::new();
    seq_equal(&p.items(), &q.items(), &mut visited)
}

fn seq_equal(ps: &[Protocol], qs: &[Protocol], visited: &mut HashSet<(Protocol, Protocol)>) -> bool {
    // Every equation relates single factors to single factors, so factor
    // lists must line up one to one.
    ps.len() == qs.len() && ps.iter().zip(qs).all(|(p, q)| atom_equal(p, q, visited))
}

fn atom_equal(p: &Protocol, q: &Protocol, visited: &mut HashSet<(Protocol, Protocol)>) -> bool {
    if p == q {
        return true;
    }
    if !visited.insert((p.clone(), q.clone())) {
        return true;
    }
    let is_star = |x: &Protocol| matches!(x, Protocol::StarX(_) | Protocol::StarP(_));
    if is_star(p) || is_star(q) {
        let (p2, q2) = (unfold_any(p), unfold_any(q));
        return atom_equal(&p2, &q2, visited);
    }
    match (p, q) {
        (Protocol::Send(a), Protocol::Send(b)) | (Protocol::Recv(a), Protocol::Recv(b)) => a == b,
        (Protocol::Choose(u1, w1), Protocol::Choose(u2, w2))
        | (Protocol::Offer(u1, w1), Protocol::Offer(u2, w2)) => {
            seq_equal(&u1.items(), &u2.items(), visited)
                && seq_equal(&w1.items(), &w2.items(), visited)
        }
        _ => false,
    }
}

impl Protocol {
    // 0: `+`, 1: `x`, 2: `*`, 3: postfix operand
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        let open = |f: &mut fmt::Formatter<'_>, mine: u8| {
            if prec > mine {
                write!(f, "(")
            } else {
                Ok(())
            }
        };
        let close = |f: &mut fmt::Formatter<'_>, mine: u8| {
            if prec > mine {
                write!(f, ")")
            } else {
                Ok(())
            }
        };
        match self {
            Protocol::Done => write!(f, "I"),
            Protocol::Send(a) => {
                write!(f, "send ")?;
                a.fmt_atom(f)
            }
            Protocol::Recv(a) => {
                write!(f, "recv ")?;
                a.fmt_atom(f)
            }
            Protocol::Seq(ps) => {
                open(f, 2)?;
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        write!(f, " * ")?;
                    }
                    p.fmt_prec(f, 3)?;
                }
                close(f, 2)
            }
            Protocol::Choose(u, w) => {
                open(f, 1)?;
                u.fmt_prec(f, 1)?;
                write!(f, " x ")?;
                w.fmt_prec(f, 2)?;
                close(f, 1)
            }
            Protocol::Offer(u, w) => {
                open(f, 0)?;
                u.fmt_prec(f, 0)?;
                write!(f, " + ")?;
                w.fmt_prec(f, 1)?;
                close(f, 0)
            }
            Protocol::StarX(u) => {
                u.fmt_prec(f, 3)?;
                write!(f, "^x")
            }
            Protocol::StarP(u) => {
                u.fmt_prec(f, 3)?;
                write!(f, "^+")
            }
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn send(n: &str) -> Protocol {
        Protocol::send(ObjExpr::gen(n))
    }

    fn recv(n: &str) -> Protocol {
        Protocol::recv(ObjExpr::gen(n))
    }

    #[test]
    fn normalize_examples() {
        let p = Protocol::Seq(vec![
            Protocol::Seq(vec![send("A"), recv("B")]),
            Protocol::Done,
        ]);
        assert_eq!(p.normalize(), Protocol::Seq(vec![send("A"), recv("B")]));
        assert_eq!(Protocol::Done.normalize(), Protocol::Done);
        let s = Protocol::Seq(vec![Protocol::StarX(Box::new(send("A")))]);
        assert_eq!(s.normalize(), Protocol::star_x(send("A")));
    }

    #[test]
    fn unfold_examples() {
        let u = send("A");
        assert_eq!(
            unfold_star_x(&Protocol::star_x(u.clone())).unwrap(),
            Protocol::choose(Protocol::Done, Protocol::seq([u.clone(), Protocol::star_x(u.clone())]))
        );
        let ab = Protocol::seq([send("A"), recv("B")]);
        assert_eq!(
            unfold_star_p(&Protocol::star_p(ab.clone())).unwrap(),
            Protocol::Offer(
                Box::new(Protocol::Done),
                Box::new(Protocol::Seq(vec![send("A"), recv("B"), Protocol::star_p(ab)]))
            )
        );
        assert!(unfold_star_x(&u).is_err());
    }

    #[test]
    fn equality_examples() {
        let u = send("A");
        let star = Protocol::star_x(u.clone());
        assert!(proto_equal(&star, &unfold_star_x(&star).unwrap()));
        assert!(proto_equal(&Protocol::Seq(vec![u.clone(), Protocol::Done]), &u));
        assert!(!proto_equal(
            &Protocol::choose(send("A"), send("B")),
            &Protocol::choose(send("B"), send("A"))
        ));
    }

    #[test]
    fn double_unfolding_is_equal_to_star() {
        let u = recv("A");
        let star = Protocol::star_p(u.clone());
        let once = unfold_star_p(&star).unwrap();
        let twice = Protocol::offer(
            Protocol::Done,
            Protocol::seq([u.clone(), once.clone()]),
        );
        assert!(proto_equal(&twice, &star));
        assert!(proto_equal(&star, &twice));
    }

    #[test]
    fn distinct_iterations_differ() {
        let u = send("A");
        let uu = Protocol::seq([u.clone(), u.clone()]);
        assert!(!proto_equal(&Protocol::star_x(u.clone()), &Protocol::star_x(uu)));
        assert!(!proto_equal(&Protocol::star_x(u.clone()), &Protocol::star_p(u)));
    }

    #[test]
    fn display_shapes() {
        let p = Protocol::star_p(Protocol::seq([send("A"), Protocol::choose(recv("B"), Protocol::Done)]));
        assert_eq!(p.to_string(), "(send A * (recv B x I))^+");
    }
}
