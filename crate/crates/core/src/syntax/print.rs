use std::fmt;

use crate::cell::Cell;
use crate::protocol::Protocol;

struct Postfix<'a>(&'a Protocol);

impl fmt::Display for Postfix<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Protocol::Done | Protocol::StarX(_) | Protocol::StarP(_) => write!(f, "{}", self.0),
            p => write!(f, "({p})"),
        }
    }
}

impl Cell {
    // 0: `|` operand, 1: `/` operand, 2: atom
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            Cell::Promote(m) => write!(f, "[{m}]"),
            Cell::GetL(a) => write_obj(f, "getL", a),
            Cell::PutR(a) => write_obj(f, "putR", a),
            Cell::GetR(a) => write_obj(f, "getR", a),
            Cell::PutL(a) => write_obj(f, "putL", a),
            Cell::IdV(a) => write_obj(f, "1", a),
            Cell::IdH(u) => write!(f, "id {}", Postfix(u)),
            Cell::HComp(a, b) => {
                if prec > 0 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 0)?;
                write!(f, " | ")?;
                b.fmt_prec(f, 1)?;
                if prec > 0 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Cell::VComp(a, b) => {
                if prec > 1 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 1)?;
                write!(f, " / ")?;
                b.fmt_prec(f, 2)?;
                if prec > 1 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Cell::Pi0(u, w) => write!(f, "pi0{{{u}, {w}}}"),
            Cell::Pi1(u, w) => write!(f, "pi1{{{u}, {w}}}"),
            Cell::Inj0(u, w) => write!(f, "in0{{{u}, {w}}}"),
            Cell::Inj1(u, w) => write!(f, "in1{{{u}, {w}}}"),
            Cell::Times(a, b) => write!(f, "times({a}, {b})"),
            Cell::Plus(a, b) => write!(f, "plus({a}, {b})"),
            Cell::CopairC(a, b) => write!(f, "copair({a}, {b})"),
            Cell::IterX(a, g, h) => write!(f, "iterX({a}; {g}; {h})"),
            Cell::IterP(a, g, h) => write!(f, "iterP({a}; {g}; {h})"),
        }
    }
}

fn write_obj(f: &mut fmt::Formatter<'_>, kw: &str, a: &crate::signature::ObjExpr) -> fmt::Result {
    write!(f, "{kw} ")?;
    a.fmt_atom(f)
}

/// Cells print in the `.fcn` term syntax and reparse to the same term.
impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}
