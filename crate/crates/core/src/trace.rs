//! Runs a left-closed cell against a script of environment moves.
//!
//! The denotation is computed once and its right-boundary value is walked
//! along the protocol: the cell's own moves become events, the
//! environment's moves are read from the script.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::cell::{Cell, CellError};
use crate::protocol::Protocol;
use crate::semantics::{denote, PValue, SemError};
use crate::signature::{Valuation, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptMove {
    Recv(Value),
    Pick0,
    Pick1,
    Stop,
    Continue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    Sent(Value),
    Offered0,
    Offered1,
    Halted,
    More,
    Result(Value),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("left boundary is {0}, not I")]
    LeftNotClosed(Protocol),
    #[error("input {value} does not inhabit the top boundary")]
    IllTypedInput { value: Value },
    #[error("script ended while a `{expected}` move was needed")]
    ScriptUnderrun { expected: &'static str },
    #[error("{0} script move(s) left over after the result")]
    ScriptOverrun(usize),
    #[error("expected a `{expected}` move, got `{got}`")]
    WrongMove { expected: &'static str, got: ScriptMove },
    #[error("more than {0} iteration layers entered")]
    DepthExceeded(usize),
    #[error(transparent)]
    Cell(#[from] CellError),
    #[error(transparent)]
    Sem(#[from] SemError),
}

impl fmt::Display for ScriptMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScriptMove::Recv(v) => write!(f, "recv {v}"),
            ScriptMove::Pick0 => write!(f, "pick 0"),
            ScriptMove::Pick1 => write!(f, "pick 1"),
            ScriptMove::Stop => write!(f, "stop"),
            ScriptMove::Continue => write!(f, "continue"),
        }
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::Sent(v) => write!(f, "sent {v}"),
            TraceEvent::Offered0 => write!(f, "offered 0"),
            TraceEvent::Offered1 => write!(f, "offered 1"),
            TraceEvent::Halted => write!(f, "halted"),
            TraceEvent::More => write!(f, "more"),
            TraceEvent::Result(v) => write!(f, "result {v}"),
        }
    }
}

/// Runs `c` on `input`, answering the environment's moves from `script`.
/// At most `depth` iteration layers may be entered.
pub fn run_trace(
    c: &Cell,
    input: &Value,
    script: &[ScriptMove],
    val: &Arc<Valuation>,
    depth: usize,
) -> Result<Vec<TraceEvent>, TraceError> {
    let d = denote(c, val)?;
    let b = d.boundary().clone();
    if !b.left.is_done() {
        return Err(TraceError::LeftNotClosed(b.left));
    }
    if !val.check_value(input, &b.top) {
        return Err(TraceError::IllTypedInput {
            value: input.clone(),
        });
    }
    let out = d.apply(&PValue::Payload(Value::Unit), input)?;
    let mut events = Vec::new();
    let mut moves = script.iter();
    let mut items = b.right.items();
    items.reverse();
    let mut cur = out;
    let mut layers = 0;
    let mut next_move = |expected: &'static str| {
        moves
            .next()
            .cloned()
            .ok_or(TraceError::ScriptUnderrun { expected })
    };
    // `items` is a stack: the next protocol factor is on top.
    while let Some(head) = items.pop() {
        let push_all = |items: &mut Vec<Protocol>, front: &Protocol, again: Option<&Protocol>| {
            if let Some(p) = again {
                items.push(p.clone());
            }
            items.extend(front.items().into_iter().rev());
        };
        match &head {
            Protocol::Send(_) => match cur {
                PValue::Msg(v, rest) => {
                    events.push(TraceEvent::Sent(v));
                    cur = (*rest).clone();
                }
                other => return Err(shape("message", &other)),
            },
            Protocol::Recv(_) => {
                let mv = next_move("recv")?;
                let ScriptMove::Recv(v) = &mv else {
                    return Err(TraceError::WrongMove {
                        expected: "recv",
                        got: mv,
                    });
                };
                let PValue::Table(entries) = &cur else {
                    return Err(shape("table", &cur));
                };
                let next = entries
                    .iter()
                    .find(|(k, _)| k == v)
                    .map(|(_, p)| p.clone())
                    .ok_or_else(|| TraceError::WrongMove {
                        expected: "recv",
                        got: mv.clone(),
                    })?;
                cur = next;
            }
            Protocol::Choose(u, w) => {
                let mv = next_move("pick")?;
                let (l, r) = cur.force_pair()?;
                match mv {
                    ScriptMove::Pick0 => {
                        push_all(&mut items, u, None);
                        cur = l;
                    }
                    ScriptMove::Pick1 => {
                        push_all(&mut items, w, None);
                        cur = r;
                    }
                    got => {
                        return Err(TraceError::WrongMove {
                            expected: "pick",
                            got,
                        })
                    }
                }
            }
            Protocol::Offer(u, w) => match cur {
                PValue::Inl(p) => {
                    events.push(TraceEvent::Offered0);
                    push_all(&mut items, u, None);
                    cur = (*p).clone();
                }
                PValue::Inr(p) => {
                    events.push(TraceEvent::Offered1);
                    push_all(&mut items, w, None);
                    cur = (*p).clone();
                }
                other => return Err(shape("tag", &other)),
            },
            Protocol::StarP(u) => match cur {
                PValue::Inl(p) => {
                    events.push(TraceEvent::Halted);
                    cur = (*p).clone();
                }
                PValue::Inr(p) => {
                    layers += 1;
                    if layers > depth {
                        return Err(TraceError::DepthExceeded(depth));
                    }
                    events.push(TraceEvent::More);
                    push_all(&mut items, u, Some(&head));
                    cur = (*p).clone();
                }
                other => return Err(shape("tree node", &other)),
            },
            Protocol::StarX(u) => {
                let mv = next_move("stop/continue")?;
                let (l, r) = cur.force_pair()?;
                match mv {
                    ScriptMove::Stop => cur = l,
                    ScriptMove::Continue => {
                        layers += 1;
                        if layers > depth {
                            return Err(TraceError::DepthExceeded(depth));
                        }
                        push_all(&mut items, u, Some(&head));
                        cur = r;
                    }
                    got => {
                        return Err(TraceError::WrongMove {
                            expected: "stop/continue",
                            got,
                        })
                    }
                }
            }
            Protocol::Done | Protocol::Seq(_) => push_all(&mut items, &head, None),
        }
    }
    let result = match &cur {
        PValue::Payload(Value::Unit) => Value::Unit,
        PValue::With(p, b) if matches!(&**p, PValue::Payload(Value::Unit)) => b.clone(),
        other => return Err(shape("result leaf", other)),
    };
    events.push(TraceEvent::Result(result));
    let left = moves.count();
    if left > 0 {
        return Err(TraceError::ScriptOverrun(left));
    }
    Ok(events)
}

fn shape(what: &str, found: &PValue) -> TraceError {
    TraceError::Sem(SemError::Shape(format!("expected a {what}, found {found}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::{Carrier, ObjExpr, Signature};
    use std::collections::BTreeMap;

    fn val() -> Arc<Valuation> {
        let mut sig = Signature::new();
        sig.add_object("A");
        let carriers = BTreeMap::from([(
            "A".to_string(),
            Carrier::Finite(vec!["a0".into(), "a1".into(), "a2".into()]),
        )]);
        Arc::new(Valuation::new(sig, carriers, BTreeMap::new()).unwrap())
    }

    fn a() -> ObjExpr {
        ObjExpr::gen("A")
    }

    #[test]
    fn open_left_is_rejected() {
        let err = run_trace(&Cell::GetL(a()), &Value::Unit, &[], &val(), 4).unwrap_err();
        assert!(matches!(err, TraceError::LeftNotClosed(_)));
    }

    #[test]
    fn receive_then_result() {
        let c = Cell::GetR(a());
        let out = run_trace(&c, &Value::Unit, &[ScriptMove::Recv(Value::atom("a2"))], &val(), 4).unwrap();
        assert_eq!(out, vec![TraceEvent::Result(Value::atom("a2"))]);
        let err = run_trace(&c, &Value::Unit, &[], &val(), 4).unwrap_err();
        assert!(matches!(err, TraceError::ScriptUnderrun { .. }));
        let err = run_trace(
            &c,
            &Value::Unit,
            &[ScriptMove::Recv(Value::atom("a2")), ScriptMove::Stop],
            &val(),
            4,
        )
        .unwrap_err();
        assert_eq!(err, TraceError::ScriptOverrun(1));
        let err = run_trace(&c, &Value::Unit, &[ScriptMove::Pick0], &val(), 4).unwrap_err();
        assert!(matches!(err, TraceError::WrongMove { .. }));
    }

    #[test]
    fn memory_cell_trace() {
        let memory = Cell::iter_x(
            Cell::vcomp(Cell::PutR(a()), Cell::GetR(a())),
            Cell::IdV(a()),
            Cell::IdH(Protocol::Done),
        );
        let script = [
            ScriptMove::Continue,
            ScriptMove::Recv(Value::atom("a1")),
            ScriptMove::Continue,
            ScriptMove::Recv(Value::atom("a2")),
            ScriptMove::Stop,
        ];
        let out = run_trace(&memory, &Value::atom("a0"), &script, &val(), 4).unwrap();
        assert_eq!(
            out,
            vec![
                TraceEvent::Sent(Value::atom("a0")),
                TraceEvent::Sent(Value::atom("a1")),
                TraceEvent::Result(Value::atom("a2")),
            ]
        );
        let err = run_trace(&memory, &Value::atom("a0"), &script, &val(), 1).unwrap_err();
        assert_eq!(err, TraceError::DepthExceeded(1));
    }
}
