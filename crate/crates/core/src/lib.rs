//! Protocol calculus engine: protocol types with choice and iteration,
//! typed cell terms, a directed rewriter, derived-cell builders and a
//! denotational interpreter used as an equality oracle.

pub mod cell;
pub mod derived;
pub mod gen;
pub mod laws;
pub mod protocol;
pub mod rewrite;
pub mod semantics;
pub mod signature;
pub mod syntax;
pub mod trace;

pub use cell::{annotate, check_closed_left, infer_boundary, Boundary, Cell, CellError};
pub use protocol::{proto_equal, refold, unfold_star_p, unfold_star_x, Protocol, ProtocolError};
pub use signature::{Carrier, MorExpr, ObjExpr, SigError, Signature, Valuation, Value};
