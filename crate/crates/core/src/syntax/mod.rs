//! The `.fcn` text format: one file holds a signature, its valuation,
//! named protocols and named cells.

mod lexer;
mod parser;
mod print;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::cell::{infer_boundary, Boundary, Cell, CellError};
use crate::protocol::Protocol;
use crate::signature::{ObjExpr, Valuation};

pub use lexer::Pos;
pub use parser::{parse_cell_in, parse_module, parse_script, parse_value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub pos: Pos,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.msg)
    }
}

impl std::error::Error for ParseError {}

/// Source positions mirroring a cell term's child structure. Macro
/// expansions and inlined cell references are leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanTree {
    pub pos: Pos,
    pub kids: Vec<SpanTree>,
}

impl SpanTree {
    /// Position of the deepest recorded node along `path`.
    pub fn locate(&self, path: &[usize]) -> Pos {
        let mut cur = self;
        for &i in path {
            match cur.kids.get(i) {
                Some(k) => cur = k,
                None => break,
            }
        }
        cur.pos
    }
}

#[derive(Debug, Clone)]
pub struct CellDecl {
    pub name: String,
    pub declared: Option<Boundary>,
    pub cell: Cell,
    pub pos: Pos,
    pub spans: SpanTree,
}

#[derive(Debug, Clone)]
pub struct Module {
    pub valuation: Arc<Valuation>,
    /// Stack aliases introduced by `carrier X = list of A;`.
    pub aliases: BTreeMap<String, ObjExpr>,
    pub protocols: BTreeMap<String, Protocol>,
    pub cells: Vec<CellDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckError {
    Ill { pos: Pos, source: CellError },
    Declared { pos: Pos, declared: Box<Boundary>, inferred: Box<Boundary> },
}

impl fmt::Display for CheckError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckError::Ill { pos, source } => write!(f, "{pos}: {source}"),
            CheckError::Declared {
                pos,
                declared,
                inferred,
            } => write!(f, "{pos}: declared boundary {declared} but inferred {inferred}"),
        }
    }
}

impl std::error::Error for CheckError {}

impl Module {
    pub fn cell(&self, name: &str) -> Option<&CellDecl> {
        self.cells.iter().find(|d| d.name == name)
    }

    /// Infers a boundary for `d` and compares it to the declared one.
    pub fn check_decl(&self, d: &CellDecl) -> Result<Boundary, CheckError> {
        let b = infer_boundary(&d.cell, self.valuation.signature()).map_err(|e| CheckError::Ill {
            pos: d.spans.locate(e.path()),
            source: e,
        })?;
        if let Some(decl) = &d.declared {
            if !decl.equiv(&b) {
                return Err(CheckError::Declared {
                    pos: d.pos,
                    declared: Box::new(decl.clone()),
                    inferred: Box::new(b),
                });
            }
        }
        Ok(b)
    }
}
