use std::collections::BTreeMap;
use std::sync::Arc;

use super::lexer::{lex, Pos, Tok};
use super::{CellDecl, Module, ParseError, SpanTree};
use crate::cell::{Boundary, Cell};
use crate::derived;
use crate::protocol::Protocol;
use crate::signature::{Carrier, MorExpr, ObjExpr, Signature, Valuation, Value};
use crate::trace::ScriptMove;

type PResult<T> = Result<T, ParseError>;

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    sig: Signature,
    carriers: BTreeMap<String, Carrier>,
    aliases: BTreeMap<String, ObjExpr>,
    tables: BTreeMap<String, BTreeMap<Value, Value>>,
    protocols: BTreeMap<String, Protocol>,
    cells: Vec<CellDecl>,
    cell_index: BTreeMap<String, usize>,
    /// Words given to `sendword`, checked once carriers are complete.
    words: Vec<(Vec<Value>, ObjExpr, Pos)>,
}

fn err<T>(pos: Pos, msg: impl Into<String>) -> PResult<T> {
    Err(ParseError {
        pos,
        msg: msg.into(),
    })
}

impl Parser {
    fn new(src: &str) -> PResult<Self> {
        let toks = lex(src).map_err(|e| ParseError {
            pos: e.pos,
            msg: e.msg,
        })?;
        Ok(Parser {
            toks,
            at: 0,
            sig: Signature::new(),
            carriers: BTreeMap::new(),
            aliases: BTreeMap::new(),
            tables: BTreeMap::new(),
            protocols: BTreeMap::new(),
            cells: Vec::new(),
            cell_index: BTreeMap::new(),
            words: Vec::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn is_sym(&self, c: char) -> bool {
        *self.peek() == Tok::Sym(c)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.is_sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> PResult<()> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            err(self.pos(), format!("expected `{c}`, found {}", self.peek()))
        }
    }

    fn expect(&mut self, t: Tok) -> PResult<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            err(self.pos(), format!("expected {t}, found {}", self.peek()))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            err(self.pos(), format!("expected `{kw}`, found {}", self.peek()))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            t => err(self.pos(), format!("expected a name, found {t}")),
        }
    }

    // ---- declarations ----

    fn module(mut self) -> PResult<Module> {
        while *self.peek() != Tok::Eof {
            self.declaration()?;
        }
        let eof = self.pos();
        let valuation = Valuation::new(self.sig, self.carriers, self.tables).map_err(|e| ParseError {
            pos: eof,
            msg: format!("invalid signature: {e}"),
        })?;
        for (word, obj, pos) in &self.words {
            if let Some(bad) = word.iter().find(|v| !valuation.check_value(v, obj)) {
                return err(*pos, format!("value {bad} does not inhabit {obj}"));
            }
        }
        Ok(Module {
            valuation: Arc::new(valuation),
            aliases: self.aliases,
            protocols: self.protocols,
            cells: self.cells,
        })
    }

    fn declaration(&mut self) -> PResult<()> {
        let pos = self.pos();
        let kw = self.ident()?;
        match kw.as_str() {
            "object" => {
                loop {
                    let n = self.ident()?;
                    self.declare_object(&n, pos)?;
                    if !self.eat_sym(',') {
                        break;
                    }
                }
                self.expect_sym(';')
            }
            "carrier" => self.carrier_decl(pos),
            "mor" => {
                let n = self.ident()?;
                self.expect_sym(':')?;
                let dom = self.obj()?;
                self.expect(Tok::Arrow)?;
                let cod = self.obj()?;
                self.expect_sym(';')?;
                if self.sig.morphisms.contains_key(&n) {
                    return err(pos, format!("morphism `{n}` declared twice"));
                }
                self.sig
                    .add_morphism(n, dom, cod)
                    .map_err(|e| ParseError { pos, msg: e.to_string() })
            }
            "map" => {
                let n = self.ident()?;
                if !self.sig.morphisms.contains_key(&n) {
                    return err(pos, format!("map for undeclared morphism `{n}`"));
                }
                self.expect_sym('=')?;
                self.expect_sym('{')?;
                let mut table = BTreeMap::new();
                while !self.is_sym('}') {
                    let epos = self.pos();
                    let k = self.value()?;
                    self.expect(Tok::Arrow)?;
                    let v = self.value()?;
                    if table.insert(k.clone(), v).is_some() {
                        return err(epos, format!("duplicate entry for {k}"));
                    }
                    if !self.eat_sym(';') {
                        break;
                    }
                }
                self.expect_sym('}')?;
                self.expect_sym(';')?;
                self.tables.insert(n, table);
                Ok(())
            }
            "protocol" => {
                let n = self.ident()?;
                self.expect_sym('=')?;
                let p = self.proto()?;
                self.expect_sym(';')?;
                self.protocols.insert(n, p);
                Ok(())
            }
            "cell" => self.cell_decl(pos),
            other => err(pos, format!("unknown declaration `{other}`")),
        }
    }

    fn declare_object(&mut self, n: &str, pos: Pos) -> PResult<()> {
        if self.aliases.contains_key(n) {
            return err(pos, format!("`{n}` is already a stack alias"));
        }
        self.sig.add_object(n);
        Ok(())
    }

    fn carrier_decl(&mut self, pos: Pos) -> PResult<()> {
        let n = self.ident()?;
        self.expect_sym('=')?;
        if self.is_kw("list") {
            self.bump();
            self.expect_kw("of")?;
            let elem = self.obj()?;
            self.expect_sym(';')?;
            // An earlier `object` line for the same name is subsumed by the alias.
            self.sig.objects.remove(&n);
            self.aliases.insert(n, ObjExpr::stack(elem));
            return Ok(());
        }
        if self.is_kw("countable") {
            self.bump();
            self.expect_sym(';')?;
            self.declare_object(&n, pos)?;
            self.carriers.insert(n, Carrier::Countable);
            return Ok(());
        }
        self.expect_sym('{')?;
        let mut atoms = Vec::new();
        while !self.is_sym('}') {
            match self.bump() {
                Tok::Ident(s) | Tok::Num(s) => atoms.push(s),
                t => return err(self.pos(), format!("expected an element name, found {t}")),
            }
            if !self.eat_sym(',') {
                break;
            }
        }
        self.expect_sym('}')?;
        self.expect_sym(';')?;
        self.declare_object(&n, pos)?;
        self.carriers.insert(n, Carrier::Finite(atoms));
        Ok(())
    }

    fn cell_decl(&mut self, pos: Pos) -> PResult<()> {
        let n = self.ident()?;
        if self.cell_index.contains_key(&n) {
            return err(pos, format!("cell `{n}` declared twice"));
        }
        let declared = if self.eat_sym(':') {
            self.expect_sym('[')?;
            let left = self.proto()?;
            self.expect_sym('|')?;
            let top = self.obj()?;
            self.expect(Tok::Arrow)?;
            let bottom = self.obj()?;
            self.expect_sym('|')?;
            let right = self.proto()?;
            self.expect_sym(']')?;
            Some(Boundary::new(left, top, bottom, right))
        } else {
            None
        };
        self.expect_sym('=')?;
        let (cell, spans) = self.term()?;
        self.expect_sym(';')?;
        self.cell_index.insert(n.clone(), self.cells.len());
        self.cells.push(CellDecl {
            name: n,
            declared,
            cell,
            pos,
            spans,
        });
        Ok(())
    }

    // ---- objects ----

    fn obj(&mut self) -> PResult<ObjExpr> {
        let mut acc = self.obj_tensor()?;
        while *self.peek() == Tok::OPlus {
            self.bump();
            let rhs = self.obj_tensor()?;
            acc = ObjExpr::sum(acc, rhs);
        }
        Ok(acc)
    }

    fn obj_tensor(&mut self) -> PResult<ObjExpr> {
        let mut parts = vec![self.obj_prefix()?];
        while self.eat_sym('*') {
            parts.push(self.obj_prefix()?);
        }
        Ok(ObjExpr::tensor_all(parts))
    }

    fn obj_prefix(&mut self) -> PResult<ObjExpr> {
        if self.is_kw("stack") {
            self.bump();
            return Ok(ObjExpr::stack(self.obj_prefix()?));
        }
        self.obj_atom()
    }

    fn obj_atom(&mut self) -> PResult<ObjExpr> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(s) if s == "I" => {
                self.bump();
                Ok(ObjExpr::Unit)
            }
            Tok::Ident(s) => {
                self.bump();
                if let Some(e) = self.aliases.get(&s) {
                    Ok(e.clone())
                } else if self.sig.objects.contains(&s) {
                    Ok(ObjExpr::Gen(s))
                } else {
                    err(pos, format!("unknown object `{s}`"))
                }
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.obj()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            t => err(pos, format!("expected an object, found {t}")),
        }
    }

    // ---- values ----

    fn value(&mut self) -> PResult<Value> {
        parse_value_tokens(self)
    }

    // ---- protocols ----

    fn proto(&mut self) -> PResult<Protocol> {
        let mut acc = self.proto_choose()?;
        while self.is_sym('+') {
            self.bump();
            let rhs = self.proto_choose()?;
            acc = Protocol::offer(acc, rhs);
        }
        Ok(acc)
    }

    fn proto_choose(&mut self) -> PResult<Protocol> {
        let mut acc = self.proto_seq()?;
        while self.is_kw("x") {
            self.bump();
            let rhs = self.proto_seq()?;
            acc = Protocol::choose(acc, rhs);
        }
        Ok(acc)
    }

    fn proto_seq(&mut self) -> PResult<Protocol> {
        let mut parts = vec![self.proto_postfix()?];
        while self.eat_sym('*') {
            parts.push(self.proto_postfix()?);
        }
        Ok(Protocol::seq(parts))
    }

    fn proto_postfix(&mut self) -> PResult<Protocol> {
        let mut p = self.proto_primary()?;
        loop {
            match self.peek() {
                Tok::StarX => p = Protocol::star_x(p),
                Tok::StarP => p = Protocol::star_p(p),
                _ => return Ok(p),
            }
            self.bump();
        }
    }

    fn proto_primary(&mut self) -> PResult<Protocol> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(s) if s == "send" => {
                self.bump();
                Ok(Protocol::send(self.obj_atom()?))
            }
            Tok::Ident(s) if s == "recv" => {
                self.bump();
                Ok(Protocol::recv(self.obj_atom()?))
            }
            Tok::Ident(s) if s == "I" => {
                self.bump();
                Ok(Protocol::Done)
            }
            Tok::Ident(s) => {
                self.bump();
                self.protocols
                    .get(&s)
                    .cloned()
                    .ok_or_else(|| ParseError {
                        pos,
                        msg: format!("unknown protocol `{s}`"),
                    })
            }
            Tok::Sym('(') => {
                self.bump();
                let p = self.proto()?;
                self.expect_sym(')')?;
                Ok(p)
            }
            t => err(pos, format!("expected a protocol, found {t}")),
        }
    }

    fn proto_pair(&mut self) -> PResult<(Protocol, Protocol)> {
        self.expect_sym('{')?;
        let u = self.proto()?;
        self.expect_sym(',')?;
        let w = self.proto()?;
        self.expect_sym('}')?;
        Ok((u, w))
    }

    fn proto_single(&mut self) -> PResult<Protocol> {
        self.expect_sym('{')?;
        let u = self.proto()?;
        self.expect_sym('}')?;
        Ok(u)
    }

    // ---- morphisms ----

    fn mor(&mut self) -> PResult<MorExpr> {
        let mut acc = self.mor_tensor()?;
        while self.eat_sym(';') {
            let rhs = self.mor_tensor()?;
            acc = acc.then(rhs);
        }
        Ok(acc)
    }

    fn mor_tensor(&mut self) -> PResult<MorExpr> {
        let mut acc = self.mor_atom()?;
        while self.eat_sym('*') {
            let rhs = self.mor_atom()?;
            acc = acc.tensor(rhs);
        }
        Ok(acc)
    }

    fn obj_args<const N: usize>(&mut self) -> PResult<[ObjExpr; N]> {
        self.expect_sym('(')?;
        let mut out = Vec::with_capacity(N);
        for i in 0..N {
            if i > 0 {
                self.expect_sym(',')?;
            }
            out.push(self.obj()?);
        }
        self.expect_sym(')')?;
        Ok(out.try_into().expect("arity"))
    }

    fn mor_atom(&mut self) -> PResult<MorExpr> {
        let pos = self.pos();
        let t = self.peek().clone();
        let kw = match t {
            Tok::Sym('(') => {
                self.bump();
                let m = self.mor()?;
                self.expect_sym(')')?;
                return Ok(m);
            }
            Tok::Ident(s) => s,
            t => return err(pos, format!("expected a morphism, found {t}")),
        };
        self.bump();
        Ok(match kw.as_str() {
            "id" => MorExpr::Id(self.obj_atom()?),
            "nil" => MorExpr::Nil(self.obj_atom()?),
            "push" => MorExpr::Push(self.obj_atom()?),
            "pop" => MorExpr::Pop(self.obj_atom()?),
            "braid" => {
                let [a, b] = self.obj_args()?;
                MorExpr::Braid(a, b)
            }
            "inj0" => {
                let [a, b] = self.obj_args()?;
                MorExpr::Inj0(a, b)
            }
            "inj1" => {
                let [a, b] = self.obj_args()?;
                MorExpr::Inj1(a, b)
            }
            "distr" | "undistr" | "distl" | "undistl" => {
                let [a, b, c] = self.obj_args()?;
                match kw.as_str() {
                    "distr" => MorExpr::DistR(a, b, c),
                    "undistr" => MorExpr::UndistR(a, b, c),
                    "distl" => MorExpr::DistL(a, b, c),
                    _ => MorExpr::UndistL(a, b, c),
                }
            }
            "copair" => {
                self.expect_sym('(')?;
                let f = self.mor()?;
                self.expect_sym(',')?;
                let g = self.mor()?;
                self.expect_sym(')')?;
                MorExpr::copair(f, g)
            }
            "const" => {
                self.expect_sym('(')?;
                let a = self.obj()?;
                self.expect_sym(',')?;
                let v = self.value()?;
                self.expect_sym(')')?;
                MorExpr::Const(a, v)
            }
            _ => {
                if !self.sig.morphisms.contains_key(&kw) {
                    return err(pos, format!("unknown morphism `{kw}`"));
                }
                MorExpr::Gen(kw)
            }
        })
    }

    // ---- cells ----

    fn term(&mut self) -> PResult<(Cell, SpanTree)> {
        let (mut acc, mut spans) = self.term_v()?;
        while self.is_sym('|') {
            let pos = self.pos();
            self.bump();
            let (rhs, rs) = self.term_v()?;
            acc = Cell::hcomp(acc, rhs);
            spans = SpanTree {
                pos,
                kids: vec![spans, rs],
            };
        }
        Ok((acc, spans))
    }

    fn term_v(&mut self) -> PResult<(Cell, SpanTree)> {
        let (mut acc, mut spans) = self.term_atom()?;
        while self.is_sym('/') {
            let pos = self.pos();
            self.bump();
            let (rhs, rs) = self.term_atom()?;
            acc = Cell::vcomp(acc, rhs);
            spans = SpanTree {
                pos,
                kids: vec![spans, rs],
            };
        }
        Ok((acc, spans))
    }

    fn term_args(&mut self, n: usize, sep: char) -> PResult<Vec<(Cell, SpanTree)>> {
        self.expect_sym('(')?;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            if i > 0 {
                self.expect_sym(sep)?;
            }
            out.push(self.term()?);
        }
        self.expect_sym(')')?;
        Ok(out)
    }

    fn term_atom(&mut self) -> PResult<(Cell, SpanTree)> {
        let pos = self.pos();
        let leaf = |c: Cell| Ok((c, SpanTree { pos, kids: Vec::new() }));
        let kw = match self.peek().clone() {
            Tok::Sym('(') => {
                self.bump();
                let t = self.term()?;
                self.expect_sym(')')?;
                return Ok(t);
            }
            Tok::Sym('[') => {
                self.bump();
                let m = self.mor()?;
                self.expect_sym(']')?;
                return leaf(Cell::Promote(m));
            }
            Tok::Num(n) if n == "1" => {
                self.bump();
                return leaf(Cell::IdV(self.obj_atom()?));
            }
            Tok::Ident(s) => s,
            t => return err(pos, format!("expected a cell term, found {t}")),
        };
        self.bump();
        let node = |c: Cell, kids: Vec<(Cell, SpanTree)>| -> PResult<(Cell, SpanTree)> {
            Ok((c, SpanTree { pos, kids: kids.into_iter().map(|(_, s)| s).collect() }))
        };
        match kw.as_str() {
            "getL" => leaf(Cell::GetL(self.obj_atom()?)),
            "putR" => leaf(Cell::PutR(self.obj_atom()?)),
            "getR" => leaf(Cell::GetR(self.obj_atom()?)),
            "putL" => leaf(Cell::PutL(self.obj_atom()?)),
            "id" => leaf(Cell::IdH(self.proto_postfix()?)),
            "pi0" | "pi1" | "in0" | "in1" => {
                let (u, w) = self.proto_pair()?;
                leaf(match kw.as_str() {
                    "pi0" => Cell::Pi0(u, w),
                    "pi1" => Cell::Pi1(u, w),
                    "in0" => Cell::Inj0(u, w),
                    _ => Cell::Inj1(u, w),
                })
            }
            "times" | "plus" | "copair" => {
                let args = self.term_args(2, ',')?;
                let (a, b) = (args[0].0.clone(), args[1].0.clone());
                let c = match kw.as_str() {
                    "times" => Cell::times(a, b),
                    "plus" => Cell::plus(a, b),
                    _ => Cell::copair(a, b),
                };
                node(c, args)
            }
            "iterX" | "iterP" => {
                let args = self.term_args(3, ';')?;
                let (a, f, g) = (args[0].0.clone(), args[1].0.clone(), args[2].0.clone());
                let c = if kw == "iterX" {
                    Cell::iter_x(a, f, g)
                } else {
                    Cell::iter_p(a, f, g)
                };
                node(c, args)
            }
            "cross" => {
                self.expect_sym('{')?;
                let u = self.proto()?;
                self.expect_sym(',')?;
                let a = self.obj()?;
                self.expect_sym('}')?;
                leaf(derived::crossing(&u, &a))
            }
            "tensor" => {
                let args = self.term_args(2, ',')?;
                let c = derived::tensor_cells(&args[0].0, &args[1].0, &self.sig)
                    .map_err(|e| ParseError { pos, msg: e.to_string() })?;
                leaf(c)
            }
            "iterXs" | "iterPs" => {
                let args = self.term_args(1, ',')?;
                let c = if kw == "iterXs" {
                    derived::simple_iter_x(&args[0].0, &self.sig)
                } else {
                    derived::simple_iter_p(&args[0].0, &self.sig)
                }
                .map_err(|e| ParseError { pos, msg: e.to_string() })?;
                leaf(c)
            }
            "deltaX" => leaf(derived::comonoid_x(&self.proto_single()?).0),
            "nablaP" => leaf(derived::monoid_p(&self.proto_single()?).0),
            "epsX" => leaf(derived::comonad_x(&self.proto_single()?).0),
            "dX" => leaf(derived::comonad_x(&self.proto_single()?).1),
            "etaP" => leaf(derived::monad_p(&self.proto_single()?).0),
            "muP" => leaf(derived::monad_p(&self.proto_single()?).1),
            "sendword" => {
                self.expect_sym('{')?;
                let a = self.obj()?;
                self.expect_sym('}')?;
                self.expect_sym('[')?;
                let mut word = Vec::new();
                while !self.is_sym(']') {
                    word.push(self.value()?);
                    if !self.eat_sym(',') {
                        break;
                    }
                }
                self.expect_sym(']')?;
                let c = derived::word_sender_cell(&word, &a);
                self.words.push((word, a, pos));
                leaf(c)
            }
            name => match self.cell_index.get(name) {
                Some(&i) => leaf(self.cells[i].cell.clone()),
                None => err(pos, format!("unknown cell `{name}`")),
            },
        }
    }
}

/// Minimal token cursor shared by the value grammar.
trait Cursor {
    fn peek_tok(&self) -> &Tok;
    fn cur_pos(&self) -> Pos;
    fn next_tok(&mut self) -> Tok;
}

impl Cursor for Parser {
    fn peek_tok(&self) -> &Tok {
        self.peek()
    }
    fn cur_pos(&self) -> Pos {
        self.pos()
    }
    fn next_tok(&mut self) -> Tok {
        self.bump()
    }
}

struct Tokens {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Cursor for Tokens {
    fn peek_tok(&self) -> &Tok {
        &self.toks[self.at].0
    }
    fn cur_pos(&self) -> Pos {
        self.toks[self.at].1
    }
    fn next_tok(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }
}

fn parse_value_tokens(c: &mut impl Cursor) -> PResult<Value> {
    let pos = c.cur_pos();
    match c.next_tok() {
        Tok::Ident(s) if s == "inl" => Ok(Value::inl(parse_value_tokens(c)?)),
        Tok::Ident(s) if s == "inr" => Ok(Value::inr(parse_value_tokens(c)?)),
        Tok::Ident(s) | Tok::Num(s) => Ok(Value::Atom(s)),
        Tok::Sym('(') => {
            if *c.peek_tok() == Tok::Sym(')') {
                c.next_tok();
                return Ok(Value::Unit);
            }
            let mut factors = Vec::new();
            loop {
                factors.extend(parse_value_tokens(c)?.factors());
                match c.next_tok() {
                    Tok::Sym(',') => continue,
                    Tok::Sym(')') => break,
                    t => return err(c.cur_pos(), format!("expected `,` or `)`, found {t}")),
                }
            }
            Ok(Value::from_factors(factors))
        }
        Tok::Sym('[') => {
            let mut items = Vec::new();
            if *c.peek_tok() == Tok::Sym(']') {
                c.next_tok();
                return Ok(Value::List(items));
            }
            loop {
                items.push(parse_value_tokens(c)?);
                match c.next_tok() {
                    Tok::Sym(',') => continue,
                    Tok::Sym(']') => break,
                    t => return err(c.cur_pos(), format!("expected `,` or `]`, found {t}")),
                }
            }
            Ok(Value::List(items))
        }
        t => err(pos, format!("expected a value, found {t}")),
    }
}

/// Parses a whole `.fcn` source.
pub fn parse_module(src: &str) -> PResult<Module> {
    Parser::new(src)?.module()
}

/// Parses a value literal.
pub fn parse_value(src: &str) -> PResult<Value> {
    let toks = lex(src).map_err(|e| ParseError { pos: e.pos, msg: e.msg })?;
    let mut c = Tokens { toks, at: 0 };
    let v = parse_value_tokens(&mut c)?;
    if *c.peek_tok() != Tok::Eof {
        return err(c.cur_pos(), format!("unexpected {} after value", c.peek_tok()));
    }
    Ok(v)
}

/// Parses a script: one move per line, blank lines and `//` comments ignored.
pub fn parse_script(src: &str) -> PResult<Vec<ScriptMove>> {
    let mut out = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.split("//").next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let pos = Pos { line: i + 1, col: 1 };
        let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        let mv = match (head, rest) {
            ("recv", v) if !v.is_empty() => ScriptMove::Recv(parse_value(v).map_err(|e| ParseError {
                pos,
                msg: e.msg,
            })?),
            ("pick", "0") => ScriptMove::Pick0,
            ("pick", "1") => ScriptMove::Pick1,
            ("stop", "") => ScriptMove::Stop,
            ("continue", "") => ScriptMove::Continue,
            _ => return err(pos, format!("unrecognized move `{line}`")),
        };
        out.push(mv);
    }
    Ok(out)
}

/// Parses a standalone cell term against a module's declarations.
pub fn parse_cell_in(module: &Module, src: &str) -> PResult<Cell> {
    let mut p = Parser::new(src)?;
    p.sig = module.valuation.signature().clone();
    p.aliases = module.aliases.clone();
    p.protocols = module.protocols.clone();
    for (i, d) in module.cells.iter().enumerate() {
        p.cell_index.insert(d.name.clone(), i);
        p.cells.push(d.clone());
    }
    let (c, _) = p.term()?;
    if *p.peek() != Tok::Eof {
        return err(p.pos(), format!("unexpected {} after term", p.peek()));
    }
    Ok(c)
}
