use std::path::PathBuf;

use fcn_core::syntax::{parse_module, Module};

fn load(name: &str) -> Module {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name);
    let src = std::fs::read_to_string(&path).unwrap();
    parse_module(&src).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn golden_files_typecheck_to_declared_boundaries() {
    for f in ["bakery.fcn", "stack.fcn", "mealy.fcn", "memory.fcn", "sales.fcn"] {
        let m = load(f);
        for d in &m.cells {
            let b = m.check_decl(d).unwrap_or_else(|e| panic!("{f} {}: {e}", d.name));
            println!("{f} {} : {b}", d.name);
        }
    }
}

use fcn_core::rewrite::normalize_cell;
use fcn_core::semantics::{cells_equal, CheckConfig};
use fcn_core::syntax::{parse_cell_in, parse_value};
use fcn_core::trace::{run_trace, ScriptMove, TraceEvent};
use fcn_core::{Cell, MorExpr, ObjExpr};

fn v(s: &str) -> fcn_core::Value {
    parse_value(s).unwrap()
}

fn cell(m: &Module, name: &str) -> Cell {
    m.cell(name).unwrap().cell.clone()
}

#[test]
fn printed_cells_reparse_identically() {
    for f in ["bakery.fcn", "stack.fcn", "mealy.fcn", "memory.fcn", "sales.fcn"] {
        let m = load(f);
        for d in &m.cells {
            let text = d.cell.to_string();
            let back = parse_cell_in(&m, &text).unwrap_or_else(|e| panic!("{text}: {e}"));
            assert_eq!(back, d.cell, "{text}");
        }
    }
}

#[test]
fn react_examples() {
    let m = load("bakery.fcn");
    let cfg = CheckConfig::default();
    let id = Cell::IdV(ObjExpr::tensor(ObjExpr::gen("bread"), ObjExpr::gen("oven")));
    let r = cells_equal(&cell(&m, "supply_bread"), &id, &m.valuation, &cfg).unwrap();
    assert!(r.holds(), "{r:?}");
    let bake = Cell::Promote(MorExpr::gen("bake"));
    let r = cells_equal(&cell(&m, "supply_dough"), &bake, &m.valuation, &cfg).unwrap();
    assert!(r.holds(), "{r:?}");
}

#[test]
fn bakery_composite_fuses() {
    let m = load("bakery.fcn");
    let rep = normalize_cell(&cell(&m, "bakery"), 10_000);
    assert!(!rep.budget_exhausted);
    assert!(matches!(rep.result, Cell::Promote(_)), "{}", rep.result);
}

#[test]
fn memory_trace() {
    let m = load("memory.fcn");
    let script = [
        ScriptMove::Continue,
        ScriptMove::Recv(v("a1")),
        ScriptMove::Continue,
        ScriptMove::Recv(v("a2")),
        ScriptMove::Stop,
    ];
    let out = run_trace(&cell(&m, "memory"), &v("a0"), &script, &m.valuation, 4).unwrap();
    assert_eq!(
        out,
        vec![TraceEvent::Sent(v("a0")), TraceEvent::Sent(v("a1")), TraceEvent::Result(v("a2"))]
    );
}

#[test]
fn mealy_trace() {
    let m = load("mealy.fcn");
    let out = run_trace(&cell(&m, "run"), &v("s0"), &[], &m.valuation, 8).unwrap();
    assert_eq!(
        out,
        vec![
            TraceEvent::More,
            TraceEvent::Sent(v("odd")),
            TraceEvent::More,
            TraceEvent::Sent(v("odd")),
            TraceEvent::More,
            TraceEvent::Sent(v("even")),
            TraceEvent::Halted,
            TraceEvent::Result(v("s0")),
        ]
    );
}

#[test]
fn sales_cases() {
    let m = load("sales.fcn");
    let run = |name: &str, input: &str| {
        run_trace(&cell(&m, name), &v(input), &[], &m.valuation, 8).unwrap()
    };
    assert_eq!(run("no_customers", "([b], [c])"), vec![TraceEvent::Result(v("([b], [c])"))]);
    assert_eq!(
        run("one_customer", "(c, [b], [])"),
        vec![TraceEvent::Result(v("(inr b, [], [c])"))]
    );
    assert_eq!(
        run("one_customer", "(c, [], [])"),
        vec![TraceEvent::Result(v("(inl c, [], [])"))]
    );
}

#[test]
fn react_normal_forms() {
    let m = load("bakery.fcn");
    let rep = normalize_cell(&cell(&m, "supply_bread"), 10_000);
    println!("{} in {} steps", rep.result, rep.steps.len());
    let id = Cell::IdV(ObjExpr::tensor(ObjExpr::gen("bread"), ObjExpr::gen("oven")));
    assert_eq!(rep.result, id);
    let rep = normalize_cell(&cell(&m, "supply_dough"), 10_000);
    println!("{} in {} steps", rep.result, rep.steps.len());
    assert!(matches!(rep.result, Cell::Promote(_)));
}
