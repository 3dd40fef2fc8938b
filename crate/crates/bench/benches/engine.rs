use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use fcn_core::derived::simple_iter_p;
use fcn_core::gen::{Gen, Mealy};
use fcn_core::laws::{default_valuation, quadruple};
use fcn_core::rewrite::normalize_cell;
use fcn_core::semantics::{cells_equal, CheckConfig};
use fcn_core::syntax::{parse_module, Module};
use fcn_core::trace::run_trace;
use fcn_core::{infer_boundary, proto_equal, unfold_star_x, Cell, Protocol};
use rand::SeedableRng;

fn module(src: &str) -> Module {
    parse_module(src).unwrap()
}

fn cell(m: &Module, name: &str) -> Cell {
    m.cell(name).unwrap().cell.clone()
}

fn protocols(c: &mut Criterion) {
    let val = default_valuation();
    let mut g = Gen::new(&val, 1);
    let ps: Vec<Protocol> = (0..32).map(|_| Protocol::star_x(g.protocol(3, true))).collect();
    let unfolded: Vec<Protocol> = ps.iter().map(|p| unfold_star_x(p).unwrap()).collect();
    c.bench_function("proto_equal/unfolded stars", |b| {
        b.iter(|| ps.iter().zip(&unfolded).all(|(p, q)| proto_equal(black_box(p), black_box(q))))
    });
}

fn typing(c: &mut Criterion) {
    let m = module(include_str!("../../core/tests/data/sales.fcn"));
    let sales = cell(&m, "one_customer");
    c.bench_function("infer_boundary/one_customer", |b| {
        b.iter(|| infer_boundary(black_box(&sales), m.valuation.signature()).unwrap())
    });
}

fn rewriting(c: &mut Criterion) {
    let m = module(include_str!("../../core/tests/data/bakery.fcn"));
    let bakery = cell(&m, "bakery");
    let supply = cell(&m, "supply_dough");
    c.bench_function("normalize/bakery", |b| b.iter(|| normalize_cell(black_box(&bakery), 10_000)));
    c.bench_function("normalize/supply_dough", |b| b.iter(|| normalize_cell(black_box(&supply), 10_000)));
}

fn semantics(c: &mut Criterion) {
    let val = default_valuation();
    let mut g = Gen::new(&val, 3);
    let quads: Vec<(Cell, Cell)> = (0..8)
        .map(|_| {
            let [a, b, x, d] = quadruple(&mut g);
            (
                Cell::hcomp(Cell::vcomp(a.clone(), b.clone()), Cell::vcomp(x.clone(), d.clone())),
                Cell::vcomp(Cell::hcomp(a, x), Cell::hcomp(b, d)),
            )
        })
        .collect();
    let cfg = CheckConfig::default();
    c.bench_function("cells_equal/interchange x8", |b| {
        b.iter(|| quads.iter().all(|(l, r)| cells_equal(l, r, &val, &cfg).unwrap().holds()))
    });

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let machine = Mealy::random(&mut rng, 3, 3, 3);
    let mval = machine.valuation();
    let plus = simple_iter_p(&machine.cell(), mval.signature()).unwrap();
    let word: Vec<_> = [0, 1, 2, 1, 0].iter().map(|&i| Mealy::input(i)).collect();
    let run = Cell::hcomp(
        fcn_core::derived::word_sender(&word, &fcn_core::ObjExpr::gen("A"), &mval).unwrap(),
        plus,
    );
    c.bench_function("run_trace/mealy word of 5", |b| {
        b.iter(|| run_trace(black_box(&run), &Mealy::state(0), &[], &mval, 8).unwrap())
    });
}

criterion_group!(benches, protocols, typing, rewriting, semantics);
criterion_main!(benches);
