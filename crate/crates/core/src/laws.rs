//! The law catalogue: equations of the calculus instantiated on generated
//! objects, protocols and cells, each checked against the interpreter.
//!
//! A law produces instances, either pairs of cells that must denote the
//! same thing or direct checks. Rows are reported in catalogue order.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rand::Rng;

use crate::cell::{infer_boundary, Cell};
use crate::derived::{
    comonad_x, comonoid_x, crossing, crossing_swap_sides, monad_p, monoid_p, p_tail, recv_sum_iso,
    send_sum_iso, simple_iter_p, simple_iter_x, x_tail,
};
use crate::gen::Gen;
use crate::protocol::{proto_equal, refold, unfold_star_p, unfold_star_x, Protocol};
use crate::rewrite::{normalize_cell_with, replay, Mutation};
use crate::semantics::{
    cells_equal, denote, fmap, pval_equal, test_inputs, with, CheckConfig, PValue, Result as SemResult,
    Shown, Verdict,
};
use crate::signature::{Carrier, MorExpr, ObjExpr, Signature, Valuation, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail(String),
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LawRow {
    pub id: &'static str,
    /// Instances actually checked.
    pub instances: usize,
    /// Every checked instance was decided over all inputs.
    pub exhaustive: bool,
    pub outcome: Outcome,
}

impl LawRow {
    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LawConfig {
    pub check: CheckConfig,
    /// Random instances per law.
    pub instances: usize,
    pub mutation: Option<Mutation>,
}

impl Default for LawConfig {
    fn default() -> Self {
        LawConfig {
            check: CheckConfig::default(),
            instances: 12,
            mutation: None,
        }
    }
}

enum Inst {
    Eq(Cell, Cell),
    /// A direct check: `Ok(exhaustive)` or a failure message.
    Fact(Result<bool, String>),
    Skip,
}

struct Ctx<'a> {
    g: Gen<'a>,
    val: Arc<Valuation>,
    cfg: LawConfig,
    extra: &'a [Cell],
}

impl Ctx<'_> {
    fn sig(&self) -> Signature {
        self.val.signature().clone()
    }

    /// Calls `make` until `n` instances are produced or attempts run out.
    fn repeat(&mut self, mut make: impl FnMut(&mut Self) -> Option<Vec<Inst>>) -> Vec<Inst> {
        let n = self.cfg.instances.max(1);
        let mut out = Vec::new();
        let mut made = 0;
        for _ in 0..n * 8 {
            if made >= n {
                break;
            }
            if let Some(v) = make(self) {
                out.extend(v);
                made += 1;
            }
        }
        out
    }

    fn small_protocol(&mut self, iterate: bool) -> Protocol {
        let size = self.g.rng().gen_range(0..2);
        self.g.protocol(size, iterate)
    }
}

type LawFn = fn(&mut Ctx) -> Vec<Inst>;

const LAWS: &[(&str, LawFn)] = &[
    ("dist-right-inverse", dist_right_inverse),
    ("dist-left-inverse", dist_left_inverse),
    ("dist-injection", dist_injection),
    ("braid-symmetry", braid_symmetry),
    ("compose-identity", compose_identity),
    ("object-normalize", object_normalize),
    ("proto-equivalence", proto_equivalence),
    ("proto-unfold", proto_unfold),
    ("proto-congruence", proto_congruence),
    ("proto-normalize-idempotent", proto_normalize_idempotent),
    ("yank-send-h", yank_send_h),
    ("yank-send-v", yank_send_v),
    ("yank-recv-h", yank_recv_h),
    ("yank-recv-v", yank_recv_v),
    ("corner-compose", corner_compose),
    ("corner-tensor", corner_tensor),
    ("corner-identity", corner_identity),
    ("interchange", interchange),
    ("hcomp-unit", hcomp_unit),
    ("vcomp-unit", vcomp_unit),
    ("hcomp-assoc", hcomp_assoc),
    ("vcomp-assoc", vcomp_assoc),
    ("payload-naturality", payload_naturality),
    ("beta-pi0", beta_pi0),
    ("beta-pi1", beta_pi1),
    ("beta-in0", beta_in0),
    ("beta-in1", beta_in1),
    ("beta-copair0", beta_copair0),
    ("beta-copair1", beta_copair1),
    ("product-pairing", product_pairing),
    ("coproduct-pairing", coproduct_pairing),
    ("copair-coincide", copair_coincide),
    ("copair-absorb-left", copair_absorb_left),
    ("copair-absorb-right", copair_absorb_right),
    ("copair-absorb-vertical", copair_absorb_vertical),
    ("moral-equiv-send", moral_equiv_send_law),
    ("moral-equiv-recv", moral_equiv_recv_law),
    ("crossing-tensor", crossing_tensor),
    ("crossing-unit", crossing_unit),
    ("crossing-sum", crossing_sum),
    ("crossing-swaps", crossing_swaps),
    ("crossing-strength", crossing_strength),
    ("iterx-stop", iterx_stop),
    ("iterx-step", iterx_step),
    ("iterp-stop", iterp_stop),
    ("iterp-step", iterp_step),
    ("coalgebra-mediation", coalgebra_mediation),
    ("comonoid-counit-left", comonoid_counit_left),
    ("comonoid-counit-right", comonoid_counit_right),
    ("comonoid-coassoc", comonoid_coassoc),
    ("monoid-unit-left", monoid_unit_left),
    ("monoid-unit-right", monoid_unit_right),
    ("monoid-assoc", monoid_assoc),
    ("comonad-counit-1", comonad_counit_1),
    ("comonad-counit-2", comonad_counit_2),
    ("comonad-coassoc", comonad_coassoc),
    ("monad-unit-1", monad_unit_1),
    ("monad-unit-2", monad_unit_2),
    ("monad-assoc", monad_assoc),
    ("diagonal-naturality", diagonal_naturality),
    ("codiagonal-naturality", codiagonal_naturality),
    ("rewrite-boundary", rewrite_boundary),
    ("rewrite-soundness", rewrite_soundness),
    ("rewrite-budget", rewrite_budget),
];

/// Law ids in catalogue order.
pub fn law_ids() -> Vec<&'static str> {
    LAWS.iter().map(|(id, _)| *id).collect()
}

/// A small valuation for files that declare no objects.
pub fn default_valuation() -> Arc<Valuation> {
    let mut sig = Signature::new();
    for o in ["A", "B", "C"] {
        sig.add_object(o);
    }
    let (a, b, c) = (ObjExpr::gen("A"), ObjExpr::gen("B"), ObjExpr::gen("C"));
    sig.add_morphism("f", a.clone(), b.clone()).expect("declared");
    sig.add_morphism("g", b.clone(), ObjExpr::sum(a.clone(), c.clone()))
        .expect("declared");
    sig.add_morphism("h", ObjExpr::tensor(a, c), ObjExpr::gen("C"))
        .expect("declared");
    let atoms = |xs: &[&str]| Carrier::Finite(xs.iter().map(|s| s.to_string()).collect());
    let carriers = BTreeMap::from([
        ("A".to_string(), atoms(&["a0", "a1"])),
        ("B".to_string(), atoms(&["b0", "b1", "b2"])),
        ("C".to_string(), atoms(&["c0", "c1"])),
    ]);
    let at = |s: &str| Value::atom(s);
    let pair = |x: &str, y: &str| Value::from_factors(vec![at(x), at(y)]);
    let tables = BTreeMap::from([
        (
            "f".to_string(),
            BTreeMap::from([(at("a0"), at("b1")), (at("a1"), at("b2"))]),
        ),
        (
            "g".to_string(),
            BTreeMap::from([
                (at("b0"), Value::inl(at("a0"))),
                (at("b1"), Value::inr(at("c1"))),
                (at("b2"), Value::inl(at("a1"))),
            ]),
        ),
        (
            "h".to_string(),
            BTreeMap::from([
                (pair("a0", "c0"), at("c0")),
                (pair("a0", "c1"), at("c1")),
                (pair("a1", "c0"), at("c1")),
                (pair("a1", "c1"), at("c0")),
            ]),
        ),
    ]);
    Arc::new(Valuation::new(sig, carriers, tables).expect("valid default valuation"))
}

fn seed_for(id: &str, seed: u64) -> u64 {
    // FNV-1a over the id, mixed with the run seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h ^ seed
}

/// Runs one law; `None` for an unknown id.
pub fn run_law(id: &str, val: &Arc<Valuation>, cfg: &LawConfig, extra: &[Cell]) -> Option<LawRow> {
    let (id, law) = LAWS.iter().find(|(n, _)| *n == id)?;
    let mut ctx = Ctx {
        g: Gen::new(val, seed_for(id, cfg.check.seed)),
        val: val.clone(),
        cfg: *cfg,
        extra,
    };
    let insts = law(&mut ctx);
    Some(judge(id, insts, val, &cfg.check))
}

/// Runs the whole catalogue, in parallel, reporting rows in catalogue order.
pub fn run_laws(val: &Arc<Valuation>, cfg: &LawConfig, extra: &[Cell]) -> Vec<LawRow> {
    let next = AtomicUsize::new(0);
    let rows = Mutex::new(vec![None; LAWS.len()]);
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(LAWS.len());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= LAWS.len() {
                    break;
                }
                let row = run_law(LAWS[i].0, val, cfg, extra).expect("known id");
                rows.lock().expect("no poisoning")[i] = Some(row);
            });
        }
    });
    rows.into_inner()
        .expect("no poisoning")
        .into_iter()
        .map(|r| r.expect("every law ran"))
        .collect()
}

fn judge(id: &'static str, insts: Vec<Inst>, val: &Arc<Valuation>, cfg: &CheckConfig) -> LawRow {
    let mut row = LawRow {
        id,
        instances: 0,
        exhaustive: true,
        outcome: Outcome::Pass,
    };
    let mut skipped = 0;
    for inst in insts {
        let res = match inst {
            Inst::Skip => Ok(None),
            Inst::Fact(r) => r.map(Some),
            Inst::Eq(l, r) => match cells_equal(&l, &r, val, cfg) {
                Ok(Verdict::Holds { exhaustive, .. }) => Ok(Some(exhaustive)),
                Ok(Verdict::Skipped) => Ok(None),
                Ok(Verdict::Fails { witness }) => Err(format!("{l}  vs  {r}: {witness}")),
                Err(e) => Err(format!("{l}  vs  {r}: {e}")),
            },
        };
        match res {
            Ok(Some(exhaustive)) => {
                row.instances += 1;
                row.exhaustive &= exhaustive;
            }
            Ok(None) => skipped += 1,
            Err(w) => {
                row.instances += 1;
                row.outcome = Outcome::Fail(w);
                return row;
            }
        }
    }
    if row.instances == 0 {
        row.exhaustive = false;
        if skipped > 0 {
            row.outcome = Outcome::Skipped;
        }
    }
    row
}

fn fact(ok: bool, msg: impl FnOnce() -> String) -> Inst {
    Inst::Fact(if ok { Ok(true) } else { Err(msg()) })
}

// Base category.

fn enumerable_object(ctx: &mut Ctx, size: usize) -> Option<ObjExpr> {
    let o = ctx.g.object(size);
    ctx.val.is_enumerable(&o).then_some(o)
}

fn mor_agrees(val: &Valuation, f: &MorExpr, g: &MorExpr, dom: &ObjExpr) -> Inst {
    let Ok(vs) = val.enumerate_values(dom) else {
        return Inst::Skip;
    };
    for v in vs {
        match (val.eval_mor(f, &v), val.eval_mor(g, &v)) {
            (Ok(a), Ok(b)) if a == b => {}
            (a, b) => return Inst::Fact(Err(format!("{f} vs {g} at {v}: {a:?} vs {b:?}"))),
        }
    }
    Inst::Fact(Ok(true))
}

fn dist_right_inverse(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let (a, b, c) = (enumerable_object(ctx, 0)?, enumerable_object(ctx, 0)?, enumerable_object(ctx, 1)?);
        let d = MorExpr::DistR(a.clone(), b.clone(), c.clone());
        let u = MorExpr::UndistR(a.clone(), b.clone(), c.clone());
        let lhs = ObjExpr::tensor(ObjExpr::sum(a.clone(), b.clone()), c.clone());
        let rhs = ObjExpr::sum(ObjExpr::tensor(a, c.clone()), ObjExpr::tensor(b, c));
        Some(vec![
            mor_agrees(&ctx.val, &d.clone().then(u.clone()), &MorExpr::Id(lhs.clone()), &lhs),
            mor_agrees(&ctx.val, &u.then(d), &MorExpr::Id(rhs.clone()), &rhs),
        ])
    })
}

fn dist_left_inverse(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let (a, b, c) = (enumerable_object(ctx, 0)?, enumerable_object(ctx, 0)?, enumerable_object(ctx, 1)?);
        let d = MorExpr::DistL(a.clone(), b.clone(), c.clone());
        let u = MorExpr::UndistL(a.clone(), b.clone(), c.clone());
        let lhs = ObjExpr::tensor(c.clone(), ObjExpr::sum(a.clone(), b.clone()));
        let rhs = ObjExpr::sum(ObjExpr::tensor(c.clone(), a), ObjExpr::tensor(c, b));
        Some(vec![
            mor_agrees(&ctx.val, &d.clone().then(u.clone()), &MorExpr::Id(lhs.clone()), &lhs),
            mor_agrees(&ctx.val, &u.then(d), &MorExpr::Id(rhs.clone()), &rhs),
        ])
    })
}

fn dist_injection(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let (a, b, c) = (enumerable_object(ctx, 0)?, enumerable_object(ctx, 0)?, enumerable_object(ctx, 1)?);
        let (ac, bc) = (ObjExpr::tensor(a.clone(), c.clone()), ObjExpr::tensor(b.clone(), c.clone()));
        let dist = MorExpr::DistR(a.clone(), b.clone(), c.clone());
        let i0 = MorExpr::Inj0(a.clone(), b.clone()).tensor(MorExpr::Id(c.clone())).then(dist.clone());
        let i1 = MorExpr::Inj1(a, b).tensor(MorExpr::Id(c)).then(dist);
        Some(vec![
            mor_agrees(&ctx.val, &i0, &MorExpr::Inj0(ac.clone(), bc.clone()), &ac),
            mor_agrees(&ctx.val, &i1, &MorExpr::Inj1(ac, bc.clone()), &bc),
        ])
    })
}

fn braid_symmetry(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let (a, b) = (enumerable_object(ctx, 1)?, enumerable_object(ctx, 1)?);
        let twice = MorExpr::Braid(a.clone(), b.clone()).then(MorExpr::Braid(b.clone(), a.clone()));
        let ab = ObjExpr::tensor(a, b);
        Some(vec![mor_agrees(&ctx.val, &twice, &MorExpr::Id(ab.clone()), &ab)])
    })
}

fn compose_identity(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let a = enumerable_object(ctx, 1)?;
        let (f, cod) = ctx.g.morphism_from(&a, 2);
        let sig = ctx.sig();
        let fi = f.clone().then(MorExpr::Id(cod.clone()));
        let typed = sig.infer_mor_type(&fi).ok() == sig.infer_mor_type(&f).ok();
        Some(vec![
            fact(typed, || format!("type of {fi} differs from {f}")),
            mor_agrees(&ctx.val, &fi, &f, &a),
            mor_agrees(&ctx.val, &MorExpr::Id(a.clone()).then(f.clone()), &f, &a),
        ])
    })
}

fn object_normalize(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let (a, b) = (ctx.g.object(2), ctx.g.object(2));
        let idem = a.normalize().normalize() == a.normalize();
        let cong = ObjExpr::tensor(a.clone(), b.clone()).normalize()
            == ObjExpr::tensor(a.normalize(), b.normalize()).normalize();
        Some(vec![
            fact(idem, || format!("normalizing {a} is not idempotent")),
            fact(cong, || format!("tensor of {a} and {b} is not a congruence")),
        ])
    })
}

// Protocols.

/// A protocol together with a variant that should be equal to it.
fn protocol_variant(ctx: &mut Ctx) -> (Protocol, Protocol) {
    let p = ctx.g.protocol(2, true);
    let q = match p.normalize().items().as_slice() {
        [s @ Protocol::StarX(_)] => unfold_star_x(s).expect("star"),
        [s @ Protocol::StarP(_)] => unfold_star_p(s).expect("star"),
        _ => Protocol::seq([Protocol::Done, p.clone(), Protocol::Done]),
    };
    (p, q)
}

fn proto_equivalence(ctx: &mut Ctx) -> Vec<Inst> {
    let mut corpus = Vec::new();
    for _ in 0..ctx.cfg.instances.max(2) {
        let (p, q) = protocol_variant(ctx);
        corpus.push(p);
        corpus.push(q);
    }
    let mut out = Vec::new();
    for p in &corpus {
        out.push(fact(proto_equal(p, p), || format!("{p} is not equal to itself")));
        for q in &corpus {
            let pq = proto_equal(p, q);
            out.push(fact(pq == proto_equal(q, p), || format!("{p} and {q}: not symmetric")));
            if !pq {
                continue;
            }
            for r in &corpus {
                if proto_equal(q, r) {
                    out.push(fact(proto_equal(p, r), || format!("{p}, {q}, {r}: not transitive")));
                }
            }
        }
    }
    out
}

fn proto_unfold(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let u = ctx.small_protocol(true);
        let (x, p) = (Protocol::star_x(u.clone()), Protocol::star_p(u));
        let ux = unfold_star_x(&x).expect("star");
        let up = unfold_star_p(&p).expect("star");
        Some(vec![
            fact(proto_equal(&x, &ux), || format!("{x} differs from its unfolding")),
            fact(proto_equal(&p, &up), || format!("{p} differs from its unfolding")),
            fact(proto_equal(&refold(&ux), &x), || format!("{ux} does not refold to {x}")),
        ])
    })
}

fn proto_congruence(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let (p, q) = protocol_variant(ctx);
        let r = ctx.small_protocol(true);
        let ok = proto_equal(&Protocol::seq([p.clone(), r.clone()]), &Protocol::seq([q.clone(), r.clone()]))
            && proto_equal(&Protocol::seq([r.clone(), p.clone()]), &Protocol::seq([r.clone(), q.clone()]));
        Some(vec![fact(!proto_equal(&p, &q) || ok, || {
            format!("{p} = {q} but not in context {r}")
        })])
    })
}

fn proto_normalize_idempotent(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let p = ctx.g.protocol(3, true);
        let n = p.normalize();
        Some(vec![fact(n.normalize() == n, || format!("normalizing {p} is not idempotent"))])
    })
}

// Corners and composition.

fn atoms(ctx: &Ctx) -> Vec<ObjExpr> {
    let mut v = ctx.g.atoms().to_vec();
    v.push(ObjExpr::Unit);
    v
}

fn yank_send_h(ctx: &mut Ctx) -> Vec<Inst> {
    atoms(ctx)
        .into_iter()
        .map(|a| Inst::Eq(Cell::hcomp(Cell::PutR(a.clone()), Cell::GetL(a.clone())), Cell::IdV(a)))
        .collect()
}

fn yank_send_v(ctx: &mut Ctx) -> Vec<Inst> {
    atoms(ctx)
        .into_iter()
        .map(|a| {
            Inst::Eq(
                Cell::vcomp(Cell::GetL(a.clone()), Cell::PutR(a.clone())),
                Cell::IdH(Protocol::send(a)),
            )
        })
        .collect()
}

fn yank_recv_h(ctx: &mut Ctx) -> Vec<Inst> {
    atoms(ctx)
        .into_iter()
        .map(|a| Inst::Eq(Cell::hcomp(Cell::GetR(a.clone()), Cell::PutL(a.clone())), Cell::IdV(a)))
        .collect()
}

fn yank_recv_v(ctx: &mut Ctx) -> Vec<Inst> {
    atoms(ctx)
        .into_iter()
        .map(|a| {
            Inst::Eq(
                Cell::vcomp(Cell::GetR(a.clone()), Cell::PutL(a.clone())),
                Cell::IdH(Protocol::recv(a)),
            )
        })
        .collect()
}

fn corner_compose(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let a = enumerable_object(ctx, 1)?;
        let (f, b) = ctx.g.morphism_from(&a, 1);
        let (g, _) = ctx.g.morphism_from(&b, 1);
        Some(vec![Inst::Eq(
            Cell::Promote(f.clone().then(g.clone())),
            Cell::vcomp(Cell::Promote(f), Cell::Promote(g)),
        )])
    })
}

fn corner_tensor(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let (a, b) = (enumerable_object(ctx, 0)?, enumerable_object(ctx, 0)?);
        let (f, _) = ctx.g.morphism_from(&a, 1);
        let (g, _) = ctx.g.morphism_from(&b, 1);
        Some(vec![Inst::Eq(
            Cell::Promote(f.clone().tensor(g.clone())),
            Cell::hcomp(Cell::Promote(f), Cell::Promote(g)),
        )])
    })
}

fn corner_identity(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let a = enumerable_object(ctx, 1)?;
        Some(vec![Inst::Eq(Cell::Promote(MorExpr::Id(a.clone())), Cell::IdV(a))])
    })
}

fn interchange(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let [alpha, beta, gamma, delta] = quadruple(&mut ctx.g);
        Some(vec![Inst::Eq(
            Cell::hcomp(
                Cell::vcomp(alpha.clone(), beta.clone()),
                Cell::vcomp(gamma.clone(), delta.clone()),
            ),
            Cell::vcomp(Cell::hcomp(alpha, gamma), Cell::hcomp(beta, delta)),
        )])
    })
}

/// Cells `alpha, beta, gamma, delta` such that both sides of the
/// interchange law are defined.
pub fn quadruple(g: &mut Gen) -> [Cell; 4] {
    let (l1, t1) = (g.protocol(0, true), g.object(0));
    let alpha = g.cell(&l1, &t1, 1);
    let ba = g.boundary(&alpha);
    let t2 = g.object(0);
    let gamma = g.cell(&ba.right, &t2, 1);
    let bg = g.boundary(&gamma);
    let l2 = g.protocol(0, true);
    let beta = g.cell(&l2, &ba.bottom, 1);
    let bb = g.boundary(&beta);
    let delta = g.cell(&bb.right, &bg.bottom, 1);
    [alpha, beta, gamma, delta]
}

fn small_cell(ctx: &mut Ctx) -> Cell {
    let left = ctx.small_protocol(true);
    let top = ctx.g.object(0);
    ctx.g.cell(&left, &top, 2)
}

fn hcomp_unit(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let c = small_cell(ctx);
        let b = ctx.g.boundary(&c);
        Some(vec![
            Inst::Eq(Cell::hcomp(Cell::IdH(b.left), c.clone()), c.clone()),
            Inst::Eq(Cell::hcomp(c.clone(), Cell::IdH(b.right)), c),
        ])
    })
}

fn vcomp_unit(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let c = small_cell(ctx);
        let b = ctx.g.boundary(&c);
        Some(vec![
            Inst::Eq(Cell::vcomp(Cell::IdV(b.top), c.clone()), c.clone()),
            Inst::Eq(Cell::vcomp(c.clone(), Cell::IdV(b.bottom)), c),
        ])
    })
}

fn hcomp_assoc(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let a = small_cell(ctx);
        let ra = ctx.g.boundary(&a).right;
        let t = ctx.g.object(0);
        let b = ctx.g.cell(&ra, &t, 1);
        let rb = ctx.g.boundary(&b).right;
        let t = ctx.g.object(0);
        let c = ctx.g.cell(&rb, &t, 1);
        Some(vec![Inst::Eq(
            Cell::hcomp(Cell::hcomp(a.clone(), b.clone()), c.clone()),
            Cell::hcomp(a, Cell::hcomp(b, c)),
        )])
    })
}

fn vcomp_assoc(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let a = small_cell(ctx);
        let ba = ctx.g.boundary(&a).bottom;
        let l = ctx.g.protocol(0, true);
        let b = ctx.g.cell(&l, &ba, 1);
        let bb = ctx.g.boundary(&b).bottom;
        let l = ctx.g.protocol(0, true);
        let c = ctx.g.cell(&l, &bb, 1);
        Some(vec![Inst::Eq(
            Cell::vcomp(Cell::vcomp(a.clone(), b.clone()), c.clone()),
            Cell::vcomp(a, Cell::vcomp(b, c)),
        )])
    })
}

fn swap_payloads(leaf: PValue) -> SemResult<PValue> {
    Ok(match leaf {
        PValue::Payload(Value::Atom(x)) if x == "x0" => PValue::Payload(Value::atom("x1")),
        PValue::Payload(Value::Atom(x)) if x == "x1" => PValue::Payload(Value::atom("x0")),
        PValue::With(inner, b) => PValue::With(Arc::new(swap_payloads((*inner).clone())?), b),
        other => other,
    })
}

/// Runs `check` on the inputs of `c`'s boundary.
fn on_inputs(
    ctx: &Ctx,
    c: &Cell,
    check: impl Fn(&crate::semantics::Denotation, &PValue, &Value) -> SemResult<Option<String>>,
) -> Inst {
    let run = || -> SemResult<Inst> {
        let d = denote(c, &ctx.val)?;
        let Some((inputs, exhaustive)) = test_inputs(d.boundary(), &ctx.val, &ctx.cfg.check)? else {
            return Ok(Inst::Skip);
        };
        for (l, t) in &inputs {
            if let Some(w) = check(&d, l, t)? {
                return Ok(Inst::Fact(Err(format!("{c}: {w}"))));
            }
        }
        Ok(Inst::Fact(Ok(exhaustive)))
    };
    run().unwrap_or_else(|e| Inst::Fact(Err(format!("{c}: {e}"))))
}

fn payload_naturality(ctx: &mut Ctx) -> Vec<Inst> {
    let depth = ctx.cfg.check.depth;
    ctx.repeat(|ctx| {
        let c = small_cell(ctx);
        let b = ctx.g.boundary(&c);
        let (li, ri) = (b.left.items(), b.right.items());
        let swap: Arc<dyn Fn(PValue) -> SemResult<PValue> + Send + Sync> = Arc::new(swap_payloads);
        Some(vec![on_inputs(ctx, &c, |d, l, t| {
            let lhs = d.apply(&fmap(&li, l, &swap)?, t)?;
            let rhs = fmap(&ri, &d.apply(l, t)?, &swap)?;
            Ok((!pval_equal(&lhs, &rhs, depth)?)
                .then(|| format!("relabelled {l}: {} vs {}", Shown(&lhs, depth), Shown(&rhs, depth))))
        })])
    })
}

// Choice.

fn beta_pi(ctx: &mut Ctx, second: bool) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let (left, top) = (ctx.small_protocol(false), ctx.g.object(0));
        let a = ctx.g.cell(&left, &top, 1);
        let b = ctx.g.cell(&left, &top, 1);
        let (a, b) = ctx.g.join_bottoms(a, b);
        let (ra, rb) = (ctx.g.boundary(&a).right, ctx.g.boundary(&b).right);
        let (proj, want) = if second {
            (Cell::Pi1(ra, rb), b.clone())
        } else {
            (Cell::Pi0(ra, rb), a.clone())
        };
        Some(vec![Inst::Eq(Cell::hcomp(Cell::times(a, b), proj), want)])
    })
}

fn beta_pi0(ctx: &mut Ctx) -> Vec<Inst> {
    beta_pi(ctx, false)
}

fn beta_pi1(ctx: &mut Ctx) -> Vec<Inst> {
    beta_pi(ctx, true)
}

fn beta_in(ctx: &mut Ctx, second: bool) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let (u, w, top) = (ctx.small_protocol(false), ctx.small_protocol(false), ctx.g.object(0));
        let a = ctx.g.closed_cell(&u, &top, 1)?;
        let b = ctx.g.closed_cell(&w, &top, 1)?;
        let (a, b) = ctx.g.join_bottoms(a, b);
        let (inj, want) = if second {
            (Cell::Inj1(u, w), b.clone())
        } else {
            (Cell::Inj0(u, w), a.clone())
        };
        Some(vec![Inst::Eq(Cell::hcomp(inj, Cell::plus(a, b)), want)])
    })
}

fn beta_in0(ctx: &mut Ctx) -> Vec<Inst> {
    beta_in(ctx, false)
}

fn beta_in1(ctx: &mut Ctx) -> Vec<Inst> {
    beta_in(ctx, true)
}

fn beta_copair(ctx: &mut Ctx, second: bool) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let left = ctx.small_protocol(false);
        let (x, y) = (ctx.g.object(0), ctx.g.object(0));
        let a = ctx.g.closed_cell(&left, &x, 1)?;
        let b = ctx.g.closed_cell(&left, &y, 1)?;
        let (a, b) = ctx.g.join_bottoms(a, b);
        let (inj, want) = if second {
            (MorExpr::Inj1(x, y), b.clone())
        } else {
            (MorExpr::Inj0(x, y), a.clone())
        };
        Some(vec![Inst::Eq(Cell::vcomp(Cell::Promote(inj), Cell::copair(a, b)), want)])
    })
}

fn beta_copair0(ctx: &mut Ctx) -> Vec<Inst> {
    beta_copair(ctx, false)
}

fn beta_copair1(ctx: &mut Ctx) -> Vec<Inst> {
    beta_copair(ctx, true)
}

fn product_pairing(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let left = ctx.small_protocol(false);
        let a = ctx.g.hcell(&left);
        let r = ctx.g.boundary(&a).right;
        let (b, c) = (ctx.g.hcell(&r), ctx.g.hcell(&r));
        let h = Cell::hcomp(a, Cell::times(b, c));
        let Protocol::Choose(u, w) = ctx.g.boundary(&h).right else {
            return None;
        };
        let (u, w) = (*u, *w);
        let paired = Cell::times(
            Cell::hcomp(h.clone(), Cell::Pi0(u.clone(), w.clone())),
            Cell::hcomp(h.clone(), Cell::Pi1(u, w)),
        );
        Some(vec![Inst::Eq(h, paired)])
    })
}

fn coproduct_pairing(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let (u, w) = (ctx.small_protocol(false), ctx.small_protocol(false));
        let h = ctx.g.hcell(&Protocol::offer(u.clone(), w.clone()));
        let copaired = Cell::plus(
            Cell::hcomp(Cell::Inj0(u.clone(), w.clone()), h.clone()),
            Cell::hcomp(Cell::Inj1(u, w), h.clone()),
        );
        Some(vec![Inst::Eq(h, copaired)])
    })
}

fn copair_coincide(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let (a, b) = (enumerable_object(ctx, 0)?, enumerable_object(ctx, 0)?);
        let (f, c1) = ctx.g.morphism_from(&a, 1);
        let (g, c2) = ctx.g.morphism_from(&b, 1);
        let f = f.then(MorExpr::Inj0(c1.clone(), c2.clone()));
        let g = g.then(MorExpr::Inj1(c1, c2));
        Some(vec![Inst::Eq(
            Cell::copair(Cell::Promote(f.clone()), Cell::Promote(g.clone())),
            Cell::Promote(MorExpr::copair(f, g)),
        )])
    })
}

fn copair_absorb_left(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let (l, c) = (ctx.small_protocol(false), ctx.g.object(0));
        let gamma = ctx.g.cell(&l, &c, 1);
        let bg = ctx.g.boundary(&gamma);
        let (a, b) = (ctx.g.object(0), ctx.g.object(0));
        let alpha = ctx.g.closed_cell(&bg.right, &a, 1)?;
        let beta = ctx.g.closed_cell(&bg.right, &b, 1)?;
        let (alpha, beta) = ctx.g.join_bottoms(alpha, beta);
        let lhs = Cell::hcomp(gamma.clone(), Cell::copair(alpha.clone(), beta.clone()));
        let rhs = Cell::vcomp(
            Cell::Promote(MorExpr::DistL(a, b, bg.top)),
            Cell::copair(Cell::hcomp(gamma.clone(), alpha), Cell::hcomp(gamma, beta)),
        );
        Some(vec![Inst::Eq(lhs, rhs)])
    })
}

fn copair_absorb_right(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let l = ctx.small_protocol(false);
        let (a, b) = (ctx.g.object(0), ctx.g.object(0));
        let (alpha, beta) = parallel_pair_tops(ctx, &l, &a, &b)?;
        let r = ctx.g.boundary(&alpha).right;
        let c = ctx.g.object(0);
        let gamma = ctx.g.cell(&r, &c, 1);
        let lhs = Cell::hcomp(Cell::copair(alpha.clone(), beta.clone()), gamma.clone());
        let rhs = Cell::vcomp(
            Cell::Promote(MorExpr::DistR(a, b, c)),
            Cell::copair(Cell::hcomp(alpha, gamma.clone()), Cell::hcomp(beta, gamma)),
        );
        Some(vec![Inst::Eq(lhs, rhs)])
    })
}

/// Cells `[left | a -> X | R]` and `[left | b -> X | R]` for some `X`, `R`.
fn parallel_pair_tops(ctx: &mut Ctx, left: &Protocol, a: &ObjExpr, b: &ObjExpr) -> Option<(Cell, Cell)> {
    let alpha = ctx.g.closed_cell(left, a, 1)?;
    let beta = ctx.g.closed_cell(left, b, 1)?;
    let (alpha, beta) = ctx.g.join_bottoms(alpha, beta);
    // Optionally give both the same nontrivial right side.
    if ctx.g.rng().gen_bool(0.5) {
        let w = ctx.g.send_protocol(0);
        if let Some(p) = ctx.g.producer(&w, 1) {
            return Some((Cell::hcomp(alpha, p.clone()), Cell::hcomp(beta, p)));
        }
    }
    Some((alpha, beta))
}

fn copair_absorb_vertical(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let l = ctx.small_protocol(false);
        let (a, b) = (ctx.g.object(0), ctx.g.object(0));
        let (alpha, beta) = parallel_pair_tops(ctx, &l, &a, &b)?;
        let x = ctx.g.boundary(&alpha).bottom;
        let l2 = if l.items().len() > 1 {
            Protocol::Done
        } else {
            ctx.g.protocol(0, false)
        };
        let gamma = ctx.g.cell(&l2, &x, 1);
        Some(vec![Inst::Eq(
            Cell::vcomp(Cell::copair(alpha.clone(), beta.clone()), gamma.clone()),
            Cell::copair(Cell::vcomp(alpha, gamma.clone()), Cell::vcomp(beta, gamma)),
        )])
    })
}

fn atom_pair(ctx: &mut Ctx) -> (ObjExpr, ObjExpr) {
    (ctx.g.atom(), ctx.g.atom())
}

fn moral_equiv_send_law(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let (a, b) = atom_pair(ctx);
        let (to, from) = send_sum_iso(&a, &b);
        let sum = ObjExpr::sum(a.clone(), b.clone());
        Some(vec![
            Inst::Eq(Cell::hcomp(to.clone(), from.clone()), Cell::IdH(Protocol::send(sum))),
            Inst::Eq(
                Cell::hcomp(from, to),
                Cell::IdH(Protocol::offer(Protocol::send(a), Protocol::send(b))),
            ),
        ])
    })
}

fn moral_equiv_recv_law(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let (a, b) = atom_pair(ctx);
        let (to, from) = recv_sum_iso(&a, &b);
        let sum = ObjExpr::sum(a.clone(), b.clone());
        Some(vec![
            Inst::Eq(Cell::hcomp(to.clone(), from.clone()), Cell::IdH(Protocol::recv(sum))),
            Inst::Eq(
                Cell::hcomp(from, to),
                Cell::IdH(Protocol::choose(Protocol::recv(a), Protocol::recv(b))),
            ),
        ])
    })
}

// Crossings.

fn crossing_tensor(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let u = ctx.small_protocol(true);
        let (a, b) = (ctx.g.object(0), ctx.g.object(0));
        Some(vec![Inst::Eq(
            crossing(&u, &ObjExpr::tensor(a.clone(), b.clone())),
            Cell::hcomp(crossing(&u, &a), crossing(&u, &b)),
        )])
    })
}

fn crossing_unit(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let u = ctx.small_protocol(true);
        Some(vec![Inst::Eq(crossing(&u, &ObjExpr::Unit), Cell::IdH(u))])
    })
}

fn crossing_sum(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let u = ctx.small_protocol(true);
        let (a, b) = atom_pair(ctx);
        let sum = ObjExpr::sum(a.clone(), b.clone());
        Some(vec![Inst::Eq(
            crossing(&u, &sum),
            Cell::copair(
                Cell::vcomp(crossing(&u, &a), Cell::Promote(MorExpr::Inj0(a.clone(), b.clone()))),
                Cell::vcomp(crossing(&u, &b), Cell::Promote(MorExpr::Inj1(a, b))),
            ),
        )])
    })
}

fn crossing_swaps(ctx: &mut Ctx) -> Vec<Inst> {
    let sig = ctx.sig();
    ctx.repeat(|ctx| {
        let alpha = small_cell(ctx);
        let c = ctx.g.object(0);
        let (lhs, rhs) = crossing_swap_sides(&alpha, &c, &sig).ok()?;
        Some(vec![Inst::Eq(lhs, rhs)])
    })
}

fn crossing_strength(ctx: &mut Ctx) -> Vec<Inst> {
    let depth = ctx.cfg.check.depth;
    ctx.repeat(|ctx| {
        let u = ctx.small_protocol(true);
        let a = ctx.g.object(0);
        let c = crossing(&u, &a);
        let items = u.items();
        Some(vec![on_inputs(ctx, &c, |d, l, t| {
            let out = d.apply(l, t)?;
            let t2 = t.clone();
            let attach: Arc<dyn Fn(PValue) -> SemResult<PValue> + Send + Sync> =
                Arc::new(move |leaf| Ok(with(leaf, t2.clone())));
            let want = fmap(&items, l, &attach)?;
            Ok((!pval_equal(&out, &want, depth)?)
                .then(|| format!("{l} with {t}: {} vs {}", Shown(&out, depth), Shown(&want, depth))))
        })])
    })
}

// Iteration.

struct IterXParts {
    alpha: Cell,
    f: Cell,
    g: Cell,
    w: Protocol,
    k: Protocol,
}

/// `alpha : [U | T -> T | W]`, `f : [V | T -> B | K]` and a coalgebra
/// `g : [V | I -> I | U * V]`.
fn iterx_parts(ctx: &mut Ctx) -> IterXParts {
    let top = ctx.g.object(0);
    let (u, v, g) = if ctx.g.rng().gen_bool(0.3) {
        (Protocol::Done, Protocol::Done, Cell::IdH(Protocol::Done))
    } else {
        let u = ctx.g.protocol(0, false);
        let r = ctx.g.protocol(0, false);
        let v = Protocol::seq([Protocol::star_x(u.clone()), r.clone()]);
        let g = Cell::vcomp(Cell::Pi1(Protocol::Done, x_tail(&u)), Cell::IdH(r));
        (u, v, g)
    };
    let alpha = ctx.g.square(&u, &top, 1);
    let f = ctx.g.cell(&v, &top, 1);
    let w = ctx.g.boundary(&alpha).right;
    let k = ctx.g.boundary(&f).right;
    IterXParts { alpha, f, g, w, k }
}

fn iterx_stop(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let p = iterx_parts(ctx);
        let it = Cell::iter_x(p.alpha, p.f.clone(), p.g);
        let proj = Cell::vcomp(Cell::Pi0(Protocol::Done, x_tail(&p.w)), Cell::IdH(p.k));
        Some(vec![Inst::Eq(Cell::hcomp(it, proj), p.f)])
    })
}

fn iterx_step(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let p = iterx_parts(ctx);
        let it = Cell::iter_x(p.alpha.clone(), p.f, p.g.clone());
        let proj = Cell::vcomp(Cell::Pi1(Protocol::Done, x_tail(&p.w)), Cell::IdH(p.k));
        Some(vec![Inst::Eq(
            Cell::hcomp(it.clone(), proj),
            Cell::hcomp(p.g, Cell::vcomp(p.alpha, it)),
        )])
    })
}

struct IterPParts {
    alpha: Cell,
    f: Cell,
    g: Cell,
    u: Protocol,
    l: Protocol,
}

/// `alpha : [U | T -> T | W]`, `f : [L | T -> B | K]` and an algebra
/// `g : [W * K | I -> I | K]`.
fn iterp_parts(ctx: &mut Ctx) -> IterPParts {
    let top = ctx.g.object(0);
    let u = ctx.g.protocol(0, false);
    let alpha = ctx.g.square(&u, &top, 1);
    let w = ctx.g.boundary(&alpha).right;
    let l = ctx.g.protocol(0, false);
    let f0 = ctx.g.cell(&l, &top, 1);
    let r0 = ctx.g.boundary(&f0).right;
    let f = Cell::hcomp(f0, Cell::vcomp(Cell::Inj0(Protocol::Done, p_tail(&w)), Cell::IdH(r0.clone())));
    let g = Cell::vcomp(Cell::Inj1(Protocol::Done, p_tail(&w)), Cell::IdH(r0));
    IterPParts { alpha, f, g, u, l }
}

fn iterp_stop(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let p = iterp_parts(ctx);
        let it = Cell::iter_p(p.alpha, p.f.clone(), p.g);
        let inj = Cell::vcomp(Cell::Inj0(Protocol::Done, p_tail(&p.u)), Cell::IdH(p.l));
        Some(vec![Inst::Eq(Cell::hcomp(inj, it), p.f)])
    })
}

fn iterp_step(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let p = iterp_parts(ctx);
        let it = Cell::iter_p(p.alpha.clone(), p.f, p.g.clone());
        let inj = Cell::vcomp(Cell::Inj1(Protocol::Done, p_tail(&p.u)), Cell::IdH(p.l));
        Some(vec![Inst::Eq(
            Cell::hcomp(inj, it.clone()),
            Cell::hcomp(Cell::vcomp(p.alpha, it), p.g),
        )])
    })
}

fn coalgebra_mediation(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        // h : [V^x | I -> I | I x (U * V^x)] from k : [V | I -> I | U].
        let v = ctx.g.protocol(0, false);
        let k = ctx.g.hcell(&v);
        let u = ctx.g.boundary(&k).right;
        let vx = Protocol::star_x(v.clone());
        let h = Cell::times(
            Cell::Pi0(Protocol::Done, x_tail(&v)),
            Cell::hcomp(Cell::Pi1(Protocol::Done, x_tail(&v)), Cell::vcomp(k, Cell::IdH(vx.clone()))),
        );
        let step = Protocol::seq([u.clone(), vx]);
        let m = Cell::iter_x(
            Cell::IdH(u.clone()),
            Cell::hcomp(h.clone(), Cell::Pi0(Protocol::Done, step.clone())),
            Cell::hcomp(h.clone(), Cell::Pi1(Protocol::Done, step.clone())),
        );
        let square = Cell::hcomp(
            h,
            Cell::times(
                Cell::Pi0(Protocol::Done, step.clone()),
                Cell::hcomp(Cell::Pi1(Protocol::Done, step), Cell::vcomp(Cell::IdH(u), m.clone())),
            ),
        );
        Some(vec![Inst::Eq(m, square)])
    })
}

fn comonoid_counit_left(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let u = ctx.small_protocol(false);
        let (delta, counit) = comonoid_x(&u);
        let ux = Protocol::star_x(u);
        Some(vec![Inst::Eq(
            Cell::hcomp(delta, Cell::vcomp(counit, Cell::IdH(ux.clone()))),
            Cell::IdH(ux),
        )])
    })
}

fn comonoid_counit_right(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let u = ctx.small_protocol(false);
        let (delta, counit) = comonoid_x(&u);
        let ux = Protocol::star_x(u);
        Some(vec![Inst::Eq(
            Cell::hcomp(delta, Cell::vcomp(Cell::IdH(ux.clone()), counit)),
            Cell::IdH(ux),
        )])
    })
}

fn comonoid_coassoc(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let u = ctx.small_protocol(false);
        let (delta, _) = comonoid_x(&u);
        let ux = Protocol::star_x(u);
        Some(vec![Inst::Eq(
            Cell::hcomp(delta.clone(), Cell::vcomp(delta.clone(), Cell::IdH(ux.clone()))),
            Cell::hcomp(delta.clone(), Cell::vcomp(Cell::IdH(ux), delta)),
        )])
    })
}

fn monoid_unit_left(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let u = ctx.small_protocol(false);
        let (nabla, unit) = monoid_p(&u);
        let up = Protocol::star_p(u);
        Some(vec![Inst::Eq(
            Cell::hcomp(Cell::vcomp(unit, Cell::IdH(up.clone())), nabla),
            Cell::IdH(up),
        )])
    })
}

fn monoid_unit_right(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let u = ctx.small_protocol(false);
        let (nabla, unit) = monoid_p(&u);
        let up = Protocol::star_p(u);
        Some(vec![Inst::Eq(
            Cell::hcomp(Cell::vcomp(Cell::IdH(up.clone()), unit), nabla),
            Cell::IdH(up),
        )])
    })
}

fn monoid_assoc(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let u = ctx.small_protocol(false);
        let (nabla, _) = monoid_p(&u);
        let up = Protocol::star_p(u);
        Some(vec![Inst::Eq(
            Cell::hcomp(Cell::vcomp(nabla.clone(), Cell::IdH(up.clone())), nabla.clone()),
            Cell::hcomp(Cell::vcomp(Cell::IdH(up), nabla.clone()), nabla),
        )])
    })
}

fn comonad_counit_1(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let u = ctx.small_protocol(false);
        let ux = Protocol::star_x(u.clone());
        let (_, dup) = comonad_x(&u);
        let (eps_x, _) = comonad_x(&ux);
        Some(vec![Inst::Eq(Cell::hcomp(dup, eps_x), Cell::IdH(ux))])
    })
}

fn comonad_counit_2(ctx: &mut Ctx) -> Vec<Inst> {
    let sig = ctx.sig();
    ctx.repeat(|ctx| {
        let u = ctx.small_protocol(false);
        let (eps, dup) = comonad_x(&u);
        let lifted = simple_iter_x(&eps, &sig).ok()?;
        Some(vec![Inst::Eq(Cell::hcomp(dup, lifted), Cell::IdH(Protocol::star_x(u)))])
    })
}

fn comonad_coassoc(ctx: &mut Ctx) -> Vec<Inst> {
    let sig = ctx.sig();
    ctx.repeat(|ctx| {
        let u = ctx.small_protocol(false);
        let (_, dup) = comonad_x(&u);
        let (_, dup_x) = comonad_x(&Protocol::star_x(u));
        let lifted = simple_iter_x(&dup, &sig).ok()?;
        Some(vec![Inst::Eq(Cell::hcomp(dup.clone(), dup_x), Cell::hcomp(dup, lifted))])
    })
}

fn monad_unit_1(ctx: &mut Ctx) -> Vec<Inst> {
    ctx.repeat(|ctx| {
        let u = ctx.small_protocol(false);
        let up = Protocol::star_p(u.clone());
        let (_, mu) = monad_p(&u);
        let (eta_p, _) = monad_p(&up);
        Some(vec![Inst::Eq(Cell::hcomp(eta_p, mu), Cell::IdH(up))])
    })
}

fn monad_unit_2(ctx: &mut Ctx) -> Vec<Inst> {
    let sig = ctx.sig();
    ctx.repeat(|ctx| {
        let u = ctx.small_protocol(false);
        let (eta, mu) = monad_p(&u);
        let lifted = simple_iter_p(&eta, &sig).ok()?;
        Some(vec![Inst::Eq(Cell::hcomp(lifted, mu), Cell::IdH(Protocol::star_p(u)))])
    })
}

fn monad_assoc(ctx: &mut Ctx) -> Vec<Inst> {
    let sig = ctx.sig();
    ctx.repeat(|ctx| {
        let u = ctx.small_protocol(false);
        let (_, mu) = monad_p(&u);
        let (_, mu_p) = monad_p(&Protocol::star_p(u));
        let lifted = simple_iter_p(&mu, &sig).ok()?;
        Some(vec![Inst::Eq(Cell::hcomp(mu_p, mu.clone()), Cell::hcomp(lifted, mu))])
    })
}

fn diagonal_naturality(ctx: &mut Ctx) -> Vec<Inst> {
    let sig = ctx.sig();
    ctx.repeat(|ctx| {
        let u = ctx.small_protocol(false);
        let h = ctx.g.hcell(&u);
        let w = ctx.g.boundary(&h).right;
        let hx = simple_iter_x(&h, &sig).ok()?;
        let (du, _) = comonoid_x(&u);
        let (dw, _) = comonoid_x(&w);
        Some(vec![Inst::Eq(
            Cell::hcomp(du, Cell::vcomp(hx.clone(), hx.clone())),
            Cell::hcomp(hx, dw),
        )])
    })
}

fn codiagonal_naturality(ctx: &mut Ctx) -> Vec<Inst> {
    let sig = ctx.sig();
    ctx.repeat(|ctx| {
        let u = ctx.small_protocol(false);
        let h = ctx.g.hcell(&u);
        let w = ctx.g.boundary(&h).right;
        let hp = simple_iter_p(&h, &sig).ok()?;
        let (nu, _) = monoid_p(&u);
        let (nw, _) = monoid_p(&w);
        Some(vec![Inst::Eq(
            Cell::hcomp(Cell::vcomp(hp.clone(), hp.clone()), nw),
            Cell::hcomp(nu, hp),
        )])
    })
}

// Rewriting.

/// A term with a redex of some rule at or near its root.
pub fn redex_term(g: &mut Gen) -> Cell {
    let left = g.protocol(0, false);
    let top = g.object(0);
    match g.rng().gen_range(0..9) {
        0 => {
            let a = g.cell(&left, &top, 1);
            let b = g.cell(&left, &top, 1);
            let (a, b) = g.join_bottoms(a, b);
            let (ra, rb) = (g.boundary(&a).right, g.boundary(&b).right);
            let proj = if g.rng().gen_bool(0.5) {
                Cell::Pi0(ra, rb)
            } else {
                Cell::Pi1(ra, rb)
            };
            Cell::hcomp(Cell::times(a, b), proj)
        }
        1 => {
            let w = g.protocol(0, false);
            match (g.closed_cell(&left, &top, 1), g.closed_cell(&w, &top, 1)) {
                (Some(a), Some(b)) => {
                    let (a, b) = g.join_bottoms(a, b);
                    let inj = if g.rng().gen_bool(0.5) {
                        Cell::Inj0(left, w)
                    } else {
                        Cell::Inj1(left, w)
                    };
                    Cell::hcomp(inj, Cell::plus(a, b))
                }
                _ => g.cell(&left, &top, 2),
            }
        }
        2 => {
            let other = g.object(0);
            match (g.closed_cell(&left, &top, 1), g.closed_cell(&left, &other, 1)) {
                (Some(a), Some(b)) => {
                    let (a, b) = g.join_bottoms(a, b);
                    let inj = if g.rng().gen_bool(0.5) {
                        MorExpr::Inj0(top, other)
                    } else {
                        MorExpr::Inj1(top, other)
                    };
                    Cell::vcomp(Cell::Promote(inj), Cell::copair(a, b))
                }
                _ => g.cell(&left, &top, 2),
            }
        }
        3 => {
            let c = g.cell(&left, &top, 1);
            let b = g.boundary(&c).bottom;
            let yank = if g.rng().gen_bool(0.5) {
                Cell::hcomp(Cell::PutR(b.clone()), Cell::GetL(b))
            } else {
                Cell::hcomp(Cell::GetR(b.clone()), Cell::PutL(b))
            };
            Cell::vcomp(c, yank)
        }
        4 => {
            let a = g.atom();
            let c = g.cell(&left, &ObjExpr::Unit, 1);
            let yank = if g.rng().gen_bool(0.5) {
                Cell::vcomp(Cell::GetL(a.clone()), Cell::PutR(a))
            } else {
                Cell::vcomp(Cell::GetR(a.clone()), Cell::PutL(a))
            };
            Cell::vcomp(yank, c)
        }
        5 => {
            let (f, b) = g.morphism_from(&top, 1);
            let (h, _) = g.morphism_from(&b, 1);
            let c = Cell::vcomp(Cell::Promote(f), Cell::Promote(h));
            let other = g.object(0);
            let (k, _) = g.morphism_from(&other, 0);
            Cell::hcomp(c, Cell::Promote(k))
        }
        6 => {
            let u = g.protocol(0, false);
            let top = g.object(0);
            let alpha = g.square(&u, &top, 1);
            let w = g.boundary(&alpha).right;
            let it = simple_iter_x(&alpha, g.signature()).expect("square");
            let proj = if g.rng().gen_bool(0.5) {
                Cell::Pi0(Protocol::Done, x_tail(&w))
            } else {
                Cell::Pi1(Protocol::Done, x_tail(&w))
            };
            Cell::hcomp(it, proj)
        }
        7 => {
            let u = g.protocol(0, false);
            let top = g.object(0);
            let alpha = g.square(&u, &top, 1);
            let it = simple_iter_p(&alpha, g.signature()).expect("square");
            let inj = if g.rng().gen_bool(0.5) {
                Cell::Inj0(Protocol::Done, p_tail(&u))
            } else {
                Cell::Inj1(Protocol::Done, p_tail(&u))
            };
            Cell::hcomp(inj, it)
        }
        _ => g.cell(&left, &top, 2),
    }
}

const REWRITE_BUDGET: usize = 64;

/// Golden cells plus `n` random terms, about half of them with redexes.
fn rewrite_corpus(ctx: &mut Ctx) -> Vec<Cell> {
    let sig = ctx.sig();
    let mut corpus: Vec<Cell> = ctx
        .extra
        .iter()
        .filter(|c| infer_boundary(c, &sig).is_ok())
        .cloned()
        .collect();
    for i in 0..ctx.cfg.instances.max(1) {
        let c = if i % 2 == 0 {
            redex_term(&mut ctx.g)
        } else {
            small_cell(ctx)
        };
        corpus.push(c);
    }
    corpus
}

fn rewrite_boundary(ctx: &mut Ctx) -> Vec<Inst> {
    let sig = ctx.sig();
    let mutation = ctx.cfg.mutation;
    let mut out = Vec::new();
    for c in rewrite_corpus(ctx) {
        let report = normalize_cell_with(&c, REWRITE_BUDGET, mutation);
        let mut before = c;
        for (rule, pos) in &report.steps {
            let Some(after) = replay(&before, &[(*rule, pos.clone())]) else {
                out.push(Inst::Fact(Err(format!("{rule} at {pos:?} does not replay on {before}"))));
                break;
            };
            let same = match (infer_boundary(&before, &sig), infer_boundary(&after, &sig)) {
                (Ok(b1), Ok(b2)) => b1.equiv(&b2),
                _ => false,
            };
            out.push(fact(same, || format!("{rule} at {pos:?} changes the boundary of {before}")));
            before = after;
        }
    }
    out
}

fn rewrite_soundness(ctx: &mut Ctx) -> Vec<Inst> {
    let mutation = ctx.cfg.mutation;
    let mut out = Vec::new();
    for c in rewrite_corpus(ctx) {
        let report = normalize_cell_with(&c, REWRITE_BUDGET, mutation);
        let mut before = c;
        for step in &report.steps {
            let Some(after) = replay_with(&before, step, mutation) else {
                break;
            };
            out.push(Inst::Eq(before, after.clone()));
            before = after;
        }
    }
    out
}

/// One step of a report; under a mutation the step is recomputed, since
/// [`replay`] knows only the correct rules.
fn replay_with(
    c: &Cell,
    step: &(crate::rewrite::RuleId, crate::cell::Path),
    mutation: Option<Mutation>,
) -> Option<Cell> {
    if mutation.is_none() {
        return replay(c, std::slice::from_ref(step));
    }
    crate::rewrite::rewrite_step_with(c, mutation).map(|(next, _, _)| next)
}

fn rewrite_budget(ctx: &mut Ctx) -> Vec<Inst> {
    let mutation = ctx.cfg.mutation;
    let mut out = Vec::new();
    for (i, c) in rewrite_corpus(ctx).into_iter().enumerate() {
        let budget = i % 7;
        let report = normalize_cell_with(&c, budget, mutation);
        let within = report.steps.len() <= budget;
        let replays = mutation.is_some() || replay(&c, &report.steps).as_ref() == Some(&report.result);
        out.push(fact(within && replays, || {
            format!("budget {budget} on {c}: {} steps, replay ok {replays}", report.steps.len())
        }));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> LawConfig {
        LawConfig {
            instances: 3,
            ..LawConfig::default()
        }
    }

    #[test]
    fn catalogue_ids_are_unique() {
        let ids = law_ids();
        let set: std::collections::BTreeSet<_> = ids.iter().collect();
        assert_eq!(set.len(), ids.len());
    }

    #[test]
    fn yanking_is_exhaustive() {
        let val = default_valuation();
        for id in ["yank-send-h", "yank-send-v", "yank-recv-h", "yank-recv-v"] {
            let row = run_law(id, &val, &small(), &[]).unwrap();
            assert!(row.passed() && row.exhaustive, "{row:?}");
        }
    }

    #[test]
    fn mutation_is_caught() {
        let val = default_valuation();
        let cfg = LawConfig {
            instances: 30,
            mutation: Some(Mutation::BetaPi0PicksSecond),
            ..LawConfig::default()
        };
        let row = run_law("rewrite-soundness", &val, &cfg, &[]).unwrap();
        assert!(matches!(row.outcome, Outcome::Fail(_)), "{row:?}");
    }

    #[test]
    fn redex_terms_typecheck() {
        let val = default_valuation();
        let mut g = Gen::new(&val, 5);
        for _ in 0..300 {
            let c = redex_term(&mut g);
            assert!(infer_boundary(&c, val.signature()).is_ok(), "{c}");
        }
    }

    #[test]
    fn redex_terms_fire_every_rule() {
        let val = default_valuation();
        let mut g = Gen::new(&val, 9);
        let mut fired = std::collections::BTreeSet::new();
        for _ in 0..200 {
            let c = redex_term(&mut g);
            fired.extend(crate::rewrite::normalize_cell(&c, REWRITE_BUDGET).steps.into_iter().map(|s| s.0));
        }
        assert_eq!(fired.len(), 19, "{fired:?}");
    }

    #[test]
    fn unknown_law() {
        assert!(run_law("no-such-law", &default_valuation(), &small(), &[]).is_none());
    }
}
