//! Acceptance suite: one line per criterion, each with a pinned time bound.
//! Exits nonzero if any criterion fails.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fcn_core::derived::{simple_iter_p, word_sender};
use fcn_core::gen::Mealy;
use fcn_core::laws::{default_valuation, run_law, LawConfig, LawRow};
use fcn_core::semantics::CheckConfig;
use fcn_core::syntax::{parse_module, parse_value, Module};
use fcn_core::trace::{run_trace, ScriptMove, TraceEvent};
use fcn_core::{Cell, Valuation, Value};

type Outcome = Result<String, String>;

fn load(name: &str) -> Module {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name);
    let src = std::fs::read_to_string(&path).unwrap();
    parse_module(&src).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn v(s: &str) -> Value {
    parse_value(s).unwrap()
}

fn cell(m: &Module, name: &str) -> Cell {
    m.cell(name).unwrap_or_else(|| panic!("no cell {name}")).cell.clone()
}

/// Runs the laws; every row must pass, and when `exhaustive` is set every
/// row must have been decided over all inputs.
fn laws(
    ids: &[&str],
    val: &Arc<Valuation>,
    cfg: &LawConfig,
    extra: &[Cell],
    exhaustive: bool,
) -> Outcome {
    let mut total = 0;
    for id in ids {
        let row: LawRow = run_law(id, val, cfg, extra).ok_or_else(|| format!("unknown law {id}"))?;
        if !row.passed() {
            return Err(format!("{id}: {:?}", row.outcome));
        }
        if row.instances == 0 {
            return Err(format!("{id}: no instances checked"));
        }
        if exhaustive && !row.exhaustive {
            return Err(format!("{id}: not exhaustive"));
        }
        total += row.instances;
    }
    Ok(format!("{} laws, {total} instances", ids.len()))
}

const GOLDEN: &[(&str, &str, &str)] = &[
    ("bakery.fcn", "kneader", "[I | dough -> I | send dough]"),
    ("bakery.fcn", "baker", "[send dough | oven -> bread * oven | I]"),
    ("bakery.fcn", "bakery", "[I | dough * oven -> bread * oven | I]"),
    ("bakery.fcn", "react", "[send bread + send dough | oven -> bread * oven | I]"),
    ("bakery.fcn", "supply_bread", "[I | bread * oven -> bread * oven | I]"),
    ("bakery.fcn", "supply_dough", "[I | dough * oven -> bread * oven | I]"),
    ("bakery.fcn", "choose", "[send dough x send oven | I -> bread * oven | recv dough x recv oven]"),
    ("stack.fcn", "refill", "[send bread x I | stack bread -> stack bread | I]"),
    ("mealy.fcn", "M", "[send A | S -> S | send B]"),
    ("mealy.fcn", "Mplus", "[send A^+ | S -> S | send B^+]"),
    ("memory.fcn", "memory", "[I | A -> A | (send A * recv A)^x]"),
    (
        "sales.fcn",
        "sales",
        "[(send $ * (recv $ x recv bread))^+ | stack bread * stack $ -> stack bread * stack $ | I]",
    ),
];

fn golden_cells() -> Vec<(Arc<Valuation>, Cell)> {
    ["bakery.fcn", "stack.fcn", "mealy.fcn", "memory.fcn", "sales.fcn"]
        .iter()
        .flat_map(|f| {
            let m = load(f);
            m.cells
                .iter()
                .map(|d| (m.valuation.clone(), d.cell.clone()))
                .collect::<Vec<_>>()
        })
        .collect()
}

fn typecheck_golden() -> Outcome {
    for (file, name, want) in GOLDEN {
        let m = load(file);
        let d = m.cell(name).ok_or_else(|| format!("{file}: no cell {name}"))?;
        let b = m.check_decl(d).map_err(|e| format!("{file} {name}: {e}"))?;
        if b.to_string() != *want {
            return Err(format!("{file} {name}: {b}, expected {want}"));
        }
    }
    let mut all = 0;
    for f in ["bakery.fcn", "stack.fcn", "mealy.fcn", "memory.fcn", "sales.fcn"] {
        let m = load(f);
        for d in &m.cells {
            m.check_decl(d).map_err(|e| format!("{f} {}: {e}", d.name))?;
            all += 1;
        }
    }
    Ok(format!("{} pinned boundaries, {all} cells typecheck", GOLDEN.len()))
}

fn yanking_corners() -> Outcome {
    laws(
        &[
            "yank-send-h",
            "yank-send-v",
            "yank-recv-h",
            "yank-recv-v",
            "corner-compose",
            "corner-tensor",
        ],
        &default_valuation(),
        &LawConfig::default(),
        &[],
        true,
    )
}

fn interchange_identity() -> Outcome {
    let val = default_valuation();
    let many = LawConfig {
        instances: 200,
        ..LawConfig::default()
    };
    let a = laws(&["interchange"], &val, &many, &[], false)?;
    let b = laws(
        &["hcomp-unit", "vcomp-unit", "hcomp-assoc", "vcomp-assoc"],
        &val,
        &LawConfig::default(),
        &[],
        false,
    )?;
    Ok(format!("{a}; {b}"))
}

fn choice() -> Outcome {
    laws(
        &[
            "beta-pi0",
            "beta-pi1",
            "beta-in0",
            "beta-in1",
            "beta-copair0",
            "beta-copair1",
            "product-pairing",
            "coproduct-pairing",
            "copair-coincide",
            "copair-absorb-left",
            "copair-absorb-right",
            "copair-absorb-vertical",
            "moral-equiv-send",
            "moral-equiv-recv",
        ],
        &default_valuation(),
        &LawConfig::default(),
        &[],
        true,
    )
}

fn crossings() -> Outcome {
    let val = default_valuation();
    let check = CheckConfig {
        depth: 4,
        samples: 64,
        seed: 0xFCC,
    };
    let cfg = LawConfig {
        check,
        ..LawConfig::default()
    };
    let a = laws(
        &["crossing-tensor", "crossing-unit", "crossing-sum", "crossing-strength"],
        &val,
        &cfg,
        &[],
        false,
    )?;
    let many = LawConfig {
        instances: 200,
        ..cfg
    };
    let b = laws(&["crossing-swaps"], &val, &many, &[], false)?;
    Ok(format!("{a}; {b}"))
}

fn iteration() -> Outcome {
    laws(
        &[
            "iterx-stop",
            "iterx-step",
            "iterp-stop",
            "iterp-step",
            "coalgebra-mediation",
            "comonoid-counit-left",
            "comonoid-counit-right",
            "comonoid-coassoc",
            "monoid-unit-left",
            "monoid-unit-right",
            "monoid-assoc",
            "comonad-counit-1",
            "comonad-counit-2",
            "comonad-coassoc",
            "monad-unit-1",
            "monad-unit-2",
            "monad-assoc",
            "diagonal-naturality",
            "codiagonal-naturality",
        ],
        &default_valuation(),
        &LawConfig::default(),
        &[],
        false,
    )
}

fn rewriter() -> Outcome {
    let cfg = LawConfig {
        instances: 100,
        ..LawConfig::default()
    };
    let random = laws(
        &["rewrite-soundness", "rewrite-boundary"],
        &default_valuation(),
        &cfg,
        &[],
        false,
    )?;
    // Golden cells are checked against their own valuations.
    let none = LawConfig {
        instances: 0,
        ..cfg
    };
    let mut golden = 0;
    for (val, c) in golden_cells() {
        let row = run_law("rewrite-soundness", &val, &none, std::slice::from_ref(&c)).unwrap();
        if !row.passed() {
            return Err(format!("golden {c}: {:?}", row.outcome));
        }
        golden += row.instances;
    }
    Ok(format!("{random}; {golden} golden steps"))
}

/// The textbook loop: feed the word through the table.
fn classical(m: &Mealy, s0: usize, word: &[usize]) -> (Vec<usize>, usize) {
    let mut s = s0;
    let mut out = Vec::new();
    for &a in word {
        let (s2, b) = m.table[a][s];
        out.push(b);
        s = s2;
    }
    (out, s)
}

fn mealy_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xFCC);
    let mut letters = 0;
    for _ in 0..50 {
        let (ns, na, nb) = (rng.gen_range(1..=3), rng.gen_range(1..=3), rng.gen_range(1..=3));
        let m = Mealy::random(&mut rng, ns, na, nb);
        let val = m.valuation();
        let machine = simple_iter_p(&m.cell(), val.signature()).map_err(|e| e.to_string())?;
        let len = rng.gen_range(0..=5);
        let word: Vec<usize> = (0..len).map(|_| rng.gen_range(0..na)).collect();
        let s0 = rng.gen_range(0..ns);
        let symbols: Vec<Value> = word.iter().map(|&a| Mealy::input(a)).collect();
        let sender = word_sender(&symbols, &fcn_core::ObjExpr::gen("A"), &val).map_err(|e| e.to_string())?;
        let run = Cell::hcomp(sender, machine);
        let got = run_trace(&run, &Mealy::state(s0), &[], &val, len + 1).map_err(|e| e.to_string())?;
        let (outs, last) = classical(&m, s0, &word);
        let mut want: Vec<TraceEvent> = outs
            .iter()
            .flat_map(|&b| [TraceEvent::More, TraceEvent::Sent(Mealy::output(b))])
            .collect();
        want.push(TraceEvent::Halted);
        want.push(TraceEvent::Result(Mealy::state(last)));
        if got != want {
            return Err(format!("{m:?} on {word:?} from s{s0}: {got:?} vs {want:?}"));
        }
        letters += len;
    }
    Ok(format!("50 machines, {letters} letters"))
}

fn scenarios() -> Outcome {
    let m = load("memory.fcn");
    let script = [
        ScriptMove::Continue,
        ScriptMove::Recv(v("a1")),
        ScriptMove::Continue,
        ScriptMove::Recv(v("a2")),
        ScriptMove::Stop,
    ];
    let out = run_trace(&cell(&m, "memory"), &v("a0"), &script, &m.valuation, 4).map_err(|e| e.to_string())?;
    let want = vec![TraceEvent::Sent(v("a0")), TraceEvent::Sent(v("a1")), TraceEvent::Result(v("a2"))];
    if out != want {
        return Err(format!("memory: {out:?}"));
    }
    let m = load("sales.fcn");
    let cases = [
        ("no_customers", "([b], [c])", "([b], [c])"),
        ("one_customer", "(c, [b], [])", "(inr b, [], [c])"),
        ("one_customer", "(c, [], [])", "(inl c, [], [])"),
    ];
    for (name, input, result) in cases {
        let out = run_trace(&cell(&m, name), &v(input), &[], &m.valuation, 8).map_err(|e| e.to_string())?;
        if out != vec![TraceEvent::Result(v(result))] {
            return Err(format!("{name} on {input}: {out:?}"));
        }
    }
    Ok("memory and three sales cases".to_string())
}

type Criterion = (&'static str, u64, fn() -> Outcome);

const CRITERIA: &[Criterion] = &[
    ("golden set typechecks", 1, typecheck_golden),
    ("yanking and corner equations", 5, yanking_corners),
    ("interchange and identity laws", 30, interchange_identity),
    ("choice suite", 30, choice),
    ("crossing suite", 60, crossings),
    ("iteration suite", 120, iteration),
    ("rewriter soundness", 60, rewriter),
    ("Mealy oracle", 30, mealy_oracle),
    ("scenario traces", 5, scenarios),
];

fn main() {
    let mut failed = 0;
    for (i, (name, bound, run)) in CRITERIA.iter().enumerate() {
        let start = Instant::now();
        let res = run();
        let took = start.elapsed();
        let res = match res {
            Ok(msg) if took > Duration::from_secs(*bound) => Err(format!("{msg}; over the {bound} s bound")),
            other => other,
        };
        let (tag, msg) = match &res {
            Ok(m) => ("PASS", m.as_str()),
            Err(m) => ("FAIL", m.as_str()),
        };
        println!("criterion {} {tag} {name} ({:.2?} of {bound} s): {msg}", i + 1, took);
        failed += res.is_err() as usize;
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
