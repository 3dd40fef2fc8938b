use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/data")
        .join(name)
}

fn fcn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcn"))
        .args(args)
        .env_remove("FCN_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn temp(contents: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f
}

fn path(f: &tempfile::NamedTempFile) -> &str {
    f.path().to_str().unwrap()
}

#[test]
fn check_bakery() {
    let o = fcn(&["check", data("bakery.fcn").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("OK kneader : [I | dough -> I | send dough]"));
    assert!(out.contains("OK baker : [send dough | oven -> bread * oven | I]"));
    assert!(out.contains("OK react : [send bread + send dough | oven -> bread * oven | I]"));
}

#[test]
fn check_reports_mismatch_position() {
    let f = temp("object A;\ncarrier A = {a0};\ncell bad = getL A |\n  getL A;\n");
    let o = fcn(&["check", path(&f)]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains(":3:19:"), "{err}");
    assert!(err.contains("BoundaryMismatch"), "{err}");
}

#[test]
fn check_empty_file() {
    let f = temp("");
    let o = fcn(&["check", path(&f)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "");
}

#[test]
fn parse_errors_have_positions() {
    let f = temp("object A;\ncell c = getL B;\n");
    let o = fcn(&["check", path(&f)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains(":2:"), "{}", stderr(&o));
}

#[test]
fn normalize_fuses_bakery() {
    let o = fcn(&["normalize", data("bakery.fcn").to_str().unwrap(), "--cell", "bakery"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("[knead * id oven ; bake]\n"), "{out}");
}

#[test]
fn normalize_trace_and_budget() {
    let file = data("bakery.fcn");
    let file = file.to_str().unwrap();
    let o = fcn(&["normalize", file, "--cell", "supply_bread", "--trace-rules"]);
    let out = stdout(&o);
    assert!(out.contains("1 (bread * oven)\n"), "{out}");
    assert!(out.lines().next().unwrap().contains(" at ["), "{out}");

    let o = fcn(&["normalize", file, "--cell", "bakery", "--budget", "0"]);
    let out = stdout(&o);
    assert!(out.contains("0 step(s), budget exhausted"), "{out}");

    let o = fcn(&["normalize", file, "--cell", "kneader"]);
    assert!(stdout(&o).ends_with("0 step(s)\n"), "{}", stdout(&o));
}

#[test]
fn normalize_unknown_cell() {
    let o = fcn(&["normalize", data("bakery.fcn").to_str().unwrap(), "--cell", "nope"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("UnknownCell"));
}

#[test]
fn eval_memory_with_script() {
    let script = temp("continue\nrecv a1\n// the second request\ncontinue\nrecv a2\nstop\n");
    let o = fcn(&[
        "eval",
        data("memory.fcn").to_str().unwrap(),
        "--cell",
        "memory",
        "--input",
        "a0",
        "--script",
        path(&script),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "sent a0\nsent a1\nresult a2\n");
}

#[test]
fn eval_sales_and_mealy() {
    let sales = data("sales.fcn");
    let o = fcn(&["eval", sales.to_str().unwrap(), "--cell", "one_customer", "--input", "(c, [b], [])"]);
    assert_eq!(stdout(&o), "result (inr b, [], [c])\n");
    let o = fcn(&["eval", sales.to_str().unwrap(), "--cell", "one_customer", "--input", "(c, [], [])"]);
    assert_eq!(stdout(&o), "result (inl c, [], [])\n");
    let o = fcn(&["eval", sales.to_str().unwrap(), "--cell", "no_customers", "--input", "([b], [c])"]);
    assert_eq!(stdout(&o), "result ([b], [c])\n");

    let mealy = data("mealy.fcn");
    let o = fcn(&["eval", mealy.to_str().unwrap(), "--cell", "run", "--input", "s0", "--depth", "8"]);
    assert_eq!(
        stdout(&o),
        "more\nsent odd\nmore\nsent odd\nmore\nsent even\nhalted\nresult s0\n"
    );
    let o = fcn(&["eval", mealy.to_str().unwrap(), "--cell", "run", "--input", "s0", "--depth", "2"]);
    assert!(!o.status.success());
}

#[test]
fn eval_rejects_open_cells_and_bad_input() {
    let mealy = data("mealy.fcn");
    let o = fcn(&["eval", mealy.to_str().unwrap(), "--cell", "M", "--input", "s0"]);
    assert!(!o.status.success());
    let o = fcn(&["eval", mealy.to_str().unwrap(), "--cell", "run", "--input", "a0"]);
    assert!(!o.status.success());
}

#[test]
fn laws_pass_and_are_deterministic() {
    let f = temp("");
    let args = ["laws", path(&f), "--instances", "2"];
    let a = fcn(&args);
    assert!(a.status.success(), "{}", stdout(&a));
    let out = stdout(&a);
    assert!(out.contains("yank-send-h"), "{out}");
    assert!(out.ends_with("64 laws, 0 failed\n"), "{out}");
    let b = fcn(&args);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn laws_without_samples_skip_sampled_rows() {
    let f = temp("");
    let o = fcn(&["laws", path(&f), "--instances", "2", "--samples", "0"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let row = |id: &str| out.lines().find(|l| l.starts_with(id)).unwrap().to_string();
    assert!(row("yank-send-h").contains("pass exhaustive"));
    assert!(row("comonoid-coassoc").contains("skipped"), "{out}");
}

#[test]
fn laws_catch_a_broken_rule() {
    let f = temp("");
    let o = fcn(&["laws", path(&f), "--instances", "30", "--mutation", "beta-pi0"]);
    assert!(!o.status.success());
    let out = stdout(&o);
    let row = out.lines().find(|l| l.starts_with("rewrite-soundness")).unwrap();
    assert!(row.contains("FAIL"), "{out}");
}

#[test]
fn seed_flag_and_env() {
    let f = temp("");
    let with_flag = fcn(&["laws", path(&f), "--instances", "2", "--seed", "7"]);
    let with_env = Command::new(env!("CARGO_BIN_EXE_fcn"))
        .args(["laws", path(&f), "--instances", "2"])
        .env("FCN_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(stdout(&with_flag), stdout(&with_env));
    let bad = fcn(&["laws", path(&f), "--seed", "zz"]);
    assert!(!bad.status.success());
}
