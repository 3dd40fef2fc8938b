//! `fcn`: check, normalize, run and law-test `.fcn` files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use fcn_core::cell::CellError;
use fcn_core::laws::{default_valuation, run_laws, LawConfig, Outcome};
use fcn_core::rewrite::{normalize_cell, Mutation};
use fcn_core::semantics::CheckConfig;
use fcn_core::syntax::{parse_module, parse_script, parse_value, CheckError, Module};
use fcn_core::trace::run_trace;

#[derive(Parser)]
#[command(name = "fcn", version, about = "Protocol calculus engine for cells with choice and iteration")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Typecheck every cell in a file.
    Check { file: PathBuf },
    /// Rewrite a cell to normal form.
    Normalize {
        file: PathBuf,
        #[arg(long)]
        cell: String,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        /// Print each rule and the position it fired at.
        #[arg(long)]
        trace_rules: bool,
    },
    /// Run a cell with a closed left side on an input.
    Eval {
        file: PathBuf,
        #[arg(long)]
        cell: String,
        /// Value literal for the top boundary.
        #[arg(long)]
        input: String,
        /// Environment moves, one per line.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Iteration layers that may be entered.
        #[arg(long, default_value_t = 4)]
        depth: usize,
    },
    /// Check the law catalogue over the file's signature.
    Laws {
        file: PathBuf,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, env = "FCN_SEED", default_value = "0xFCC", value_parser = parse_seed)]
        seed: u64,
        /// Random instances per law.
        #[arg(long, default_value_t = 12)]
        instances: usize,
        /// Run with a deliberately broken rewrite rule.
        #[arg(long, value_enum, hide = true)]
        mutation: Option<MutationArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MutationArg {
    BetaPi0,
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("bad seed `{s}`: {e}"))
}

fn load(path: &Path) -> Result<Module> {
    let src = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_module(&src).map_err(|e| anyhow!("{}:{e}", path.display()))
}

fn kind(e: &CheckError) -> &'static str {
    match e {
        CheckError::Ill { source, .. } => match source {
            CellError::BoundaryMismatch { .. } => "BoundaryMismatch",
            CellError::IllTypedSubterm { .. } => "IllTypedSubterm",
            CellError::NotSquare { .. } => "NotSquare",
        },
        CheckError::Declared { .. } => "DeclaredBoundary",
    }
}

fn check(file: &Path) -> Result<()> {
    let m = load(file)?;
    for d in &m.cells {
        match m.check_decl(d) {
            Ok(b) => println!("OK {} : {b}", d.name),
            Err(e) => bail!("{}:{e} [{}] in cell `{}`", file.display(), kind(&e), d.name),
        }
    }
    Ok(())
}

fn find_cell<'m>(m: &'m Module, name: &str) -> Result<&'m fcn_core::syntax::CellDecl> {
    let d = m.cell(name).ok_or_else(|| anyhow!("UnknownCell: no cell named `{name}`"))?;
    m.check_decl(d)
        .map_err(|e| anyhow!("{e} [{}] in cell `{name}`", kind(&e)))?;
    Ok(d)
}

fn normalize(file: &Path, cell: &str, budget: usize, trace_rules: bool) -> Result<()> {
    let m = load(file)?;
    let d = find_cell(&m, cell)?;
    let rep = normalize_cell(&d.cell, budget);
    if trace_rules {
        for (rule, pos) in &rep.steps {
            println!("{rule} at {pos:?}");
        }
    }
    println!("{}", rep.result);
    println!(
        "{} step(s){}",
        rep.steps.len(),
        if rep.budget_exhausted { ", budget exhausted" } else { "" }
    );
    Ok(())
}

fn eval(file: &Path, cell: &str, input: &str, script: Option<&Path>, depth: usize) -> Result<()> {
    let m = load(file)?;
    let d = find_cell(&m, cell)?;
    let input = parse_value(input).map_err(|e| anyhow!("input: {e}"))?;
    let moves = match script {
        Some(p) => {
            let src = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_script(&src).map_err(|e| anyhow!("{}:{e}", p.display()))?
        }
        None => Vec::new(),
    };
    let events = run_trace(&d.cell, &input, &moves, &m.valuation, depth)?;
    for e in events {
        println!("{e}");
    }
    Ok(())
}

fn laws(file: &Path, cfg: LawConfig) -> Result<bool> {
    let m = load(file)?;
    let val = if m.valuation.signature().objects.is_empty() {
        default_valuation()
    } else {
        m.valuation.clone()
    };
    let extra: Vec<_> = m
        .cells
        .iter()
        .filter(|d| m.check_decl(d).is_ok())
        .map(|d| d.cell.clone())
        .collect();
    let rows = run_laws(&val, &cfg, &extra);
    let mut ok = true;
    for r in &rows {
        let status = match &r.outcome {
            Outcome::Pass if r.exhaustive => "pass exhaustive".to_string(),
            Outcome::Pass => "pass".to_string(),
            Outcome::Skipped => "skipped".to_string(),
            Outcome::Fail(w) => {
                ok = false;
                format!("FAIL {w}")
            }
        };
        println!("{:<28} {:>6}  {status}", r.id, r.instances);
    }
    let failed = rows.iter().filter(|r| matches!(r.outcome, Outcome::Fail(_))).count();
    println!("{} laws, {failed} failed", rows.len());
    Ok(ok)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Check { file } => check(&file).map(|_| true),
        Cmd::Normalize {
            file,
            cell,
            budget,
            trace_rules,
        } => normalize(&file, &cell, budget, trace_rules).map(|_| true),
        Cmd::Eval {
            file,
            cell,
            input,
            script,
            depth,
        } => eval(&file, &cell, &input, script.as_deref(), depth).map(|_| true),
        Cmd::Laws {
            file,
            depth,
            samples,
            seed,
            instances,
            mutation,
        } => laws(
            &file,
            LawConfig {
                check: CheckConfig {
                    depth,
                    samples,
                    seed,
                },
                instances,
                mutation: mutation.map(|MutationArg::BetaPi0| Mutation::BetaPi0PicksSecond),
            },
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
