//! `knotlang` — check, compile, run, and demo for the reference-cell lambda
//! calculus under its three typing disciplines.
//!
//! Exit codes: 0 success, 1 type error, 2 parse error, 3 fuel exhausted,
//! 4 stuck evaluation, 5 usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use knotlang::cconv::{
    closure_convert, convert_ctx, explain_target, typecheck_target, TgtCtx,
};
use knotlang::eval::{eval_source, trace_source, trace_target, Outcome};
use knotlang::sorts::{sort_of_source, SortRules};
use knotlang::syntax::{
    parse_source, parse_type, pretty_target_term, pretty_term, Term,
};
use knotlang::typecheck::{check_report, typecheck_source, Mode, SrcCtx, TypeErrorKind};

const EXIT_TYPE_ERROR: u8 = 1;
const EXIT_PARSE_ERROR: u8 = 2;
const EXIT_FUEL: u8 = 3;
const EXIT_STUCK: u8 = 4;
const EXIT_USAGE: u8 = 5;

const DEFAULT_FUEL: u64 = 10_000;

#[derive(Parser)]
#[command(name = "knotlang", version, about, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Typing discipline: unrestricted, full-ground, or sorted
    #[arg(long, default_value = "sorted")]
    mode: Mode,
}

#[derive(Subcommand)]
enum Command {
    /// Typecheck a source file and print its type
    Check {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Closure-convert a source file and print or write the target program
    Compile {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Write the target program here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a source file (or its compiled form) under a fuel bound
    Run {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Step budget; defaults to 10000
        #[arg(long, env = "KNOTLANG_FUEL")]
        fuel: Option<u64>,
        /// Compile first and run the target program
        #[arg(long)]
        target: bool,
        /// Print the first K evaluation steps, tab-separated
        #[arg(long, value_name = "K")]
        trace: Option<usize>,
    },
    /// Walk through the whole story: the knot under all three disciplines,
    /// the compiled closures with their derivation trees, and the rejected
    /// backpatch. Self-verifying.
    Demo,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Check { file, common } => cmd_check(&file, common.mode),
        Command::Compile { file, common, out } => cmd_compile(&file, common.mode, out),
        Command::Run {
            file,
            common,
            fuel,
            target,
            trace,
        } => cmd_run(&file, common.mode, fuel.unwrap_or(DEFAULT_FUEL), target, trace),
        Command::Demo => cmd_demo(),
    }
}

/// Read and parse, printing errors with the file name prefixed.
fn load(file: &PathBuf) -> Result<Term, ExitCode> {
    let text = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{}: {e}", file.display());
            return Err(ExitCode::from(EXIT_USAGE));
        }
    };
    parse_source(&text).map_err(|e| {
        eprintln!("{}:{e}", file.display());
        ExitCode::from(EXIT_PARSE_ERROR)
    })
}

fn cmd_check(file: &PathBuf, mode: Mode) -> ExitCode {
    let e = match load(file) {
        Ok(e) => e,
        Err(code) => return code,
    };
    match check_report(&SrcCtx::new(), &e, mode, &SortRules::default()) {
        Ok(report) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            if mode == Mode::Sorted {
                match sort_of_source(&SrcCtx::new(), &report.ty) {
                    Ok(j) => println!("{} :: Type {j}", report.ty),
                    Err(_) => println!("{}", report.ty),
                }
            } else {
                println!("{}", report.ty);
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}:{}", file.display(), err.render());
            ExitCode::from(EXIT_TYPE_ERROR)
        }
    }
}

fn cmd_compile(file: &PathBuf, mode: Mode, out: Option<PathBuf>) -> ExitCode {
    let e = match load(file) {
        Ok(e) => e,
        Err(code) => return code,
    };
    if let Err(err) = typecheck_source(&SrcCtx::new(), &e, mode) {
        eprintln!("{}:{}", file.display(), err.render());
        return ExitCode::from(EXIT_TYPE_ERROR);
    }
    let target = match closure_convert(&SrcCtx::new(), &e, mode) {
        Ok(t) => t,
        Err(err) => {
            eprintln!("{}:{}", file.display(), err.render());
            return ExitCode::from(EXIT_TYPE_ERROR);
        }
    };
    // never emit a target program that fails its own checker
    if let Err(err) = typecheck_target(&TgtCtx::new(), &target, mode) {
        eprintln!("{}: converted program rejected: {}", file.display(), err.render());
        return ExitCode::from(EXIT_TYPE_ERROR);
    }
    let printed = format!("{}\n", pretty_target_term(&target));
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, printed) {
                eprintln!("{}: {e}", path.display());
                return ExitCode::from(EXIT_USAGE);
            }
        }
        None => print!("{printed}"),
    }
    ExitCode::SUCCESS
}

fn cmd_run(
    file: &PathBuf,
    mode: Mode,
    fuel: u64,
    target: bool,
    trace: Option<usize>,
) -> ExitCode {
    let e = match load(file) {
        Ok(e) => e,
        Err(code) => return code,
    };
    if let Err(err) = typecheck_source(&SrcCtx::new(), &e, mode) {
        eprintln!("{}:{}", file.display(), err.render());
        return ExitCode::from(EXIT_TYPE_ERROR);
    }
    let (outcome, steps) = if target {
        let t = match closure_convert(&SrcCtx::new(), &e, mode) {
            Ok(t) => t,
            Err(err) => {
                eprintln!("{}:{}", file.display(), err.render());
                return ExitCode::from(EXIT_TYPE_ERROR);
            }
        };
        trace_target(&t, fuel, trace.unwrap_or(0))
    } else {
        trace_source(&e, fuel, trace.unwrap_or(0))
    };
    for record in &steps {
        println!("{}", record.render());
    }
    match outcome {
        Outcome::Result { value, steps, .. } => {
            println!("{value}");
            println!("steps: {steps}");
            ExitCode::SUCCESS
        }
        Outcome::FuelExhausted { steps } => {
            println!("FUEL EXHAUSTED after {steps} steps");
            ExitCode::from(EXIT_FUEL)
        }
        Outcome::Stuck { description } => {
            println!("STUCK: {description}");
            ExitCode::from(EXIT_STUCK)
        }
    }
}

/// The whole narrative in one command. Every printed verdict is checked
/// against the expected one; any surprise makes the demo exit nonzero.
fn cmd_demo() -> ExitCode {
    let mut ok = true;
    let mut expect = |what: &str, good: bool| {
        println!("  [{}] {what}", if good { "ok" } else { "UNEXPECTED" });
        ok &= good;
    };

    let knot = parse_source(knotlang::corpus::KNOT).unwrap();
    let ctx = SrcCtx::new();

    println!("== the knot under the three disciplines ==");
    println!("{}", knotlang::corpus::KNOT.trim_end());
    println!();

    let v = typecheck_source(&ctx, &knot, Mode::Unrestricted);
    println!("unrestricted: {}", verdict_line(&v));
    expect("accepted at Nat", v == Ok(knotlang::syntax::Type::Nat));

    let v = typecheck_source(&ctx, &knot, Mode::FullGround);
    println!("full-ground:  {}", verdict_line(&v));
    expect(
        "rejected: the closure captures a reference of non-ground type",
        matches!(&v, Err(e) if e.kind == TypeErrorKind::NonFullGroundCapture),
    );

    let v = typecheck_source(&ctx, &knot, Mode::Sorted);
    println!("sorted:       {}", verdict_line(&v));
    expect(
        "rejected: the backpatch needs a level-0 function but gets level 1",
        matches!(&v, Err(e) if e.kind == TypeErrorKind::SortMismatch),
    );

    println!("\n== unrestricted, the knot really diverges ==");
    match eval_source(&knot, DEFAULT_FUEL) {
        Outcome::FuelExhausted { steps } => {
            println!("fuel exhausted after {steps} steps");
            expect("divergence observed as fuel exhaustion", true);
        }
        other => {
            println!("{other:?}");
            expect("divergence observed as fuel exhaustion", false);
        }
    }
    let nb = parse_source(knotlang::corpus::KNOT_NOBACKPATCH).unwrap();
    match eval_source(&nb, 100) {
        Outcome::Result { value, steps, .. } => {
            println!("without the backpatch: {value} in {steps} steps");
            expect("no backpatch, no divergence", value.to_string() == "0");
        }
        other => {
            println!("{other:?}");
            expect("no backpatch, no divergence", false);
        }
    }

    println!("\n== compiled closures and their levels ==");
    let id = parse_source(knotlang::corpus::ID).unwrap();
    let tid = closure_convert(&ctx, &id, Mode::Sorted).unwrap();
    println!("id compiles to:\n  {}", pretty_target_term(&tid));
    match explain_target(&TgtCtx::new(), &tid, Mode::Sorted) {
        Ok(d) => {
            println!("{}", d.render());
            expect("identity's empty environment sits at Type 0", d.sort == Some(0));
        }
        Err(e) => {
            println!("{}", e.render());
            expect("identity's empty environment sits at Type 0", false);
        }
    }

    let f = parse_source("lam x : Nat . (!r) x").unwrap();
    let mut fctx = SrcCtx::new();
    fctx.push_term("r", parse_type("Ref (Nat ->[0] Nat)").unwrap());
    let tf = closure_convert(&fctx, &f, Mode::Sorted).unwrap();
    println!("with r : Ref (Nat ->[0] Nat) in scope, f = {} compiles to:", pretty_term(&f));
    println!("  {}", pretty_target_term(&tf));
    match explain_target(&convert_ctx(&fctx, Mode::Sorted).unwrap(), &tf, Mode::Sorted) {
        Ok(d) => {
            println!("{}", d.render());
            expect(
                "capturing r pushes f's environment up to Type 1",
                d.sort == Some(1),
            );
        }
        Err(e) => {
            println!("{}", e.render());
            expect("capturing r pushes f's environment up to Type 1", false);
        }
    }

    println!("== the backpatch itself ==");
    let mut actx = SrcCtx::new();
    actx.push_term("r", parse_type("Ref (Nat ->[0] Nat)").unwrap());
    actx.push_term("f", parse_type("Nat ->[1] Nat").unwrap());
    let assign = parse_source("r := f").unwrap();
    let v = typecheck_source(&actx, &assign, Mode::Sorted);
    println!("r := f  -->  {}", verdict_line(&v));
    expect(
        "storing a level-1 function in a cell for level-0 functions fails",
        matches!(&v, Err(e) if e.kind == TypeErrorKind::SortMismatch),
    );

    println!();
    if ok {
        println!("demo: all verdicts as expected");
        ExitCode::SUCCESS
    } else {
        println!("demo: UNEXPECTED verdicts above");
        ExitCode::from(EXIT_TYPE_ERROR)
    }
}

fn verdict_line(v: &Result<knotlang::syntax::Type, knotlang::typecheck::TypeError>) -> String {
    match v {
        Ok(t) => format!("OK {t}"),
        Err(e) => e.render(),
    }
}
