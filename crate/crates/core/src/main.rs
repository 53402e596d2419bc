use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use quatinv::brauer::{common_slot, symbol_class, CommonSlotOutcome};
use quatinv::field::{FieldTower, TowerDescriptor};
use quatinv::quat::QuaternionAlgebra;
use quatinv::scenario::{exit_code, run_scenario, Scenario, ScenarioError};
use quatinv::suites::{run_suites, BaseChoice, SuiteOptions, SuiteReport, SUITES};

/// Exact checks for quaternion algebras with involution over towers of
/// valued fields.
#[derive(Parser)]
#[command(name = "quatinv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSON scenario.
    Run {
        scenario: PathBuf,
        /// Run library suites on separate threads.
        #[arg(long)]
        parallel: bool,
    },
    /// Run one named suite, or `all`.
    Suite(SuiteArgs),
    /// Brauer class of the quaternion symbol (a, b).
    Symbol {
        #[arg(allow_hyphen_values = true)]
        a: String,
        #[arg(allow_hyphen_values = true)]
        b: String,
        #[arg(long)]
        tower: PathBuf,
    },
    /// Search for μ with (aᵢ, μ) equal to a fixed quaternion class for every slot.
    CommonSlot {
        #[arg(long)]
        tower: PathBuf,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        slots: Vec<String>,
        /// The algebra (a, b); defaults to the first two slots.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        algebra: Option<Vec<String>>,
        #[arg(long, default_value_t = 3)]
        bound: i64,
    },
}

#[derive(Args)]
struct SuiteArgs {
    name: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    precision: Option<i64>,
    #[arg(long)]
    height: Option<i64>,
    #[arg(long)]
    trials: Option<usize>,
    /// `Q` or `Fp:p`.
    #[arg(long)]
    base: Option<BaseChoice>,
    /// Values `a1,a2` for example-main.
    #[arg(long, value_delimiter = ',')]
    specialize: Option<Vec<i64>>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    parallel: bool,
}

const INPUT_ERROR: u8 = 2;

fn input_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(INPUT_ERROR)
}

fn write_report(name: &str, value: &impl Serialize) {
    let Ok(dir) = std::env::var("QUATINV_REPORT_DIR") else {
        return;
    };
    let path = Path::new(&dir).join(format!("{name}.json"));
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    if let Err(e) = std::fs::create_dir_all(&dir).and_then(|_| std::fs::write(&path, text)) {
        eprintln!("warning: cannot write {}: {e}", path.display());
    } else {
        println!("report: {}", path.display());
    }
}

fn print_suite(r: &SuiteReport) {
    let status = if r.verified { "VERIFIED" } else { "FAILED" };
    println!(
        "{}: {status} ({}/{} checks)",
        r.suite, r.summary.passed, r.summary.checks
    );
    for (k, v) in &r.summary.counts {
        println!("  {k}: {v}");
    }
    for n in &r.notes {
        println!("  note: {n}");
    }
    for c in r.failures().take(10) {
        println!("  FAIL [{}] {}: {}", c.anchor, c.check, c.detail);
    }
    if let Some(c) = &r.contradiction {
        println!("  CONTRADICTION: {c}");
    }
}

fn load_tower(path: &Path) -> Result<FieldTower, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let desc: TowerDescriptor = serde_json::from_str(&text).map_err(|e| format!("tower does not parse: {e}"))?;
    FieldTower::from_descriptor(&desc).map_err(|e| e.to_string())
}

fn cmd_run(path: &Path, parallel: bool) -> ExitCode {
    let scenario = match Scenario::load(path) {
        Ok(s) => s,
        Err(e) => return input_error(e),
    };
    match run_scenario(&scenario, parallel) {
        Ok(report) => {
            println!("scenario over {} with {}", report.tower, report.algebra);
            for r in &report.reports {
                print_suite(r);
            }
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
            write_report(stem, &report);
            ExitCode::from(exit_code(&report) as u8)
        }
        Err(e @ (ScenarioError::ParseError(_) | ScenarioError::UnsupportedCombination(_) | ScenarioError::Io(_))) => {
            input_error(e)
        }
    }
}

fn cmd_suite(args: SuiteArgs) -> ExitCode {
    let names: Vec<String> = if args.name == "all" {
        SUITES.iter().map(|s| s.to_string()).collect()
    } else {
        vec![args.name.replace('_', "-")]
    };
    let specialize = match args.specialize.as_deref() {
        None => None,
        Some(&[a, b]) => Some((a, b)),
        Some(_) => return input_error("--specialize takes exactly two values"),
    };
    let options = SuiteOptions {
        seed: args.seed,
        precision: args.precision,
        height: args.height,
        trials: args.trials,
        base: args.base,
        specialize,
        n: args.n,
    };
    let mut ok = true;
    let mut reports = Vec::new();
    for r in run_suites(&names, &options, args.parallel) {
        match r {
            Ok(r) => {
                print_suite(&r);
                ok &= r.verified;
                reports.push(r);
            }
            Err(e) => return input_error(e),
        }
    }
    write_report(&format!("suite-{}", args.name), &reports);
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn cmd_symbol(a: &str, b: &str, tower: &Path) -> ExitCode {
    let k = match load_tower(tower) {
        Ok(k) => k,
        Err(e) => return input_error(e),
    };
    let parsed = k.parse(a).and_then(|a| Ok((a, k.parse(b)?)));
    let (a, b) = match parsed {
        Ok(p) => p,
        Err(e) => return input_error(e),
    };
    match symbol_class(&a, &b) {
        Ok(c) => {
            println!("({a}, {b}) over {k}: {c}");
            match c.is_split() {
                Ok(s) => println!("split: {s}"),
                Err(e) => println!("split: undecided ({e})"),
            }
            write_report("symbol", &c);
            ExitCode::SUCCESS
        }
        Err(e) => input_error(e),
    }
}

fn cmd_common_slot(tower: &Path, slots: &[String], algebra: Option<&[String]>, bound: i64) -> ExitCode {
    let k = match load_tower(tower) {
        Ok(k) => k,
        Err(e) => return input_error(e),
    };
    let slots = match slots.iter().map(|s| k.parse(s)).collect::<Result<Vec<_>, _>>() {
        Ok(s) => s,
        Err(e) => return input_error(e),
    };
    let (a, b) = match algebra {
        Some([a, b]) => match k.parse(a).and_then(|a| Ok((a, k.parse(b)?))) {
            Ok(p) => p,
            Err(e) => return input_error(e),
        },
        Some(_) => return input_error("--algebra takes exactly two entries"),
        None if slots.len() >= 2 => (slots[0].clone(), slots[1].clone()),
        None => return input_error("give --algebra or at least two slots"),
    };
    let q = match QuaternionAlgebra::new(&k, &a, &b) {
        Ok(q) => q,
        Err(e) => return input_error(e),
    };
    match common_slot(&q, &slots, &k, bound, &[]) {
        Ok(rep) => {
            match &rep.outcome {
                CommonSlotOutcome::Found { mu } => println!("Found: mu = {mu}"),
                CommonSlotOutcome::NoneCertified => println!(
                    "NoneCertified: all {} square classes tried",
                    rep.square_classes.unwrap_or(0)
                ),
                CommonSlotOutcome::Unknown { bound } => println!("Unknown: nothing found up to height {bound}"),
            }
            println!("{} candidates tried", rep.transcript.len());
            write_report("common-slot", &rep);
            ExitCode::SUCCESS
        }
        Err(e) => input_error(e),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(INPUT_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Run { scenario, parallel } => cmd_run(&scenario, parallel),
        Command::Suite(args) => cmd_suite(args),
        Command::Symbol { a, b, tower } => cmd_symbol(&a, &b, &tower),
        Command::CommonSlot {
            tower,
            slots,
            algebra,
            bound,
        } => cmd_common_slot(&tower, &slots, algebra.as_deref(), bound),
    }
}
