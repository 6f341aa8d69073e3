//! `qes`: spectra and verification reports for the Lamé, many-body,
//! coupled-channel and trigonometric systems.

mod config;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use qes_core::report::{self, Constants, Coupling, RunOptions, RunReport};
use qes_core::verify::{self, Suite};
use qes_core::QesError;

#[derive(Parser, Debug)]
#[command(name = "qes", version, about = "Algebraic sectors of quasi-exactly-solvable operators")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Write the report as JSON to this path.
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Write one CSV row per algebraic eigenvalue to this path.
    #[arg(long, global = true, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Seed for the collocation nodes.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Points of the coarse finite-difference grid (even, at least 64).
    #[arg(long, global = true, default_value_t = 2048)]
    grid: usize,
    /// Matching tolerance against the finite-difference reference.
    #[arg(long, global = true, default_value_t = 1e-3)]
    tol: f64,
    /// File of `key = value` lines; flags given on the command line win.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Lamé operator with coupling 2n(2n+1)k²: four sectors, 4n+1 levels.
    Lame {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long)]
        k: f64,
    },
    /// N-body Weierstrass Hamiltonian: coexisting sectors and their spectra.
    Manybody {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=3))]
        bodies: u64,
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[arg(long, default_value_t = 0.0)]
        b: f64,
        /// Middle root; the largest is −(e2 + e3).
        #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
        e2: f64,
        #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
        e3: f64,
        /// One-body coupling.
        #[arg(long, allow_negative_numbers = true, conflicts_with = "m", required_unless_present = "m")]
        c: Option<f64>,
        /// Degree whose quantized coupling c_m is used.
        #[arg(long, allow_negative_numbers = true)]
        m: Option<f64>,
    },
    /// Two-channel elliptic system: F and G sectors against finite differences.
    Coupled {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        m: u64,
        #[arg(long)]
        k: f64,
        #[arg(long, allow_negative_numbers = true)]
        b: f64,
        /// Constants placed in the potential.
        #[arg(long, value_enum, default_value_t = ConstantsArg::Qes)]
        constants: ConstantsArg,
    },
    /// Trigonometric two-channel operator on [0, 2Nπ]: Fourier blocks p = 0..pmax.
    Trig {
        #[arg(long = "N", value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, allow_negative_numbers = true)]
        b: f64,
        #[arg(long, default_value_t = 4)]
        pmax: usize,
    },
    /// Runs the acceptance matrix and prints a pass/fail table.
    Verify {
        #[arg(value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ConstantsArg {
    /// A = k²(4m²+2m+1), θ = √(4b² − k⁴(4m+1)²).
    Qes,
    /// A = (k²/2)(4m²+2m+1), θ = 4b² − k⁴(4m+1)².
    Printed,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SuiteArg {
    All,
    Elliptic,
    Lame,
    Manybody,
    Coupled,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::All => Suite::All,
            SuiteArg::Elliptic => Suite::Elliptic,
            SuiteArg::Lame => Suite::Lame,
            SuiteArg::Manybody => Suite::ManyBody,
            SuiteArg::Coupled => Suite::Coupled,
        }
    }
}

const EXIT_USAGE: u8 = 1;

fn main() -> ExitCode {
    let args: Vec<OsString> = std::env::args_os().collect();
    let cli = match parse(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    ExitCode::from(run(cli) as u8)
}

/// Parses the command line after appending, for every `--config` entry whose
/// flag is absent from the command line, the corresponding `--key value`.
fn parse(args: Vec<OsString>) -> Result<Cli, clap::Error> {
    let Some(path) = config_path(&args) else {
        return Cli::try_parse_from(args);
    };
    let entries = config::read(&path).map_err(|e| Cli::command().error(ErrorKind::Io, e))?;
    let cmd = Cli::command();
    let Some(sub) = args
        .iter()
        .skip(1)
        .filter_map(|a| a.to_str())
        .find_map(|a| cmd.find_subcommand(a))
    else {
        return Cli::try_parse_from(args);
    };
    let given = |long: &str| {
        args.iter().filter_map(|a| a.to_str()).any(|a| {
            a.strip_prefix("--")
                .is_some_and(|rest| rest == long || rest.starts_with(&format!("{long}=")))
        })
    };
    let mut full = args.clone();
    for (key, value) in entries {
        let long = sub
            .get_arguments()
            .chain(cmd.get_arguments())
            .filter_map(|a| a.get_long())
            .find(|l| *l == key)
            .ok_or_else(|| {
                cmd.clone().error(
                    ErrorKind::UnknownArgument,
                    format!("config key {key:?} is not an option of `qes {}`", sub.get_name()),
                )
            })?;
        // --c and --m are alternatives: either one on the command line overrides both
        let alternative = match long {
            "c" => given("m"),
            "m" if sub.get_name() == "manybody" => given("c"),
            _ => false,
        };
        if long != "config" && !given(long) && !alternative {
            full.push(format!("--{long}").into());
            full.push(value.into());
        }
    }
    Cli::try_parse_from(full)
}

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().filter_map(|a| a.to_str());
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Caps the worker pool at `QES_THREADS` when it is set.
fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("QES_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("QES_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn run(cli: Cli) -> i32 {
    let opts = RunOptions {
        seed: cli.common.seed,
        grid: cli.common.grid,
        tol: cli.common.tol,
    };
    let result = match cli.command {
        Command::Lame { n, k } => report::run_lame(n as usize, k, &opts),
        Command::Manybody { bodies, a, b, e2, e3, c, m } => {
            let coupling = match (c, m) {
                (Some(c), _) => Coupling::C(c),
                (None, Some(m)) => Coupling::M(m),
                (None, None) => unreachable!("clap requires one of --c and --m"),
            };
            report::run_manybody(bodies as usize, a, b, e2, e3, coupling, &opts)
        }
        Command::Coupled { m, k, b, constants } => {
            let constants = match constants {
                ConstantsArg::Qes => Constants::Qes,
                ConstantsArg::Printed => Constants::Printed,
            };
            report::run_coupled(m as usize, k, b, constants, &opts)
        }
        Command::Trig { n, b, pmax } => report::run_trig(n as usize, b, pmax, &opts),
        Command::Verify { suite } => return run_verify(suite.into(), &opts, &cli.common),
    };
    match result {
        Ok(r) => match emit(&r, &cli.common) {
            Ok(()) => r.exit_code(),
            Err(e) => {
                eprintln!("error: {e}");
                3
            }
        },
        Err(e) => report_error(&e),
    }
}

fn report_error(e: &QesError) -> i32 {
    eprintln!("error: {e}");
    if e.exit_code() == 1 {
        eprintln!("run with --help for usage");
    }
    e.exit_code()
}

fn emit(r: &RunReport, common: &Common) -> std::io::Result<()> {
    print!("{}", r.to_text());
    if let Some(p) = &common.json {
        std::fs::write(p, r.to_json() + "\n")?;
    }
    if let Some(p) = &common.csv {
        std::fs::write(p, r.to_csv())?;
    }
    Ok(())
}

fn run_verify(suite: Suite, opts: &RunOptions, common: &Common) -> i32 {
    let results = verify::run_suite(suite, opts);
    for c in &results {
        print!("{c}");
    }
    println!();
    for c in &results {
        println!("{}", c.headline());
    }
    if let Some(p) = &common.json {
        if let Err(e) = std::fs::write(p, verify::to_json(&results) + "\n") {
            eprintln!("error: {e}");
            return 3;
        }
    }
    if results.iter().all(|c| c.pass) {
        0
    } else {
        2
    }
}
