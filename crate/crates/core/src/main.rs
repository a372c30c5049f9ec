use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;

use tropicalimit::scenario::{Problem, Scenario};
use tropicalimit::verifier::{self, write_atomic};
use tropicalimit::Error;

#[derive(Parser)]
#[command(name = "tropicalimit", version, about = "Tropical limits of integrals of differential forms")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "TROPICALIMIT_THREADS")]
    threads: Option<usize>,
    /// Seed for quasi-Monte Carlo shifts and randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// CSV output path.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// SVG output path.
    #[arg(long, global = true)]
    svg: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full convergence run over the t schedule.
    Run { scenario: PathBuf },
    /// Non-archimedean integral only.
    Na { scenario: PathBuf },
    /// Archimedean integral at one t.
    Arch {
        scenario: PathBuf,
        #[arg(long = "t", value_parser = parse_t)]
        t: Complex64,
    },
    /// Archimedean integrals over the ε list at one t.
    SweepEps {
        scenario: PathBuf,
        #[arg(long = "t", value_parser = parse_t)]
        t: Complex64,
    },
    /// Built-in invariant checks.
    Selftest {
        /// Disable the insertion sign of d before running; the run must fail.
        #[arg(long, hide = true)]
        mutate_sign: bool,
    },
}

/// `0.001` or `re,im`.
fn parse_t(s: &str) -> Result<Complex64, String> {
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    match s.split_once(',') {
        Some((re, im)) => Ok(Complex64::new(parse(re)?, parse(im)?)),
        None => Ok(Complex64::new(parse(s)?, 0.0)),
    }
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_CONVERGENCE: u8 = 3;

/// A scenario file, or `builtin:<name>`.
fn load(cli: &Cli, path: &Path) -> Result<Problem, Error> {
    let scenario = match path.to_str().and_then(|s| s.strip_prefix("builtin:")) {
        Some(name) => Scenario::from_json(
            verifier::builtin(name)
                .ok_or_else(|| Error::Validation(format!("unknown built-in scenario {name:?}; known: {}", verifier::BUILTIN_NAMES.join(", "))))?,
        )?,
        None => Scenario::load(path)?,
    };
    let mut p = scenario.validate()?;
    if let Some(seed) = cli.seed {
        p.quad.seed = seed;
    }
    if cli.csv.is_some() {
        p.outputs.csv_path = cli.csv.clone();
    }
    if cli.svg.is_some() {
        p.outputs.svg_path = cli.svg.clone();
    }
    Ok(p)
}

fn execute(cli: &Cli) -> Result<ExitCode, Error> {
    match &cli.command {
        Command::Run { scenario } => {
            let p = load(cli, scenario)?;
            let report = verifier::run(&p)?;
            println!("{:>12} {:>9} {:>20} {:>12} {:>10} {:>20} {:>10}", "t", "lambda", "arch", "arch_abs", "quad_err", "na", "abs_err");
            for r in &report.rows {
                println!(
                    "{:>12.3e} {:>9.4} {:>20.14} {:>12.6} {:>10.2e} {:>20.14} {:>10.3e}",
                    Complex64::new(r.t[0], r.t[1]).norm(),
                    r.lambda,
                    r.arch[0],
                    r.arch_abs,
                    r.quad_err,
                    r.na,
                    r.abs_err
                );
            }
            if let Some(l) = report.richardson_limit {
                println!("richardson_limit {l:.12}");
            }
            if let Some(e) = report.scaling_exponent {
                println!("scaling_exponent {e:.6}");
            }
            for w in &report.warnings {
                println!("warning {w}");
            }
            for v in &report.verdicts {
                println!("{} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.name, v.detail);
            }
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_CONVERGENCE) })
        }
        Command::Na { scenario } => {
            let p = load(cli, scenario)?;
            let r = verifier::run_na(&p, p.ts[0])?;
            println!("na {:.15}", r.value);
            println!("cells {}", r.cells.len());
            for w in &r.warnings {
                println!("warning {w:?}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Arch { scenario, t } => {
            let p = load(cli, scenario)?;
            let r = verifier::run_arch(&p, *t)?;
            println!("value {:.15} {:+.15}i", r.value.re, r.value.im);
            println!("abs_value {:.15}", r.abs_value);
            println!("est_error {:.3e}", r.est_error);
            println!("nodes_used {} nodes_skipped {}", r.nodes_used, r.nodes_skipped);
            Ok(ExitCode::SUCCESS)
        }
        Command::SweepEps { scenario, t } => {
            let p = load(cli, scenario)?;
            let rows = verifier::sweep_eps(&p, *t)?;
            let csv = verifier::sweep_csv(&rows);
            print!("{csv}");
            if let Some(path) = &p.outputs.csv_path {
                write_atomic(path, csv.as_bytes())?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Selftest { mutate_sign } => {
            let summary = verifier::selftest(cli.seed.unwrap_or(0), *mutate_sign);
            println!("{}", serde_json::to_string_pretty(&summary).expect("serializable summary"));
            Ok(if summary.passed { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if k == 0 || rayon::ThreadPoolBuilder::new().num_threads(k).build_global().is_err() {
            eprintln!("error: invalid thread count {k}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    }
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}
