use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mplab_cli::experiment::{run_experiment, ExperimentError, RunOptions};
use mplab_cli::gen::{generate, Family, MatrixGenerator};
use mplab_cli::mm::{format_matrix_market, write_matrix_market};
use mplab_cli::spec::{parse_seeds, RawSpec};
use mplab_core::{Format, Rng};

const EXIT_SPEC: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_ALL_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "mplab", version, about = "Mixed-precision linear algebra experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment spec and write one CSV row per run.
    Run {
        spec: PathBuf,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
        /// Replace the spec's seed list (a single seed, `a..b` or a list).
        #[arg(long)]
        seed: Option<String>,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
        /// Override a spec entry, e.g. `--set params.r=10`.
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        overrides: Vec<String>,
        /// Record wall-clock time per run (makes the CSV non-reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Generate a test matrix and write it in Matrix Market format.
    Gen {
        family: Family,
        n: usize,
        #[arg(long, default_value_t = 1e2)]
        kappa: f64,
        /// Rows, for rectangular families.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0.01)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; standard output when absent.
        #[arg(long)]
        mm: Option<PathBuf>,
    },
    /// Print the constants of the built-in formats.
    Formats,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            spec,
            out,
            seed,
            jobs,
            overrides,
            timing,
        } => run(spec, out, seed, jobs, overrides, timing),
        Command::Gen {
            family,
            n,
            kappa,
            m,
            density,
            seed,
            mm,
        } => gen(MatrixGenerator { family, n, m, kappa, density }, seed, mm),
        Command::Formats => {
            print!("{}", formats_table());
            ExitCode::SUCCESS
        }
    }
}

fn run(
    spec_path: PathBuf,
    out: PathBuf,
    seed: Option<String>,
    jobs: Option<usize>,
    overrides: Vec<String>,
    timing: bool,
) -> ExitCode {
    let text = match std::fs::read_to_string(&spec_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", spec_path.display());
            return ExitCode::from(EXIT_IO);
        }
    };
    let spec = (|| {
        let mut raw = RawSpec::parse(&text)?;
        for o in &overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| mplab_cli::spec::SpecError {
                line: None,
                msg: format!("override `{o}` must have the form section.key=value"),
            })?;
            raw.set(k.trim(), v.trim())?;
        }
        let mut spec = raw.build()?;
        if let Some(s) = &seed {
            spec.seeds = parse_seeds(s).map_err(|msg| mplab_cli::spec::SpecError { line: None, msg })?;
        }
        Ok::<_, mplab_cli::spec::SpecError>(spec)
    })();
    let spec = match spec {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", spec_path.display());
            return ExitCode::from(EXIT_SPEC);
        }
    };
    match run_experiment(&spec, &out, RunOptions { jobs, timing }) {
        Ok(summary) => {
            print!("{summary}");
            if summary.all_failed() {
                eprintln!("error: every run failed");
                ExitCode::from(EXIT_ALL_FAILED)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(ExperimentError::Spec(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_SPEC)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_IO)
        }
    }
}

fn gen(g: MatrixGenerator, seed: u64, mm: Option<PathBuf>) -> ExitCode {
    if let Err(e) = g.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_SPEC);
    }
    let a = generate(&g, &mut Rng::new(seed)).to_csr();
    match mm {
        Some(path) => match write_matrix_market(&path, &a) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                ExitCode::from(EXIT_IO)
            }
        },
        None => {
            print!("{}", format_matrix_market(&a));
            ExitCode::SUCCESS
        }
    }
}

fn formats_table() -> String {
    let mut s = format!("{:<6} {:>4} {:>4} {:>12} {:>12} {:>12}\n", "name", "exp", "sig", "u", "x_max", "x_min");
    for f in [Format::FP16, Format::BF16, Format::FP32, Format::FP64] {
        s += &format!(
            "{:<6} {:>4} {:>4} {:>12.4e} {:>12.4e} {:>12.4e}\n",
            f.to_string(),
            f.exp_bits(),
            f.sig_bits(),
            f.unit_roundoff(),
            f.x_max(),
            f.x_min()
        );
    }
    s
}
