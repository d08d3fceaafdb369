//! `noise-id`: identifiability checks, data generation and transition-matrix
//! recovery from the command line.

mod commands;
mod failure;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use commands::{CheckMode, EstimateArgs, Report};
use failure::Failure;

#[derive(Parser, Debug)]
#[command(name = "noise-id", version, about = "Label-noise identifiability toolkit")]
struct Cli {
    /// Emit structured JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Omit the timestamp so reruns are byte-identical.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Refuse to run without an explicit --seed.
    #[arg(long, global = true)]
    strict: bool,
    /// Seed for every random choice; overrides the scenario file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an identifiability checker on a scenario file.
    Check {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        mode: CheckMode,
    },
    /// Sample a dataset from a scenario file.
    Generate {
        scenario: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        /// Also write each instance's label distribution (instance noise only).
        #[arg(long)]
        emit_rows: bool,
    },
    /// Recover the prior and T from a dataset, or from a scenario with --exact.
    Estimate {
        input: PathBuf,
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        /// Ground-truth T (nested array or object with a "T" field).
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Use two categorical features plus one noisy label.
        #[arg(long)]
        from_features: bool,
        /// Number of hidden classes (defaults to the dataset's K).
        #[arg(long)]
        k: Option<usize>,
    },
    /// Find a second binary parameter point with the same two-label statistics.
    Witness {
        gamma: f64,
        e_plus: f64,
        e_minus: f64,
    },
    /// Estimate how often sampled triplets satisfy the 2-NN condition.
    #[command(name = "simulate-2nn")]
    Simulate2nn {
        params: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Evaluate the two-candidate error bound for three matrices.
    Bound {
        t1: PathBuf,
        t2: PathBuf,
        t_star: PathBuf,
    },
}

fn run(cli: &Cli) -> Result<Report, Failure> {
    if cli.strict && cli.seed.is_none() {
        return Err(Failure::validation("--strict requires --seed"));
    }
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Check { scenario, mode } => commands::check(scenario, *mode, cli.seed),
        Command::Generate {
            scenario,
            out,
            emit_rows,
        } => commands::generate(scenario, out, *emit_rows, cli.seed),
        Command::Estimate {
            input,
            exact,
            restarts,
            truth,
            from_features,
            k,
        } => commands::estimate(&EstimateArgs {
            input,
            exact: *exact,
            restarts: *restarts,
            truth: truth.as_deref(),
            from_features: *from_features,
            k: *k,
            seed: cli.seed,
        }),
        Command::Witness {
            gamma,
            e_plus,
            e_minus,
        } => commands::witness(*gamma, *e_plus, *e_minus, seed),
        Command::Simulate2nn { params, trials } => commands::simulate_2nn(params, *trials, seed),
        Command::Bound { t1, t2, t_star } => commands::bound(t1, t2, t_star),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let timestamp = (!cli.no_timestamp).then(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    });
    match run(&cli) {
        Ok(mut report) => {
            if cli.json {
                if let (Some(ts), Some(obj)) = (timestamp, report.json.as_object_mut()) {
                    obj.insert("timestamp".into(), ts.into());
                }
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report.json).expect("report serializes")
                );
            } else {
                if let Some(ts) = timestamp {
                    println!("# timestamp: {ts}");
                }
                print!("{}", report.text);
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
