mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::{Report, Run};
use crate::config::{BetaSpec, Settings};
use crate::error::{CliError, EXIT_CHECKS_FAILED, EXIT_OK, EXIT_USAGE};

/// Signatures, dyadic extensions and uniform closeness estimates for
/// piecewise-linear paths.
#[derive(Parser, Debug)]
#[command(name = "roughpath", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// JSON config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for report.csv and summary.json.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Truncation depth N.
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Levels checked by verify-theorem.
    #[arg(long, global = true)]
    levels: Option<usize>,
    #[arg(long, global = true)]
    p: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// A positive number or `auto`.
    #[arg(long, global = true)]
    beta: Option<BetaSpec>,
    /// Number of sampled (s, t) pairs.
    #[arg(long, global = true)]
    pairs: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct Interval {
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Signature of a path on [s, t].
    Signature {
        #[arg(long)]
        path: Option<PathBuf>,
        #[command(flatten)]
        interval: Interval,
    },
    /// Lift level-floor(p) data to --depth and compare with the signature.
    Extend {
        #[arg(long)]
        path: Option<PathBuf>,
        #[command(flatten)]
        interval: Interval,
    },
    /// Total dyadic partition of the arc-length control.
    Partition {
        #[arg(long)]
        path: Option<PathBuf>,
        /// Dyadic order K.
        #[arg(long)]
        order: Option<u32>,
        #[command(flatten)]
        interval: Interval,
    },
    /// Neo-classical inequality sweep.
    Neoclassical,
    /// Uniform closeness estimate for two paths.
    VerifyTheorem {
        #[arg(long)]
        x: Option<PathBuf>,
        #[arg(long)]
        y: Option<PathBuf>,
        /// Largest dyadic order of the refinement audit.
        #[arg(long)]
        order: Option<u32>,
    },
    /// Perturbation sweep of a linear CDE.
    CdeCompare {
        #[arg(long)]
        problem: Option<PathBuf>,
        /// Comma-separated target ε values.
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
    },
    /// The full acceptance suite.
    All,
}

impl Cli {
    /// Flags as a settings layer.
    fn flag_settings(&self) -> Settings {
        let g = &self.global;
        let mut s = Settings {
            seed: g.seed,
            depth: g.depth,
            levels: g.levels,
            p: g.p,
            delta: g.delta,
            beta: g.beta,
            pairs: g.pairs,
            tol: g.tol,
            ..Settings::default()
        };
        match &self.command {
            Command::Signature { path, interval } | Command::Extend { path, interval } => {
                s.path = path.clone();
                (s.s, s.t) = (interval.s, interval.t);
            }
            Command::Partition { path, order, interval } => {
                s.path = path.clone();
                s.order = *order;
                (s.s, s.t) = (interval.s, interval.t);
            }
            Command::VerifyTheorem { x, y, order } => {
                (s.x, s.y) = (x.clone(), y.clone());
                s.order = *order;
            }
            Command::CdeCompare { problem, epsilons } => {
                s.problem = problem.clone();
                s.epsilons = epsilons.clone();
            }
            Command::Neoclassical | Command::All => {}
        }
        s
    }
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    let file_settings = match &cli.global.config {
        Some(file) => Settings::from_file(file)?,
        None => Settings::default(),
    };
    let settings = file_settings.overridden_by(cli.flag_settings());
    let run: Run = match cli.command {
        Command::Signature { .. } => commands::signature(&settings)?,
        Command::Extend { .. } => commands::extend(&settings)?,
        Command::Partition { .. } => commands::partition(&settings)?,
        Command::Neoclassical => commands::neoclassical(&settings)?,
        Command::VerifyTheorem { .. } => commands::verify_theorem(&settings)?,
        Command::CdeCompare { .. } => commands::cde_compare(&settings)?,
        Command::All => commands::all(&settings)?,
    };
    let dir = &cli.global.out;
    output::ensure_dir(dir)?;
    match &run.report {
        Report::Table(table) => output::write_table(dir, &run.meta, table)?,
        Report::Csv(bytes) => std::fs::write(dir.join(output::REPORT_FILE), bytes)
            .map_err(|e| CliError::Output(format!("{}: {e}", dir.join(output::REPORT_FILE).display())))?,
    }
    output::write_summary(dir, &run.meta, run.passed, run.summary)?;
    println!(
        "{} {}: {}",
        run.meta.command,
        if run.passed { "passed" } else { "FAILED" },
        dir.display()
    );
    Ok(run.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            let _ = e.print();
            return ExitCode::from(EXIT_OK as u8);
        }
        Err(e) => {
            let message = e.kind().to_string();
            let detail = e.render().to_string();
            let first = detail.lines().next().unwrap_or(&message).trim_start_matches("error: ");
            eprintln!("{}", CliError::Usage(first.to_string()).record());
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    match execute(&cli) {
        Ok(true) => ExitCode::from(EXIT_OK as u8),
        Ok(false) => ExitCode::from(EXIT_CHECKS_FAILED as u8),
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
