use std::path::PathBuf;
use std::process::ExitCode;

use amv_cli::{run, Command, RunConfig};
use clap::Parser;

/// Asymptotic mean value experiments. Prints one verdict line and the report
/// path; exits 0 on pass, 1 on fail, 3 when inconclusive and 2 on errors.
#[derive(Parser, Debug)]
#[command(name = "amv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// `geom:r0:count` or a comma list of decreasing radii.
    #[arg(long, global = true)]
    radii: Option<String>,
    /// `mc:n[:seed]` or `grid:res`.
    #[arg(long, global = true)]
    scheme: Option<String>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "amv-out")]
    out: PathBuf,
    /// Replaces the magnitude of the command's default tolerance.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Replaces the command's default reference value.
    #[arg(long, global = true)]
    reference: Option<f64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Perturb one mass per identity instance (negative control).
    #[arg(long, global = true)]
    fault_inject: bool,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Debug } else { log::LevelFilter::Warn })
        .init();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot set up {t} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let cfg = RunConfig {
        command: cli.command,
        radii: cli.radii,
        scheme: cli.scheme,
        seed: cli.seed,
        out: cli.out,
        tolerance: cli.tolerance,
        reference: cli.reference,
        fault_inject: cli.fault_inject,
    };
    match run(&cfg) {
        Ok(outcome) => {
            println!("{}", outcome.verdict_line());
            println!("{}", outcome.files[0].display());
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("config: {}", serde_json::to_string(&cfg).unwrap_or_default());
            ExitCode::from(2)
        }
    }
}
