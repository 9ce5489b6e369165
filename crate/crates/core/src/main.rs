use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use signorini_lab::cli::{pipeline, snapshot, ExperimentConfig, Stages};

#[derive(Parser)]
#[command(
    name = "signorini-lab",
    version,
    about = "Parabolic thin obstacle experiments"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Solve the configured problem and write the snapshot.
    Solve(RunArgs),
    /// Solve, then run the growth-functional analysis.
    Analyze(RunArgs),
    /// Solve, then certify the almost-minimizer gauge.
    Certify(RunArgs),
    /// Full pipeline: solve, snapshot, analyze, certify.
    Run(RunArgs),
    /// Print the header of a snapshot file.
    Info { snapshot: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

fn execute(args: RunArgs, stages: Stages) -> signorini_lab::Result<bool> {
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| signorini_lab::Error::InvalidParameter(e.to_string()))?;
    }
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let start = Instant::now();
    let summary = pipeline::run(&config, stages, &args.out)?;
    let elapsed = start.elapsed().as_secs_f64();
    for f in &summary.analysis {
        eprintln!(
            "{:<20} min {:.4} median {:.4} holder {:.4} {}",
            f.functional,
            f.min_exponent,
            f.median_exponent,
            f.implied_holder,
            if f.pass { "PASS" } else { "FAIL" }
        );
    }
    if let Some(c) = &summary.certify {
        eprintln!(
            "gauge alpha {:.4} C {:.4e} {}",
            c.fitted_alpha,
            c.fitted_c,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    eprintln!(
        "{} finished in {elapsed:.1}s, reports in {}",
        config.name,
        args.out.display()
    );
    if let Some(budget) = config.budget_seconds.filter(|&b| elapsed > b) {
        eprintln!("warning: exceeded the {budget}s budget");
    }
    Ok(summary.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.verb {
        Verb::Solve(a) => execute(a, Stages::SOLVE),
        Verb::Analyze(a) => execute(a, Stages::ANALYZE),
        Verb::Certify(a) => execute(a, Stages::CERTIFY),
        Verb::Run(a) => execute(a, Stages::RUN),
        Verb::Info { snapshot: path } => snapshot::read_header(&path).map(|h| {
            println!(
                "{}",
                serde_json::to_string_pretty(&h).expect("headers serialize")
            );
            true
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more thresholds failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
