use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kuramoto_runner::{run, Experiment, RunConfig, RunError, RunOptions, Status};

#[derive(Parser)]
#[command(name = "kuramoto", version, about = "Run Kuramoto-Sakaguchi validation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Overrides the output directory of the config.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Overrides the seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for inner parallel loops.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Check a config file without running anything.
    Validate { config: PathBuf },
    /// List the available experiments.
    ListExperiments,
}

fn exit_for(e: &RunError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_config() { 2 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let opts = RunOptions { output_dir: cli.output_dir, seed: cli.seed, quiet: cli.quiet };
    let load = |p: &PathBuf| RunConfig::load(p).and_then(|c| opts.apply(c));
    match cli.command {
        Command::ListExperiments => {
            for e in Experiment::ALL {
                println!("{:<20} {}", e.name(), e.summary());
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load(&config) {
            Ok(c) => {
                if !opts.quiet {
                    println!("{}: valid ({})", config.display(), c.experiment);
                }
                ExitCode::SUCCESS
            }
            Err(e) => exit_for(&e),
        },
        Command::Run { config } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(e) => return exit_for(&e),
            };
            match run(&cfg, opts.quiet) {
                Ok(m) => {
                    if !opts.quiet {
                        let passed = m.checks.iter().filter(|c| c.pass).count();
                        println!("{}: {passed}/{} checks passed", m.experiment, m.checks.len());
                    }
                    if m.status == Status::Passed {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => exit_for(&e),
            }
        }
    }
}
