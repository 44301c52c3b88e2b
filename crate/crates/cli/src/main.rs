use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use renorm_lab::{emit, run, Experiment, ExperimentConfig, Format, Status};

#[derive(Parser)]
#[command(name = "renorm-lab", version, about = "Batch runner for renormalization and normal-form experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Report destination; defaults to the config's `output_path`, else stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Structured)]
        format: FormatArg,
        /// Overrides the config's `seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print experiment names with their keys and defaults.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Structured,
    Csv,
}

fn list() {
    for e in Experiment::ALL {
        println!("{e}");
        for p in e.params() {
            println!("  {} = {}", p.key, p.default.unwrap_or("(optional)"));
        }
        for (name, tol) in e.tolerances() {
            println!("  tol.{name} = {tol:e}");
        }
    }
}

fn exit(status: Status) -> ExitCode {
    ExitCode::from(status as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run {
        config,
        out,
        format,
        seed,
    } = cli.command
    else {
        list();
        return ExitCode::SUCCESS;
    };
    let mut cfg = match ExperimentConfig::load(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return exit(Status::ConfigError);
        }
    };
    if let Some(s) = seed {
        cfg = cfg.with_seed(s);
    }
    let start = Instant::now();
    let report = run(&cfg);
    eprintln!("{}: {:.3} s", cfg.experiment, start.elapsed().as_secs_f64());
    let format = match format {
        FormatArg::Structured => Format::Structured,
        FormatArg::Csv => Format::Csv,
    };
    let text = emit(&report, format);
    match out.or_else(|| cfg.output_path()) {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, text) {
                eprintln!("cannot write {}: {e}", path.display());
                return exit(Status::NumericalFailure);
            }
        }
        None => print!("{text}"),
    }
    for e in &report.errors {
        eprintln!("error: {e}");
    }
    exit(report.status())
}
