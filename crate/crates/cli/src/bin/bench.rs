use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ruleagents::bench::parse_durations;
use ruleagents::rule_agent::Variant;
use ruleagents_cli::bench::{compare, describe_comparison, describe_run, run, schedule, WorkloadKind};
use ruleagents_cli::CliError;

/// Response-delay benchmark of non-blocking versus blocking engine agents.
#[derive(Parser)]
#[command(name = "bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the 40-message schedule against one agent variant.
    Run {
        #[arg(long, value_parser = parse_variant)]
        variant: Variant,
        /// Durations in ms of the four engine workloads.
        #[arg(long, default_value = "250,800,1600,2500")]
        durations: String,
        #[arg(long, value_enum, default_value_t = WorkloadKind::Burn)]
        workload: WorkloadKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compares a nonblocking and a blocking report, in either order.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Workload durations the reports were run with.
        #[arg(long, default_value = "250,800,1600,2500")]
        durations: String,
        #[arg(long, value_enum, default_value_t = WorkloadKind::Burn)]
        workload: WorkloadKind,
    },
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("bench: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<bool, CliError> {
    match command {
        Command::Run {
            variant,
            durations,
            workload,
            out,
        } => {
            let schedule = schedule(workload, &parse_durations(&durations)?)?;
            let report = run(variant, &schedule, &out)?;
            print!("{}", describe_run(&report));
            println!("wrote {}", out.display());
            Ok(report.is_valid())
        }
        Command::Compare {
            a,
            b,
            durations,
            workload,
        } => {
            let schedule = schedule(workload, &parse_durations(&durations)?)?;
            let comparison = compare(&a, &b, &schedule)?;
            print!("{}", describe_comparison(&comparison));
            Ok(comparison.passed())
        }
    }
}
