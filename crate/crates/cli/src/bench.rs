//! `bench run` and `bench compare`.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use ruleagents::bench::{
    build_schedule, read_csv, run_experiment, sudoku_schedule, summarize, write_csv, Comparison, ExperimentReport,
    MessageSchedule,
};
use ruleagents::rule_agent::Variant;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum WorkloadKind {
    /// `(burn ms)` for each of the given durations.
    Burn,
    /// The four shipped sudoku puzzles; durations are ignored.
    Sudoku,
}

pub fn schedule(workload: WorkloadKind, durations: &[i64]) -> Result<MessageSchedule, CliError> {
    Ok(match workload {
        WorkloadKind::Burn => build_schedule(durations)?,
        WorkloadKind::Sudoku => sudoku_schedule(),
    })
}

/// Runs one experiment and writes its CSV to `out`.
pub fn run(variant: Variant, schedule: &MessageSchedule, out: &Path) -> Result<ExperimentReport, CliError> {
    let report = run_experiment(variant, schedule)?;
    let file = File::create(out).map_err(|e| CliError::io(out, e))?;
    write_csv(&report, BufWriter::new(file))?;
    Ok(report)
}

pub fn describe_run(report: &ExperimentReport) -> String {
    let ms = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.1} ms"));
    let timeouts = report.samples.iter().filter(|s| s.responded_at_ms.is_none()).count();
    let mut out = String::new();
    writeln!(out, "variant: {}", report.variant).unwrap();
    writeln!(out, "samples: {} ({timeouts} timed out)", report.samples.len()).unwrap();
    writeln!(out, "median p-delay: {}", ms(report.median_presence_delay_ms())).unwrap();
    writeln!(out, "max p-delay: {}", ms(report.max_presence_delay_ms())).unwrap();
    writeln!(out, "last response: {}", ms(report.last_response_at_ms())).unwrap();
    out
}

fn load(path: &Path, workload_ms: Vec<Option<u64>>) -> Result<ExperimentReport, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(read_csv(file, workload_ms)?)
}

/// Reads two reports in either order and compares the non-blocking one
/// against the blocking one. `schedule` supplies the workload durations.
pub fn compare(a: &Path, b: &Path, schedule: &MessageSchedule) -> Result<Comparison, CliError> {
    let workload_ms: Vec<Option<u64>> = schedule
        .workloads()
        .map(|e| e.workload.as_ref().and_then(|w| w.nominal_ms()))
        .collect();
    let first = load(a, workload_ms.clone())?;
    let second = load(b, workload_ms)?;
    let (nonblocking, blocking) = match (first.variant, second.variant) {
        (Variant::NonBlocking, Variant::Blocking) => (first, second),
        (Variant::Blocking, Variant::NonBlocking) => (second, first),
        (v, _) => {
            return Err(CliError::Usage(format!(
                "both reports are {v}; compare needs one nonblocking and one blocking run"
            )))
        }
    };
    Ok(summarize(&nonblocking, &blocking)?)
}

pub fn describe_comparison(c: &Comparison) -> String {
    let mut out = String::new();
    writeln!(out, "nonblocking last response: {:.1} ms", c.nonblocking_last_ms).unwrap();
    writeln!(out, "blocking last response: {:.1} ms", c.blocking_last_ms).unwrap();
    writeln!(out, "gap: {:.1} ms", c.gap_ms).unwrap();
    for check in &c.checks {
        writeln!(out, "{check}").unwrap();
    }
    writeln!(out, "{}", if c.passed() { "PASS" } else { "FAIL" }).unwrap();
    out
}
