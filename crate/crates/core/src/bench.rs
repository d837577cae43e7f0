//! Latency experiment: an Analyzer agent sends 40 messages, one every
//! 250 ms, to a rule-based agent. Most are presence pings (`p`); four are
//! engine workloads (`S`). Each sample's delay runs from the send to the
//! terminal reply (INFORM for pings, INFORM/FAILURE for workloads).

use std::collections::HashMap;
use std::fmt;
use std::io;
use std::time::{Duration, Instant};

use crate::engine::sudoku;
use crate::messaging::{
    make_engine_action, AclMessage, AgentId, Content, Origin, Performative, PRESENCE_ONTOLOGY,
};
use crate::rule_agent::{launch, RuleAgentConfig, Variant};
use crate::runtime::{AgentHandle, Platform, ReceiveTemplate};

pub const SCHEDULE_LEN: usize = 40;
pub const SPACING_MS: u64 = 250;
pub const WORKLOAD_POSITIONS: [usize; 4] = [5, 15, 25, 35];
pub const DEFAULT_DURATIONS_MS: [u64; 4] = [250, 800, 1600, 2500];
pub const GLOBAL_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BenchError {
    #[error("CONFIG_ERROR: {0}")]
    Config(String),
    #[error("COMPARISON_ERROR: {0}")]
    Comparison(String),
    #[error("PLATFORM_ERROR: {0}")]
    Platform(String),
    #[error("CSV_ERROR: {0}")]
    Csv(String),
}

impl BenchError {
    pub fn kind(&self) -> &'static str {
        match self {
            BenchError::Config(_) => "CONFIG_ERROR",
            BenchError::Comparison(_) => "COMPARISON_ERROR",
            BenchError::Platform(_) => "PLATFORM_ERROR",
            BenchError::Csv(_) => "CSV_ERROR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryKind {
    Presence,
    Workload,
}

impl EntryKind {
    pub fn symbol(self) -> &'static str {
        match self {
            EntryKind::Presence => "p",
            EntryKind::Workload => "S",
        }
    }
}

/// What an `S` entry asks the engine to do.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Workload {
    /// `(burn ms)`: busywork for a fixed wall-clock time.
    Burn(u64),
    /// `(solve-sudoku "...")`; its duration is whatever the solver takes.
    Sudoku(String),
}

impl Workload {
    pub fn command(&self) -> String {
        match self {
            Workload::Burn(ms) => format!("(burn {ms})"),
            Workload::Sudoku(grid) => format!("(solve-sudoku \"{grid}\")"),
        }
    }

    /// Nominal duration, when known in advance.
    pub fn nominal_ms(&self) -> Option<u64> {
        match self {
            Workload::Burn(ms) => Some(*ms),
            Workload::Sudoku(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleEntry {
    /// 1-based position.
    pub index: usize,
    pub kind: EntryKind,
    pub offset_ms: u64,
    pub workload: Option<Workload>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageSchedule {
    pub entries: Vec<ScheduleEntry>,
}

impl MessageSchedule {
    /// The 40-entry schedule with only presence pings, used as the idle
    /// baseline.
    pub fn all_presence() -> Self {
        MessageSchedule {
            entries: (1..=SCHEDULE_LEN)
                .map(|index| ScheduleEntry {
                    index,
                    kind: EntryKind::Presence,
                    offset_ms: (index as u64 - 1) * SPACING_MS,
                    workload: None,
                })
                .collect(),
        }
    }

    pub fn workloads(&self) -> impl Iterator<Item = &ScheduleEntry> {
        self.entries.iter().filter(|e| e.kind == EntryKind::Workload)
    }
}

/// Standard schedule with `(burn ms)` workloads; the k-th duration goes to
/// the k-th `S` entry.
pub fn build_schedule(durations_ms: &[i64]) -> Result<MessageSchedule, BenchError> {
    if durations_ms.len() != WORKLOAD_POSITIONS.len() {
        return Err(BenchError::Config(format!(
            "expected {} workload durations, got {}",
            WORKLOAD_POSITIONS.len(),
            durations_ms.len()
        )));
    }
    let mut workloads = Vec::new();
    for &d in durations_ms {
        if d <= 0 {
            return Err(BenchError::Config(format!("workload duration must be positive, got {d}")));
        }
        workloads.push(Workload::Burn(d as u64));
    }
    build_schedule_with(workloads)
}

pub fn build_schedule_with(workloads: Vec<Workload>) -> Result<MessageSchedule, BenchError> {
    if workloads.len() != WORKLOAD_POSITIONS.len() {
        return Err(BenchError::Config(format!(
            "expected {} workloads, got {}",
            WORKLOAD_POSITIONS.len(),
            workloads.len()
        )));
    }
    for w in &workloads {
        if let Workload::Sudoku(grid) = w {
            sudoku::parse_grid(grid).map_err(|e| BenchError::Config(e.to_string()))?;
        }
    }
    let mut schedule = MessageSchedule::all_presence();
    for (pos, workload) in WORKLOAD_POSITIONS.iter().zip(workloads) {
        let entry = &mut schedule.entries[pos - 1];
        entry.kind = EntryKind::Workload;
        entry.workload = Some(workload);
    }
    Ok(schedule)
}

/// Schedule whose S entries solve the shipped puzzles in order.
pub fn sudoku_schedule() -> MessageSchedule {
    let workloads = sudoku::PUZZLES
        .iter()
        .map(|(_, grid)| Workload::Sudoku(grid.to_string()))
        .collect();
    build_schedule_with(workloads).expect("shipped puzzles are well formed")
}

/// Parses `250,800,1600,2500`.
pub fn parse_durations(text: &str) -> Result<Vec<i64>, BenchError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| BenchError::Config(format!("`{t}` is not a duration in ms")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelaySample {
    pub index: usize,
    pub kind: EntryKind,
    /// Milliseconds since the experiment started, on the Analyzer's clock.
    pub sent_at_ms: f64,
    /// `None` when no response arrived before the global timeout.
    pub responded_at_ms: Option<f64>,
}

impl DelaySample {
    pub fn delay_ms(&self) -> Option<f64> {
        self.responded_at_ms.map(|r| r - self.sent_at_ms)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub variant: Variant,
    pub samples: Vec<DelaySample>,
    /// Nominal durations of the workloads, in schedule order, when known.
    pub workload_ms: Vec<Option<u64>>,
}

fn median(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

impl ExperimentReport {
    pub fn is_valid(&self) -> bool {
        self.samples.len() == SCHEDULE_LEN && self.samples.iter().all(|s| s.responded_at_ms.is_some())
    }

    pub fn last_response_at_ms(&self) -> Option<f64> {
        self.samples
            .iter()
            .filter_map(|s| s.responded_at_ms)
            .max_by(f64::total_cmp)
    }

    pub fn presence_delays(&self) -> Vec<f64> {
        self.samples
            .iter()
            .filter(|s| s.kind == EntryKind::Presence)
            .filter_map(DelaySample::delay_ms)
            .collect()
    }

    pub fn median_presence_delay_ms(&self) -> Option<f64> {
        median(self.presence_delays())
    }

    pub fn max_presence_delay_ms(&self) -> Option<f64> {
        self.presence_delays().into_iter().max_by(f64::total_cmp)
    }

    /// Delays of the presence pings between the `k`-th workload and the next
    /// one (or the end of the schedule).
    pub fn presence_delays_after(&self, k: usize) -> Vec<f64> {
        let start = WORKLOAD_POSITIONS[k];
        let end = WORKLOAD_POSITIONS.get(k + 1).copied().unwrap_or(SCHEDULE_LEN + 1);
        self.samples
            .iter()
            .filter(|s| s.kind == EntryKind::Presence && s.index > start && s.index < end)
            .filter_map(DelaySample::delay_ms)
            .collect()
    }

    /// Send-time deviation from the nominal 250 ms grid at the 95th percentile.
    pub fn send_skew_p95_ms(&self) -> f64 {
        let mut skews: Vec<f64> = self
            .samples
            .iter()
            .map(|s| (s.sent_at_ms - (s.index as f64 - 1.0) * SPACING_MS as f64).abs())
            .collect();
        skews.sort_by(f64::total_cmp);
        if skews.is_empty() {
            return 0.0;
        }
        let rank = ((skews.len() as f64) * 0.95).ceil() as usize;
        skews[rank.clamp(1, skews.len()) - 1]
    }

    /// Indices of `S` entries in the order their responses arrived.
    pub fn workload_completion_order(&self) -> Vec<usize> {
        let mut done: Vec<&DelaySample> = self
            .samples
            .iter()
            .filter(|s| s.kind == EntryKind::Workload && s.responded_at_ms.is_some())
            .collect();
        done.sort_by(|a, b| a.responded_at_ms.unwrap().total_cmp(&b.responded_at_ms.unwrap()));
        done.into_iter().map(|s| s.index).collect()
    }
}

fn fmt_ms(v: f64) -> String {
    format!("{v:.3}")
}

#[derive(serde::Serialize, serde::Deserialize)]
struct CsvRow {
    index: usize,
    kind: String,
    variant: String,
    sent_at_ms: String,
    responded_at_ms: String,
    delay_ms: String,
}

pub const TIMEOUT_MARK: &str = "TIMEOUT";

/// Writes one row per sample: `index,kind,variant,sent_at_ms,responded_at_ms,delay_ms`.
pub fn write_csv<W: io::Write>(report: &ExperimentReport, out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for s in &report.samples {
        let row = CsvRow {
            index: s.index,
            kind: s.kind.symbol().to_string(),
            variant: report.variant.to_string(),
            sent_at_ms: fmt_ms(s.sent_at_ms),
            responded_at_ms: s.responded_at_ms.map(fmt_ms).unwrap_or_else(|| TIMEOUT_MARK.into()),
            delay_ms: s.delay_ms().map(fmt_ms).unwrap_or_else(|| TIMEOUT_MARK.into()),
        };
        w.serialize(row).map_err(|e| BenchError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| BenchError::Csv(e.to_string()))
}

pub fn to_csv(report: &ExperimentReport) -> String {
    let mut buf = Vec::new();
    write_csv(report, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is UTF-8")
}

/// Reads a report back. Workload durations are not part of the file and are
/// taken from `workload_ms`.
pub fn read_csv<R: io::Read>(input: R, workload_ms: Vec<Option<u64>>) -> Result<ExperimentReport, BenchError> {
    let mut r = csv::Reader::from_reader(input);
    let mut samples = Vec::new();
    let mut variant = None;
    for row in r.deserialize::<CsvRow>() {
        let row = row.map_err(|e| BenchError::Csv(e.to_string()))?;
        let v: Variant = row.variant.parse().map_err(BenchError::Csv)?;
        if variant.is_some_and(|prev| prev != v) {
            return Err(BenchError::Csv("rows mix variants".into()));
        }
        variant = Some(v);
        let kind = match row.kind.as_str() {
            "p" => EntryKind::Presence,
            "S" => EntryKind::Workload,
            other => return Err(BenchError::Csv(format!("unknown kind `{other}`"))),
        };
        let num = |field: &str, text: &str| {
            text.parse::<f64>()
                .map_err(|_| BenchError::Csv(format!("row {}: bad {field} `{text}`", row.index)))
        };
        let responded_at_ms = if row.responded_at_ms == TIMEOUT_MARK {
            None
        } else {
            Some(num("responded_at_ms", &row.responded_at_ms)?)
        };
        samples.push(DelaySample {
            index: row.index,
            kind,
            sent_at_ms: num("sent_at_ms", &row.sent_at_ms)?,
            responded_at_ms,
        });
    }
    let variant = variant.ok_or_else(|| BenchError::Csv("no rows".into()))?;
    Ok(ExperimentReport {
        variant,
        samples,
        workload_ms,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub nonblocking_last_ms: f64,
    pub blocking_last_ms: f64,
    /// `blocking.last_response_at − nonblocking.last_response_at`.
    pub gap_ms: f64,
    pub checks: Vec<Check>,
}

impl Comparison {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub const MIN_GAP_MS: f64 = 1500.0;
/// A ping counts as held up by a workload when its delay reaches this share
/// of the workload's duration.
pub const SPIKE_SHARE: f64 = 0.5;

fn spike_checks(report: &ExperimentReport, expect_spikes: bool) -> Vec<Check> {
    let mut checks = Vec::new();
    for (k, pos) in WORKLOAD_POSITIONS.iter().enumerate() {
        let Some(Some(duration)) = report.workload_ms.get(k) else {
            continue;
        };
        let threshold = SPIKE_SHARE * *duration as f64;
        let worst = report
            .presence_delays_after(k)
            .into_iter()
            .max_by(f64::total_cmp)
            .unwrap_or(0.0);
        let spiked = worst >= threshold;
        let (name, passed) = if expect_spikes {
            (format!("{} spike after S{pos}", report.variant), spiked)
        } else {
            (format!("{} no spike after S{pos}", report.variant), !spiked)
        };
        checks.push(Check {
            name,
            passed,
            detail: format!("worst following p-delay {worst:.1} ms vs threshold {threshold:.1} ms"),
        });
    }
    checks
}

/// Compares a non-blocking and a blocking run of the same schedule.
pub fn summarize(nonblocking: &ExperimentReport, blocking: &ExperimentReport) -> Result<Comparison, BenchError> {
    for (label, r) in [("first", nonblocking), ("second", blocking)] {
        if !r.is_valid() {
            return Err(BenchError::Comparison(format!(
                "{label} report ({}) is incomplete or timed out",
                r.variant
            )));
        }
    }
    let nonblocking_last_ms = nonblocking.last_response_at_ms().unwrap();
    let blocking_last_ms = blocking.last_response_at_ms().unwrap();
    let gap_ms = blocking_last_ms - nonblocking_last_ms;
    let mut checks = vec![Check {
        name: "last-response gap".into(),
        passed: gap_ms >= MIN_GAP_MS,
        detail: format!(
            "{blocking_last_ms:.1} - {nonblocking_last_ms:.1} = {gap_ms:.1} ms (need >= {MIN_GAP_MS} ms)"
        ),
    }];
    checks.extend(spike_checks(blocking, true));
    checks.extend(spike_checks(nonblocking, false));
    Ok(Comparison {
        nonblocking_last_ms,
        blocking_last_ms,
        gap_ms,
        checks,
    })
}

/// Drives one schedule against `target` from the `analyzer` agent's queue.
/// Sends happen on the nominal grid whatever responses are outstanding.
pub fn run_schedule(
    platform: &Platform,
    analyzer: &AgentHandle,
    target: &AgentId,
    variant: Variant,
    schedule: &MessageSchedule,
    timeout: Duration,
) -> Result<ExperimentReport, BenchError> {
    let me = analyzer.id().clone();
    let mut samples: Vec<DelaySample> = Vec::with_capacity(schedule.entries.len());
    let mut by_conversation: HashMap<String, usize> = HashMap::new();
    let mut outstanding = 0usize;
    let any = ReceiveTemplate::any();
    let start = Instant::now();
    let deadline = start + timeout;
    let ms_since = |t: Instant| t.duration_since(start).as_secs_f64() * 1000.0;
    let mut next = 0;
    loop {
        let now = Instant::now();
        if next < schedule.entries.len() {
            let entry = &schedule.entries[next];
            let due = start + Duration::from_millis(entry.offset_ms);
            if now >= due {
                let msg = match &entry.workload {
                    None => AclMessage::presence_request(me.clone(), target.clone()),
                    Some(w) => {
                        let action = make_engine_action("EVAL_COMMAND", vec![w.command()], Origin::Agent)
                            .map_err(|e| BenchError::Config(e.to_string()))?;
                        AclMessage::engine_request(me.clone(), target.clone(), action)
                    }
                };
                by_conversation.insert(msg.conversation_id.clone(), samples.len());
                let sent = Instant::now();
                platform
                    .send(msg)
                    .map_err(|e| BenchError::Platform(e.to_string()))?;
                samples.push(DelaySample {
                    index: entry.index,
                    kind: entry.kind,
                    sent_at_ms: ms_since(sent),
                    responded_at_ms: None,
                });
                outstanding += 1;
                next += 1;
                continue;
            }
        } else if outstanding == 0 {
            break;
        }
        if now >= deadline {
            log::warn!("experiment timed out with {outstanding} responses missing");
            break;
        }
        let wake = if next < schedule.entries.len() {
            (start + Duration::from_millis(schedule.entries[next].offset_ms)).min(deadline)
        } else {
            deadline
        };
        let Some(msg) = analyzer.receive_matching(&any, wake.saturating_duration_since(now)) else {
            continue;
        };
        let arrived = Instant::now();
        let Some(&slot) = by_conversation.get(&msg.conversation_id) else {
            log::debug!("analyzer ignoring unrelated {}", msg.performative);
            continue;
        };
        let sample = &mut samples[slot];
        let terminal = match sample.kind {
            EntryKind::Presence => msg.ontology == PRESENCE_ONTOLOGY && msg.performative != Performative::Agree,
            EntryKind::Workload => {
                matches!(msg.content, Content::Result(_))
                    || matches!(msg.performative, Performative::Refuse | Performative::NotUnderstood | Performative::Failure)
            }
        };
        if terminal && sample.responded_at_ms.is_none() {
            sample.responded_at_ms = Some(ms_since(arrived));
            outstanding -= 1;
        }
    }
    Ok(ExperimentReport {
        variant,
        samples,
        workload_ms: schedule
            .workloads()
            .map(|e| e.workload.as_ref().and_then(Workload::nominal_ms))
            .collect(),
    })
}

pub const ANALYZER_NAME: &str = "Analyzer";

/// Sets up a fresh platform with one target agent of `variant` at runlevel 5
/// and an Analyzer, runs `schedule`, and tears everything down.
pub fn run_experiment(variant: Variant, schedule: &MessageSchedule) -> Result<ExperimentReport, BenchError> {
    run_experiment_with_timeout(variant, schedule, GLOBAL_TIMEOUT)
}

pub fn run_experiment_with_timeout(
    variant: Variant,
    schedule: &MessageSchedule,
    timeout: Duration,
) -> Result<ExperimentReport, BenchError> {
    let platform = Platform::new();
    let target_name = match variant {
        Variant::NonBlocking => "NonBlockingAgent",
        Variant::Blocking => "BlockingAgent",
    };
    let target = launch(&platform, RuleAgentConfig::new(target_name, variant))
        .map_err(|e| BenchError::Platform(e.to_string()))?;
    let analyzer = platform
        .register_agent(AgentId::new(ANALYZER_NAME).unwrap(), false)
        .map_err(|e| BenchError::Platform(e.to_string()))?
        .handle();
    let report = run_schedule(&platform, &analyzer, target.id(), variant, schedule, timeout);
    platform.shutdown();
    report
}
