//! Runlevels and externalized behaviors.
//!
//! Behaviors are declared in `.rbs` files, one `(behavior ...)` form each:
//!
//! ```text
//! (behavior presence-responder (kind cyclic)
//!   (on (performative REQUEST) (ontology presence))
//!   (do (reply INFORM "alive")))
//! (behavior heartbeat (kind cyclic) (every 1000)
//!   (do (send "monitor" INFORM presence "up")))
//! (behavior engine-fsm (kind fsm))
//! ```
//!
//! Triggers: `(on constraint...)` with `performative`, `ontology`,
//! `conversation` and `content` (`text|action|result|job`), or `(every ms)`.
//! Steps: `(reply PERF "text")`, `(forward-to-engine)`, `(execute-inline)`,
//! `(send "agent" PERF ontology "text")`, `(set-runlevel N)`.
//! `(kind fsm)` installs the engine FSM and takes no trigger or steps.
//!
//! Script files are read again on every transition.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crate::engine::parser::{self, Sexp};
use crate::engine::{Atom, EngineError};
use crate::messaging::{AclMessage, AgentId, Content, ContentKind, Performative};
use crate::rule_agent::{execute_inline, handle_external_request, EngineFsm, Variant};
use crate::runtime::{Agent, AgentContext, Behavior, BehaviorError, BehaviorKind, BehaviorSlot, ReceiveTemplate, Step};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Runlevel {
    L0,
    L1,
    L3,
    L5,
    L6,
}

impl Runlevel {
    pub const ALL: [Runlevel; 5] = [Runlevel::L0, Runlevel::L1, Runlevel::L3, Runlevel::L5, Runlevel::L6];

    pub fn value(self) -> u8 {
        match self {
            Runlevel::L0 => 0,
            Runlevel::L1 => 1,
            Runlevel::L3 => 3,
            Runlevel::L5 => 5,
            Runlevel::L6 => 6,
        }
    }

    pub fn from_value(value: i64) -> Result<Runlevel, RunlevelError> {
        match value {
            0 => Ok(Runlevel::L0),
            1 => Ok(Runlevel::L1),
            3 => Ok(Runlevel::L3),
            5 => Ok(Runlevel::L5),
            6 => Ok(Runlevel::L6),
            other => Err(RunlevelError::Invalid(other.to_string())),
        }
    }

    /// Maps the console buttons `n-1`, `n-3`, `n-5` and `n-6!`.
    pub fn from_button(button: &str) -> Result<Runlevel, RunlevelError> {
        match button {
            "n-1" => Ok(Runlevel::L1),
            "n-3" => Ok(Runlevel::L3),
            "n-5" => Ok(Runlevel::L5),
            "n-6!" => Ok(Runlevel::L6),
            other => Err(RunlevelError::Invalid(other.to_string())),
        }
    }

    pub fn file_name(self) -> String {
        format!("level.{:02}.rbs", self.value())
    }
}

impl fmt::Display for Runlevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunlevelError {
    #[error("INVALID_RUNLEVEL: {0} (valid levels are 0, 1, 3, 5, 6)")]
    Invalid(String),
    #[error("SCRIPT_ERROR: {file}:{line}:{column}: {message}")]
    Script {
        file: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("UNSUPPORTED_TRANSITION: {from} -> {to} (go down only through 6)")]
    Unsupported { from: Runlevel, to: Runlevel },
    #[error("TIMEOUT: agent {0} did not complete the transition")]
    Timeout(String),
}

impl RunlevelError {
    pub fn kind(&self) -> &'static str {
        match self {
            RunlevelError::Invalid(_) => "INVALID_RUNLEVEL",
            RunlevelError::Script { .. } => "SCRIPT_ERROR",
            RunlevelError::Unsupported { .. } => "UNSUPPORTED_TRANSITION",
            RunlevelError::Timeout(_) => "TIMEOUT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Trigger {
    /// Runs once per matching message.
    Message(ReceiveTemplate),
    Every(Duration),
    /// Runs on the first step (one-shot behaviors only).
    Immediate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptStep {
    Reply { performative: Performative, text: String },
    ForwardToEngine,
    ExecuteInline,
    Send { to: String, performative: Performative, ontology: String, text: String },
    SetRunlevel(Runlevel),
}

impl ScriptStep {
    fn needs_message(&self) -> bool {
        matches!(self, ScriptStep::Reply { .. } | ScriptStep::ForwardToEngine | ScriptStep::ExecuteInline)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BehaviorDescriptor {
    pub name: String,
    pub kind: BehaviorKind,
    pub trigger: Trigger,
    pub steps: Vec<ScriptStep>,
}

impl BehaviorDescriptor {
    pub fn instantiate(&self) -> Box<dyn Behavior> {
        match self.kind {
            BehaviorKind::Fsm => Box::new(EngineFsm::new(self.name.clone())),
            _ => Box::new(ScriptBehavior::new(self.clone())),
        }
    }
}

struct ScriptParser<'a> {
    file: &'a str,
}

impl ScriptParser<'_> {
    fn error(&self, at: &Sexp, message: impl Into<String>) -> RunlevelError {
        let pos = at.pos();
        RunlevelError::Script {
            file: self.file.to_string(),
            line: pos.line,
            column: pos.column,
            message: message.into(),
        }
    }

    fn symbol<'s>(&self, form: &'s Sexp) -> Option<&'s str> {
        match form {
            Sexp::Atom(Atom::Symbol(s), _) => Some(s),
            _ => None,
        }
    }

    /// A symbol or string.
    fn text(&self, form: &Sexp, what: &str) -> Result<String, RunlevelError> {
        match form {
            Sexp::Atom(Atom::Symbol(s), _) | Sexp::Atom(Atom::Str(s), _) => Ok(s.clone()),
            _ => Err(self.error(form, format!("expected {what}"))),
        }
    }

    fn int(&self, form: &Sexp, what: &str) -> Result<i64, RunlevelError> {
        match form {
            Sexp::Atom(Atom::Int(n), _) => Ok(*n),
            _ => Err(self.error(form, format!("expected {what}"))),
        }
    }

    fn performative(&self, form: &Sexp) -> Result<Performative, RunlevelError> {
        let name = self.text(form, "a performative")?;
        name.parse().map_err(|_| self.error(form, format!("unknown performative `{name}`")))
    }

    /// `(head args...)` with a symbol head.
    fn clause<'s>(&self, form: &'s Sexp) -> Result<(&'s str, &'s [Sexp]), RunlevelError> {
        if let Sexp::List(items, _) = form {
            if let Some(head) = items.first().and_then(|h| self.symbol(h)) {
                return Ok((head, &items[1..]));
            }
        }
        Err(self.error(form, "expected a (keyword ...) clause"))
    }

    fn arity(&self, form: &Sexp, args: &[Sexp], n: usize) -> Result<(), RunlevelError> {
        if args.len() != n {
            let (head, _) = self.clause(form)?;
            return Err(self.error(form, format!("({head}) takes {n} argument(s), got {}", args.len())));
        }
        Ok(())
    }

    fn template(&self, constraints: &[Sexp]) -> Result<ReceiveTemplate, RunlevelError> {
        let mut tpl = ReceiveTemplate::any();
        for c in constraints {
            let (head, args) = self.clause(c)?;
            self.arity(c, args, 1)?;
            match head {
                "performative" => tpl.performative = Some(self.performative(&args[0])?),
                "ontology" => tpl.ontology = Some(self.text(&args[0], "an ontology")?),
                "conversation" => tpl.conversation_id = Some(self.text(&args[0], "a conversation id")?),
                "content" => {
                    let kind = match self.text(&args[0], "a content kind")?.as_str() {
                        "text" => ContentKind::Text,
                        "action" => ContentKind::Action,
                        "result" => ContentKind::Result,
                        "job" => ContentKind::Job,
                        other => return Err(self.error(&args[0], format!("unknown content kind `{other}`"))),
                    };
                    tpl.content_kind = Some(kind);
                }
                other => return Err(self.error(c, format!("unknown constraint `{other}`"))),
            }
        }
        Ok(tpl)
    }

    fn step(&self, form: &Sexp) -> Result<ScriptStep, RunlevelError> {
        let (head, args) = self.clause(form)?;
        match head {
            "reply" => {
                self.arity(form, args, 2)?;
                Ok(ScriptStep::Reply {
                    performative: self.performative(&args[0])?,
                    text: self.text(&args[1], "reply text")?,
                })
            }
            "forward-to-engine" => {
                self.arity(form, args, 0)?;
                Ok(ScriptStep::ForwardToEngine)
            }
            "execute-inline" => {
                self.arity(form, args, 0)?;
                Ok(ScriptStep::ExecuteInline)
            }
            "send" => {
                self.arity(form, args, 4)?;
                let to = self.text(&args[0], "an agent name")?;
                if AgentId::new(to.clone()).is_err() {
                    return Err(self.error(&args[0], format!("invalid agent name `{to}`")));
                }
                Ok(ScriptStep::Send {
                    to,
                    performative: self.performative(&args[1])?,
                    ontology: self.text(&args[2], "an ontology")?,
                    text: self.text(&args[3], "message text")?,
                })
            }
            "set-runlevel" => {
                self.arity(form, args, 1)?;
                let n = self.int(&args[0], "a runlevel")?;
                let level = Runlevel::from_value(n).map_err(|e| self.error(&args[0], e.to_string()))?;
                Ok(ScriptStep::SetRunlevel(level))
            }
            other => Err(self.error(form, format!("unknown step `{other}`"))),
        }
    }

    fn descriptor(&self, form: &Sexp) -> Result<BehaviorDescriptor, RunlevelError> {
        let (head, args) = self.clause(form)?;
        if head != "behavior" {
            return Err(self.error(form, format!("expected (behavior ...), found ({head} ...)")));
        }
        let Some(name_form) = args.first() else {
            return Err(self.error(form, "behavior without a name"));
        };
        let name = self.text(name_form, "a behavior name")?;
        let mut kind = None;
        let mut trigger = None;
        let mut steps = None;
        for clause in &args[1..] {
            let (key, values) = self.clause(clause)?;
            match key {
                "kind" => {
                    self.arity(clause, values, 1)?;
                    kind = Some(match self.text(&values[0], "a behavior kind")?.as_str() {
                        "cyclic" => BehaviorKind::Cyclic,
                        "one-shot" => BehaviorKind::OneShot,
                        "fsm" => BehaviorKind::Fsm,
                        other => return Err(self.error(&values[0], format!("unknown kind `{other}`"))),
                    });
                }
                "on" | "every" if trigger.is_some() => {
                    return Err(self.error(clause, "a behavior has at most one trigger"));
                }
                "on" => trigger = Some(Trigger::Message(self.template(values)?)),
                "every" => {
                    self.arity(clause, values, 1)?;
                    let ms = self.int(&values[0], "an interval in ms")?;
                    if ms <= 0 {
                        return Err(self.error(&values[0], "interval must be positive"));
                    }
                    trigger = Some(Trigger::Every(Duration::from_millis(ms as u64)));
                }
                "do" => {
                    if steps.is_some() {
                        return Err(self.error(clause, "duplicate (do ...) clause"));
                    }
                    steps = Some(values.iter().map(|s| self.step(s)).collect::<Result<Vec<_>, _>>()?);
                }
                other => return Err(self.error(clause, format!("unknown clause `{other}`"))),
            }
        }
        let Some(kind) = kind else {
            return Err(self.error(form, format!("behavior `{name}` has no (kind ...)")));
        };
        let steps = steps.unwrap_or_default();
        if kind == BehaviorKind::Fsm {
            if trigger.is_some() || !steps.is_empty() {
                return Err(self.error(form, "an fsm behavior takes no trigger or steps"));
            }
            return Ok(BehaviorDescriptor {
                name,
                kind,
                trigger: Trigger::Immediate,
                steps,
            });
        }
        let trigger = match trigger {
            Some(t) => t,
            None if kind == BehaviorKind::OneShot => Trigger::Immediate,
            None => return Err(self.error(form, format!("cyclic behavior `{name}` needs (on ...) or (every ...)"))),
        };
        if !matches!(trigger, Trigger::Message(_)) && steps.iter().any(ScriptStep::needs_message) {
            return Err(self.error(form, "reply, forward-to-engine and execute-inline need an (on ...) trigger"));
        }
        Ok(BehaviorDescriptor {
            name,
            kind,
            trigger,
            steps,
        })
    }
}

/// Parses a behavior script. `file` labels diagnostics.
pub fn parse_script(file: &str, source: &str) -> Result<Vec<BehaviorDescriptor>, RunlevelError> {
    let forms = parser::read_all(source).map_err(|e| match e {
        EngineError::Parse { line, column, message } => RunlevelError::Script {
            file: file.to_string(),
            line,
            column,
            message,
        },
        other => RunlevelError::Script {
            file: file.to_string(),
            line: 0,
            column: 0,
            message: other.to_string(),
        },
    })?;
    let p = ScriptParser { file };
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for form in &forms {
        let d = p.descriptor(form)?;
        if !seen.insert(d.name.clone()) {
            return Err(p.error(form, format!("duplicate behavior name `{}`", d.name)));
        }
        out.push(d);
    }
    Ok(out)
}

pub const DEFAULT_LEVEL_01: &str = r#"; basal behaviors
(behavior presence-responder (kind cyclic)
  (on (performative REQUEST) (ontology presence))
  (do (reply INFORM "alive")))
"#;

pub const DEFAULT_LEVEL_03_NONBLOCKING: &str = r#"; engine access: accept requests, run them on a detached thread
(behavior request-acceptor (kind cyclic)
  (on (performative REQUEST) (ontology rbe-actions) (content action))
  (do (forward-to-engine)))
(behavior engine-fsm (kind fsm))
"#;

pub const DEFAULT_LEVEL_03_BLOCKING: &str = r#"; engine access: run each request inside the message handler
(behavior inline-engine (kind cyclic)
  (on (performative REQUEST) (ontology rbe-actions) (content action))
  (do (execute-inline)))
"#;

/// Where an agent's level scripts come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptSet {
    /// Files `level.0N.rbs` in a directory, read on every transition.
    Dir(PathBuf),
    /// Script text held in memory, keyed by level.
    Inline(BTreeMap<Runlevel, String>),
}

impl ScriptSet {
    pub fn empty() -> Self {
        ScriptSet::Inline(BTreeMap::new())
    }

    pub fn dir(path: impl Into<PathBuf>) -> Self {
        ScriptSet::Dir(path.into())
    }

    pub fn defaults(variant: Variant) -> Self {
        ScriptSet::Inline(default_scripts(variant).into_iter().collect())
    }

    /// Source and display name of a level's script; `None` if absent.
    pub fn read(&self, level: Runlevel) -> Result<Option<(String, String)>, RunlevelError> {
        match self {
            ScriptSet::Inline(map) => Ok(map.get(&level).map(|s| (level.file_name(), s.clone()))),
            ScriptSet::Dir(dir) => {
                let path = dir.join(level.file_name());
                match std::fs::read_to_string(&path) {
                    Ok(source) => Ok(Some((path.display().to_string(), source))),
                    Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
                    Err(e) => Err(RunlevelError::Script {
                        file: path.display().to_string(),
                        line: 0,
                        column: 0,
                        message: e.to_string(),
                    }),
                }
            }
        }
    }

    pub fn load(&self, level: Runlevel) -> Result<Vec<BehaviorDescriptor>, RunlevelError> {
        match self.read(level)? {
            Some((file, source)) => parse_script(&file, &source),
            None => Ok(Vec::new()),
        }
    }
}

pub fn default_scripts(variant: Variant) -> Vec<(Runlevel, String)> {
    let level3 = match variant {
        Variant::NonBlocking => DEFAULT_LEVEL_03_NONBLOCKING,
        Variant::Blocking => DEFAULT_LEVEL_03_BLOCKING,
    };
    vec![
        (Runlevel::L1, DEFAULT_LEVEL_01.to_string()),
        (Runlevel::L3, level3.to_string()),
    ]
}

/// Writes the default scripts for `variant` into `dir`, leaving existing
/// files alone.
pub fn install_default_scripts(dir: &Path, variant: Variant) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (level, source) in default_scripts(variant) {
        let path = dir.join(level.file_name());
        if !path.exists() {
            std::fs::write(path, source)?;
        }
    }
    Ok(())
}

/// Outcome of one [`set_runlevel`] call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunlevelReport {
    pub from: Runlevel,
    pub to: Runlevel,
    /// Levels entered, in order.
    pub path: Vec<Runlevel>,
    pub loaded: Vec<String>,
    pub activated: Vec<String>,
    pub removed: Vec<String>,
    pub in_service: bool,
}

struct LevelPlan {
    level: Runlevel,
    descriptors: Vec<BehaviorDescriptor>,
}

/// Reads and validates every script a transition needs before touching the
/// agent, so a bad script leaves it exactly as it was.
fn plan(agent: &Agent, levels: &[Runlevel], fresh_start: bool) -> Result<Vec<LevelPlan>, RunlevelError> {
    let mut names: HashSet<String> = if fresh_start {
        HashSet::new()
    } else {
        agent.behaviors().iter().map(|s| s.behavior.name().to_string()).collect()
    };
    let mut plans = Vec::new();
    for &level in levels {
        let descriptors = agent.scripts().load(level)?;
        for d in &descriptors {
            if level != Runlevel::L6 && !names.insert(d.name.clone()) {
                return Err(RunlevelError::Script {
                    file: level.file_name(),
                    line: 0,
                    column: 0,
                    message: format!("behavior `{}` is already loaded", d.name),
                });
            }
        }
        plans.push(LevelPlan { level, descriptors });
    }
    Ok(plans)
}

fn load(agent: &mut Agent, plan: LevelPlan, active: bool, report: &mut RunlevelReport) {
    for d in plan.descriptors {
        report.loaded.push(d.name.clone());
        if active {
            report.activated.push(d.name.clone());
            agent.activation_log.push(d.name.clone());
        }
        agent.behaviors.push(BehaviorSlot {
            behavior: d.instantiate(),
            active,
            loaded_at: plan.level,
        });
    }
}

fn activate(agent: &mut Agent, loaded_at: &[Runlevel], report: &mut RunlevelReport) {
    for slot in agent.behaviors.iter_mut() {
        if !slot.active && loaded_at.contains(&slot.loaded_at) {
            slot.active = true;
            let name = slot.behavior.name().to_string();
            report.activated.push(name.clone());
            agent.activation_log.push(name);
        }
    }
}

/// Runs the level-6 script's immediate one-shot behaviors; other
/// descriptors in it are ignored.
fn run_reboot_script(agent: &Agent, descriptors: &[BehaviorDescriptor]) {
    let mut ctx = agent.context();
    for d in descriptors {
        if d.kind == BehaviorKind::OneShot && d.trigger == Trigger::Immediate {
            let mut b = ScriptBehavior::new(d.clone());
            if let Err(e) = b.step(&mut ctx) {
                log::warn!("{}: reboot step `{}` failed: {e}", agent.id(), d.name);
            }
        } else {
            log::warn!("{}: ignoring `{}` in the reboot script", agent.id(), d.name);
        }
    }
}

/// Moves `agent` to `target` following the ladder: upward through every
/// intermediate level, downward only through the level-6 hot reboot.
pub fn set_runlevel(agent: &mut Agent, target: Runlevel) -> Result<RunlevelReport, RunlevelError> {
    let from = agent.runlevel;
    let mut report = RunlevelReport {
        from,
        to: from,
        path: Vec::new(),
        loaded: Vec::new(),
        activated: Vec::new(),
        removed: Vec::new(),
        in_service: agent.in_service,
    };
    if target == from {
        return Ok(report);
    }
    if target == Runlevel::L6 {
        let mut plans = plan(agent, &[Runlevel::L6, Runlevel::L0], true)?.into_iter();
        let reboot = plans.next().unwrap();
        let level0 = plans.next().unwrap();
        run_reboot_script(agent, &reboot.descriptors);
        report.removed = agent.behaviors.iter().map(|s| s.behavior.name().to_string()).collect();
        agent.remove_all_behaviors();
        agent.in_service = false;
        report.path.push(Runlevel::L6);
        report.path.push(Runlevel::L0);
        load(agent, level0, false, &mut report);
        agent.runlevel = Runlevel::L0;
        report.to = Runlevel::L0;
        report.in_service = false;
        log::info!("{}: hot reboot, now at level 0", agent.id());
        return Ok(report);
    }
    if target < from {
        return Err(RunlevelError::Unsupported { from, to: target });
    }
    let levels: Vec<Runlevel> = [Runlevel::L1, Runlevel::L3, Runlevel::L5]
        .into_iter()
        .filter(|l| *l > from && *l <= target)
        .collect();
    let plans = plan(agent, &levels, false)?;
    for p in plans {
        let level = p.level;
        match level {
            Runlevel::L1 => load(agent, p, false, &mut report),
            Runlevel::L3 => {
                load(agent, p, false, &mut report);
                activate(agent, &[Runlevel::L0, Runlevel::L1], &mut report);
            }
            Runlevel::L5 => {
                activate(agent, &[Runlevel::L3], &mut report);
                load(agent, p, true, &mut report);
                agent.in_service = true;
            }
            Runlevel::L0 | Runlevel::L6 => unreachable!("not part of the upward ladder"),
        }
        agent.runlevel = level;
        report.path.push(level);
        log::info!("{}: entered level {level}", agent.id());
    }
    report.to = agent.runlevel;
    report.in_service = agent.in_service;
    Ok(report)
}

/// Loads the level-0 script into a freshly registered agent.
pub fn enter_level_zero(agent: &mut Agent) -> Result<RunlevelReport, RunlevelError> {
    let mut report = RunlevelReport {
        from: Runlevel::L0,
        to: Runlevel::L0,
        path: vec![Runlevel::L0],
        loaded: Vec::new(),
        activated: Vec::new(),
        removed: Vec::new(),
        in_service: false,
    };
    let mut plans = plan(agent, &[Runlevel::L0], false)?;
    load(agent, plans.remove(0), false, &mut report);
    agent.publish_status();
    Ok(report)
}

/// A behavior driven by a [`BehaviorDescriptor`].
pub struct ScriptBehavior {
    descriptor: BehaviorDescriptor,
    next_due: Option<Instant>,
}

impl ScriptBehavior {
    pub fn new(descriptor: BehaviorDescriptor) -> Self {
        let next_due = match descriptor.trigger {
            Trigger::Every(period) => Some(Instant::now() + period),
            _ => None,
        };
        ScriptBehavior { descriptor, next_due }
    }

    fn run_steps(&self, ctx: &mut AgentContext<'_>, msg: Option<&AclMessage>, received: Instant) -> Result<(), BehaviorError> {
        for step in &self.descriptor.steps {
            match (step, msg) {
                (ScriptStep::Reply { performative, text }, Some(m)) => {
                    let reply = m.reply(ctx.id(), *performative, Content::Text(text.clone()));
                    ctx.send(reply).map_err(|e| BehaviorError(e.to_string()))?;
                }
                (ScriptStep::ForwardToEngine, Some(m)) => {
                    handle_external_request(ctx, m, received)?;
                }
                (ScriptStep::ExecuteInline, Some(m)) => {
                    execute_inline(ctx, m, received)?;
                }
                (ScriptStep::Send { to, performative, ontology, text }, _) => {
                    let to = AgentId::new(to.clone()).map_err(|e| BehaviorError(e.to_string()))?;
                    let msg = AclMessage::new(*performative, ctx.id().clone(), to, ontology.clone(), Content::Text(text.clone()));
                    ctx.send(msg).map_err(|e| BehaviorError(e.to_string()))?;
                }
                (ScriptStep::SetRunlevel(level), _) => ctx.request_runlevel(*level),
                (_, None) => return Err(BehaviorError(format!("{step:?} needs a triggering message"))),
            }
        }
        Ok(())
    }

    fn finish(&self) -> Step {
        if self.descriptor.kind == BehaviorKind::OneShot {
            Step::Done
        } else {
            Step::Progress
        }
    }
}

impl Behavior for ScriptBehavior {
    fn name(&self) -> &str {
        &self.descriptor.name
    }

    fn kind(&self) -> BehaviorKind {
        self.descriptor.kind
    }

    fn step(&mut self, ctx: &mut AgentContext<'_>) -> Result<Step, BehaviorError> {
        match &self.descriptor.trigger {
            Trigger::Message(tpl) => {
                let Some(msg) = ctx.receive(tpl) else {
                    return Ok(Step::Idle);
                };
                self.run_steps(ctx, Some(&msg), Instant::now())?;
                Ok(self.finish())
            }
            Trigger::Every(period) => {
                let now = Instant::now();
                let due = self.next_due.unwrap_or(now);
                if now < due {
                    return Ok(Step::Idle);
                }
                self.next_due = Some(now.max(due + *period));
                self.run_steps(ctx, None, now)?;
                Ok(self.finish())
            }
            Trigger::Immediate => {
                self.run_steps(ctx, None, Instant::now())?;
                Ok(Step::Done)
            }
        }
    }

    fn next_deadline(&self) -> Option<Instant> {
        self.next_due
    }
}
