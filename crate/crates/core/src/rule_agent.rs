//! The rule-based agent: request acceptance, the engine FSM that runs jobs on
//! a detached thread, the inline (blocking) baseline, and the mapping from
//! action codes to engine calls.

use std::path::{Component, Path, PathBuf};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use crate::engine::{RuleEngine, RunLimit, Snapshot, SnapshotFormat, WatchCategory};
use crate::messaging::{
    new_reply_token, now_unix_ms, AclMessage, ActionCode, AgentId, Content, EngineAction,
    PendingJob, Performative, ProtocolTiming, ResultPayload, RBE_ONTOLOGY,
};
use crate::runtime::{
    AgentContext, Behavior, BehaviorError, BehaviorKind, EngineLease, ReceiveTemplate, Step,
};
use crate::messaging::ContentKind;

/// Resources available to LOAD_FROM_RESOURCE without touching the disk.
const BUILTIN_RESOURCES: &[(&str, &str)] = &[(
    "traffic-light.clp-mini",
    include_str!("../data/resources/traffic-light.clp-mini"),
)];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("PATH_ERROR: {0}")]
pub struct PathError(pub String);

/// Resolves `relative` inside `root`, rejecting absolute paths and any `..`
/// component.
pub fn resolve_sandbox_path(root: &Path, relative: &str) -> Result<PathBuf, PathError> {
    let rel = Path::new(relative);
    if relative.is_empty() {
        return Err(PathError("empty path".into()));
    }
    for component in rel.components() {
        match component {
            Component::Normal(_) | Component::CurDir => {}
            _ => return Err(PathError(format!("`{relative}` leaves the sandbox"))),
        }
    }
    Ok(root.join(rel))
}

/// Where file-based actions may read and write.
#[derive(Debug, Clone, Default)]
pub struct DispatchEnv {
    pub files_root: Option<PathBuf>,
}

impl DispatchEnv {
    pub fn new(files_root: Option<PathBuf>) -> Self {
        DispatchEnv { files_root }
    }

    fn path(&self, relative: &str) -> Result<PathBuf, String> {
        let root = self
            .files_root
            .as_ref()
            .ok_or_else(|| "PATH_ERROR: this agent has no file directory".to_string())?;
        resolve_sandbox_path(root, relative).map_err(|e| e.to_string())
    }

    fn read_text(&self, relative: &str) -> Result<String, String> {
        let path = self.path(relative)?;
        std::fs::read_to_string(&path).map_err(|e| format!("IO_ERROR: {}: {e}", path.display()))
    }

    fn read_bytes(&self, relative: &str) -> Result<Vec<u8>, String> {
        let path = self.path(relative)?;
        std::fs::read(&path).map_err(|e| format!("IO_ERROR: {}: {e}", path.display()))
    }

    fn resource(&self, name: &str) -> Result<String, String> {
        if let Some((_, text)) = BUILTIN_RESOURCES.iter().find(|(n, _)| *n == name) {
            return Ok(text.to_string());
        }
        self.read_text(&format!("resources/{name}"))
    }
}

fn fired_line(out: &mut String, fired: usize) {
    out.push_str(&format!("{fired} rules fired\n"));
}

fn non_negative(action: &EngineAction, position: usize) -> Result<usize, String> {
    let value = action.int_param(position);
    usize::try_from(value).map_err(|_| {
        format!(
            "BAD_PARAM: {} expects a non-negative integer, got {value}",
            action.code
        )
    })
}

fn dispatch_inner(action: &EngineAction, engine: &mut dyn RuleEngine, env: &DispatchEnv) -> Result<String, String> {
    let p = |i: usize| action.params[i].as_str();
    let engine_err = |e: crate::engine::EngineError| e.to_string();
    let mut out = String::new();
    match action.code {
        ActionCode::LoadFile => {
            let source = env.read_text(p(0))?;
            let n = engine.load_program(&source).map_err(engine_err)?;
            out.push_str(&format!("loaded {n} constructs\n"));
        }
        ActionCode::LoadFacts => {
            let source = env.read_text(p(0))?;
            let n = engine.assert_facts(&source).map_err(engine_err)?;
            out.push_str(&format!("asserted {n} facts\n"));
        }
        ActionCode::LoadFromResource => {
            let source = env.resource(p(0))?;
            let n = engine.load_program(&source).map_err(engine_err)?;
            out.push_str(&format!("loaded {n} constructs\n"));
        }
        ActionCode::LoadFromString => {
            let n = engine.load_program(p(0)).map_err(engine_err)?;
            out.push_str(&format!("loaded {n} constructs\n"));
        }
        ActionCode::LoadAssertString => {
            let n = engine.assert_facts(p(0)).map_err(engine_err)?;
            out.push_str(&format!("asserted {n} facts\n"));
        }
        ActionCode::LoadBload | ActionCode::LoadSload => {
            let format = if action.code == ActionCode::LoadBload {
                SnapshotFormat::Binary
            } else {
                SnapshotFormat::Text
            };
            let payload = env.read_bytes(p(0))?;
            engine
                .restore(&Snapshot { format, payload })
                .map_err(engine_err)?;
            out.push_str(&format!("restored {}\n", p(0)));
        }
        ActionCode::RunInfinitely | ActionCode::RunNumberOfCycles | ActionCode::RunOnceThenBatch => {
            let limit = match action.code {
                ActionCode::RunInfinitely => RunLimit::Unbounded,
                ActionCode::RunNumberOfCycles => RunLimit::Cycles(non_negative(action, 0)?),
                _ => RunLimit::Cycles(1),
            };
            let result = engine.run(limit);
            out.push_str(&engine.take_output());
            let fired = result.map_err(|e| format!("{out}{e}"))?;
            fired_line(&mut out, fired);
        }
        ActionCode::RunInnerShell => {
            return Err("DEV_ONLY: the inner shell is reachable only from the gateway's synchronous shell".into());
        }
        ActionCode::MakeReset => {
            engine.reset();
            out.push_str("reset\n");
        }
        ActionCode::MakeClear => {
            engine.clear();
            out.push_str("cleared\n");
        }
        ActionCode::MakeMemoryDump => {
            let path = env.path(p(0))?;
            let snapshot = engine.snapshot(SnapshotFormat::for_path(p(0)));
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir).map_err(|e| format!("IO_ERROR: {e}"))?;
            }
            std::fs::write(&path, &snapshot.payload).map_err(|e| format!("IO_ERROR: {}: {e}", path.display()))?;
            out.push_str(&format!("wrote {} bytes to {}\n", snapshot.payload.len(), p(0)));
        }
        ActionCode::MakeAssertString => match engine.assert_string(p(0)).map_err(engine_err)? {
            Some(i) => out.push_str(&format!("<Fact-{i}>\n")),
            None => out.push_str("FALSE\n"),
        },
        ActionCode::MakeBuild => {
            engine.build(p(0)).map_err(engine_err)?;
            out.push_str("built\n");
        }
        ActionCode::EvalCommand => out.push_str(&engine.eval(p(0)).map_err(engine_err)?),
        ActionCode::SetInputBufferCount => {
            out.push_str(&format!("{}\n", engine.input_buffer().len()));
        }
        ActionCode::AppendInputBuffer => {
            engine.append_input_buffer(p(0));
            out.push_str(&format!("{}\n", engine.input_buffer().len()));
        }
        ActionCode::SetWatch | ActionCode::SetUnwatch => {
            let enabled = action.code == ActionCode::SetWatch;
            for category in WatchCategory::parse_list(p(0)).map_err(engine_err)? {
                engine.set_watch(category, enabled);
            }
            let verb = if enabled { "watching" } else { "not watching" };
            out.push_str(&format!("{verb} {}\n", p(0).trim()));
        }
        ActionCode::GetFactSlot => {
            let fact = non_negative(action, 0)?;
            let slot = non_negative(action, 1)?;
            let atom = engine.fact_slot(fact, slot).map_err(engine_err)?;
            out.push_str(&format!("{atom}\n"));
        }
        ActionCode::FactIndex => {
            let index = engine.move_cursor(action.int_param(0)).map_err(engine_err)?;
            out.push_str(&format!("f-{index}\n"));
        }
    }
    let pending = engine.take_output();
    if !pending.is_empty() {
        out.insert_str(0, &pending);
    }
    Ok(out)
}

/// Executes one action against `engine` and packages the console output.
/// Engine errors become an ERROR payload carrying the diagnostic.
pub fn dispatch_action(action: &EngineAction, engine: &mut dyn RuleEngine, env: &DispatchEnv) -> ResultPayload {
    let start = Instant::now();
    let result = dispatch_inner(action, engine, env);
    let elapsed_ms = start.elapsed().as_millis() as u64;
    match result {
        Ok(output) => ResultPayload::ok(output, elapsed_ms),
        Err(diagnostic) => ResultPayload::error(diagnostic, elapsed_ms),
    }
}

/// Why a request for engine work was turned down.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Refusal {
    DevOnly,
    Unauthorized,
    NoEngine,
}

impl Refusal {
    pub fn reason(&self) -> &'static str {
        match self {
            Refusal::DevOnly => "DEV_ONLY",
            Refusal::Unauthorized => "UNAUTHORIZED",
            Refusal::NoEngine => "NO_ENGINE",
        }
    }
}

/// The acceptance test: the sender must belong to the platform, the action
/// must be remotely permitted, and the agent must own an engine.
pub fn check_request(ctx: &AgentContext<'_>, sender: &AgentId, action: &EngineAction) -> Result<(), Refusal> {
    if !ctx.platform().is_member(sender) {
        return Err(Refusal::Unauthorized);
    }
    if action.code == ActionCode::RunInnerShell {
        return Err(Refusal::DevOnly);
    }
    if ctx.engine().is_none() {
        return Err(Refusal::NoEngine);
    }
    Ok(())
}

fn refuse(ctx: &AgentContext<'_>, msg: &AclMessage, refusal: Refusal) -> Result<(), BehaviorError> {
    let text = match refusal {
        Refusal::DevOnly => "DEV_ONLY: RUN_INNER_SHELL is not accepted from other agents".to_string(),
        Refusal::Unauthorized => format!("UNAUTHORIZED: {} is not a platform agent", msg.sender),
        Refusal::NoEngine => "NO_ENGINE: this agent has no rule engine".to_string(),
    };
    send(ctx, msg.reply(ctx.id(), Performative::Refuse, Content::Text(text)))
}

fn send(ctx: &AgentContext<'_>, msg: AclMessage) -> Result<(), BehaviorError> {
    ctx.send(msg).map(|_| ()).map_err(|e| BehaviorError(e.to_string()))
}

/// Template of external engine requests: REQUEST/rbe-actions carrying an action.
pub fn engine_request_template() -> ReceiveTemplate {
    ReceiveTemplate::any()
        .performative(Performative::Request)
        .ontology(RBE_ONTOLOGY)
        .content(ContentKind::Action)
}

/// Template of the self-addressed job messages consumed by [`EngineFsm`].
pub fn job_template() -> ReceiveTemplate {
    ReceiveTemplate::any()
        .performative(Performative::Request)
        .ontology(RBE_ONTOLOGY)
        .content(ContentKind::Job)
}

/// First loop of the twofold protocol. Replies AGREE or REFUSE to the
/// sender and, on acceptance, sends the agent itself a REQUEST carrying the
/// action plus the job metadata. `received` is when the request was taken
/// from the queue; the capture-loop duration runs from there to the
/// self-addressed send.
pub fn handle_external_request(ctx: &AgentContext<'_>, msg: &AclMessage, received: Instant) -> Result<bool, BehaviorError> {
    let Content::Action(action) = &msg.content else {
        send(
            ctx,
            msg.reply(
                ctx.id(),
                Performative::NotUnderstood,
                Content::Text("expected an engine action".into()),
            ),
        )?;
        return Ok(false);
    };
    if let Err(refusal) = check_request(ctx, &msg.sender, action) {
        refuse(ctx, msg, refusal)?;
        return Ok(false);
    }
    send(
        ctx,
        msg.reply(ctx.id(), Performative::Agree, Content::Text(action.code.to_string())),
    )?;
    let mut job = PendingJob {
        conversation_id: msg.conversation_id.clone(),
        origin: msg.sender.clone(),
        reply_with: msg.reply_with.clone(),
        action: action.clone(),
        enqueued_at_ms: now_unix_ms(),
        t_e_us: 0,
    };
    let me = ctx.id().clone();
    let mut self_msg = AclMessage::new(Performative::Request, me.clone(), me, RBE_ONTOLOGY, Content::Text(String::new()));
    self_msg.conversation_id = msg.conversation_id.clone();
    self_msg.reply_with = Some(new_reply_token());
    job.t_e_us = received.elapsed().as_micros() as u64;
    self_msg.content = Content::Job(job);
    send(ctx, self_msg)?;
    Ok(true)
}

/// Builds the terminal INFORM/FAILURE for a finished job.
pub fn job_response(from: &AgentId, job: &PendingJob, mut result: ResultPayload, timing: ProtocolTiming) -> AclMessage {
    result.timing = Some(timing);
    let performative = if result.is_ok() {
        Performative::Inform
    } else {
        Performative::Failure
    };
    AclMessage {
        performative,
        sender: from.clone(),
        receivers: vec![job.origin.clone()],
        conversation_id: job.conversation_id.clone(),
        reply_with: None,
        in_reply_to: job.reply_with.clone(),
        ontology: RBE_ONTOLOGY.to_string(),
        content: Content::Result(result),
    }
}

/// Cyclic behavior running the first protocol loop on every external engine
/// request.
pub struct RequestAcceptor {
    name: String,
    template: ReceiveTemplate,
}

impl RequestAcceptor {
    pub fn new(name: impl Into<String>) -> Self {
        RequestAcceptor {
            name: name.into(),
            template: engine_request_template(),
        }
    }
}

impl Behavior for RequestAcceptor {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> BehaviorKind {
        BehaviorKind::Cyclic
    }

    fn step(&mut self, ctx: &mut AgentContext<'_>) -> Result<Step, BehaviorError> {
        match ctx.receive(&self.template) {
            Some(msg) => {
                handle_external_request(ctx, &msg, Instant::now())?;
                Ok(Step::Progress)
            }
            None => Ok(Step::Idle),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsmState {
    Listening,
    Execution,
    Response,
}

impl FsmState {
    pub fn as_str(self) -> &'static str {
        match self {
            FsmState::Listening => "LISTENING",
            FsmState::Execution => "EXECUTION",
            FsmState::Response => "RESPONSE",
        }
    }
}

/// Detached jobs yield the CPU to message handling: on a busy or single
/// core machine the agent's own thread must win every wake-up. SCHED_IDLE
/// gives that (a normal thread waking up always preempts it); the nice
/// value is the fallback where the policy change is refused.
#[cfg(target_os = "linux")]
fn lower_current_thread_priority() {
    // SAFETY: plain syscalls on the calling thread's own id.
    unsafe {
        let param = libc::sched_param { sched_priority: 0 };
        if libc::sched_setscheduler(0, libc::SCHED_IDLE, &param) == 0 {
            return;
        }
        let tid = libc::syscall(libc::SYS_gettid) as libc::id_t;
        if libc::setpriority(libc::PRIO_PROCESS, tid, 19) != 0 {
            log::debug!("could not lower job thread priority: {}", std::io::Error::last_os_error());
        }
    }
}

#[cfg(not(target_os = "linux"))]
fn lower_current_thread_priority() {}

struct RunningJob {
    job: PendingJob,
    outcome: mpsc::Receiver<(ResultPayload, u64)>,
}

/// Second protocol loop. LISTENING takes the next self-addressed job;
/// EXECUTION lends the engine to a detached thread and yields until it
/// reports back; RESPONSE sends INFORM/FAILURE to the job's origin.
pub struct EngineFsm {
    name: String,
    state: FsmState,
    template: ReceiveTemplate,
    held: Option<(PendingJob, Instant)>,
    running: Option<RunningJob>,
    finished: Option<(PendingJob, ResultPayload, ProtocolTiming)>,
}

impl EngineFsm {
    pub fn new(name: impl Into<String>) -> Self {
        EngineFsm {
            name: name.into(),
            state: FsmState::Listening,
            template: job_template(),
            held: None,
            running: None,
            finished: None,
        }
    }

    pub fn state(&self) -> FsmState {
        self.state
    }

    fn launch(ctx: &AgentContext<'_>, lease: EngineLease, job: &PendingJob, dequeued: Instant) -> mpsc::Receiver<(ResultPayload, u64)> {
        let (tx, rx) = mpsc::channel();
        let action = job.action.clone();
        let env = DispatchEnv::new(ctx.agent().files_root().cloned());
        let spawned = std::thread::Builder::new()
            .name(format!("engine-job-{}", ctx.id().name))
            .spawn(move || {
                lower_current_thread_priority();
                let mut lease = lease;
                let result = dispatch_action(&action, &mut *lease, &env);
                let t_p_us = dequeued.elapsed().as_micros() as u64;
                let _ = tx.send((result, t_p_us));
                // dropping the lease hands the engine back and wakes the agent
                drop(lease);
            });
        if let Err(e) = spawned {
            log::error!("could not spawn engine job thread: {e}");
        }
        rx
    }

    fn respond(&mut self, ctx: &AgentContext<'_>) -> Result<(), BehaviorError> {
        if let Some((job, result, timing)) = self.finished.take() {
            send(ctx, job_response(ctx.id(), &job, result, timing))?;
        }
        self.state = FsmState::Listening;
        Ok(())
    }

    fn collect(&mut self, outcome: Result<(ResultPayload, u64), ()>) {
        let running = self.running.take().expect("collect only while executing");
        let (result, t_p_us) = outcome.unwrap_or_else(|()| {
            (ResultPayload::error("ENGINE_ERROR: the job thread terminated abnormally", 0), 0)
        });
        let timing = ProtocolTiming {
            t_e_us: running.job.t_e_us,
            t_p_us,
        };
        self.finished = Some((running.job, result, timing));
        self.state = FsmState::Response;
    }
}

impl Behavior for EngineFsm {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> BehaviorKind {
        BehaviorKind::Fsm
    }

    fn step(&mut self, ctx: &mut AgentContext<'_>) -> Result<Step, BehaviorError> {
        match self.state {
            FsmState::Listening => {
                let Some(cell) = ctx.engine().cloned() else {
                    return Err(BehaviorError("engine FSM on an agent without an engine".into()));
                };
                if self.held.is_none() {
                    if cell.is_busy() {
                        return Ok(Step::Idle);
                    }
                    let Some(msg) = ctx.receive(&self.template) else {
                        return Ok(Step::Idle);
                    };
                    let Content::Job(job) = msg.content else {
                        unreachable!("template only matches job content");
                    };
                    self.held = Some((job, Instant::now()));
                }
                let Ok(lease) = cell.checkout() else {
                    return Ok(Step::Idle);
                };
                let (job, dequeued) = self.held.take().unwrap();
                let outcome = Self::launch(ctx, lease, &job, dequeued);
                self.running = Some(RunningJob { job, outcome });
                self.state = FsmState::Execution;
                Ok(Step::Progress)
            }
            FsmState::Execution => {
                let running = self.running.as_ref().expect("executing without a job");
                match running.outcome.try_recv() {
                    Ok(done) => self.collect(Ok(done)),
                    Err(mpsc::TryRecvError::Empty) => return Ok(Step::Idle),
                    Err(mpsc::TryRecvError::Disconnected) => self.collect(Err(())),
                }
                Ok(Step::Progress)
            }
            FsmState::Response => {
                self.respond(ctx)?;
                Ok(Step::Progress)
            }
        }
    }

    /// A job that is already running is allowed to finish and its result is
    /// still delivered.
    fn stop(&mut self, ctx: &mut AgentContext<'_>) {
        if let Some(running) = self.running.as_ref() {
            let outcome = running.outcome.recv().map_err(|_| ());
            self.collect(outcome);
        }
        if self.state == FsmState::Response {
            if let Err(e) = self.respond(ctx) {
                log::warn!("{}: could not deliver final result: {e}", ctx.id());
            }
        }
    }

    fn state_label(&self) -> Option<String> {
        Some(self.state.as_str().to_string())
    }
}

/// Baseline that accepts a request and runs it on the agent's own thread,
/// holding up every other behavior until the engine returns.
pub fn execute_inline(ctx: &AgentContext<'_>, msg: &AclMessage, received: Instant) -> Result<bool, BehaviorError> {
    let Content::Action(action) = &msg.content else {
        send(
            ctx,
            msg.reply(
                ctx.id(),
                Performative::NotUnderstood,
                Content::Text("expected an engine action".into()),
            ),
        )?;
        return Ok(false);
    };
    if let Err(refusal) = check_request(ctx, &msg.sender, action) {
        refuse(ctx, msg, refusal)?;
        return Ok(false);
    }
    send(
        ctx,
        msg.reply(ctx.id(), Performative::Agree, Content::Text(action.code.to_string())),
    )?;
    let job = PendingJob {
        conversation_id: msg.conversation_id.clone(),
        origin: msg.sender.clone(),
        reply_with: msg.reply_with.clone(),
        action: action.clone(),
        enqueued_at_ms: now_unix_ms(),
        t_e_us: received.elapsed().as_micros() as u64,
    };
    let cell = ctx.engine().expect("checked above").clone();
    let (result, t_p_us) = match cell.checkout() {
        Ok(mut lease) => {
            let start = Instant::now();
            let env = DispatchEnv::new(ctx.agent().files_root().cloned());
            let result = dispatch_action(action, &mut *lease, &env);
            (result, start.elapsed().as_micros() as u64)
        }
        Err(busy) => (ResultPayload::error(busy.to_string(), 0), 0),
    };
    let timing = ProtocolTiming {
        t_e_us: job.t_e_us,
        t_p_us,
    };
    send(ctx, job_response(ctx.id(), &job, result, timing))?;
    Ok(true)
}

/// Cyclic behavior wrapping [`execute_inline`].
pub struct InlineEngineBehavior {
    name: String,
    template: ReceiveTemplate,
}

impl InlineEngineBehavior {
    pub fn new(name: impl Into<String>) -> Self {
        InlineEngineBehavior {
            name: name.into(),
            template: engine_request_template(),
        }
    }
}

impl Behavior for InlineEngineBehavior {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> BehaviorKind {
        BehaviorKind::Cyclic
    }

    fn step(&mut self, ctx: &mut AgentContext<'_>) -> Result<Step, BehaviorError> {
        match ctx.receive(&self.template) {
            Some(msg) => {
                execute_inline(ctx, &msg, Instant::now())?;
                Ok(Step::Progress)
            }
            None => Ok(Step::Idle),
        }
    }
}

/// Which engine integration an agent runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    NonBlocking,
    Blocking,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::NonBlocking => "nonblocking",
            Variant::Blocking => "blocking",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nonblocking" => Ok(Variant::NonBlocking),
            "blocking" => Ok(Variant::Blocking),
            other => Err(format!("unknown variant `{other}` (nonblocking|blocking)")),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Waits up to `timeout` for the terminal INFORM/FAILURE of `conversation_id`
/// in `agent`'s queue. Intermediate AGREE replies are left queued.
pub fn await_result(agent: &crate::runtime::AgentShared, conversation_id: &str, timeout: Duration) -> Option<AclMessage> {
    let deadline = Instant::now() + timeout;
    let tpl = ReceiveTemplate::any()
        .conversation(conversation_id)
        .content(ContentKind::Result);
    agent.receive_matching(&tpl, deadline.saturating_duration_since(Instant::now()))
}

#[derive(Debug, thiserror::Error)]
pub enum LaunchError {
    #[error(transparent)]
    Runtime(#[from] crate::runtime::RuntimeError),
    #[error(transparent)]
    Runlevel(#[from] crate::runlevels::RunlevelError),
}

/// Settings for [`launch`].
#[derive(Debug, Clone)]
pub struct RuleAgentConfig {
    pub name: String,
    pub variant: Variant,
    /// `None` uses the built-in scripts for `variant`.
    pub scripts: Option<crate::runlevels::ScriptSet>,
    pub files_root: Option<PathBuf>,
    pub start_level: crate::runlevels::Runlevel,
}

impl RuleAgentConfig {
    pub fn new(name: impl Into<String>, variant: Variant) -> Self {
        RuleAgentConfig {
            name: name.into(),
            variant,
            scripts: None,
            files_root: None,
            start_level: crate::runlevels::Runlevel::L5,
        }
    }
}

/// Registers a rule-based agent with a fresh reference engine, loads level 0,
/// climbs to `start_level` and starts its scheduler thread.
pub fn launch(platform: &crate::runtime::Platform, config: RuleAgentConfig) -> Result<crate::runtime::AgentHandle, LaunchError> {
    use crate::runlevels::{enter_level_zero, Runlevel, ScriptSet};
    let id = AgentId::new(config.name).map_err(crate::runtime::RuntimeError::from)?;
    let scripts = config.scripts.unwrap_or_else(|| ScriptSet::defaults(config.variant));
    let mut agent = platform.register_agent_with(
        id,
        Some(Box::new(crate::engine::ReferenceEngine::new())),
        scripts,
        config.files_root,
    )?;
    let name = agent.id().name.clone();
    let prepared = enter_level_zero(&mut agent).and_then(|_| {
        if config.start_level != Runlevel::L0 {
            agent.set_runlevel(config.start_level)?;
        }
        Ok(())
    });
    if let Err(e) = prepared {
        let _ = platform.deregister(&name);
        return Err(e.into());
    }
    Ok(agent.start())
}
