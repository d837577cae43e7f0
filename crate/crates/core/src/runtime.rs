//! Agent platform: directory, message routing (in-process and TCP), per-agent
//! mailboxes with template-matched receive, and the behavior scheduler.
//!
//! Every agent runs its behaviors on one scheduler thread. A round steps each
//! active behavior once, in order; when a whole round makes no progress the
//! thread sleeps until a message, a control request, a job completion or a
//! behavior timer wakes it.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::io::{BufRead, BufReader, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{mpsc, Arc, Condvar, Mutex, RwLock};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use crate::engine::{ReferenceEngine, RuleEngine};
use crate::messaging::{
    self, decode_message, encode_message, AclMessage, AgentId, Content, ContentKind,
    MessagingError, Performative, DIRECTORY_ONTOLOGY,
};
use crate::runlevels::{self, Runlevel, RunlevelError, RunlevelReport, ScriptSet};
use crate::trace::{Direction, TraceBus};

/// Reserved name of the directory service agent.
pub const DIRECTORY_AGENT: &str = "platform.directory";
pub const DEFAULT_PLATFORM_PORT: u16 = 7601;
pub const PORT_ENV_VAR: &str = "RS_PLATFORM_PORT";

/// Base TCP port for platform nodes, from `RS_PLATFORM_PORT` or 7601.
pub fn platform_port() -> u16 {
    std::env::var(PORT_ENV_VAR)
        .ok()
        .and_then(|p| p.parse().ok())
        .unwrap_or(DEFAULT_PLATFORM_PORT)
}

#[derive(Debug, thiserror::Error)]
pub enum RuntimeError {
    #[error("DUPLICATE_AGENT: {0}")]
    DuplicateAgent(String),
    #[error("UNKNOWN_AGENT: {0}")]
    UnknownAgent(String),
    #[error(transparent)]
    Message(#[from] MessagingError),
    #[error("IO_ERROR: {0}")]
    Io(#[from] std::io::Error),
    #[error("AGENT_STOPPED: {0}")]
    Stopped(String),
}

impl RuntimeError {
    pub fn kind(&self) -> &'static str {
        match self {
            RuntimeError::DuplicateAgent(_) => "DUPLICATE_AGENT",
            RuntimeError::UnknownAgent(_) => "UNKNOWN_AGENT",
            RuntimeError::Message(e) => e.kind(),
            RuntimeError::Io(_) => "IO_ERROR",
            RuntimeError::Stopped(_) => "AGENT_STOPPED",
        }
    }
}

/// Selective-receive filter. Unset fields match anything.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReceiveTemplate {
    pub performative: Option<Performative>,
    pub ontology: Option<String>,
    pub conversation_id: Option<String>,
    pub in_reply_to: Option<String>,
    pub content_kind: Option<ContentKind>,
}

impl ReceiveTemplate {
    pub fn any() -> Self {
        ReceiveTemplate::default()
    }

    pub fn performative(mut self, p: Performative) -> Self {
        self.performative = Some(p);
        self
    }

    pub fn ontology(mut self, o: impl Into<String>) -> Self {
        self.ontology = Some(o.into());
        self
    }

    pub fn conversation(mut self, c: impl Into<String>) -> Self {
        self.conversation_id = Some(c.into());
        self
    }

    pub fn in_reply_to(mut self, r: impl Into<String>) -> Self {
        self.in_reply_to = Some(r.into());
        self
    }

    pub fn content(mut self, k: ContentKind) -> Self {
        self.content_kind = Some(k);
        self
    }

    pub fn matches(&self, msg: &AclMessage) -> bool {
        self.performative.is_none_or(|p| p == msg.performative)
            && self.ontology.as_ref().is_none_or(|o| *o == msg.ontology)
            && self
                .conversation_id
                .as_ref()
                .is_none_or(|c| *c == msg.conversation_id)
            && self
                .in_reply_to
                .as_ref()
                .is_none_or(|r| msg.in_reply_to.as_ref() == Some(r))
            && self.content_kind.is_none_or(|k| k == msg.content.kind())
    }
}

#[derive(Debug, Default)]
struct MailboxState {
    queue: VecDeque<AclMessage>,
    generation: u64,
}

/// FIFO message queue shared between an agent and every sender.
#[derive(Debug, Default)]
pub struct Mailbox {
    state: Mutex<MailboxState>,
    ready: Condvar,
}

impl Mailbox {
    pub fn push(&self, msg: AclMessage) {
        let mut st = self.state.lock().unwrap();
        st.queue.push_back(msg);
        st.generation += 1;
        self.ready.notify_all();
    }

    /// Wakes the owning scheduler without enqueuing anything.
    pub fn wake(&self) {
        let mut st = self.state.lock().unwrap();
        st.generation += 1;
        self.ready.notify_all();
    }

    pub fn generation(&self) -> u64 {
        self.state.lock().unwrap().generation
    }

    pub fn len(&self) -> usize {
        self.state.lock().unwrap().queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot(&self) -> Vec<AclMessage> {
        self.state.lock().unwrap().queue.iter().cloned().collect()
    }

    /// Removes the oldest message matching `template`, leaving the rest in order.
    pub fn take_matching(&self, template: &ReceiveTemplate) -> Option<AclMessage> {
        let mut st = self.state.lock().unwrap();
        let pos = st.queue.iter().position(|m| template.matches(m))?;
        st.queue.remove(pos)
    }

    pub fn receive_matching(&self, template: &ReceiveTemplate, timeout: Duration) -> Option<AclMessage> {
        let deadline = Instant::now() + timeout;
        let mut st = self.state.lock().unwrap();
        loop {
            if let Some(pos) = st.queue.iter().position(|m| template.matches(m)) {
                return st.queue.remove(pos);
            }
            let now = Instant::now();
            if now >= deadline {
                return None;
            }
            st = self.ready.wait_timeout(st, deadline - now).unwrap().0;
        }
    }

    /// Blocks until the generation moves past `seen` or `deadline` passes.
    pub fn wait_for_change(&self, seen: u64, deadline: Option<Instant>) {
        let mut st = self.state.lock().unwrap();
        while st.generation == seen {
            match deadline {
                None => st = self.ready.wait(st).unwrap(),
                Some(d) => {
                    let now = Instant::now();
                    if now >= d {
                        return;
                    }
                    st = self.ready.wait_timeout(st, d - now).unwrap().0;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("ENGINE_BUSY: the rule engine is executing a job")]
pub struct EngineBusy;

type Waker = Box<dyn Fn() + Send + Sync>;

/// Holder of an agent's single rule engine. The engine is lent out as an
/// [`EngineLease`] for the duration of one job and comes back when the lease
/// is dropped.
pub struct EngineCell {
    slot: Mutex<Option<Box<dyn RuleEngine>>>,
    in_use: AtomicBool,
    overlaps: AtomicUsize,
    leases: AtomicU64,
    on_release: Mutex<Option<Waker>>,
}

impl std::fmt::Debug for EngineCell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EngineCell")
            .field("in_use", &self.in_use.load(Ordering::SeqCst))
            .field("overlaps", &self.overlaps.load(Ordering::SeqCst))
            .finish()
    }
}

impl EngineCell {
    pub fn new(engine: Box<dyn RuleEngine>) -> Arc<Self> {
        Arc::new(EngineCell {
            slot: Mutex::new(Some(engine)),
            in_use: AtomicBool::new(false),
            overlaps: AtomicUsize::new(0),
            leases: AtomicU64::new(0),
            on_release: Mutex::new(None),
        })
    }

    pub fn checkout(self: &Arc<Self>) -> Result<EngineLease, EngineBusy> {
        let engine = self.slot.lock().unwrap().take().ok_or(EngineBusy)?;
        if self.in_use.swap(true, Ordering::SeqCst) {
            self.overlaps.fetch_add(1, Ordering::SeqCst);
        }
        self.leases.fetch_add(1, Ordering::Relaxed);
        Ok(EngineLease {
            cell: self.clone(),
            engine: Some(engine),
        })
    }

    pub fn is_busy(&self) -> bool {
        self.slot.lock().unwrap().is_none()
    }

    /// Number of times the in-use flag was found already set on checkout.
    pub fn overlaps(&self) -> usize {
        self.overlaps.load(Ordering::SeqCst)
    }

    pub fn leases(&self) -> u64 {
        self.leases.load(Ordering::Relaxed)
    }

    fn set_release_waker(&self, waker: Waker) {
        *self.on_release.lock().unwrap() = Some(waker);
    }
}

pub struct EngineLease {
    cell: Arc<EngineCell>,
    engine: Option<Box<dyn RuleEngine>>,
}

impl std::ops::Deref for EngineLease {
    type Target = dyn RuleEngine;

    fn deref(&self) -> &Self::Target {
        self.engine.as_deref().expect("lease holds the engine until dropped")
    }
}

impl std::ops::DerefMut for EngineLease {
    fn deref_mut(&mut self) -> &mut Self::Target {
        self.engine.as_deref_mut().expect("lease holds the engine until dropped")
    }
}

impl Drop for EngineLease {
    fn drop(&mut self) {
        let engine = self.engine.take();
        self.cell.in_use.store(false, Ordering::SeqCst);
        *self.cell.slot.lock().unwrap() = engine;
        if let Some(wake) = self.cell.on_release.lock().unwrap().as_ref() {
            wake();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BehaviorKind {
    OneShot,
    Cyclic,
    Fsm,
}

impl BehaviorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BehaviorKind::OneShot => "one-shot",
            BehaviorKind::Cyclic => "cyclic",
            BehaviorKind::Fsm => "fsm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    /// Did some work; the scheduler will not sleep after this round.
    Progress,
    /// Nothing to do until something changes.
    Idle,
    /// Finished; remove the behavior.
    Done,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct BehaviorError(pub String);

/// A unit of agent activity, stepped non-preemptively by the scheduler.
/// A step must return quickly; long work belongs in a detached context.
pub trait Behavior: Send {
    fn name(&self) -> &str;

    fn kind(&self) -> BehaviorKind;

    fn step(&mut self, ctx: &mut AgentContext<'_>) -> Result<Step, BehaviorError>;

    /// Earliest instant this behavior wants to be stepped again while idle.
    fn next_deadline(&self) -> Option<Instant> {
        None
    }

    /// Called once when the behavior is removed from a running agent.
    fn stop(&mut self, _ctx: &mut AgentContext<'_>) {}

    /// Current state name, for FSM-like behaviors.
    fn state_label(&self) -> Option<String> {
        None
    }
}

/// What a behavior sees of its agent during a step.
pub struct AgentContext<'a> {
    shared: &'a Arc<AgentShared>,
    platform: &'a Platform,
    runlevel_request: Option<Runlevel>,
}

impl<'a> AgentContext<'a> {
    pub fn new(shared: &'a Arc<AgentShared>, platform: &'a Platform) -> Self {
        AgentContext {
            shared,
            platform,
            runlevel_request: None,
        }
    }

    pub fn id(&self) -> &AgentId {
        &self.shared.id
    }

    pub fn agent(&self) -> &Arc<AgentShared> {
        self.shared
    }

    pub fn platform(&self) -> &Platform {
        self.platform
    }

    pub fn send(&self, msg: AclMessage) -> Result<Delivery, RuntimeError> {
        self.platform.send(msg)
    }

    pub fn receive(&self, template: &ReceiveTemplate) -> Option<AclMessage> {
        self.shared.mailbox.take_matching(template)
    }

    pub fn engine(&self) -> Option<&Arc<EngineCell>> {
        self.shared.engine.as_ref()
    }

    /// Asks for a runlevel transition once the current round finishes.
    pub fn request_runlevel(&mut self, level: Runlevel) {
        self.runlevel_request = Some(level);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BehaviorInfo {
    pub name: String,
    pub kind: BehaviorKind,
    pub active: bool,
    pub loaded_at: Runlevel,
    pub state: Option<String>,
}

/// Externally observable agent state, refreshed by the scheduler thread.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentStatus {
    pub runlevel: Runlevel,
    pub in_service: bool,
    pub behaviors: Vec<BehaviorInfo>,
    /// Behavior names in the order they were activated, across transitions.
    pub activation_log: Vec<String>,
    pub last_error: Option<String>,
    pub running: bool,
}

impl AgentStatus {
    pub fn active_behaviors(&self) -> Vec<&str> {
        self.behaviors
            .iter()
            .filter(|b| b.active)
            .map(|b| b.name.as_str())
            .collect()
    }
}

enum Control {
    SetRunlevel(Runlevel, mpsc::Sender<Result<RunlevelReport, RunlevelError>>),
    AddBehavior(Box<dyn Behavior>, bool),
}

/// The part of an agent other threads may touch: its queue, engine cell,
/// status and trace. Cloned as [`AgentHandle`].
pub struct AgentShared {
    id: AgentId,
    mailbox: Mailbox,
    engine: Option<Arc<EngineCell>>,
    control: Mutex<VecDeque<Control>>,
    status: Mutex<AgentStatus>,
    trace: TraceBus,
    files_root: Option<PathBuf>,
    stopped: AtomicBool,
    rounds: AtomicU64,
}

pub type AgentHandle = Arc<AgentShared>;

impl std::fmt::Debug for AgentShared {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AgentShared").field("id", &self.id).finish_non_exhaustive()
    }
}

impl AgentShared {
    pub fn id(&self) -> &AgentId {
        &self.id
    }

    pub fn mailbox(&self) -> &Mailbox {
        &self.mailbox
    }

    pub fn engine(&self) -> Option<&Arc<EngineCell>> {
        self.engine.as_ref()
    }

    pub fn trace(&self) -> &TraceBus {
        &self.trace
    }

    pub fn files_root(&self) -> Option<&PathBuf> {
        self.files_root.as_ref()
    }

    pub fn status(&self) -> AgentStatus {
        self.status.lock().unwrap().clone()
    }

    pub fn rounds(&self) -> u64 {
        self.rounds.load(Ordering::Relaxed)
    }

    pub fn is_stopped(&self) -> bool {
        self.stopped.load(Ordering::SeqCst)
    }

    pub fn receive_matching(&self, template: &ReceiveTemplate, timeout: Duration) -> Option<AclMessage> {
        self.mailbox.receive_matching(template, timeout)
    }

    fn deliver(&self, msg: AclMessage) {
        self.trace.record(Direction::In, &msg);
        self.mailbox.push(msg);
    }

    fn push_control(&self, control: Control) {
        self.control.lock().unwrap().push_back(control);
        self.mailbox.wake();
    }

    /// Requests a runlevel transition on the agent's own scheduler thread and
    /// waits for the outcome.
    pub fn set_runlevel(&self, level: Runlevel, timeout: Duration) -> Result<RunlevelReport, RunlevelError> {
        let (tx, rx) = mpsc::channel();
        self.push_control(Control::SetRunlevel(level, tx));
        rx.recv_timeout(timeout)
            .map_err(|_| RunlevelError::Timeout(self.id.name.clone()))?
    }

    pub fn add_behavior(&self, behavior: Box<dyn Behavior>, active: bool) {
        self.push_control(Control::AddBehavior(behavior, active));
    }

    pub fn stop(&self) {
        self.stopped.store(true, Ordering::SeqCst);
        self.mailbox.wake();
    }
}

pub struct BehaviorSlot {
    pub behavior: Box<dyn Behavior>,
    pub active: bool,
    pub loaded_at: Runlevel,
}

/// An agent owned by its scheduler. Built with [`Platform::register_agent`],
/// then either driven with [`Agent::run`] or moved onto its own thread with
/// [`Agent::start`].
pub struct Agent {
    shared: Arc<AgentShared>,
    platform: Platform,
    pub(crate) behaviors: Vec<BehaviorSlot>,
    pub(crate) runlevel: Runlevel,
    pub(crate) in_service: bool,
    pub(crate) scripts: ScriptSet,
    pub(crate) activation_log: Vec<String>,
    last_error: Option<String>,
}

impl Agent {
    pub fn id(&self) -> &AgentId {
        &self.shared.id
    }

    pub fn handle(&self) -> AgentHandle {
        self.shared.clone()
    }

    pub fn platform(&self) -> &Platform {
        &self.platform
    }

    pub fn runlevel(&self) -> Runlevel {
        self.runlevel
    }

    pub fn in_service(&self) -> bool {
        self.in_service
    }

    pub fn behaviors(&self) -> &[BehaviorSlot] {
        &self.behaviors
    }

    pub fn scripts(&self) -> &ScriptSet {
        &self.scripts
    }

    pub fn set_scripts(&mut self, scripts: ScriptSet) {
        self.scripts = scripts;
    }

    pub fn add_behavior(&mut self, behavior: Box<dyn Behavior>, active: bool) {
        let name = behavior.name().to_string();
        self.behaviors.push(BehaviorSlot {
            behavior,
            active,
            loaded_at: self.runlevel,
        });
        if active {
            self.activation_log.push(name);
        }
        self.publish_status();
    }

    pub(crate) fn context(&self) -> AgentContext<'_> {
        AgentContext::new(&self.shared, &self.platform)
    }

    /// Stops and removes every behavior.
    pub(crate) fn remove_all_behaviors(&mut self) {
        let mut slots = std::mem::take(&mut self.behaviors);
        let mut ctx = AgentContext::new(&self.shared, &self.platform);
        for slot in &mut slots {
            slot.behavior.stop(&mut ctx);
        }
    }

    pub fn set_runlevel(&mut self, target: Runlevel) -> Result<RunlevelReport, RunlevelError> {
        let result = runlevels::set_runlevel(self, target);
        if let Err(e) = &result {
            self.last_error = Some(e.to_string());
        }
        self.publish_status();
        result
    }

    pub(crate) fn publish_status(&self) {
        let status = AgentStatus {
            runlevel: self.runlevel,
            in_service: self.in_service,
            behaviors: self
                .behaviors
                .iter()
                .map(|s| BehaviorInfo {
                    name: s.behavior.name().to_string(),
                    kind: s.behavior.kind(),
                    active: s.active,
                    loaded_at: s.loaded_at,
                    state: s.behavior.state_label(),
                })
                .collect(),
            activation_log: self.activation_log.clone(),
            last_error: self.last_error.clone(),
            running: !self.shared.is_stopped(),
        };
        *self.shared.status.lock().unwrap() = status;
    }

    fn drain_controls(&mut self) -> bool {
        let pending: Vec<Control> = self.shared.control.lock().unwrap().drain(..).collect();
        let any = !pending.is_empty();
        for control in pending {
            match control {
                Control::SetRunlevel(level, reply) => {
                    let _ = reply.send(self.set_runlevel(level));
                }
                Control::AddBehavior(b, active) => self.add_behavior(b, active),
            }
        }
        any
    }

    /// Steps every active behavior once. Returns whether anything progressed.
    pub fn run_round(&mut self) -> bool {
        let mut progressed = self.drain_controls();
        let mut runlevel_request = None;
        let mut i = 0;
        while i < self.behaviors.len() {
            if !self.behaviors[i].active {
                i += 1;
                continue;
            }
            let mut ctx = AgentContext::new(&self.shared, &self.platform);
            let outcome = self.behaviors[i].behavior.step(&mut ctx);
            if let Some(level) = ctx.runlevel_request.take() {
                runlevel_request = Some(level);
            }
            match outcome {
                Ok(Step::Progress) => progressed = true,
                Ok(Step::Idle) => {}
                Ok(Step::Done) => {
                    progressed = true;
                    self.behaviors.remove(i);
                    continue;
                }
                Err(e) => {
                    let name = self.behaviors[i].behavior.name().to_string();
                    log::error!("{}: behavior `{name}` failed and was deactivated: {e}", self.id());
                    self.behaviors[i].active = false;
                    self.last_error = Some(format!("{name}: {e}"));
                    progressed = true;
                }
            }
            i += 1;
        }
        if let Some(level) = runlevel_request {
            if let Err(e) = self.set_runlevel(level) {
                log::warn!("{}: requested runlevel change failed: {e}", self.id());
            }
            progressed = true;
        }
        self.shared.rounds.fetch_add(1, Ordering::Relaxed);
        if progressed {
            self.publish_status();
        }
        progressed
    }

    /// Scheduler loop; returns when the agent is stopped or deregistered.
    pub fn run(mut self) {
        self.publish_status();
        while !self.shared.is_stopped() {
            let seen = self.shared.mailbox.generation();
            if self.run_round() {
                continue;
            }
            let deadline = self
                .behaviors
                .iter()
                .filter(|s| s.active)
                .filter_map(|s| s.behavior.next_deadline())
                .min();
            self.shared.mailbox.wait_for_change(seen, deadline);
        }
        self.remove_all_behaviors();
        self.publish_status();
    }

    /// Moves the agent onto its own scheduler thread.
    pub fn start(self) -> AgentHandle {
        let handle = self.shared.clone();
        let platform = self.platform.clone();
        let name = format!("agent-{}", handle.id.name);
        let join = std::thread::Builder::new()
            .name(name)
            .spawn(move || self.run())
            .expect("spawn agent thread");
        platform.inner.threads.lock().unwrap().push(join);
        handle
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Delivery {
    pub delivered: usize,
    pub bounced: Vec<String>,
}

enum Route {
    Directory,
    Local(Arc<AgentShared>),
    Remote(String),
    Unknown,
}

struct PlatformInner {
    agents: RwLock<BTreeMap<String, Arc<AgentShared>>>,
    remote: RwLock<BTreeMap<String, AgentId>>,
    node_address: RwLock<Option<String>>,
    connections: Mutex<HashMap<String, TcpStream>>,
    threads: Mutex<Vec<JoinHandle<()>>>,
    listener_stop: AtomicBool,
}

/// Handle to one platform node. Cheap to clone.
#[derive(Clone)]
pub struct Platform {
    inner: Arc<PlatformInner>,
}

impl Default for Platform {
    fn default() -> Self {
        Platform::new()
    }
}

impl std::fmt::Debug for Platform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Platform")
            .field("agents", &self.directory())
            .field("address", &self.node_address())
            .finish()
    }
}

impl Platform {
    pub fn new() -> Self {
        Platform {
            inner: Arc::new(PlatformInner {
                agents: RwLock::new(BTreeMap::new()),
                remote: RwLock::new(BTreeMap::new()),
                node_address: RwLock::new(None),
                connections: Mutex::new(HashMap::new()),
                threads: Mutex::new(Vec::new()),
                listener_stop: AtomicBool::new(false),
            }),
        }
    }

    /// Registers an agent at runlevel 0 with an empty queue. With
    /// `with_engine`, the agent gets its own [`ReferenceEngine`].
    pub fn register_agent(&self, id: AgentId, with_engine: bool) -> Result<Agent, RuntimeError> {
        let engine: Option<Box<dyn RuleEngine>> = if with_engine {
            Some(Box::new(ReferenceEngine::new()))
        } else {
            None
        };
        self.register_agent_with(id, engine, ScriptSet::empty(), None)
    }

    pub fn register_agent_with(
        &self,
        id: AgentId,
        engine: Option<Box<dyn RuleEngine>>,
        scripts: ScriptSet,
        files_root: Option<PathBuf>,
    ) -> Result<Agent, RuntimeError> {
        id.validate()?;
        if id.name == DIRECTORY_AGENT {
            return Err(RuntimeError::DuplicateAgent(id.name));
        }
        let mut agents = self.inner.agents.write().unwrap();
        if agents.contains_key(&id.name) {
            return Err(RuntimeError::DuplicateAgent(id.name));
        }
        let engine = engine.map(EngineCell::new);
        let shared = Arc::new(AgentShared {
            trace: TraceBus::new(id.name.clone()),
            status: Mutex::new(AgentStatus {
                runlevel: Runlevel::L0,
                in_service: false,
                behaviors: Vec::new(),
                activation_log: Vec::new(),
                last_error: None,
                running: true,
            }),
            id,
            mailbox: Mailbox::default(),
            engine,
            control: Mutex::new(VecDeque::new()),
            files_root,
            stopped: AtomicBool::new(false),
            rounds: AtomicU64::new(0),
        });
        if let Some(cell) = &shared.engine {
            let weak = Arc::downgrade(&shared);
            cell.set_release_waker(Box::new(move || {
                if let Some(agent) = weak.upgrade() {
                    agent.mailbox.wake();
                }
            }));
        }
        agents.insert(shared.id.name.clone(), shared.clone());
        drop(agents);
        Ok(Agent {
            shared,
            platform: self.clone(),
            behaviors: Vec::new(),
            runlevel: Runlevel::L0,
            in_service: false,
            scripts,
            activation_log: Vec::new(),
            last_error: None,
        })
    }

    /// Removes an agent from the directory and stops its scheduler.
    pub fn deregister(&self, name: &str) -> Result<(), RuntimeError> {
        let agent = self
            .inner
            .agents
            .write()
            .unwrap()
            .remove(name)
            .ok_or_else(|| RuntimeError::UnknownAgent(name.to_string()))?;
        agent.stop();
        Ok(())
    }

    /// Makes an agent hosted on another node addressable by name.
    pub fn add_remote(&self, id: AgentId) -> Result<(), RuntimeError> {
        id.validate()?;
        if id.address.is_none() {
            return Err(MessagingError::Invalid(format!("remote agent {} has no address", id.name)).into());
        }
        self.inner.remote.write().unwrap().insert(id.name.clone(), id);
        Ok(())
    }

    pub fn agent(&self, name: &str) -> Option<AgentHandle> {
        self.inner.agents.read().unwrap().get(name).cloned()
    }

    /// Names of all local and known remote agents, sorted.
    pub fn directory(&self) -> Vec<String> {
        let mut names: Vec<String> = self.inner.agents.read().unwrap().keys().cloned().collect();
        names.extend(self.inner.remote.read().unwrap().keys().cloned());
        names.sort();
        names.dedup();
        names
    }

    /// True when `id` is a local agent or a registered remote one.
    pub fn is_member(&self, id: &AgentId) -> bool {
        if self.is_local_address(id.address.as_deref()) && self.inner.agents.read().unwrap().contains_key(&id.name) {
            return true;
        }
        self.inner
            .remote
            .read()
            .unwrap()
            .get(&id.name)
            .is_some_and(|r| id.address.is_none() || r.address == id.address)
    }

    pub fn node_address(&self) -> Option<String> {
        self.inner.node_address.read().unwrap().clone()
    }

    fn is_local_address(&self, address: Option<&str>) -> bool {
        match address {
            None => true,
            Some(a) => self.node_address().as_deref() == Some(a),
        }
    }

    fn route(&self, receiver: &AgentId) -> Route {
        let local_addr = self.is_local_address(receiver.address.as_deref());
        if !local_addr {
            return Route::Remote(receiver.address.clone().unwrap());
        }
        if receiver.name == DIRECTORY_AGENT {
            return Route::Directory;
        }
        if let Some(agent) = self.agent(&receiver.name) {
            return Route::Local(agent);
        }
        if receiver.address.is_none() {
            if let Some(remote) = self.inner.remote.read().unwrap().get(&receiver.name) {
                return Route::Remote(remote.address.clone().unwrap());
            }
        }
        Route::Unknown
    }

    /// Delivers `msg` to every receiver. Unknown receivers produce a FAILURE
    /// back to the sender instead of an error.
    pub fn send(&self, msg: AclMessage) -> Result<Delivery, RuntimeError> {
        msg.validate()?;
        if self.is_local_address(msg.sender.address.as_deref()) {
            if let Some(sender) = self.agent(&msg.sender.name) {
                sender.trace.record(Direction::Out, &msg);
            }
        }
        let mut delivery = Delivery::default();
        for receiver in &msg.receivers {
            match self.route(receiver) {
                Route::Directory => {
                    self.answer_directory(&msg);
                    delivery.delivered += 1;
                }
                Route::Local(agent) => {
                    agent.deliver(msg.clone());
                    delivery.delivered += 1;
                }
                Route::Remote(address) => match self.send_remote(&address, &msg) {
                    Ok(()) => delivery.delivered += 1,
                    Err(e) => {
                        log::warn!("delivery to {receiver} failed: {e}");
                        self.bounce(&msg, receiver, &format!("unreachable: {e}"));
                        delivery.bounced.push(receiver.name.clone());
                    }
                },
                Route::Unknown => {
                    self.bounce(&msg, receiver, "not registered");
                    delivery.bounced.push(receiver.name.clone());
                }
            }
        }
        Ok(delivery)
    }

    fn directory_id(&self) -> AgentId {
        AgentId {
            name: DIRECTORY_AGENT.to_string(),
            address: self.node_address(),
        }
    }

    fn bounce(&self, msg: &AclMessage, receiver: &AgentId, why: &str) {
        if msg.sender.name == DIRECTORY_AGENT {
            log::warn!("dropping undeliverable platform notice for {receiver}");
            return;
        }
        let failure = msg.reply(
            &self.directory_id(),
            Performative::Failure,
            Content::Text(format!("UNKNOWN_AGENT: {} ({why})", receiver.name)),
        );
        if let Err(e) = self.send(failure) {
            log::warn!("could not report failure to {}: {e}", msg.sender);
        }
    }

    fn answer_directory(&self, msg: &AclMessage) {
        if msg.performative != Performative::Request || msg.ontology != DIRECTORY_ONTOLOGY {
            let reply = msg.reply(
                &self.directory_id(),
                Performative::NotUnderstood,
                Content::Text(format!("the directory answers REQUEST/{DIRECTORY_ONTOLOGY}")),
            );
            let _ = self.send(reply);
            return;
        }
        let listing = self.directory().join("\n");
        let reply = msg.reply(&self.directory_id(), Performative::Inform, Content::Text(listing));
        let _ = self.send(reply);
    }

    fn send_remote(&self, address: &str, msg: &AclMessage) -> Result<(), RuntimeError> {
        let mut msg = msg.clone();
        if msg.sender.address.is_none() {
            msg.sender.address = self.node_address();
        }
        let bytes = encode_message(&msg)?;
        let mut connections = self.inner.connections.lock().unwrap();
        for attempt in 0..2 {
            if !connections.contains_key(address) {
                let stream = TcpStream::connect(address)?;
                stream.set_nodelay(true)?;
                connections.insert(address.to_string(), stream);
            }
            let stream = connections.get_mut(address).unwrap();
            match stream.write_all(&bytes) {
                Ok(()) => return Ok(()),
                Err(e) if attempt == 0 => {
                    log::debug!("reconnecting to {address}: {e}");
                    connections.remove(address);
                }
                Err(e) => return Err(e.into()),
            }
        }
        unreachable!("second attempt returns")
    }

    /// Starts accepting wire-format messages from other nodes on `address`
    /// (for example `127.0.0.1:7601`). Returns the bound address.
    pub fn listen(&self, address: &str) -> Result<SocketAddr, RuntimeError> {
        let listener = TcpListener::bind(address)?;
        let local = listener.local_addr()?;
        *self.inner.node_address.write().unwrap() = Some(local.to_string());
        let platform = self.clone();
        let join = std::thread::Builder::new()
            .name(format!("platform-listener-{local}"))
            .spawn(move || {
                for stream in listener.incoming() {
                    if platform.inner.listener_stop.load(Ordering::SeqCst) {
                        break;
                    }
                    match stream {
                        Ok(stream) => {
                            let p = platform.clone();
                            std::thread::spawn(move || p.serve_connection(stream));
                        }
                        Err(e) => log::warn!("accept failed: {e}"),
                    }
                }
            })?;
        self.inner.threads.lock().unwrap().push(join);
        Ok(local)
    }

    fn serve_connection(&self, stream: TcpStream) {
        let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_default();
        let mut reader = BufReader::new(stream);
        let mut line = Vec::new();
        loop {
            line.clear();
            match reader.read_until(b'\n', &mut line) {
                Ok(0) => return,
                Ok(_) => {}
                Err(e) => {
                    log::debug!("connection from {peer} closed: {e}");
                    return;
                }
            }
            match decode_message(&line) {
                Ok(msg) => self.deliver_inbound(msg),
                Err(e) => log::warn!("discarding undecodable message from {peer}: {e}"),
            }
        }
    }

    fn deliver_inbound(&self, msg: AclMessage) {
        for receiver in &msg.receivers {
            if !self.is_local_address(receiver.address.as_deref()) {
                continue;
            }
            if receiver.name == DIRECTORY_AGENT {
                self.answer_directory(&msg);
            } else if let Some(agent) = self.agent(&receiver.name) {
                agent.deliver(msg.clone());
            } else {
                self.bounce(&msg, receiver, "not registered on this node");
            }
        }
    }

    /// Stops every local agent and the TCP listener, then joins their threads.
    pub fn shutdown(&self) {
        let agents: Vec<_> = self.inner.agents.write().unwrap().values().cloned().collect();
        for agent in agents {
            agent.stop();
        }
        self.inner.listener_stop.store(true, Ordering::SeqCst);
        if let Some(addr) = self.node_address() {
            let _ = TcpStream::connect(&addr);
        }
        for (_, stream) in self.inner.connections.lock().unwrap().drain() {
            let _ = stream.shutdown(Shutdown::Both);
        }
        let threads: Vec<_> = self.inner.threads.lock().unwrap().drain(..).collect();
        for t in threads {
            let _ = t.join();
        }
    }
}

/// Convenience for tests and tools: a fresh conversation-threaded request.
pub fn directory_request(sender: AgentId) -> AclMessage {
    let mut msg = AclMessage::new(
        Performative::Request,
        sender,
        AgentId {
            name: DIRECTORY_AGENT.to_string(),
            address: None,
        },
        DIRECTORY_ONTOLOGY,
        Content::Text("list".into()),
    );
    msg.reply_with = Some(messaging::new_reply_token());
    msg
}
