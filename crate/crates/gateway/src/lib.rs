//! Control and introspection gateway for one development-mode agent.
//!
//! [`Gateway`] holds the request logic and streams its replies through a
//! callback, so it can be driven without a network. [`server`] exposes it as
//! a WebSocket endpoint at `/gateway`.

pub mod server;

use std::path::{Path, PathBuf};
use std::time::Duration;

use ruleagents::messaging::{
    make_engine_action, AclMessage, ActionCode, AgentId, Content, EngineAction, Origin, Performative, ResultPayload,
};
use ruleagents::rule_agent::{dispatch_action, resolve_sandbox_path, DispatchEnv};
use ruleagents::runlevels::{Runlevel, RunlevelReport};
use ruleagents::runtime::{platform_port, AgentHandle, AgentStatus, Platform, ReceiveTemplate};
use ruleagents::trace::{TraceEvent, TraceItem, TraceSubscription, DEFAULT_TRACE_CAPACITY};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Name under which the attached agent appears in listings and targets.
pub const ITSELF: &str = "itself";
pub const RULES_EXTENSION: &str = "clp-mini";
pub const SCRIPT_EXTENSION: &str = "rbs";

/// Gateway port for the agent with the given ordinal on this platform.
pub fn gateway_port(ordinal: u16) -> u16 {
    platform_port().saturating_add(ordinal)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RequestKind {
    ListAgents,
    ExecAsync,
    ExecSync,
    SetRunlevel,
    GetFile,
    PutFile,
    SubscribeTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatewayRequest {
    #[serde(default)]
    pub id: Value,
    pub kind: RequestKind,
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default)]
    pub body: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatewayResponse {
    pub id: Value,
    pub ok: bool,
    pub body: Value,
}

/// Unsolicited frame, such as a trace event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventFrame {
    pub event: String,
    #[serde(flatten)]
    pub data: serde_json::Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Frame {
    Response(GatewayResponse),
    Event(EventFrame),
}

impl Frame {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("frames always serialize")
    }

    pub fn response(&self) -> Option<&GatewayResponse> {
        match self {
            Frame::Response(r) => Some(r),
            Frame::Event(_) => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("UNKNOWN_AGENT: no agent named `{0}`")]
    UnknownAgent(String),
    #[error("SYNC_LOCAL_ONLY: `{0}` is not the attached agent")]
    SyncLocalOnly(String),
    #[error("LOCAL_ONLY: `{0}` is not the attached agent")]
    LocalOnly(String),
    #[error("ENGINE_BUSY: the rule engine is executing a job")]
    EngineBusy,
    #[error("NO_ENGINE: the attached agent has no rule engine")]
    NoEngine,
    #[error("PATH_ERROR: {0}")]
    Path(String),
    #[error("BAD_REQUEST: {0}")]
    BadRequest(String),
    #[error("IO_ERROR: {0}")]
    Io(String),
    #[error("SEND_FAILED: {0}")]
    Send(String),
    #[error("TIMEOUT: no {0} within the reply timeout")]
    Timeout(&'static str),
    #[error(transparent)]
    Runlevel(#[from] ruleagents::runlevels::RunlevelError),
}

impl GatewayError {
    pub fn code(&self) -> &'static str {
        match self {
            GatewayError::UnknownAgent(_) => "UNKNOWN_AGENT",
            GatewayError::SyncLocalOnly(_) => "SYNC_LOCAL_ONLY",
            GatewayError::LocalOnly(_) => "LOCAL_ONLY",
            GatewayError::EngineBusy => "ENGINE_BUSY",
            GatewayError::NoEngine => "NO_ENGINE",
            GatewayError::Path(_) => "PATH_ERROR",
            GatewayError::BadRequest(_) => "BAD_REQUEST",
            GatewayError::Io(_) => "IO_ERROR",
            GatewayError::Send(_) => "SEND_FAILED",
            GatewayError::Timeout(_) => "TIMEOUT",
            GatewayError::Runlevel(e) => e.kind(),
        }
    }

    fn body(&self) -> Value {
        json!({ "error": self.code(), "message": self.to_string() })
    }
}

/// What the transport has to do after [`Gateway::handle`] returns.
#[derive(Debug)]
pub enum Outcome {
    Done,
    /// Forward this subscription's items as [`trace_frame`]s until the
    /// client goes away.
    Trace(TraceSubscription),
}

/// Where a request is aimed, once the target name is resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Target {
    Attached,
    Other(AgentId),
}

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    /// Directory of the agent's `level.0N.rbs` scripts.
    pub scripts_dir: Option<PathBuf>,
    /// Directory of the agent's rule files; defaults to its files root.
    pub rules_dir: Option<PathBuf>,
    /// How long an EXEC_ASYNC waits for each reply.
    pub reply_timeout: Duration,
    pub runlevel_timeout: Duration,
    pub trace_capacity: usize,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            scripts_dir: None,
            rules_dir: None,
            reply_timeout: Duration::from_secs(120),
            runlevel_timeout: Duration::from_secs(10),
            trace_capacity: DEFAULT_TRACE_CAPACITY,
        }
    }
}

/// Gateway attached to one local agent.
#[derive(Debug)]
pub struct Gateway {
    platform: Platform,
    agent: AgentHandle,
    config: GatewayConfig,
}

impl Gateway {
    pub fn new(platform: Platform, agent: AgentHandle, mut config: GatewayConfig) -> Self {
        if config.rules_dir.is_none() {
            config.rules_dir = agent.files_root().cloned();
        }
        Gateway {
            platform,
            agent,
            config,
        }
    }

    pub fn agent(&self) -> &AgentHandle {
        &self.agent
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    /// Serves one request. Every reply goes through `emit`; EXEC_ASYNC emits
    /// several responses with the same id, the last one marked `final`.
    pub fn handle(&self, req: GatewayRequest, emit: &mut dyn FnMut(Frame)) -> Outcome {
        let id = req.id.clone();
        let mut reply = |ok: bool, body: Value| emit(Frame::Response(GatewayResponse { id: id.clone(), ok, body }));
        let result = match req.kind {
            RequestKind::ListAgents => Ok(self.list_agents()),
            RequestKind::ExecAsync => match self.exec_async(&req, &mut reply) {
                Ok(()) => return Outcome::Done,
                Err(e) => Err(e),
            },
            RequestKind::ExecSync => self.exec_sync(&req),
            RequestKind::SetRunlevel => self.set_runlevel(&req),
            RequestKind::GetFile => self.get_file(&req),
            RequestKind::PutFile => self.put_file(&req),
            RequestKind::SubscribeTrace => match self.local_target(&req) {
                Ok(()) => {
                    let capacity = req.body.get("capacity").and_then(Value::as_u64);
                    let capacity = capacity.map_or(self.config.trace_capacity, |c| c as usize);
                    let sub = self.agent.trace().subscribe(capacity);
                    reply(true, json!({ "subscribed": self.agent.id().name, "capacity": capacity }));
                    return Outcome::Trace(sub);
                }
                Err(e) => Err(e),
            },
        };
        match result {
            Ok(body) => reply(true, body),
            Err(e) => reply(false, e.body()),
        }
        Outcome::Done
    }

    /// Parses and serves one JSON text frame.
    pub fn handle_text(&self, text: &str, emit: &mut dyn FnMut(Frame)) -> Outcome {
        match serde_json::from_str::<GatewayRequest>(text) {
            Ok(req) => self.handle(req, emit),
            Err(e) => {
                let id = serde_json::from_str::<Value>(text)
                    .ok()
                    .and_then(|v| v.get("id").cloned())
                    .unwrap_or(Value::Null);
                let err = GatewayError::BadRequest(e.to_string());
                emit(Frame::Response(GatewayResponse {
                    id,
                    ok: false,
                    body: err.body(),
                }));
                Outcome::Done
            }
        }
    }

    fn resolve(&self, target: Option<&str>) -> Result<Target, GatewayError> {
        let me = &self.agent.id().name;
        match target {
            None | Some(ITSELF) => Ok(Target::Attached),
            Some(name) if name == me => Ok(Target::Attached),
            Some(name) => {
                if self.platform.directory().iter().any(|n| n == name) {
                    let id = AgentId::new(name).map_err(|e| GatewayError::BadRequest(e.to_string()))?;
                    Ok(Target::Other(id))
                } else {
                    Err(GatewayError::UnknownAgent(name.to_string()))
                }
            }
        }
    }

    fn local_target(&self, req: &GatewayRequest) -> Result<(), GatewayError> {
        match self.resolve(req.target.as_deref())? {
            Target::Attached => Ok(()),
            Target::Other(id) => Err(GatewayError::LocalOnly(id.name)),
        }
    }

    fn list_agents(&self) -> Value {
        let me = &self.agent.id().name;
        let mut agents = vec![ITSELF.to_string()];
        agents.extend(self.platform.directory().into_iter().filter(|n| n != me));
        json!({ "attached": me, "agents": agents, "status": status_json(&self.agent.status()) })
    }

    fn action_from_body(body: &Value) -> Result<EngineAction, GatewayError> {
        let bad = |m: String| GatewayError::BadRequest(m);
        match body.get("code").and_then(Value::as_str) {
            Some(code) => {
                let params = match body.get("params") {
                    None | Some(Value::Null) => Vec::new(),
                    Some(Value::Array(items)) => items
                        .iter()
                        .map(|v| match v {
                            Value::String(s) => Ok(s.clone()),
                            other => Ok(other.to_string()),
                        })
                        .collect::<Result<Vec<_>, GatewayError>>()?,
                    Some(_) => return Err(bad("`params` must be an array".into())),
                };
                make_engine_action(code, params, Origin::Human).map_err(|e| bad(e.to_string()))
            }
            None => {
                let command = body
                    .get("command")
                    .and_then(Value::as_str)
                    .ok_or_else(|| bad("body needs `command` or `code`".into()))?;
                EngineAction::new(ActionCode::EvalCommand, vec![command.to_string()], Origin::Human)
                    .map_err(|e| bad(e.to_string()))
            }
        }
    }

    fn exec_async(&self, req: &GatewayRequest, reply: &mut dyn FnMut(bool, Value)) -> Result<(), GatewayError> {
        let receiver = match self.resolve(req.target.as_deref())? {
            Target::Attached => self.agent.id().clone(),
            Target::Other(id) => id,
        };
        let action = Self::action_from_body(&req.body)?;
        let msg = AclMessage::engine_request(self.agent.id().clone(), receiver.clone(), action);
        let conv = msg.conversation_id.clone();
        let reply_with = msg.reply_with.clone().expect("engine requests carry a reply token");
        self.platform.send(msg).map_err(|e| GatewayError::Send(e.to_string()))?;
        reply(
            true,
            json!({ "stage": "SENT", "conversation_id": conv, "target": receiver.name, "final": false }),
        );
        let template = ReceiveTemplate::any().conversation(conv.as_str()).in_reply_to(reply_with.as_str());
        loop {
            let Some(answer) = self.agent.receive_matching(&template, self.config.reply_timeout) else {
                let err = GatewayError::Timeout("reply");
                let mut body = err.body();
                body["stage"] = json!("TIMEOUT");
                body["conversation_id"] = json!(conv);
                body["final"] = json!(true);
                reply(false, body);
                return Ok(());
            };
            let (ok, body, last) = reply_body(&answer);
            reply(ok, body);
            if last {
                return Ok(());
            }
        }
    }

    fn exec_sync(&self, req: &GatewayRequest) -> Result<Value, GatewayError> {
        if let Target::Other(id) = self.resolve(req.target.as_deref())? {
            return Err(GatewayError::SyncLocalOnly(id.name));
        }
        let action = Self::action_from_body(&req.body)?;
        let cell = self.agent.engine().ok_or(GatewayError::NoEngine)?;
        if action.code == ActionCode::RunInnerShell {
            if cell.is_busy() {
                return Err(GatewayError::EngineBusy);
            }
            return Ok(json!({
                "status": "OK",
                "output": "inner shell attached: EXEC_SYNC commands evaluate directly on the engine\n",
                "elapsed_ms": 0,
            }));
        }
        let mut lease = cell.checkout().map_err(|_| GatewayError::EngineBusy)?;
        let env = DispatchEnv::new(self.config.rules_dir.clone());
        let result = dispatch_action(&action, &mut *lease, &env);
        drop(lease);
        Ok(result_json(&result))
    }

    fn set_runlevel(&self, req: &GatewayRequest) -> Result<Value, GatewayError> {
        self.local_target(req)?;
        let level = if let Some(button) = req.body.get("button").and_then(Value::as_str) {
            Runlevel::from_button(button)?
        } else if let Some(n) = req.body.get("level").and_then(Value::as_i64) {
            Runlevel::from_value(n)?
        } else {
            return Err(GatewayError::BadRequest("body needs `button` or `level`".into()));
        };
        let report = self.agent.set_runlevel(level, self.config.runlevel_timeout)?;
        Ok(json!({ "report": report_json(&report), "status": status_json(&self.agent.status()) }))
    }

    fn file_path(&self, req: &GatewayRequest) -> Result<PathBuf, GatewayError> {
        self.local_target(req)?;
        let relative = req
            .body
            .get("path")
            .and_then(Value::as_str)
            .ok_or_else(|| GatewayError::BadRequest("body needs `path`".into()))?;
        let name = relative.rsplit('/').next().unwrap_or(relative);
        let root = if name.ends_with(&format!(".{RULES_EXTENSION}")) {
            self.config.rules_dir.as_deref()
        } else if name.ends_with(&format!(".{SCRIPT_EXTENSION}")) {
            self.config.scripts_dir.as_deref()
        } else {
            return Err(GatewayError::Path(format!(
                "`{relative}` is neither a .{RULES_EXTENSION} nor a .{SCRIPT_EXTENSION} file"
            )));
        };
        let root = root.ok_or_else(|| GatewayError::Path(format!("no directory configured for `{relative}`")))?;
        resolve_sandbox_path(root, relative).map_err(|e| GatewayError::Path(e.0))
    }

    fn get_file(&self, req: &GatewayRequest) -> Result<Value, GatewayError> {
        let path = self.file_path(req)?;
        let content = std::fs::read_to_string(&path).map_err(|e| io_error(&path, e))?;
        Ok(json!({ "path": req.body["path"], "content": content }))
    }

    fn put_file(&self, req: &GatewayRequest) -> Result<Value, GatewayError> {
        let path = self.file_path(req)?;
        let content = req
            .body
            .get("content")
            .and_then(Value::as_str)
            .ok_or_else(|| GatewayError::BadRequest("body needs `content`".into()))?;
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        }
        std::fs::write(&path, content).map_err(|e| io_error(&path, e))?;
        Ok(json!({ "path": req.body["path"], "bytes": content.len() }))
    }
}

fn io_error(path: &Path, e: std::io::Error) -> GatewayError {
    GatewayError::Io(format!("{}: {e}", path.display()))
}

fn result_json(r: &ResultPayload) -> Value {
    let mut body = json!({
        "status": r.status.as_str(),
        "output": r.output,
        "elapsed_ms": r.elapsed_ms,
    });
    if let Some(t) = r.timing {
        body["timing"] = json!({ "t_e_us": t.t_e_us, "t_p_us": t.t_p_us });
    }
    body
}

/// Streamed body for one reply of an EXEC_ASYNC conversation, with its
/// success flag and whether it ends the stream.
fn reply_body(msg: &AclMessage) -> (bool, Value, bool) {
    let performative = msg.performative.as_str();
    let mut body = match &msg.content {
        Content::Result(r) => result_json(r),
        Content::Text(t) => {
            let reason = t.split(':').next().unwrap_or_default().trim();
            json!({ "text": t, "reason": reason })
        }
        other => json!({ "text": other.excerpt(200) }),
    };
    body["conversation_id"] = json!(msg.conversation_id);
    body["from"] = json!(msg.sender.name);
    let (stage, ok, last) = match msg.performative {
        Performative::Agree => ("AGREE", true, false),
        Performative::Refuse => ("REFUSE", false, true),
        Performative::Inform => ("RESULT", true, true),
        Performative::Failure => ("RESULT", false, true),
        _ => (performative, false, true),
    };
    body["stage"] = json!(stage);
    body["performative"] = json!(performative);
    body["final"] = json!(last);
    (ok, body, last)
}

pub fn status_json(s: &AgentStatus) -> Value {
    let behaviors: Vec<Value> = s
        .behaviors
        .iter()
        .map(|b| {
            json!({
                "name": b.name,
                "kind": b.kind.as_str(),
                "active": b.active,
                "loaded_at": b.loaded_at.value(),
                "state": b.state,
            })
        })
        .collect();
    json!({
        "runlevel": s.runlevel.value(),
        "in_service": s.in_service,
        "behaviors": behaviors,
        "last_error": s.last_error,
        "running": s.running,
    })
}

fn report_json(r: &RunlevelReport) -> Value {
    json!({
        "from": r.from.value(),
        "to": r.to.value(),
        "path": r.path.iter().map(|l| l.value()).collect::<Vec<_>>(),
        "loaded": r.loaded,
        "activated": r.activated,
        "removed": r.removed,
        "in_service": r.in_service,
    })
}

pub fn trace_event_json(e: &TraceEvent) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("seq".into(), json!(e.seq));
    m.insert("timestamp_us".into(), json!(e.timestamp_us));
    m.insert("direction".into(), json!(e.direction.as_str()));
    m.insert("agent".into(), json!(e.agent));
    m.insert("peer".into(), json!(e.peer));
    m.insert("performative".into(), json!(e.performative));
    m.insert("ontology".into(), json!(e.ontology));
    m.insert("conversation_id".into(), json!(e.conversation_id));
    m.insert("excerpt".into(), json!(e.excerpt));
    if let Some(t) = e.timing {
        m.insert("timing".into(), json!({ "t_e_us": t.t_e_us, "t_p_us": t.t_p_us }));
    }
    m
}

/// Unsolicited frame for one trace item: `{"event":"trace",...}` or
/// `{"event":"DROPPED","count":n}`.
pub fn trace_frame(item: &TraceItem) -> Frame {
    match item {
        TraceItem::Event(e) => Frame::Event(EventFrame {
            event: "trace".into(),
            data: trace_event_json(e),
        }),
        TraceItem::Dropped(n) => {
            let mut data = serde_json::Map::new();
            data.insert("count".into(), json!(n));
            Frame::Event(EventFrame {
                event: "DROPPED".into(),
                data,
            })
        }
    }
}
