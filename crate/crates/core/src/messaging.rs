//! ACL message model, the engine-action vocabulary and the line-delimited
//! JSON wire codec used for cross-process delivery.
//!
//! Every message that leaves an agent is an [`AclMessage`]. Requests aimed at
//! another agent's rule engine use the [`RBE_ONTOLOGY`] ontology and carry an
//! [`EngineAction`]; the action codes and their parameter lists are read from
//! `data/actions.v1.json`, which is the only place arities are declared.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

/// Ontology marking requests aimed at an agent's rule engine.
pub const RBE_ONTOLOGY: &str = "rbe-actions";
/// Ontology of liveness pings.
pub const PRESENCE_ONTOLOGY: &str = "presence";
/// Ontology understood by the platform directory agent.
pub const DIRECTORY_ONTOLOGY: &str = "directory";

const ACTION_TABLE_SOURCE: &str = include_str!("../data/actions.v1.json");
const ACTION_TABLE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MessagingError {
    #[error("DECODE_ERROR: {0}")]
    Decode(String),
    #[error("UNKNOWN_SYMBOL: {0}")]
    UnknownSymbol(String),
    #[error("ARITY_ERROR: {code} takes {expected} parameter(s), got {got}")]
    Arity {
        code: String,
        expected: usize,
        got: usize,
    },
    #[error("BAD_PARAM: {code} parameter `{name}` must be an integer, got {value:?}")]
    BadParam {
        code: String,
        name: String,
        value: String,
    },
    #[error("INVALID_MESSAGE: {0}")]
    Invalid(String),
}

impl MessagingError {
    pub fn kind(&self) -> &'static str {
        match self {
            MessagingError::Decode(_) => "DECODE_ERROR",
            MessagingError::UnknownSymbol(_) => "UNKNOWN_SYMBOL",
            MessagingError::Arity { .. } => "ARITY_ERROR",
            MessagingError::BadParam { .. } => "BAD_PARAM",
            MessagingError::Invalid(_) => "INVALID_MESSAGE",
        }
    }
}

pub type Result<T, E = MessagingError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentId {
    pub name: String,
    /// `host:port` of the platform node hosting the agent, when remote.
    pub address: Option<String>,
}

impl AgentId {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let id = AgentId {
            name: name.into(),
            address: None,
        };
        id.validate()?;
        Ok(id)
    }

    pub fn with_address(name: impl Into<String>, address: impl Into<String>) -> Result<Self> {
        let id = AgentId {
            name: name.into(),
            address: Some(address.into()),
        };
        id.validate()?;
        Ok(id)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(MessagingError::Invalid("agent name is empty".into()));
        }
        if !self.name.bytes().all(|b| b.is_ascii_graphic()) {
            return Err(MessagingError::Invalid(format!(
                "agent name {:?} is not printable ASCII",
                self.name
            )));
        }
        if let Some(addr) = &self.address {
            if addr.is_empty() || !addr.bytes().all(|b| b.is_ascii_graphic()) {
                return Err(MessagingError::Invalid(format!(
                    "agent address {addr:?} is not printable ASCII"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.address {
            Some(addr) => write!(f, "{}@{}", self.name, addr),
            None => f.write_str(&self.name),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Performative {
    Request,
    Agree,
    Refuse,
    Inform,
    Failure,
    NotUnderstood,
}

impl Performative {
    pub const ALL: [Performative; 6] = [
        Performative::Request,
        Performative::Agree,
        Performative::Refuse,
        Performative::Inform,
        Performative::Failure,
        Performative::NotUnderstood,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Performative::Request => "REQUEST",
            Performative::Agree => "AGREE",
            Performative::Refuse => "REFUSE",
            Performative::Inform => "INFORM",
            Performative::Failure => "FAILURE",
            Performative::NotUnderstood => "NOT_UNDERSTOOD",
        }
    }
}

impl FromStr for Performative {
    type Err = MessagingError;

    fn from_str(s: &str) -> Result<Self> {
        Performative::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| MessagingError::UnknownSymbol(format!("performative {s:?}")))
    }
}

impl fmt::Display for Performative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Who issued an engine action: another agent, or a human through a console.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    Agent,
    Human,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Agent => "AGENT",
            Origin::Human => "HUMAN",
        }
    }
}

impl FromStr for Origin {
    type Err = MessagingError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "AGENT" => Ok(Origin::Agent),
            "HUMAN" => Ok(Origin::Human),
            other => Err(MessagingError::UnknownSymbol(format!("origin {other:?}"))),
        }
    }
}

macro_rules! action_codes {
    ($($variant:ident => $name:literal,)*) => {
        /// The closed vocabulary of activities one agent may ask of another's engine.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum ActionCode {
            $($variant,)*
        }

        impl ActionCode {
            pub const ALL: &'static [ActionCode] = &[$(ActionCode::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(ActionCode::$variant => $name,)*
                }
            }
        }

        impl FromStr for ActionCode {
            type Err = MessagingError;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok(ActionCode::$variant),)*
                    other => Err(MessagingError::UnknownSymbol(format!("action code {other:?}"))),
                }
            }
        }
    };
}

action_codes! {
    LoadFile => "LOAD_FILE",
    LoadFacts => "LOAD_FACTS",
    LoadFromResource => "LOAD_FROM_RESOURCE",
    LoadFromString => "LOAD_FROM_STRING",
    LoadAssertString => "LOAD_ASSERT_STRING",
    LoadBload => "LOAD_BLOAD",
    LoadSload => "LOAD_SLOAD",
    RunInfinitely => "RUN_INFINITELY",
    RunNumberOfCycles => "RUN_NUMBER_OF_CYCLES",
    RunOnceThenBatch => "RUN_ONCE_THEN_BATCH",
    RunInnerShell => "RUN_INNER_SHELL",
    MakeReset => "MAKE_RESET",
    MakeClear => "MAKE_CLEAR",
    MakeMemoryDump => "MAKE_MEMORY_DUMP",
    MakeAssertString => "MAKE_ASSERT_STRING",
    MakeBuild => "MAKE_BUILD",
    EvalCommand => "EVAL_COMMAND",
    SetInputBufferCount => "SET_INPUT_BUFFER_COUNT",
    AppendInputBuffer => "APPEND_INPUT_BUFFER",
    SetUnwatch => "SET_UNWATCH",
    SetWatch => "SET_WATCH",
    GetFactSlot => "GET_FACT_SLOT",
    FactIndex => "FACT_INDEX",
}

impl fmt::Display for ActionCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamType {
    Text,
    Int,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ParamType,
}

#[derive(Debug, Deserialize)]
struct ActionTableFile {
    version: u32,
    actions: Vec<ActionTableRow>,
}

#[derive(Debug, Deserialize)]
struct ActionTableRow {
    code: String,
    params: Vec<ParamSpec>,
}

/// Parameter lists per action code, loaded from the shipped data file.
#[derive(Debug)]
pub struct ActionTable {
    version: u32,
    params: HashMap<ActionCode, Vec<ParamSpec>>,
}

impl ActionTable {
    pub fn global() -> &'static ActionTable {
        static TABLE: OnceLock<ActionTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            ActionTable::parse(ACTION_TABLE_SOURCE).expect("shipped action table is valid")
        })
    }

    pub fn parse(source: &str) -> Result<ActionTable> {
        let file: ActionTableFile =
            serde_json::from_str(source).map_err(|e| MessagingError::Decode(e.to_string()))?;
        if file.version != ACTION_TABLE_VERSION {
            return Err(MessagingError::Invalid(format!(
                "action table version {} (expected {ACTION_TABLE_VERSION})",
                file.version
            )));
        }
        let mut params = HashMap::new();
        for row in file.actions {
            let code: ActionCode = row.code.parse()?;
            if params.insert(code, row.params).is_some() {
                return Err(MessagingError::Invalid(format!("{code} listed twice")));
            }
        }
        if let Some(missing) = ActionCode::ALL.iter().find(|c| !params.contains_key(c)) {
            return Err(MessagingError::Invalid(format!("{missing} missing from table")));
        }
        Ok(ActionTable {
            version: file.version,
            params,
        })
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn params(&self, code: ActionCode) -> &[ParamSpec] {
        &self.params[&code]
    }

    pub fn arity(&self, code: ActionCode) -> usize {
        self.params(code).len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineAction {
    pub code: ActionCode,
    pub params: Vec<String>,
    pub origin: Origin,
}

impl EngineAction {
    pub fn new(code: ActionCode, params: Vec<String>, origin: Origin) -> Result<Self> {
        let action = EngineAction {
            code,
            params,
            origin,
        };
        action.validate()?;
        Ok(action)
    }

    pub fn validate(&self) -> Result<()> {
        let spec = ActionTable::global().params(self.code);
        if spec.len() != self.params.len() {
            return Err(MessagingError::Arity {
                code: self.code.as_str().to_string(),
                expected: spec.len(),
                got: self.params.len(),
            });
        }
        for (param, value) in spec.iter().zip(&self.params) {
            if param.ty == ParamType::Int && value.trim().parse::<i64>().is_err() {
                return Err(MessagingError::BadParam {
                    code: self.code.as_str().to_string(),
                    name: param.name.clone(),
                    value: value.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn int_param(&self, position: usize) -> i64 {
        self.params[position]
            .trim()
            .parse()
            .expect("integer parameters are checked on construction")
    }
}

/// Builds a validated [`EngineAction`] from its textual code.
pub fn make_engine_action(code: &str, params: Vec<String>, origin: Origin) -> Result<EngineAction> {
    EngineAction::new(code.parse()?, params, origin)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultStatus {
    Ok,
    Error,
}

impl ResultStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ResultStatus::Ok => "OK",
            ResultStatus::Error => "ERROR",
        }
    }
}

/// Durations of the two loops of an engine request, in microseconds:
/// request capture up to the self-addressed enqueue, and job dequeue up to
/// engine completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolTiming {
    pub t_e_us: u64,
    pub t_p_us: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultPayload {
    pub status: ResultStatus,
    pub output: String,
    pub elapsed_ms: u64,
    pub timing: Option<ProtocolTiming>,
}

impl ResultPayload {
    pub fn ok(output: impl Into<String>, elapsed_ms: u64) -> Self {
        ResultPayload {
            status: ResultStatus::Ok,
            output: output.into(),
            elapsed_ms,
            timing: None,
        }
    }

    pub fn error(diagnostic: impl Into<String>, elapsed_ms: u64) -> Self {
        let mut output = diagnostic.into();
        if output.is_empty() {
            output.push_str("unspecified engine error");
        }
        ResultPayload {
            status: ResultStatus::Error,
            output,
            elapsed_ms,
            timing: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == ResultStatus::Ok
    }
}

/// Job metadata carried by the self-addressed request an agent sends to its
/// own engine loop once it has accepted an external request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingJob {
    pub conversation_id: String,
    pub origin: AgentId,
    pub reply_with: Option<String>,
    pub action: EngineAction,
    /// Wall-clock enqueue time, milliseconds since the Unix epoch.
    pub enqueued_at_ms: u64,
    /// Capture-loop duration measured by the accepting behavior.
    pub t_e_us: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Content {
    Text(String),
    Action(EngineAction),
    Result(ResultPayload),
    Job(PendingJob),
}

impl Content {
    pub fn kind(&self) -> ContentKind {
        match self {
            Content::Text(_) => ContentKind::Text,
            Content::Action(_) => ContentKind::Action,
            Content::Result(_) => ContentKind::Result,
            Content::Job(_) => ContentKind::Job,
        }
    }

    /// Short human-readable rendering for traces and logs.
    pub fn excerpt(&self, max_chars: usize) -> String {
        let full = match self {
            Content::Text(t) => t.clone(),
            Content::Action(a) => format!("{} {:?}", a.code, a.params),
            Content::Result(r) => format!("{} {}", r.status.as_str(), r.output),
            Content::Job(j) => format!("job {} {:?} for {}", j.action.code, j.action.params, j.origin.name),
        };
        if full.chars().count() <= max_chars {
            full
        } else {
            let mut cut: String = full.chars().take(max_chars).collect();
            cut.push_str("...");
            cut
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContentKind {
    Text,
    Action,
    Result,
    Job,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AclMessage {
    pub performative: Performative,
    pub sender: AgentId,
    pub receivers: Vec<AgentId>,
    pub conversation_id: String,
    pub reply_with: Option<String>,
    pub in_reply_to: Option<String>,
    pub ontology: String,
    pub content: Content,
}

impl AclMessage {
    pub fn new(
        performative: Performative,
        sender: AgentId,
        receiver: AgentId,
        ontology: impl Into<String>,
        content: Content,
    ) -> Self {
        AclMessage {
            performative,
            sender,
            receivers: vec![receiver],
            conversation_id: new_conversation_id(),
            reply_with: None,
            in_reply_to: None,
            ontology: ontology.into(),
            content,
        }
    }

    /// An engine request with fresh conversation and reply-with tokens.
    pub fn engine_request(sender: AgentId, receiver: AgentId, action: EngineAction) -> Self {
        let mut msg = AclMessage::new(
            Performative::Request,
            sender,
            receiver,
            RBE_ONTOLOGY,
            Content::Action(action),
        );
        msg.reply_with = Some(new_reply_token());
        msg
    }

    pub fn presence_request(sender: AgentId, receiver: AgentId) -> Self {
        let mut msg = AclMessage::new(
            Performative::Request,
            sender,
            receiver,
            PRESENCE_ONTOLOGY,
            Content::Text("ping".into()),
        );
        msg.reply_with = Some(new_reply_token());
        msg
    }

    /// A reply addressed to this message's sender within the same conversation.
    pub fn reply(&self, from: &AgentId, performative: Performative, content: Content) -> AclMessage {
        AclMessage {
            performative,
            sender: from.clone(),
            receivers: vec![self.sender.clone()],
            conversation_id: self.conversation_id.clone(),
            reply_with: None,
            in_reply_to: self.reply_with.clone(),
            ontology: self.ontology.clone(),
            content,
        }
    }

    pub fn is_protocol_message(&self) -> bool {
        self.ontology == RBE_ONTOLOGY || self.ontology == PRESENCE_ONTOLOGY
    }

    pub fn validate(&self) -> Result<()> {
        self.sender.validate()?;
        if self.receivers.is_empty() {
            return Err(MessagingError::Invalid("message has no receivers".into()));
        }
        for receiver in &self.receivers {
            receiver.validate()?;
        }
        if self.is_protocol_message() && self.conversation_id.is_empty() {
            return Err(MessagingError::Invalid(format!(
                "{} message without conversation id",
                self.ontology
            )));
        }
        if self.performative == Performative::Request && self.ontology == RBE_ONTOLOGY {
            match &self.content {
                Content::Action(_) | Content::Job(_) => {}
                _ => {
                    return Err(MessagingError::Invalid(
                        "engine request must carry an engine action".into(),
                    ))
                }
            }
        }
        match &self.content {
            Content::Action(action) => action.validate()?,
            Content::Job(job) => {
                job.action.validate()?;
                job.origin.validate()?;
                if job.conversation_id != self.conversation_id {
                    return Err(MessagingError::Invalid(
                        "job conversation id differs from the message".into(),
                    ));
                }
            }
            Content::Result(result) => {
                if result.status == ResultStatus::Error && result.output.is_empty() {
                    return Err(MessagingError::Invalid(
                        "error result without diagnostic".into(),
                    ));
                }
            }
            Content::Text(_) => {}
        }
        Ok(())
    }
}

static CONVERSATION_COUNTER: AtomicU64 = AtomicU64::new(0);

fn process_tag() -> &'static str {
    static TAG: OnceLock<String> = OnceLock::new();
    TAG.get_or_init(|| format!("{:x}{:x}", std::process::id(), now_unix_ms() & 0xffff_ffff))
}

pub fn new_conversation_id() -> String {
    let n = CONVERSATION_COUNTER.fetch_add(1, Ordering::Relaxed);
    format!("c-{}-{n}", process_tag())
}

pub fn new_reply_token() -> String {
    let n = CONVERSATION_COUNTER.fetch_add(1, Ordering::Relaxed);
    format!("r-{}-{n}", process_tag())
}

pub fn now_unix_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

// Wire representation. Field order here is the byte order on the wire.

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireMessage {
    perf: String,
    sender: WireAgent,
    receivers: Vec<WireAgent>,
    conv: String,
    reply_with: Option<String>,
    in_reply_to: Option<String>,
    ontology: String,
    content: WireContent,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireAgent {
    name: String,
    address: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum WireContent {
    Text(String),
    Action(WireAction),
    Result(WireResult),
    Job(WireJobEnvelope),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireAction {
    code: String,
    params: Vec<String>,
    origin: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireResult {
    status: String,
    output: String,
    elapsed_ms: u64,
    timing: Option<ProtocolTiming>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireJobEnvelope {
    job: WireJob,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireJob {
    conv: String,
    origin: WireAgent,
    reply_with: Option<String>,
    action: WireAction,
    enqueued_at_ms: u64,
    t_e_us: u64,
}

impl From<&AgentId> for WireAgent {
    fn from(id: &AgentId) -> Self {
        WireAgent {
            name: id.name.clone(),
            address: id.address.clone(),
        }
    }
}

impl From<WireAgent> for AgentId {
    fn from(w: WireAgent) -> Self {
        AgentId {
            name: w.name,
            address: w.address,
        }
    }
}

impl From<&EngineAction> for WireAction {
    fn from(a: &EngineAction) -> Self {
        WireAction {
            code: a.code.as_str().to_string(),
            params: a.params.clone(),
            origin: a.origin.as_str().to_string(),
        }
    }
}

impl TryFrom<WireAction> for EngineAction {
    type Error = MessagingError;

    fn try_from(w: WireAction) -> Result<Self> {
        let code: ActionCode = w.code.parse()?;
        let origin: Origin = w.origin.parse()?;
        EngineAction::new(code, w.params, origin)
    }
}

fn to_wire(msg: &AclMessage) -> WireMessage {
    let content = match &msg.content {
        Content::Text(t) => WireContent::Text(t.clone()),
        Content::Action(a) => WireContent::Action(a.into()),
        Content::Result(r) => WireContent::Result(WireResult {
            status: r.status.as_str().to_string(),
            output: r.output.clone(),
            elapsed_ms: r.elapsed_ms,
            timing: r.timing,
        }),
        Content::Job(j) => WireContent::Job(WireJobEnvelope {
            job: WireJob {
                conv: j.conversation_id.clone(),
                origin: (&j.origin).into(),
                reply_with: j.reply_with.clone(),
                action: (&j.action).into(),
                enqueued_at_ms: j.enqueued_at_ms,
                t_e_us: j.t_e_us,
            },
        }),
    };
    WireMessage {
        perf: msg.performative.as_str().to_string(),
        sender: (&msg.sender).into(),
        receivers: msg.receivers.iter().map(Into::into).collect(),
        conv: msg.conversation_id.clone(),
        reply_with: msg.reply_with.clone(),
        in_reply_to: msg.in_reply_to.clone(),
        ontology: msg.ontology.clone(),
        content,
    }
}

fn from_wire(w: WireMessage) -> Result<AclMessage> {
    let content = match w.content {
        WireContent::Text(t) => Content::Text(t),
        WireContent::Action(a) => Content::Action(a.try_into()?),
        WireContent::Result(r) => Content::Result(ResultPayload {
            status: match r.status.as_str() {
                "OK" => ResultStatus::Ok,
                "ERROR" => ResultStatus::Error,
                other => {
                    return Err(MessagingError::UnknownSymbol(format!("result status {other:?}")))
                }
            },
            output: r.output,
            elapsed_ms: r.elapsed_ms,
            timing: r.timing,
        }),
        WireContent::Job(env) => Content::Job(PendingJob {
            conversation_id: env.job.conv,
            origin: env.job.origin.into(),
            reply_with: env.job.reply_with,
            action: env.job.action.try_into()?,
            enqueued_at_ms: env.job.enqueued_at_ms,
            t_e_us: env.job.t_e_us,
        }),
    };
    let msg = AclMessage {
        performative: w.perf.parse()?,
        sender: w.sender.into(),
        receivers: w.receivers.into_iter().map(Into::into).collect(),
        conversation_id: w.conv,
        reply_with: w.reply_with,
        in_reply_to: w.in_reply_to,
        ontology: w.ontology,
        content,
    };
    msg.validate()?;
    Ok(msg)
}

/// Encodes a message as one UTF-8 JSON line terminated by `\n`.
pub fn encode_message(msg: &AclMessage) -> Result<Vec<u8>> {
    msg.validate()?;
    let mut bytes = serde_json::to_vec(&to_wire(msg))
        .map_err(|e| MessagingError::Invalid(format!("serialization failed: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Decodes one wire line (the trailing newline is optional).
pub fn decode_message(bytes: &[u8]) -> Result<AclMessage> {
    let line = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    if line.contains(&b'\n') {
        return Err(MessagingError::Decode("more than one line".into()));
    }
    let text = std::str::from_utf8(line).map_err(|e| MessagingError::Decode(e.to_string()))?;
    let wire: WireMessage =
        serde_json::from_str(text).map_err(|e| MessagingError::Decode(e.to_string()))?;
    from_wire(wire)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agent(name: &str) -> AgentId {
        AgentId::new(name).unwrap()
    }

    #[test]
    fn action_table_covers_every_code() {
        let table = ActionTable::global();
        assert_eq!(table.version(), 1);
        assert_eq!(ActionCode::ALL.len(), 23);
        for code in ActionCode::ALL {
            let _ = table.arity(*code);
        }
        assert_eq!(table.arity(ActionCode::LoadFile), 1);
        assert_eq!(table.arity(ActionCode::RunNumberOfCycles), 1);
        assert_eq!(table.arity(ActionCode::GetFactSlot), 2);
        assert_eq!(table.arity(ActionCode::MakeReset), 0);
        assert_eq!(table.arity(ActionCode::EvalCommand), 1);
    }

    #[test]
    fn make_engine_action_examples() {
        let reset = make_engine_action("MAKE_RESET", vec![], Origin::Agent).unwrap();
        assert_eq!(reset.code, ActionCode::MakeReset);

        let run = make_engine_action("RUN_NUMBER_OF_CYCLES", vec!["5".into()], Origin::Agent).unwrap();
        assert_eq!(run.int_param(0), 5);

        let err = make_engine_action("GET_FACT_SLOT", vec!["2".into()], Origin::Human).unwrap_err();
        assert_eq!(err.kind(), "ARITY_ERROR");

        let err = make_engine_action("MAKE_EXPLODE", vec![], Origin::Human).unwrap_err();
        assert_eq!(err.kind(), "UNKNOWN_SYMBOL");

        let err =
            make_engine_action("RUN_NUMBER_OF_CYCLES", vec!["five".into()], Origin::Agent).unwrap_err();
        assert_eq!(err.kind(), "BAD_PARAM");
    }

    #[test]
    fn minimal_inform_round_trips() {
        let mut msg = AclMessage::new(
            Performative::Inform,
            agent("a"),
            agent("b"),
            "",
            Content::Text(String::new()),
        );
        msg.conversation_id = String::new();
        let bytes = encode_message(&msg).unwrap();
        assert_eq!(decode_message(&bytes).unwrap(), msg);
    }

    #[test]
    fn truncated_stream_is_a_decode_error() {
        let msg = AclMessage::presence_request(agent("a"), agent("b"));
        let bytes = encode_message(&msg).unwrap();
        let err = decode_message(&bytes[..bytes.len() / 2]).unwrap_err();
        assert_eq!(err.kind(), "DECODE_ERROR");
    }

    #[test]
    fn unknown_action_code_is_rejected_at_decode() {
        let action = make_engine_action("MAKE_RESET", vec![], Origin::Human).unwrap();
        let msg = AclMessage::engine_request(agent("a"), agent("b"), action);
        let text = String::from_utf8(encode_message(&msg).unwrap()).unwrap();
        let tampered = text.replace("MAKE_RESET", "MAKE_EXPLODE");
        assert_eq!(decode_message(tampered.as_bytes()).unwrap_err().kind(), "UNKNOWN_SYMBOL");

        let tampered = text.replace("\"REQUEST\"", "\"PROPOSE\"");
        assert_eq!(decode_message(tampered.as_bytes()).unwrap_err().kind(), "UNKNOWN_SYMBOL");
    }

    #[test]
    fn arity_mismatch_is_rejected_at_decode() {
        let action = make_engine_action("MAKE_RESET", vec![], Origin::Human).unwrap();
        let msg = AclMessage::engine_request(agent("a"), agent("b"), action);
        let text = String::from_utf8(encode_message(&msg).unwrap()).unwrap();
        let tampered = text.replace("\"params\":[]", "\"params\":[\"x\"]");
        assert_eq!(decode_message(tampered.as_bytes()).unwrap_err().kind(), "ARITY_ERROR");
    }

    #[test]
    fn invalid_messages_are_not_encoded() {
        let mut msg = AclMessage::presence_request(agent("a"), agent("b"));
        msg.receivers.clear();
        assert_eq!(encode_message(&msg).unwrap_err().kind(), "INVALID_MESSAGE");

        let mut msg = AclMessage::presence_request(agent("a"), agent("b"));
        msg.ontology = RBE_ONTOLOGY.into();
        assert_eq!(encode_message(&msg).unwrap_err().kind(), "INVALID_MESSAGE");

        assert!(AgentId::new("").is_err());
        assert!(AgentId::new("two words").is_err());
    }

    #[test]
    fn reply_threads_the_conversation() {
        let req = AclMessage::presence_request(agent("a"), agent("b"));
        let rep = req.reply(&agent("b"), Performative::Inform, Content::Text("alive".into()));
        assert_eq!(rep.conversation_id, req.conversation_id);
        assert_eq!(rep.in_reply_to, req.reply_with);
        assert_eq!(rep.receivers, vec![agent("a")]);
    }
}
