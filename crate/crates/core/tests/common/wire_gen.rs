//! Random valid ACL messages from a seeded generator, for round-trip checks
//! outside proptest.

use rand::distr::{Alphanumeric, SampleString};
use rand::Rng;
use ruleagents::messaging::{
    AclMessage, ActionCode, ActionTable, AgentId, Content, EngineAction, Origin, ParamType,
    PendingJob, Performative, ProtocolTiming, ResultPayload, ResultStatus, DIRECTORY_ONTOLOGY,
    PRESENCE_ONTOLOGY, RBE_ONTOLOGY,
};

const PERFORMATIVES: [Performative; 6] = [
    Performative::Request,
    Performative::Agree,
    Performative::Refuse,
    Performative::Inform,
    Performative::Failure,
    Performative::NotUnderstood,
];

fn token<R: Rng>(rng: &mut R) -> String {
    // printable ASCII without spaces
    let len = rng.random_range(1..=16);
    (0..len).map(|_| rng.random_range(b'!'..=b'~') as char).collect()
}

/// Arbitrary text including quotes, escapes, newlines and non-ASCII.
fn text<R: Rng>(rng: &mut R) -> String {
    const EXTRA: [&str; 8] = ["\"", "\\", "\n", "\t", "é", "→", "\u{0}", "🦀"];
    let len = rng.random_range(0..12);
    let mut out = Alphanumeric.sample_string(rng, len);
    for _ in 0..rng.random_range(0..4) {
        out.push_str(EXTRA[rng.random_range(0..EXTRA.len())]);
    }
    out
}

fn agent<R: Rng>(rng: &mut R) -> AgentId {
    AgentId {
        name: token(rng),
        address: rng
            .random_bool(0.3)
            .then(|| format!("10.0.0.{}:{}", rng.random_range(0..255), rng.random_range(1..65535))),
    }
}

fn action<R: Rng>(rng: &mut R) -> EngineAction {
    let code = ActionCode::ALL[rng.random_range(0..ActionCode::ALL.len())];
    let params = ActionTable::global()
        .params(code)
        .iter()
        .map(|p| match p.ty {
            ParamType::Int => rng.random::<i64>().to_string(),
            ParamType::Text => text(rng),
        })
        .collect();
    let origin = if rng.random_bool(0.5) { Origin::Human } else { Origin::Agent };
    EngineAction::new(code, params, origin).unwrap()
}

pub fn random_message<R: Rng>(rng: &mut R) -> AclMessage {
    let performative = PERFORMATIVES[rng.random_range(0..PERFORMATIVES.len())];
    let ontology = match rng.random_range(0..4) {
        0 => RBE_ONTOLOGY.to_string(),
        1 => PRESENCE_ONTOLOGY.to_string(),
        2 => DIRECTORY_ONTOLOGY.to_string(),
        _ => Alphanumeric.sample_string(rng, 8).to_lowercase(),
    };
    let conversation_id = token(rng);
    let engine_request = performative == Performative::Request && ontology == RBE_ONTOLOGY;
    let content = match (rng.random_range(0..4), engine_request) {
        (0, false) => Content::Text(text(rng)),
        (0 | 1, _) => Content::Action(action(rng)),
        (2, false) => Content::Result(ResultPayload {
            status: if rng.random_bool(0.5) { ResultStatus::Ok } else { ResultStatus::Error },
            output: format!("x{}", text(rng)),
            elapsed_ms: rng.random(),
            timing: rng.random_bool(0.5).then(|| ProtocolTiming {
                t_e_us: rng.random(),
                t_p_us: rng.random(),
            }),
        }),
        _ => Content::Job(PendingJob {
            conversation_id: conversation_id.clone(),
            origin: agent(rng),
            reply_with: rng.random_bool(0.5).then(|| token(rng)),
            action: action(rng),
            enqueued_at_ms: rng.random(),
            t_e_us: rng.random(),
        }),
    };
    AclMessage {
        performative,
        sender: agent(rng),
        receivers: (0..rng.random_range(1..4)).map(|_| agent(rng)).collect(),
        conversation_id,
        reply_with: rng.random_bool(0.5).then(|| token(rng)),
        in_reply_to: rng.random_bool(0.5).then(|| token(rng)),
        ontology,
        content,
    }
}

/// REQUEST MAKE_RESET from a human, with fixed tokens.
pub fn golden_message() -> AclMessage {
    let action = EngineAction::new(ActionCode::MakeReset, vec![], Origin::Human).unwrap();
    let mut msg = AclMessage::engine_request(
        AgentId::new("Agent300").unwrap(),
        AgentId::new("Agent200").unwrap(),
        action,
    );
    msg.conversation_id = "c-golden-1".into();
    msg.reply_with = Some("r-golden-1".into());
    msg
}

pub fn golden_path() -> std::path::PathBuf {
    std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/request_make_reset.jsonl")
}

/// Encodes `n` random messages, decodes them back and re-encodes them;
/// both the values and the bytes must survive. Also checks the frozen
/// golden bytes.
pub fn round_trip(seed: u64, n: usize) -> Result<String, String> {
    use rand::SeedableRng;
    use ruleagents::messaging::{decode_message, encode_message};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut bytes_total = 0;
    for i in 0..n {
        let msg = random_message(&mut rng);
        let bytes = encode_message(&msg).map_err(|e| format!("message {i}: {e}"))?;
        let decoded = decode_message(&bytes).map_err(|e| format!("message {i}: {e}"))?;
        ensure!(decoded == msg, "message {i} changed: {msg:?} -> {decoded:?}");
        ensure!(encode_message(&decoded).unwrap() == bytes, "message {i} re-encodes differently");
        bytes_total += bytes.len();
    }
    let golden = encode_message(&golden_message()).unwrap();
    ensure!(encode_message(&golden_message()).unwrap() == golden, "golden encoding varies between calls");
    let frozen = std::fs::read(golden_path()).map_err(|e| e.to_string())?;
    ensure!(frozen == golden, "golden bytes changed:\n{}\n{}", String::from_utf8_lossy(&frozen), String::from_utf8_lossy(&golden));
    Ok(format!("{n} messages, {bytes_total} bytes, golden stable"))
}
