//! Drives many concurrent engine requests at one agent and records what the
//! clients and the agent's trace observed.

use std::collections::HashMap;
use std::sync::{Arc, Barrier};
use std::time::{Duration, Instant};

use ruleagents::messaging::{make_engine_action, AclMessage, AgentId, Content, ContentKind, Origin, Performative};
use ruleagents::rule_agent::{launch, RuleAgentConfig, Variant};
use ruleagents::runtime::{Platform, ReceiveTemplate};
use ruleagents::trace::{Direction, TraceItem};

pub const TARGET: &str = "Target";
pub const CLIENTS: usize = 4;

pub type Request = (&'static str, Vec<String>);

pub struct Outcome {
    /// Performatives the target sent, per conversation; self-addressed ones
    /// are prefixed `self-`.
    pub per_conv_out: HashMap<String, Vec<String>>,
    pub dropped: u64,
    pub overlaps: usize,
    pub leases: u64,
    pub failures: usize,
    /// Problems seen by the clients.
    pub client_errors: Vec<String>,
}

fn client_side(client: &ruleagents::runtime::AgentHandle, sent: &[AclMessage], errors: &mut Vec<String>) -> usize {
    let mut failures = 0;
    for m in sent {
        let conv = ReceiveTemplate::any().conversation(m.conversation_id.clone());
        let Some(agree) = client.receive_matching(&conv.clone().performative(Performative::Agree), Duration::from_secs(30)) else {
            errors.push(format!("{}: no AGREE", m.conversation_id));
            continue;
        };
        if agree.in_reply_to != m.reply_with {
            errors.push(format!("{}: AGREE in-reply-to mismatch", m.conversation_id));
        }
        let Some(done) = client.receive_matching(&conv.content(ContentKind::Result), Duration::from_secs(30)) else {
            errors.push(format!("{}: no terminal reply", m.conversation_id));
            continue;
        };
        if !matches!(done.performative, Performative::Inform | Performative::Failure) {
            errors.push(format!("{}: terminal {}", m.conversation_id, done.performative));
        }
        if done.in_reply_to != m.reply_with || done.conversation_id != m.conversation_id {
            errors.push(format!("{}: terminal reply lost the conversation", m.conversation_id));
        }
        if !matches!(&done.content, Content::Result(r) if r.timing.is_some()) {
            errors.push(format!("{}: result without timing", m.conversation_id));
        }
        failures += usize::from(done.performative == Performative::Failure);
    }
    std::thread::sleep(Duration::from_millis(20));
    if !client.mailbox().is_empty() {
        errors.push(format!("stray messages: {:?}", client.mailbox().snapshot()));
    }
    failures
}

/// Sends `requests` round-robin from `CLIENTS` client agents, all starting
/// at once, to one non-blocking agent.
pub fn exercise(requests: &[Request]) -> Outcome {
    let platform = Platform::new();
    let target = launch(&platform, RuleAgentConfig::new(TARGET, Variant::NonBlocking)).unwrap();
    target
        .engine()
        .unwrap()
        .checkout()
        .unwrap()
        .load_program("(defrule r (n ?x) => (assert (seen ?x)))")
        .unwrap();
    let sub = target.trace().subscribe(requests.len() * 8 + 64);
    let clients: Vec<_> = (0..CLIENTS)
        .map(|i| platform.register_agent(AgentId::new(format!("Client{i}")).unwrap(), false).unwrap().handle())
        .collect();

    let barrier = Arc::new(Barrier::new(CLIENTS));
    let mut workers = Vec::new();
    for (i, client) in clients.into_iter().enumerate() {
        let mine: Vec<Request> = requests.iter().skip(i).step_by(CLIENTS).cloned().collect();
        let platform = platform.clone();
        let barrier = barrier.clone();
        workers.push(std::thread::spawn(move || {
            barrier.wait();
            let mut sent = Vec::new();
            for (code, params) in mine {
                let action = make_engine_action(code, params, Origin::Agent).unwrap();
                let msg = AclMessage::engine_request(client.id().clone(), AgentId::new(TARGET).unwrap(), action);
                platform.send(msg.clone()).unwrap();
                sent.push(msg);
            }
            let mut errors = Vec::new();
            let failures = client_side(&client, &sent, &mut errors);
            (failures, errors)
        }));
    }
    let mut failures = 0;
    let mut client_errors = Vec::new();
    for w in workers {
        let (f, e) = w.join().unwrap();
        failures += f;
        client_errors.extend(e);
    }

    let mut per_conv_out: HashMap<String, Vec<String>> = HashMap::new();
    let mut dropped = 0;
    let deadline = Instant::now() + Duration::from_secs(1);
    while Instant::now() < deadline {
        match sub.next_timeout(Duration::from_millis(50)) {
            Some(TraceItem::Event(e)) if e.direction == Direction::Out => {
                let tag = if e.peer == TARGET { format!("self-{}", e.performative) } else { e.performative.clone() };
                per_conv_out.entry(e.conversation_id.clone()).or_default().push(tag);
            }
            Some(TraceItem::Dropped(n)) => dropped += n,
            Some(_) => {}
            None => break,
        }
    }
    let cell = target.engine().unwrap();
    let outcome = Outcome {
        per_conv_out,
        dropped,
        overlaps: cell.overlaps(),
        leases: cell.leases(),
        failures,
        client_errors,
    };
    platform.shutdown();
    outcome
}

/// Exactly AGREE, self REQUEST, INFORM|FAILURE per conversation, no
/// overlapping engine use, one lease per job.
pub fn verify(requests: &[Request], out: &Outcome) -> Result<String, String> {
    ensure!(out.client_errors.is_empty(), "{}", out.client_errors.join("\n"));
    ensure_eq!(out.dropped, 0, "trace events dropped");
    ensure_eq!(out.per_conv_out.len(), requests.len(), "conversations seen");
    for (conv, seen) in &out.per_conv_out {
        let ok = seen.len() == 3
            && seen[0] == "AGREE"
            && seen[1] == "self-REQUEST"
            && (seen[2] == "INFORM" || seen[2] == "FAILURE");
        ensure!(ok, "{conv}: {seen:?}");
    }
    ensure_eq!(out.overlaps, 0, "overlapping engine leases");
    // one lease for setup, one per job
    ensure_eq!(out.leases, requests.len() as u64 + 1, "engine leases");
    Ok(format!(
        "{} requests from {CLIENTS} clients, {} FAILURE replies, 0 overlaps",
        requests.len(),
        out.failures
    ))
}

/// `n` cheap, always-accepted requests drawn from a seeded generator. Some
/// are meant to fail inside the engine; FAILURE is still a terminal reply.
pub fn random_requests(seed: u64, n: usize) -> Vec<Request> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| match rng.random_range(0..10) {
            0..=3 => ("MAKE_ASSERT_STRING", vec![format!("(n {})", rng.random_range(0..500))]),
            4 => ("RUN_NUMBER_OF_CYCLES", vec![rng.random_range(0..3).to_string()]),
            5 | 6 => {
                let cmd = ["(agenda)", "(rules)", "(+ 1 2)", "(nonsense"][rng.random_range(0..4)];
                ("EVAL_COMMAND", vec![cmd.to_string()])
            }
            7 => ("APPEND_INPUT_BUFFER", vec!["ab".repeat(rng.random_range(0..3))]),
            8 => ("SET_INPUT_BUFFER_COUNT", vec![]),
            _ => (
                "GET_FACT_SLOT",
                vec![rng.random_range(0..20).to_string(), rng.random_range(0..3).to_string()],
            ),
        })
        .collect()
}
