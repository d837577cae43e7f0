//! A directory-scripted agent used by the runlevel tests.

use std::path::Path;
use std::time::{Duration, Instant};

use ruleagents::messaging::{AclMessage, AgentId, Content, Performative};
use ruleagents::rule_agent::{launch, RuleAgentConfig, Variant};
use ruleagents::runlevels::{Runlevel, ScriptSet};
use ruleagents::runtime::{AgentHandle, Platform, ReceiveTemplate};

pub const WAIT: Duration = Duration::from_secs(5);

pub const LEVEL_00: &str = "(behavior housekeeping (kind cyclic) (every 1000) (do (send Watcher INFORM chatter \"tick\")))\n";
pub const LEVEL_03: &str = "(behavior request-acceptor (kind cyclic)
  (on (performative REQUEST) (ontology rbe-actions) (content action))
  (do (forward-to-engine)))
(behavior engine-fsm (kind fsm))
";
pub const LEVEL_05: &str = "(behavior announce (kind one-shot) (do (send Watcher INFORM chatter \"in service\")))\n";
pub const LEVEL_06: &str = "(behavior farewell (kind one-shot) (do (send Watcher INFORM chatter \"rebooting\")))\n";

pub fn level_01(reply: &str) -> String {
    format!(
        "; presence answer\n(behavior greeter (kind cyclic)\n  (on (performative REQUEST) (ontology presence))\n  (do (reply INFORM \"{reply}\")))\n"
    )
}

pub fn write_scripts(dir: &Path) {
    std::fs::write(dir.join("level.00.rbs"), LEVEL_00).unwrap();
    std::fs::write(dir.join("level.01.rbs"), level_01("v1")).unwrap();
    std::fs::write(dir.join("level.03.rbs"), LEVEL_03).unwrap();
    std::fs::write(dir.join("level.05.rbs"), LEVEL_05).unwrap();
    std::fs::write(dir.join("level.06.rbs"), LEVEL_06).unwrap();
}

pub fn scripted(dir: &Path) -> (Platform, AgentHandle, AgentHandle) {
    let platform = Platform::new();
    let watcher = platform.register_agent(AgentId::new("Watcher").unwrap(), false).unwrap().handle();
    let mut config = RuleAgentConfig::new("Scripted", Variant::NonBlocking);
    config.scripts = Some(ScriptSet::dir(dir));
    config.start_level = Runlevel::L0;
    let agent = launch(&platform, config).unwrap();
    (platform, agent, watcher)
}

pub fn ping(platform: &Platform, watcher: &AgentHandle) -> Option<String> {
    let msg = AclMessage::presence_request(watcher.id().clone(), AgentId::new("Scripted").unwrap());
    platform.send(msg.clone()).unwrap();
    let reply = watcher.receive_matching(
        &ReceiveTemplate::any().conversation(msg.conversation_id.clone()),
        Duration::from_millis(500),
    )?;
    match reply.content {
        Content::Text(t) => Some(t),
        _ => None,
    }
}

pub fn chatter(watcher: &AgentHandle, text: &str) -> bool {
    let tpl = ReceiveTemplate::any().ontology("chatter");
    let deadline = Instant::now() + WAIT;
    while Instant::now() < deadline {
        if let Some(m) = watcher.receive_matching(&tpl, Duration::from_millis(100)) {
            if m.content == Content::Text(text.into()) {
                return true;
            }
        }
    }
    false
}

/// The ladder end to end: 0→1→3→5 activates the declared behaviors in
/// load-then-activate order, n-6! leaves the agent registered with nothing
/// active at level 0 and its queue intact, and an edited level.01 is picked
/// up by cycling 6→5.
pub fn ladder_check() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_scripts(dir.path());
    let (platform, agent, watcher) = scripted(dir.path());
    let result = (|| {
        let step = |level| agent.set_runlevel(level, WAIT).map_err(|e| e.to_string());
        ensure!(agent.status().active_behaviors().is_empty(), "active behaviors at level 0");
        let r1 = step(Runlevel::L1)?;
        ensure_eq!(r1.loaded, vec!["greeter"], "level 1 loads");
        ensure!(r1.activated.is_empty(), "level 1 activated {:?}", r1.activated);
        let r3 = step(Runlevel::L3)?;
        ensure_eq!(r3.loaded, vec!["request-acceptor", "engine-fsm"], "level 3 loads");
        ensure_eq!(r3.activated, vec!["housekeeping", "greeter"], "level 3 activates");
        let r5 = step(Runlevel::L5)?;
        ensure_eq!(r5.activated, vec!["request-acceptor", "engine-fsm", "announce"], "level 5 activates");
        ensure!(r5.in_service, "not in service at level 5");
        ensure_eq!(
            agent.status().activation_log,
            vec!["housekeeping", "greeter", "request-acceptor", "engine-fsm", "announce"],
            "activation order"
        );
        ensure_eq!(ping(&platform, &watcher).as_deref(), Some("v1"), "presence reply");

        let note = AclMessage::new(
            Performative::Inform,
            watcher.id().clone(),
            agent.id().clone(),
            "notes",
            Content::Text("keep me".into()),
        );
        platform.send(note.clone()).map_err(|e| e.to_string())?;
        std::fs::write(dir.path().join("level.01.rbs"), level_01("v2")).map_err(|e| e.to_string())?;
        step(Runlevel::L6)?;
        let status = agent.status();
        ensure_eq!(status.runlevel, Runlevel::L0, "level after n-6!");
        ensure!(status.active_behaviors().is_empty(), "active after n-6!: {:?}", status.active_behaviors());
        ensure!(platform.directory().contains(&"Scripted".to_string()), "deregistered by n-6!");
        ensure!(
            agent.mailbox().snapshot().iter().any(|m| m.conversation_id == note.conversation_id),
            "queue lost by n-6!"
        );

        step(Runlevel::L5)?;
        ensure_eq!(ping(&platform, &watcher).as_deref(), Some("v2"), "edited level.01 after 6→5");
        Ok("0→1→3→5 order, n-6! to an idle level 0, edit picked up".to_string())
    })();
    platform.shutdown();
    result
}
