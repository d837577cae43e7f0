#![allow(dead_code)]

use std::sync::Arc;
use std::time::Duration;

use ruleagents::rule_agent::{launch, RuleAgentConfig, Variant};
use ruleagents::runlevels::{install_default_scripts, ScriptSet};
use ruleagents::runtime::{AgentHandle, Platform};
use ruleagents_gateway::{Frame, Gateway, GatewayConfig, GatewayRequest, GatewayResponse, Outcome, RequestKind};
use serde_json::{json, Value};
use tempfile::TempDir;

pub const LOCAL: &str = "Agent300";
pub const REMOTE: &str = "Agent200";

/// Two rule agents on one platform with a gateway attached to `LOCAL`.
pub struct Fixture {
    pub platform: Platform,
    pub gateway: Arc<Gateway>,
    pub remote: AgentHandle,
    pub scripts: TempDir,
    pub rules: TempDir,
}

impl Fixture {
    pub fn new() -> Self {
        let platform = Platform::new();
        let scripts = tempfile::tempdir().unwrap();
        let rules = tempfile::tempdir().unwrap();
        install_default_scripts(scripts.path(), Variant::NonBlocking).unwrap();
        let mut config = RuleAgentConfig::new(LOCAL, Variant::NonBlocking);
        config.scripts = Some(ScriptSet::dir(scripts.path()));
        config.files_root = Some(rules.path().to_path_buf());
        let local = launch(&platform, config).unwrap();
        let remote = launch(&platform, RuleAgentConfig::new(REMOTE, Variant::NonBlocking)).unwrap();
        let gateway = Gateway::new(
            platform.clone(),
            local,
            GatewayConfig {
                scripts_dir: Some(scripts.path().to_path_buf()),
                reply_timeout: Duration::from_secs(10),
                ..GatewayConfig::default()
            },
        );
        Fixture {
            platform,
            gateway: Arc::new(gateway),
            remote,
            scripts,
            rules,
        }
    }

    pub fn local(&self) -> &AgentHandle {
        self.gateway.agent()
    }
}

impl Drop for Fixture {
    fn drop(&mut self) {
        self.platform.shutdown();
    }
}

pub fn request(kind: RequestKind, target: Option<&str>, body: Value) -> GatewayRequest {
    GatewayRequest {
        id: json!(1),
        kind,
        target: target.map(str::to_string),
        body,
    }
}

/// Runs one request and returns its responses in emission order.
pub fn call(gateway: &Gateway, kind: RequestKind, target: Option<&str>, body: Value) -> Vec<GatewayResponse> {
    let mut out = Vec::new();
    let outcome = gateway.handle(request(kind, target, body), &mut |f: Frame| {
        if let Frame::Response(r) = f {
            out.push(r)
        }
    });
    assert!(matches!(outcome, Outcome::Done));
    out
}

/// The single response of a non-streaming request.
pub fn call_one(gateway: &Gateway, kind: RequestKind, target: Option<&str>, body: Value) -> GatewayResponse {
    let mut out = call(gateway, kind, target, body);
    assert_eq!(out.len(), 1, "expected one response, got {out:?}");
    out.pop().unwrap()
}

pub fn stages(responses: &[GatewayResponse]) -> Vec<String> {
    responses
        .iter()
        .map(|r| r.body["stage"].as_str().unwrap_or("-").to_string())
        .collect()
}

pub fn error_code(r: &GatewayResponse) -> &str {
    assert!(!r.ok, "expected an error, got {r:?}");
    r.body["error"].as_str().unwrap()
}
