//! One platform node: local rule agents, known remote agents, and a gateway
//! for each development-mode agent.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use ruleagents::messaging::AgentId;
use ruleagents::rule_agent::{launch, RuleAgentConfig, Variant};
use ruleagents::runlevels::{install_default_scripts, Runlevel, ScriptSet};
use ruleagents::runtime::Platform;
use ruleagents_gateway::{server, Gateway, GatewayConfig};

use crate::CliError;

/// `NAME` or `NAME:nonblocking|blocking`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentSpec {
    pub name: String,
    pub variant: Variant,
}

impl FromStr for AgentSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, variant) = match s.split_once(':') {
            Some((name, variant)) => (name, variant.parse()?),
            None => (s, Variant::NonBlocking),
        };
        AgentId::new(name).map_err(|e| e.to_string())?;
        Ok(AgentSpec {
            name: name.to_string(),
            variant,
        })
    }
}

/// `NAME@HOST:PORT`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemoteSpec(pub AgentId);

impl FromStr for RemoteSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, address) = s
            .split_once('@')
            .ok_or_else(|| format!("`{s}` is not NAME@HOST:PORT"))?;
        AgentId::with_address(name, address)
            .map(RemoteSpec)
            .map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct NodeConfig {
    /// Address for inter-node traffic; `None` keeps the node local.
    pub listen: Option<String>,
    /// Per-agent `scripts/` and `rules/` directories live under `home/NAME`.
    pub home: PathBuf,
    pub agents: Vec<AgentSpec>,
    /// Agents that get a gateway.
    pub dev: Vec<String>,
    pub remotes: Vec<AgentId>,
    pub start_level: Runlevel,
    /// Host the gateways bind to.
    pub gateway_host: String,
    /// Gateway of the agent with ordinal `n` (1-based) listens on `base + n`.
    pub gateway_base: u16,
}

#[derive(Debug)]
pub struct RunningGateway {
    pub agent: String,
    pub addr: SocketAddr,
}

#[derive(Debug)]
pub struct Node {
    pub platform: Platform,
    pub node_address: Option<SocketAddr>,
    pub gateways: Vec<RunningGateway>,
}

impl Node {
    pub fn shutdown(&self) {
        self.platform.shutdown();
    }
}

pub fn agent_dirs(home: &Path, name: &str) -> (PathBuf, PathBuf) {
    let root = home.join(name);
    (root.join("scripts"), root.join("rules"))
}

/// Launches every agent, then starts the gateways on the current runtime.
pub async fn start(config: &NodeConfig) -> Result<Node, CliError> {
    for dev in &config.dev {
        if !config.agents.iter().any(|a| &a.name == dev) {
            return Err(CliError::Usage(format!("--dev {dev} names no local agent")));
        }
    }
    let platform = Platform::new();
    let node_address = match &config.listen {
        Some(addr) => Some(platform.listen(addr).map_err(|e| CliError::Launch(e.to_string()))?),
        None => None,
    };
    for remote in &config.remotes {
        platform
            .add_remote(remote.clone())
            .map_err(|e| CliError::Launch(e.to_string()))?;
    }
    let mut gateways = Vec::new();
    for (i, spec) in config.agents.iter().enumerate() {
        let (scripts, rules) = agent_dirs(&config.home, &spec.name);
        install_default_scripts(&scripts, spec.variant).map_err(|e| CliError::io(&scripts, e))?;
        std::fs::create_dir_all(&rules).map_err(|e| CliError::io(&rules, e))?;
        let mut agent = RuleAgentConfig::new(&spec.name, spec.variant);
        agent.scripts = Some(ScriptSet::dir(&scripts));
        agent.files_root = Some(rules);
        agent.start_level = config.start_level;
        let handle = launch(&platform, agent).map_err(|e| CliError::Launch(format!("{}: {e}", spec.name)))?;
        log::info!("{} started at level {}", spec.name, config.start_level);
        if config.dev.contains(&spec.name) {
            let ordinal = u16::try_from(i + 1).expect("agent count fits in u16");
            let port = config
                .gateway_base
                .checked_add(ordinal)
                .ok_or_else(|| CliError::Usage("gateway port out of range".into()))?;
            let addr: SocketAddr = format!("{}:{port}", config.gateway_host)
                .parse()
                .map_err(|e| CliError::Usage(format!("gateway address: {e}")))?;
            let gateway = Gateway::new(
                platform.clone(),
                handle,
                GatewayConfig {
                    scripts_dir: Some(scripts),
                    ..GatewayConfig::default()
                },
            );
            let (addr, _task) = server::spawn(addr, Arc::new(gateway))
                .await
                .map_err(|e| CliError::Launch(format!("gateway for {}: {e}", spec.name)))?;
            log::info!("{} gateway on ws://{addr}{}", spec.name, server::GATEWAY_PATH);
            gateways.push(RunningGateway {
                agent: spec.name.clone(),
                addr,
            });
        }
    }
    Ok(Node {
        platform,
        node_address,
        gateways,
    })
}
