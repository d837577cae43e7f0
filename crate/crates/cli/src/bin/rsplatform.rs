use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ruleagents::runlevels::Runlevel;
use ruleagents::runtime::platform_port;
use ruleagents_cli::node::{start, AgentSpec, NodeConfig, RemoteSpec};

/// Starts a platform node with rule-based agents.
///
/// Each agent keeps its level scripts in HOME/NAME/scripts and its rule files
/// in HOME/NAME/rules. Agents named with --dev also get a WebSocket gateway
/// at /gateway on RS_PLATFORM_PORT + the agent's 1-based position.
#[derive(Parser)]
#[command(name = "rsplatform", version)]
struct Cli {
    /// Agents to launch, as NAME or NAME:nonblocking|blocking.
    #[arg(required = true)]
    agents: Vec<AgentSpec>,
    /// Development-mode agents to attach a gateway to.
    #[arg(long)]
    dev: Vec<String>,
    /// Agents on other nodes, as NAME@HOST:PORT.
    #[arg(long)]
    remote: Vec<RemoteSpec>,
    /// Address for traffic from other nodes [default: 127.0.0.1:RS_PLATFORM_PORT].
    #[arg(long)]
    listen: Option<String>,
    /// Do not accept traffic from other nodes.
    #[arg(long, conflicts_with = "listen")]
    local_only: bool,
    #[arg(long, default_value = "agents")]
    home: PathBuf,
    #[arg(long, default_value_t = 5, value_parser = parse_level)]
    runlevel: u8,
    #[arg(long, default_value = "127.0.0.1")]
    gateway_host: String,
}

fn parse_level(s: &str) -> Result<u8, String> {
    let n: i64 = s.parse().map_err(|_| format!("`{s}` is not a runlevel"))?;
    Runlevel::from_value(n).map(|l| l.value()).map_err(|e| e.to_string())
}

#[tokio::main]
async fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let listen = if cli.local_only {
        None
    } else {
        Some(cli.listen.unwrap_or_else(|| format!("127.0.0.1:{}", platform_port())))
    };
    let config = NodeConfig {
        listen,
        home: cli.home,
        agents: cli.agents,
        dev: cli.dev,
        remotes: cli.remote.into_iter().map(|r| r.0).collect(),
        start_level: Runlevel::from_value(cli.runlevel.into()).expect("validated by clap"),
        gateway_host: cli.gateway_host,
        gateway_base: platform_port(),
    };
    let node = match start(&config).await {
        Ok(node) => node,
        Err(e) => {
            eprintln!("rsplatform: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(addr) = node.node_address {
        println!("node listening on {addr}");
    }
    for g in &node.gateways {
        println!("{} gateway: ws://{}/gateway", g.agent, g.addr);
    }
    if let Err(e) = tokio::signal::ctrl_c().await {
        eprintln!("rsplatform: cannot wait for Ctrl-C: {e}");
    }
    tokio::task::spawn_blocking(move || node.shutdown())
        .await
        .expect("shutdown task");
    ExitCode::SUCCESS
}
