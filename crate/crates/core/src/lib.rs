pub mod bench;
pub mod engine;
pub mod messaging;
pub mod rule_agent;
pub mod runlevels;
pub mod runtime;
pub mod trace;
