//! From event logs to partially ordered runs: per-agent behaviours, their
//! chain modules, and the composition of those modules.

mod log;
mod run;

pub use log::{parse_log, Event, EventLog, LogError, LogFormat, RolePolicy};
pub use run::{
    agent_behavior, behavior_to_module, fold_order, mine_run, ChainPlace, MineError, MinedRun,
    MiningWarning,
};
