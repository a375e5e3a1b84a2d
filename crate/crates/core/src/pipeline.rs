//! The eight mining steps chained together, with errors tagged by step.
//!
//! Steps: 1 read the log, 2 build agent behaviours and modules, 3 compose
//! them into a run, 4 annotate atoms, 5 generalize them, 6 compose the system
//! atoms, 7 fold places, 8 build the schema and replay the run.

use std::fmt;

use crate::algebra::Structure;
use crate::lifting::{
    annotate_run, compose_symbolic, fold_places, generalize_atom, replay, resolve_place_roles,
    schematize, AnnotatedAtom, ConformanceReport, LiftError, NetSchema, PlaceRoleConfig,
    SymbolicModule, SystemAtom, SystemNet,
};
use crate::logkit::{mine_run, EventLog, MineError, MinedRun, RolePolicy};

/// An error of one pipeline step; displays as `step N: message`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepError {
    pub step: u8,
    pub message: String,
}

impl StepError {
    pub fn new(step: u8, message: impl fmt::Display) -> Self {
        StepError {
            step,
            message: message.to_string(),
        }
    }
}

impl fmt::Display for StepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {}: {}", self.step, self.message)
    }
}

impl std::error::Error for StepError {}

fn mine_step(e: &MineError) -> u8 {
    match e {
        MineError::EmptyLog => 1,
        MineError::UnknownAgent(_)
        | MineError::EmptyBehavior(_)
        | MineError::MissingRole(_)
        | MineError::DuplicateEvent(_) => 2,
        _ => 3,
    }
}

/// Steps 1 to 3.
pub fn run_steps(log: &EventLog, policy: &RolePolicy) -> Result<MinedRun, StepError> {
    mine_run(log, policy).map_err(|e| StepError::new(mine_step(&e), e))
}

/// Everything produced by steps 1 to 8.
#[derive(Debug, Clone)]
pub struct SystemMining {
    pub mined: MinedRun,
    pub annotated: Vec<AnnotatedAtom>,
    pub atoms: Vec<SystemAtom>,
    pub symbolic: SymbolicModule,
    pub net: SystemNet,
    pub schema: NetSchema,
    pub report: ConformanceReport,
}

fn tag(step: u8) -> impl Fn(LiftError) -> StepError {
    move |e| StepError::new(step, e)
}

/// Steps 4 to 8 on an already mined run.
pub fn system_steps(
    mined: MinedRun,
    log: &EventLog,
    policy: &RolePolicy,
    s: &Structure,
    config: &PlaceRoleConfig,
) -> Result<SystemMining, StepError> {
    let roles = resolve_place_roles(&mined, policy, config).map_err(tag(4))?;
    let annotated = annotate_run(&mined, log, s, &roles).map_err(tag(4))?;
    let atoms = annotated
        .iter()
        .map(|a| generalize_atom(a, s, &config.function_priority))
        .collect::<Result<Vec<_>, _>>()
        .map_err(tag(5))?;
    let symbolic = compose_symbolic(&atoms, s).map_err(tag(6))?;
    let net = fold_places(&symbolic, s, &config.transitions).map_err(tag(7))?;
    let schema = schematize(&net, &config.schema).map_err(tag(8))?;
    let report = replay(&net, s, &mined.run, &symbolic.witnesses).map_err(tag(8))?;
    Ok(SystemMining {
        mined,
        annotated,
        atoms,
        symbolic,
        net,
        schema,
        report,
    })
}

/// Steps 1 to 8.
pub fn mine_system(
    log: &EventLog,
    policy: &RolePolicy,
    s: &Structure,
    config: &PlaceRoleConfig,
) -> Result<SystemMining, StepError> {
    let mined = run_steps(log, policy)?;
    system_steps(mined, log, policy, s, config)
}
