use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::log::{Event, EventLog, RolePolicy};
use crate::composition::{compose, dissenting_pairs, ComposeError, HarmonicPair};
use crate::net::{Module, ModuleError, NodeId, Side};
use crate::occurrence::{as_occurrence, OccurrenceError, OccurrenceModule};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MineError {
    #[error("empty log")]
    EmptyLog,
    #[error("agent {0:?} occurs in no event")]
    UnknownAgent(String),
    #[error("empty behavior for agent {0:?}")]
    EmptyBehavior(String),
    #[error("missing role for agent {0}")]
    MissingRole(String),
    #[error("event {0:?} occurs twice in one behavior")]
    DuplicateEvent(String),
    #[error("composing the module of agent {agent:?} creates dissenting pairs {}", fmt_pairs(.pairs))]
    DissentError {
        agent: String,
        pairs: Vec<(HarmonicPair, HarmonicPair)>,
    },
    #[error("composition is not an occurrence net: {0}")]
    NotAnOccurrenceNet(OccurrenceError),
    #[error(transparent)]
    Compose(#[from] ComposeError),
    #[error(transparent)]
    Module(#[from] ModuleError),
}

fn fmt_pairs(pairs: &[(HarmonicPair, HarmonicPair)]) -> String {
    pairs
        .iter()
        .map(|(p, q)| format!("({}, {})", p.label, q.label))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Non-fatal findings of [`mine_run`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MiningWarning {
    /// A multi-agent event whose agents all sit on one side of the policy.
    OneSidedEvent { event: String, side: Side },
}

impl fmt::Display for MiningWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MiningWarning::OneSidedEvent { event, side } => {
                write!(f, "event {event:?} only involves {side}-side agents")
            }
        }
    }
}

/// A local state of one agent, between two consecutive events of its
/// behavior (`None` at either end).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainPlace {
    pub agent: String,
    pub after: Option<String>,
    pub before: Option<String>,
}

/// Result of mining one log.
#[derive(Debug, Clone)]
pub struct MinedRun {
    pub run: OccurrenceModule,
    /// Agents in the order their modules were composed.
    pub agents: Vec<String>,
    pub places: BTreeMap<NodeId, ChainPlace>,
    /// Run transition of each event.
    pub transitions: BTreeMap<String, NodeId>,
    pub warnings: Vec<MiningWarning>,
}

impl MinedRun {
    pub fn transition_of(&self, event: &str) -> Option<&NodeId> {
        self.transitions.get(event)
    }

    /// Event pairs related by neither `<` nor `>`, by event name.
    pub fn unordered_event_pairs(&self) -> Vec<(String, String)> {
        let events: Vec<(&String, &NodeId)> = self.transitions.iter().collect();
        let mut out = Vec::new();
        for (i, (a, ta)) in events.iter().enumerate() {
            for (b, tb) in &events[i + 1..] {
                if self.run.concurrent(ta, tb) {
                    out.push(((*a).clone(), (*b).clone()));
                }
            }
        }
        out
    }
}

/// Events involving `agent`, in log order.
pub fn agent_behavior<'a>(log: &'a EventLog, agent: &str) -> Result<Vec<&'a Event>, MineError> {
    let behavior: Vec<&Event> = log.events().iter().filter(|e| e.involves(agent)).collect();
    if behavior.is_empty() {
        return Err(MineError::UnknownAgent(agent.to_string()));
    }
    Ok(behavior)
}

/// Sort key deciding the composition order: right-side agents first, then
/// left-side ones, alphabetically within a side.
fn fold_key<'a>(policy: &RolePolicy, agent: &'a str) -> Result<(u8, &'a str), MineError> {
    match policy.side_of(agent) {
        Some(Side::Right) => Ok((0, agent)),
        Some(Side::Left) => Ok((1, agent)),
        None => Err(MineError::MissingRole(agent.to_string())),
    }
}

/// The given agents sorted into composition order.
pub fn fold_order<'a>(
    policy: &RolePolicy,
    agents: impl IntoIterator<Item = &'a str>,
) -> Result<Vec<&'a str>, MineError> {
    let mut keyed = agents
        .into_iter()
        .map(|a| fold_key(policy, a))
        .collect::<Result<Vec<_>, _>>()?;
    keyed.sort();
    keyed.dedup();
    Ok(keyed.into_iter().map(|(_, a)| a).collect())
}

fn transition_id(agent: &str, event: &str) -> NodeId {
    NodeId::new(format!("{agent}:{event}"))
}

fn place_id(agent: &str, i: usize) -> NodeId {
    NodeId::new(format!("{agent}:p{i}"))
}

/// The chain module `p0 t1 p1 ... tn pn` of one agent's behavior.
///
/// Where an event's transition goes depends on the agent's position among
/// the event's agents in composition order: a sole agent keeps it interior,
/// the first exposes it on the right, the last on the left, and agents in
/// between on both sides so the merged transition is passed on.
pub fn behavior_to_module(
    behavior: &[&Event],
    agent: &str,
    policy: &RolePolicy,
) -> Result<OccurrenceModule, MineError> {
    if behavior.is_empty() {
        return Err(MineError::EmptyBehavior(agent.to_string()));
    }
    fold_key(policy, agent)?;
    let mut seen = BTreeSet::new();
    let mut b = Module::builder();
    let mut prev = "start";
    for (i, e) in behavior.iter().enumerate() {
        if !seen.insert(e.name.as_str()) {
            return Err(MineError::DuplicateEvent(e.name.clone()));
        }
        let t = transition_id(agent, &e.name);
        b = b
            .place(place_id(agent, i), format!("{prev}→{}/{agent}", e.name))
            .transition(t.clone(), e.name.as_str())
            .arc(place_id(agent, i), t.clone())
            .arc(t.clone(), place_id(agent, i + 1));
        let involved = fold_order(policy, e.agents.iter().map(String::as_str))?;
        let pos = involved.iter().position(|a| *a == agent).unwrap_or(0);
        if involved.len() > 1 {
            if pos + 1 < involved.len() {
                b = b.right(t.clone());
            }
            if pos > 0 {
                b = b.left(t);
            }
        }
        prev = e.name.as_str();
    }
    b = b.place(place_id(agent, behavior.len()), format!("{prev}→end/{agent}"));
    let module = b.build()?;
    Ok(as_occurrence(&module).expect("chains are occurrence nets"))
}

/// Composes all agents' chain modules into one run.
pub fn mine_run(log: &EventLog, policy: &RolePolicy) -> Result<MinedRun, MineError> {
    if log.is_empty() {
        return Err(MineError::EmptyLog);
    }
    let agents = fold_order(policy, log.agents())?;

    let mut warnings = Vec::new();
    for e in log.events() {
        let sides: BTreeSet<Side> = e.agents.iter().filter_map(|a| policy.side_of(a)).collect();
        if e.agents.len() > 1 && sides.len() == 1 {
            warnings.push(MiningWarning::OneSidedEvent {
                event: e.name.clone(),
                side: *sides.iter().next().expect("one side"),
            });
        }
    }

    let mut places = BTreeMap::new();
    let mut acc: Option<OccurrenceModule> = None;
    for agent in &agents {
        let behavior = agent_behavior(log, agent)?;
        for i in 0..=behavior.len() {
            places.insert(
                place_id(agent, i),
                ChainPlace {
                    agent: agent.to_string(),
                    after: i.checked_sub(1).map(|j| behavior[j].name.clone()),
                    before: behavior.get(i).map(|e| e.name.clone()),
                },
            );
        }
        let module = behavior_to_module(&behavior, agent, policy)?;
        acc = Some(match acc {
            None => module,
            Some(prev) => {
                let pairs = dissenting_pairs(&prev, &module);
                if !pairs.is_empty() {
                    return Err(MineError::DissentError {
                        agent: agent.to_string(),
                        pairs,
                    });
                }
                let composed = compose(prev.module(), module.module())?;
                as_occurrence(&composed).map_err(MineError::NotAnOccurrenceNet)?
            }
        });
    }
    let run = acc.expect("log has at least one agent");

    let transitions = log
        .events()
        .iter()
        .map(|e| {
            let t = run
                .module()
                .transitions_labeled(&e.name)
                .next()
                .expect("every event becomes a transition")
                .clone();
            (e.name.clone(), t)
        })
        .collect();

    Ok(MinedRun {
        run,
        agents: agents.into_iter().map(String::from).collect(),
        places,
        transitions,
        warnings,
    })
}
