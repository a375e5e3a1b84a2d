use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::LiftError;
use crate::algebra::Structure;
use crate::logkit::{Event, EventLog, MinedRun, RolePolicy};
use crate::net::NodeId;
use crate::occurrence::OccurrenceAtom;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Position {
    Pre,
    Post,
}

/// The place an agent of `role` occupies right before (`pre`) or right after
/// (`post`) `event`, and which event data travels with it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleRule {
    pub role: String,
    pub event: String,
    pub position: Position,
    pub place: String,
    #[serde(default)]
    pub data: Vec<String>,
}

/// Place-role configuration, plus the naming choices of the later steps.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PlaceRoleConfig {
    #[serde(default)]
    pub rules: Vec<RoleRule>,
    /// Display label of the system transition of each event.
    #[serde(default)]
    pub transitions: BTreeMap<String, String>,
    /// Order in which unary functions are preferred during generalization.
    #[serde(default)]
    pub function_priority: Vec<String>,
    /// Set symbol of each initially marked place.
    #[serde(default)]
    pub schema: BTreeMap<String, String>,
    /// Name places `<role>:post:<event>` / `<role>:pre:<event>` when no rule
    /// applies, instead of failing.
    #[serde(default)]
    pub default_scheme: bool,
}

impl PlaceRoleConfig {
    pub fn from_json(input: impl Read) -> Result<Self, LiftError> {
        let config: PlaceRoleConfig =
            serde_json::from_reader(input).map_err(|e| LiftError::BadConfig(e.to_string()))?;
        let mut seen = BTreeMap::new();
        for r in &config.rules {
            if seen.insert((&r.role, &r.event, r.position), ()).is_some() {
                return Err(LiftError::BadConfig(format!(
                    "two rules for role {:?}, event {:?}, position {:?}",
                    r.role, r.event, r.position
                )));
            }
        }
        Ok(config)
    }

    pub fn rule(&self, role: &str, event: &str, position: Position) -> Option<&RoleRule> {
        self.rules
            .iter()
            .find(|r| r.role == role && r.event == event && r.position == position)
    }

    pub fn display_label<'a>(&'a self, event: &'a str) -> &'a str {
        self.transitions.get(event).map_or(event, String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlaceRole {
    pub agent: String,
    pub role: String,
    pub label: String,
}

/// Role labels of the run's places and the data keys of each run arc.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PlaceRoles {
    pub places: BTreeMap<NodeId, PlaceRole>,
    pub keys: BTreeMap<(NodeId, NodeId), Vec<String>>,
}

/// Assigns each place of a mined run its role label.
///
/// A place between events `e1` and `e2` of an agent is described by the
/// rule for `e1` (post) and the rule for `e2` (pre); when both exist they
/// must name the same place.
pub fn resolve_place_roles(
    mined: &MinedRun,
    policy: &RolePolicy,
    config: &PlaceRoleConfig,
) -> Result<PlaceRoles, LiftError> {
    let mut out = PlaceRoles::default();
    for (p, chain) in &mined.places {
        let role = policy
            .role_of(&chain.agent)
            .ok_or_else(|| LiftError::MissingRole(chain.agent.clone()))?;
        let post = chain
            .after
            .as_deref()
            .and_then(|e| config.rule(role, e, Position::Post));
        let pre = chain
            .before
            .as_deref()
            .and_then(|e| config.rule(role, e, Position::Pre));
        let (label, fallback_keys) = match (post, pre) {
            (Some(a), Some(b)) if a.place != b.place => {
                return Err(LiftError::PlaceRoleConflict {
                    place: p.clone(),
                    first: a.place.clone(),
                    second: b.place.clone(),
                })
            }
            (Some(r), _) | (None, Some(r)) => (r.place.clone(), r.data.clone()),
            (None, None) if config.default_scheme => {
                let label = match (&chain.after, &chain.before) {
                    (Some(e), _) => format!("{role}:post:{e}"),
                    (None, Some(e)) => format!("{role}:pre:{e}"),
                    (None, None) => return Err(LiftError::MissingPlaceRole(p.clone())),
                };
                (label, Vec::new())
            }
            (None, None) => return Err(LiftError::MissingPlaceRole(p.clone())),
        };
        let transition = |e: &str| {
            mined
                .transition_of(e)
                .cloned()
                .ok_or_else(|| LiftError::UnknownEvent(e.to_string()))
        };
        if let Some(e) = &chain.after {
            let keys = post.map_or_else(|| fallback_keys.clone(), |r| r.data.clone());
            out.keys.insert((transition(e)?, p.clone()), keys);
        }
        if let Some(e) = &chain.before {
            let keys = pre.map_or_else(|| fallback_keys.clone(), |r| r.data.clone());
            out.keys.insert((p.clone(), transition(e)?), keys);
        }
        out.places.insert(
            p.clone(),
            PlaceRole {
                agent: chain.agent.clone(),
                role: role.to_string(),
                label,
            },
        );
    }
    Ok(out)
}

/// An occurrence atom whose arcs carry the constants of its event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedAtom {
    pub atom: OccurrenceAtom,
    pub event: String,
    pub inscriptions: BTreeMap<(NodeId, NodeId), Vec<String>>,
    /// Role label of each atom place.
    pub roles: BTreeMap<NodeId, String>,
}

fn resolve_value(s: &Structure, value: &str) -> Result<(), LiftError> {
    match s.sorts_containing(value).as_slice() {
        [] => Err(LiftError::UnresolvableValue(value.to_string())),
        [_] => Ok(()),
        many => Err(LiftError::AmbiguousValue {
            value: value.to_string(),
            sorts: many.iter().map(|s| s.to_string()).collect(),
        }),
    }
}

/// Constants on run arc `arc`: the place's agent, then the event data for
/// the arc's keys.
fn arc_tuple(
    arc: &(NodeId, NodeId),
    place: &NodeId,
    event: &Event,
    s: &Structure,
    roles: &PlaceRoles,
) -> Result<Vec<String>, LiftError> {
    let role = roles
        .places
        .get(place)
        .ok_or_else(|| LiftError::MissingPlaceRole(place.clone()))?;
    let keys = roles
        .keys
        .get(arc)
        .ok_or_else(|| LiftError::MissingPlaceRole(place.clone()))?;
    let mut tuple = vec![role.agent.clone()];
    for k in keys {
        let v = event.data.get(k).ok_or_else(|| LiftError::MissingDataKey {
            event: event.name.clone(),
            key: k.clone(),
        })?;
        tuple.push(v.clone());
    }
    for v in &tuple {
        resolve_value(s, v)?;
    }
    Ok(tuple)
}

/// Moves the information of `event` onto the arcs of its atom.
pub fn annotate_atom(
    atom: &OccurrenceAtom,
    event: &Event,
    s: &Structure,
    roles: &PlaceRoles,
) -> Result<AnnotatedAtom, LiftError> {
    let t = atom.transition();
    let mut inscriptions = BTreeMap::new();
    let mut place_roles = BTreeMap::new();
    for (a, b) in atom.module().net().arcs() {
        let (atom_place, run_arc) = if a == t {
            let p = atom.source_place(b).expect("atom place");
            (b, (t.clone(), p.clone()))
        } else {
            let p = atom.source_place(a).expect("atom place");
            (a, (p.clone(), t.clone()))
        };
        let run_place = if a == t { &run_arc.1 } else { &run_arc.0 };
        let tuple = arc_tuple(&run_arc, run_place, event, s, roles)?;
        place_roles.insert(atom_place.clone(), roles.places[run_place].label.clone());
        inscriptions.insert((a.clone(), b.clone()), tuple);
    }
    Ok(AnnotatedAtom {
        atom: atom.clone(),
        event: event.name.clone(),
        inscriptions,
        roles: place_roles,
    })
}

/// Annotated atoms of the whole run in its default linearization. Every
/// inner place must hand on exactly the tuple it received.
pub fn annotate_run(
    mined: &MinedRun,
    log: &EventLog,
    s: &Structure,
    roles: &PlaceRoles,
) -> Result<Vec<AnnotatedAtom>, LiftError> {
    let run = &mined.run;
    let event_of: BTreeMap<&NodeId, &Event> = mined
        .transitions
        .iter()
        .map(|(e, t)| {
            log.event(e)
                .map(|ev| (t, ev))
                .ok_or_else(|| LiftError::UnknownEvent(e.clone()))
        })
        .collect::<Result<_, _>>()?;
    let mut atoms = Vec::new();
    for atom in run.atoms()? {
        let event = event_of[atom.transition()];
        atoms.push(annotate_atom(&atom, event, s, roles)?);
    }
    let net = run.module().net();
    for p in net.places() {
        let (Some(t1), Some(t2)) = (net.preset(p).next(), net.postset(p).next()) else {
            continue;
        };
        let produced = arc_tuple(&(t1.clone(), p.clone()), p, event_of[t1], s, roles)?;
        let consumed = arc_tuple(&(p.clone(), t2.clone()), p, event_of[t2], s, roles)?;
        if produced != consumed {
            return Err(LiftError::TokenMismatch {
                place: p.clone(),
                produced,
                consumed,
            });
        }
    }
    Ok(atoms)
}
