//! From a mined run to a high-level system net: arc inscriptions, system
//! atoms, place folding, net schemas and the firing rule.

mod annotate;
mod generalize;
mod system;

use thiserror::Error;

use crate::algebra::AlgebraError;
use crate::composition::ComposeError;
use crate::net::NodeId;
use crate::occurrence::OccurrenceError;

pub use annotate::{
    annotate_atom, annotate_run, resolve_place_roles, AnnotatedAtom, PlaceRole, PlaceRoleConfig,
    PlaceRoles, Position, RoleRule,
};
pub use generalize::{generalize_atom, SystemAtom};
pub use system::{
    compose_symbolic, fire, fold_places, instantiate, replay, schematize, Arc, Blocking, ConformanceReport,
    Marking, NetSchema, SchemaToken, SymbolDecl, SymbolicModule, SystemNet, SystemTransition, Token,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LiftError {
    #[error("no role for agent {0}")]
    MissingRole(String),
    #[error("no place role for place {0}")]
    MissingPlaceRole(NodeId),
    #[error("place {place} is both {first:?} and {second:?}")]
    PlaceRoleConflict {
        place: NodeId,
        first: String,
        second: String,
    },
    #[error("event {event:?} has no data entry {key:?}")]
    MissingDataKey { event: String, key: String },
    #[error("value {0:?} lies in no carrier")]
    UnresolvableValue(String),
    #[error("value {value:?} lies in several carriers: {}", .sorts.join(", "))]
    AmbiguousValue { value: String, sorts: Vec<String> },
    #[error("place {place} receives {produced:?} but hands on {consumed:?}")]
    TokenMismatch {
        place: NodeId,
        produced: Vec<String>,
        consumed: Vec<String>,
    },
    #[error("{constant:?} matches several terms: {}", .candidates.join(", "))]
    AmbiguousFunctionalMatch {
        constant: String,
        candidates: Vec<String>,
    },
    #[error("place {place:?} carries tuples of sorts ({}) and ({})", .first.join(", "), .second.join(", "))]
    SortClash {
        place: String,
        first: Vec<String>,
        second: Vec<String>,
    },
    #[error("marked place {0:?} has no set symbol")]
    UnmappedMarkedPlace(String),
    #[error("unknown place {0:?}")]
    UnknownPlace(String),
    #[error("symbol {0:?} would denote two different token sets")]
    SymbolConflict(String),
    #[error("symbol {0:?} is not interpreted")]
    UninterpretedSymbol(String),
    #[error("transition {transition:?} is not enabled; missing {}", fmt_missing(.missing))]
    NotEnabled {
        transition: String,
        missing: Vec<(String, Token)>,
    },
    #[error("unknown transition {0:?}")]
    UnknownTransition(String),
    #[error("run transition label {0:?} has no net transition")]
    UnknownTransitionLabel(String),
    #[error("no witness for run transition {0}")]
    MissingWitness(NodeId),
    #[error("unknown event {0:?}")]
    UnknownEvent(String),
    #[error("bad place-role config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Compose(#[from] ComposeError),
    #[error(transparent)]
    Occurrence(#[from] OccurrenceError),
}

fn fmt_missing(missing: &[(String, Token)]) -> String {
    missing
        .iter()
        .map(|(p, t)| format!("({}) on {p:?}", t.join(", ")))
        .collect::<Vec<_>>()
        .join(", ")
}

#[cfg(test)]
mod tests;
