//! Petri nets and modules: a net `(P, T; F)` together with a left and a
//! right interface of labeled nodes.
//!
//! Node ids are opaque tokens. Labels are what composition matches on; two
//! nodes may share a label but never an id. A node produced by merging a
//! harmonic pair keeps a record of the original ids it stands for (its
//! origins), so repeated compositions stay flat.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Opaque node identity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

/// A non-empty label. Equality is exact string equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Label(String);

impl Label {
    pub fn new(text: impl Into<String>) -> Result<Self, ModuleError> {
        let text = text.into();
        if text.is_empty() {
            return Err(ModuleError::EmptyLabel);
        }
        Ok(Label(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Label::new(s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Place,
    Transition,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Place => f.write_str("place"),
            NodeKind::Transition => f.write_str("transition"),
        }
    }
}

/// Which interface of a module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Left => f.write_str("left"),
            Side::Right => f.write_str("right"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModuleError {
    #[error("label must not be empty")]
    EmptyLabel,
    #[error("node {0} is declared both as a place and as a transition")]
    DuplicateNode(NodeId),
    #[error("arc ({from}, {to}) does not connect a place and a transition")]
    NonBipartiteFlow { from: NodeId, to: NodeId },
    #[error("arc ({from}, {to}) refers to an unknown node")]
    DanglingArc { from: NodeId, to: NodeId },
    #[error("node {0} has no label")]
    MissingLabel(NodeId),
    #[error("label given for unknown node {0}")]
    LabelForUnknownNode(NodeId),
    #[error("{side} interface node {node} is not a node of the net")]
    UnknownInterfaceNode { side: Side, node: NodeId },
    #[error("{side} interface contains two nodes labeled {label:?}")]
    DuplicateInterfaceLabel { side: Side, label: Label },
    #[error("origin record given for unknown node {0}")]
    OriginForUnknownNode(NodeId),
}

/// A Petri net `(P, T; F)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Net {
    places: BTreeSet<NodeId>,
    transitions: BTreeSet<NodeId>,
    arcs: BTreeSet<(NodeId, NodeId)>,
}

impl Net {
    /// Checks disjointness of places and transitions, arc endpoints and
    /// bipartiteness of the flow.
    pub fn new(
        places: BTreeSet<NodeId>,
        transitions: BTreeSet<NodeId>,
        arcs: BTreeSet<(NodeId, NodeId)>,
    ) -> Result<Self, ModuleError> {
        if let Some(n) = places.intersection(&transitions).next() {
            return Err(ModuleError::DuplicateNode(n.clone()));
        }
        for (from, to) in &arcs {
            let kind = |n: &NodeId| {
                if places.contains(n) {
                    Some(NodeKind::Place)
                } else if transitions.contains(n) {
                    Some(NodeKind::Transition)
                } else {
                    None
                }
            };
            match (kind(from), kind(to)) {
                (Some(a), Some(b)) if a != b => {}
                (Some(_), Some(_)) => {
                    return Err(ModuleError::NonBipartiteFlow {
                        from: from.clone(),
                        to: to.clone(),
                    })
                }
                _ => {
                    return Err(ModuleError::DanglingArc {
                        from: from.clone(),
                        to: to.clone(),
                    })
                }
            }
        }
        Ok(Net {
            places,
            transitions,
            arcs,
        })
    }

    pub fn places(&self) -> &BTreeSet<NodeId> {
        &self.places
    }

    pub fn transitions(&self) -> &BTreeSet<NodeId> {
        &self.transitions
    }

    pub fn arcs(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.arcs
    }

    pub fn contains(&self, n: &NodeId) -> bool {
        self.places.contains(n) || self.transitions.contains(n)
    }

    pub fn kind(&self, n: &NodeId) -> Option<NodeKind> {
        if self.places.contains(n) {
            Some(NodeKind::Place)
        } else if self.transitions.contains(n) {
            Some(NodeKind::Transition)
        } else {
            None
        }
    }

    /// All nodes in id order.
    pub fn nodes(&self) -> impl Iterator<Item = &NodeId> {
        let mut all: Vec<&NodeId> = self.places.iter().chain(&self.transitions).collect();
        all.sort();
        all.into_iter()
    }

    pub fn node_count(&self) -> usize {
        self.places.len() + self.transitions.len()
    }

    /// Nodes `y` with an arc `(n, y)`.
    pub fn postset<'a>(&'a self, n: &'a NodeId) -> impl Iterator<Item = &'a NodeId> + 'a {
        self.arcs
            .iter()
            .filter(move |(a, _)| a == n)
            .map(|(_, b)| b)
    }

    /// Nodes `x` with an arc `(x, n)`.
    pub fn preset<'a>(&'a self, n: &'a NodeId) -> impl Iterator<Item = &'a NodeId> + 'a {
        self.arcs
            .iter()
            .filter(move |(_, b)| b == n)
            .map(|(a, _)| a)
    }
}

/// A net with a left interface `*N` and a right interface `N*`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Module {
    net: Net,
    labels: BTreeMap<NodeId, Label>,
    left: BTreeSet<NodeId>,
    right: BTreeSet<NodeId>,
    origins: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl Module {
    /// Validates and assembles a module.
    pub fn new(
        net: Net,
        labels: BTreeMap<NodeId, Label>,
        left: BTreeSet<NodeId>,
        right: BTreeSet<NodeId>,
    ) -> Result<Self, ModuleError> {
        Self::with_origins(net, labels, left, right, BTreeMap::new())
    }

    pub(crate) fn with_origins(
        net: Net,
        labels: BTreeMap<NodeId, Label>,
        left: BTreeSet<NodeId>,
        right: BTreeSet<NodeId>,
        origins: BTreeMap<NodeId, BTreeSet<NodeId>>,
    ) -> Result<Self, ModuleError> {
        for n in net.nodes() {
            if !labels.contains_key(n) {
                return Err(ModuleError::MissingLabel(n.clone()));
            }
        }
        if let Some(n) = labels.keys().find(|n| !net.contains(n)) {
            return Err(ModuleError::LabelForUnknownNode(n.clone()));
        }
        if let Some(n) = origins.keys().find(|n| !net.contains(n)) {
            return Err(ModuleError::OriginForUnknownNode(n.clone()));
        }
        for (side, iface) in [(Side::Left, &left), (Side::Right, &right)] {
            let mut seen = BTreeSet::new();
            for n in iface {
                if !net.contains(n) {
                    return Err(ModuleError::UnknownInterfaceNode {
                        side,
                        node: n.clone(),
                    });
                }
                let label = &labels[n];
                if !seen.insert(label) {
                    return Err(ModuleError::DuplicateInterfaceLabel {
                        side,
                        label: label.clone(),
                    });
                }
            }
        }
        Ok(Module {
            net,
            labels,
            left,
            right,
            origins,
        })
    }

    pub fn empty() -> Self {
        Module {
            net: Net::default(),
            labels: BTreeMap::new(),
            left: BTreeSet::new(),
            right: BTreeSet::new(),
            origins: BTreeMap::new(),
        }
    }

    pub fn builder() -> ModuleBuilder {
        ModuleBuilder::default()
    }

    pub fn net(&self) -> &Net {
        &self.net
    }

    pub fn labels(&self) -> &BTreeMap<NodeId, Label> {
        &self.labels
    }

    pub fn label(&self, n: &NodeId) -> Option<&Label> {
        self.labels.get(n)
    }

    /// The left interface `*N`.
    pub fn left(&self) -> &BTreeSet<NodeId> {
        &self.left
    }

    /// The right interface `N*`.
    pub fn right(&self) -> &BTreeSet<NodeId> {
        &self.right
    }

    pub fn interface(&self, side: Side) -> &BTreeSet<NodeId> {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    /// Nodes in neither interface.
    pub fn interior(&self) -> BTreeSet<NodeId> {
        self.net
            .nodes()
            .filter(|n| !self.left.contains(*n) && !self.right.contains(*n))
            .cloned()
            .collect()
    }

    /// The original node ids `n` stands for: the merge record for merged
    /// nodes, `{n}` otherwise.
    pub fn origins(&self, n: &NodeId) -> BTreeSet<NodeId> {
        match self.origins.get(n) {
            Some(o) => o.clone(),
            None => BTreeSet::from([n.clone()]),
        }
    }

    pub(crate) fn origin_records(&self) -> &BTreeMap<NodeId, BTreeSet<NodeId>> {
        &self.origins
    }

    /// Labels of the given interface.
    pub fn interface_labels(&self, side: Side) -> BTreeSet<&Label> {
        self.interface(side).iter().map(|n| &self.labels[n]).collect()
    }

    /// The node of the given interface carrying `label`, if any.
    pub fn interface_node(&self, side: Side, label: &Label) -> Option<&NodeId> {
        self.interface(side).iter().find(|n| &self.labels[*n] == label)
    }

    /// Transitions carrying `label`.
    pub fn transitions_labeled<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a NodeId> + 'a {
        self.net
            .transitions
            .iter()
            .filter(move |t| self.labels[*t].as_str() == label)
    }

    /// A copy with every node id prefixed, origins included. Used to make
    /// node sets disjoint before composing.
    pub fn with_prefix(&self, prefix: &str) -> Module {
        let r = |n: &NodeId| NodeId(format!("{prefix}{}", n.0));
        Module {
            net: Net {
                places: self.net.places.iter().map(r).collect(),
                transitions: self.net.transitions.iter().map(r).collect(),
                arcs: self.net.arcs.iter().map(|(a, b)| (r(a), r(b))).collect(),
            },
            labels: self.labels.iter().map(|(n, l)| (r(n), l.clone())).collect(),
            left: self.left.iter().map(r).collect(),
            right: self.right.iter().map(r).collect(),
            origins: self
                .origins
                .iter()
                .map(|(n, o)| (r(n), o.iter().map(r).collect()))
                .collect(),
        }
    }
}

/// Incremental construction of a [`Module`]; validation happens in `build`.
#[derive(Debug, Default, Clone)]
pub struct ModuleBuilder {
    places: BTreeSet<NodeId>,
    transitions: BTreeSet<NodeId>,
    arcs: BTreeSet<(NodeId, NodeId)>,
    labels: BTreeMap<NodeId, String>,
    left: BTreeSet<NodeId>,
    right: BTreeSet<NodeId>,
}

impl ModuleBuilder {
    pub fn place(mut self, id: impl Into<NodeId>, label: impl Into<String>) -> Self {
        let id = id.into();
        self.labels.insert(id.clone(), label.into());
        self.places.insert(id);
        self
    }

    pub fn transition(mut self, id: impl Into<NodeId>, label: impl Into<String>) -> Self {
        let id = id.into();
        self.labels.insert(id.clone(), label.into());
        self.transitions.insert(id);
        self
    }

    pub fn arc(mut self, from: impl Into<NodeId>, to: impl Into<NodeId>) -> Self {
        self.arcs.insert((from.into(), to.into()));
        self
    }

    pub fn left(mut self, id: impl Into<NodeId>) -> Self {
        self.left.insert(id.into());
        self
    }

    pub fn right(mut self, id: impl Into<NodeId>) -> Self {
        self.right.insert(id.into());
        self
    }

    pub fn build(self) -> Result<Module, ModuleError> {
        let net = Net::new(self.places, self.transitions, self.arcs)?;
        let labels = self
            .labels
            .into_iter()
            .map(|(n, l)| Label::new(l).map(|l| (n, l)))
            .collect::<Result<_, _>>()?;
        Module::new(net, labels, self.left, self.right)
    }
}

/// JSON shape of a module:
/// `{places:[{id,label}], transitions:[{id,label}], arcs:[[from,to]], left:[ids], right:[ids]}`.
/// Merged nodes additionally carry `origins`; artifacts written by the CLI
/// carry `format_version`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModuleDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format_version: Option<u32>,
    pub places: Vec<NodeDoc>,
    pub transitions: Vec<NodeDoc>,
    pub arcs: Vec<(NodeId, NodeId)>,
    pub left: Vec<NodeId>,
    pub right: Vec<NodeId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: NodeId,
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub origins: Vec<NodeId>,
}

impl From<&Module> for ModuleDoc {
    fn from(m: &Module) -> Self {
        let node = |n: &NodeId| NodeDoc {
            id: n.clone(),
            label: m.labels[n].0.clone(),
            origins: m
                .origins
                .get(n)
                .map(|o| o.iter().cloned().collect())
                .unwrap_or_default(),
        };
        ModuleDoc {
            format_version: None,
            places: m.net.places.iter().map(node).collect(),
            transitions: m.net.transitions.iter().map(node).collect(),
            arcs: m.net.arcs.iter().cloned().collect(),
            left: m.left.iter().cloned().collect(),
            right: m.right.iter().cloned().collect(),
        }
    }
}

impl TryFrom<ModuleDoc> for Module {
    type Error = ModuleError;

    fn try_from(doc: ModuleDoc) -> Result<Self, ModuleError> {
        let mut labels = BTreeMap::new();
        let mut origins = BTreeMap::new();
        let mut places = BTreeSet::new();
        let mut transitions = BTreeSet::new();
        for (kind, nodes) in [(NodeKind::Place, doc.places), (NodeKind::Transition, doc.transitions)] {
            for n in nodes {
                let fresh = match kind {
                    NodeKind::Place => places.insert(n.id.clone()),
                    NodeKind::Transition => transitions.insert(n.id.clone()),
                };
                if !fresh || labels.contains_key(&n.id) {
                    return Err(ModuleError::DuplicateNode(n.id));
                }
                labels.insert(n.id.clone(), Label::new(n.label)?);
                if !n.origins.is_empty() {
                    origins.insert(n.id, n.origins.into_iter().collect());
                }
            }
        }
        let net = Net::new(places, transitions, doc.arcs.into_iter().collect())?;
        Module::with_origins(
            net,
            labels,
            doc.left.into_iter().collect(),
            doc.right.into_iter().collect(),
            origins,
        )
    }
}

impl Serialize for Module {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ModuleDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Module {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = ModuleDoc::deserialize(d)?;
        Module::try_from(doc).map_err(serde::de::Error::custom)
    }
}
