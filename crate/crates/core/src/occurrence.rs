//! Occurrence modules, their causal order, and occurrence atoms.
//!
//! A module is an occurrence module when its flow is acyclic and every place
//! has at most one incoming and at most one outgoing arc. The causal order
//! `<` is the transitive closure of the flow, computed once on construction.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::net::{Module, ModuleError, NodeId, NodeKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OccurrenceError {
    #[error("flow is cyclic through node {0}")]
    CyclicFlow(NodeId),
    #[error("place {place} has more than one {direction} arc")]
    PlaceBranching { place: NodeId, direction: ArcDirection },
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("transition sequence is not a linearization of the causal order")]
    NotALinearization,
    #[error("cannot build atom: {0}")]
    Atom(#[from] ModuleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcDirection {
    Incoming,
    Outgoing,
}

impl std::fmt::Display for ArcDirection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ArcDirection::Incoming => f.write_str("incoming"),
            ArcDirection::Outgoing => f.write_str("outgoing"),
        }
    }
}

/// A module whose net is an occurrence net, with its causal order cached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccurrenceModule {
    module: Module,
    index: BTreeMap<NodeId, usize>,
    // after[i] = { j | node i < node j }
    after: Vec<BTreeSet<usize>>,
}

/// Checks both occurrence-net conditions and computes the causal order.
pub fn as_occurrence(m: &Module) -> Result<OccurrenceModule, OccurrenceError> {
    let nodes: Vec<NodeId> = m.net().nodes().cloned().collect();
    let index: BTreeMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
    let mut succ = vec![Vec::new(); nodes.len()];
    let mut indegree = vec![0usize; nodes.len()];
    for (a, b) in m.net().arcs() {
        succ[index[a]].push(index[b]);
        indegree[index[b]] += 1;
    }

    // Kahn's algorithm; leftover nodes lie on or behind a cycle.
    let mut order = Vec::with_capacity(nodes.len());
    let mut ready: Vec<usize> = (0..nodes.len()).filter(|&i| indegree[i] == 0).collect();
    let mut remaining = indegree.clone();
    while let Some(i) = ready.pop() {
        order.push(i);
        for &j in &succ[i] {
            remaining[j] -= 1;
            if remaining[j] == 0 {
                ready.push(j);
            }
        }
    }
    if order.len() < nodes.len() {
        let stuck = cycle_witness(&succ, &remaining);
        return Err(OccurrenceError::CyclicFlow(nodes[stuck].clone()));
    }

    for p in m.net().places() {
        if indegree[index[p]] > 1 {
            return Err(OccurrenceError::PlaceBranching {
                place: p.clone(),
                direction: ArcDirection::Incoming,
            });
        }
        if succ[index[p]].len() > 1 {
            return Err(OccurrenceError::PlaceBranching {
                place: p.clone(),
                direction: ArcDirection::Outgoing,
            });
        }
    }

    let mut after = vec![BTreeSet::new(); nodes.len()];
    for &i in order.iter().rev() {
        let mut reach = BTreeSet::new();
        for &j in &succ[i] {
            reach.insert(j);
            reach.extend(after[j].iter().copied());
        }
        after[i] = reach;
    }
    Ok(OccurrenceModule {
        module: m.clone(),
        index,
        after,
    })
}

// A node on a cycle. Every node Kahn left behind has a predecessor that was
// also left behind, so walking predecessors must repeat a node.
fn cycle_witness(succ: &[Vec<usize>], remaining: &[usize]) -> usize {
    let mut pred = vec![Vec::new(); succ.len()];
    for (i, js) in succ.iter().enumerate() {
        for &j in js {
            pred[j].push(i);
        }
    }
    let mut at = (0..succ.len()).find(|&i| remaining[i] > 0).expect("cycle exists");
    let mut seen = BTreeSet::new();
    while seen.insert(at) {
        at = pred[at]
            .iter()
            .copied()
            .find(|&i| remaining[i] > 0)
            .expect("blocked node has a blocked predecessor");
    }
    at
}

impl OccurrenceModule {
    pub fn module(&self) -> &Module {
        &self.module
    }

    pub fn into_module(self) -> Module {
        self.module
    }

    /// `a < b`; false for unknown nodes.
    pub fn precedes(&self, a: &NodeId, b: &NodeId) -> bool {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&i), Some(&j)) => self.after[i].contains(&j),
            _ => false,
        }
    }

    /// `a < b`, rejecting nodes that are not in the module.
    pub fn causally_before(&self, a: &NodeId, b: &NodeId) -> Result<bool, OccurrenceError> {
        for n in [a, b] {
            if !self.index.contains_key(n) {
                return Err(OccurrenceError::UnknownNode(n.clone()));
            }
        }
        Ok(self.precedes(a, b))
    }

    /// Neither `a < b` nor `b < a`, and `a ≠ b`.
    pub fn concurrent(&self, a: &NodeId, b: &NodeId) -> bool {
        a != b && !self.precedes(a, b) && !self.precedes(b, a)
    }

    /// Transitions in an order extending `<`; among unordered transitions the
    /// smaller label (then id) comes first.
    pub fn topological_transitions(&self) -> Vec<NodeId> {
        let m = &self.module;
        let transitions: Vec<&NodeId> = m.net().transitions().iter().collect();
        let mut waiting: BTreeMap<&NodeId, usize> = transitions
            .iter()
            .map(|t| {
                let preds = transitions.iter().filter(|u| self.precedes(u, t)).count();
                (*t, preds)
            })
            .collect();
        let key = |t: &NodeId| (m.label(t).expect("labeled").clone(), t.clone());
        let mut ready: BTreeSet<_> = waiting
            .iter()
            .filter(|(_, &c)| c == 0)
            .map(|(t, _)| key(t))
            .collect();
        let mut out = Vec::with_capacity(transitions.len());
        while let Some(next) = ready.pop_first() {
            let t = next.1;
            for u in &transitions {
                if self.precedes(&t, u) {
                    let c = waiting.get_mut(u).expect("transition");
                    *c -= 1;
                    if *c == 0 {
                        ready.insert(key(u));
                    }
                }
            }
            out.push(t);
        }
        out
    }

    /// Whether `order` lists every transition once, consistently with `<`.
    pub fn is_linearization(&self, order: &[NodeId]) -> bool {
        let ts = self.module.net().transitions();
        if order.len() != ts.len() || order.iter().collect::<BTreeSet<_>>().len() != ts.len() {
            return false;
        }
        if !order.iter().all(|t| ts.contains(t)) {
            return false;
        }
        order
            .iter()
            .enumerate()
            .all(|(i, t)| order[..i].iter().all(|u| !self.precedes(t, u)))
    }

    /// Occurrence atoms in the default linearization.
    pub fn atoms(&self) -> Result<Vec<OccurrenceAtom>, OccurrenceError> {
        self.atoms_in_order(&self.topological_transitions())
    }

    /// Occurrence atoms following a given admissible linearization.
    pub fn atoms_in_order(&self, order: &[NodeId]) -> Result<Vec<OccurrenceAtom>, OccurrenceError> {
        if !self.is_linearization(order) {
            return Err(OccurrenceError::NotALinearization);
        }
        order.iter().map(|t| self.atom(t)).collect()
    }

    /// The occurrence atom of transition `t`: `t` with its pre-places on the
    /// left interface and its post-places on the right interface.
    pub fn atom(&self, t: &NodeId) -> Result<OccurrenceAtom, OccurrenceError> {
        let m = &self.module;
        if m.net().kind(t) != Some(NodeKind::Transition) {
            return Err(OccurrenceError::UnknownNode(t.clone()));
        }
        let copy = |p: &NodeId| NodeId::new(format!("{p}@{t}"));
        let mut b = Module::builder().transition(t.clone(), m.label(t).expect("labeled").as_str());
        let mut places = BTreeMap::new();
        for p in m.net().preset(t) {
            let c = copy(p);
            b = b.place(c.clone(), m.label(p).expect("labeled").as_str()).arc(c.clone(), t.clone()).left(c.clone());
            places.insert(c, p.clone());
        }
        for p in m.net().postset(t) {
            let c = copy(p);
            b = b.place(c.clone(), m.label(p).expect("labeled").as_str()).arc(t.clone(), c.clone()).right(c.clone());
            places.insert(c, p.clone());
        }
        let module = b.build()?;
        let occurrence = as_occurrence(&module).expect("a single transition with its places is an occurrence net");
        Ok(OccurrenceAtom {
            module: occurrence,
            transition: t.clone(),
            places,
        })
    }

    /// The same net with all transitions interior, places without producer
    /// on the left and places without consumer on the right. This is the
    /// shape the composition of all atoms takes.
    pub fn boundary_form(&self) -> Result<Module, ModuleError> {
        let m = &self.module;
        let net = m.net();
        let mut left = BTreeSet::new();
        let mut right = BTreeSet::new();
        for p in net.places() {
            let has_in = net.preset(p).next().is_some();
            let has_out = net.postset(p).next().is_some();
            if has_out && !has_in {
                left.insert(p.clone());
            }
            if has_in && !has_out {
                right.insert(p.clone());
            }
        }
        Module::with_origins(
            net.clone(),
            m.labels().clone(),
            left,
            right,
            m.origin_records().clone(),
        )
    }
}

/// A single transition with its surrounding arcs and places.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccurrenceAtom {
    module: OccurrenceModule,
    transition: NodeId,
    // atom place → place of the source module
    places: BTreeMap<NodeId, NodeId>,
}

impl OccurrenceAtom {
    pub fn module(&self) -> &Module {
        self.module.module()
    }

    pub fn occurrence(&self) -> &OccurrenceModule {
        &self.module
    }

    pub fn transition(&self) -> &NodeId {
        &self.transition
    }

    /// The place of the source module an atom place was copied from.
    pub fn source_place(&self, p: &NodeId) -> Option<&NodeId> {
        self.places.get(p)
    }

    pub fn pre_places(&self) -> impl Iterator<Item = &NodeId> {
        self.module.module().left().iter()
    }

    pub fn post_places(&self) -> impl Iterator<Item = &NodeId> {
        self.module.module().right().iter()
    }
}
