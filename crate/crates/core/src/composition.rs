//! The composition operator `A • B`.
//!
//! Equally labeled elements of `A*` and `*B` (harmonic pairs) are merged into
//! one interior node; all other interface elements stay on their side. Each
//! merged node gets the id `{o1,o2,...}` built from the sorted union of the
//! original ids it stands for.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::net::{Label, Module, ModuleError, Net, NodeId, NodeKind, Side};
use crate::occurrence::OccurrenceModule;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComposeError {
    #[error("node id {0} occurs in both operands")]
    NodeIdCollision(NodeId),
    #[error("harmonic pair labeled {label:?} joins a {left_kind} and a {right_kind}")]
    MergeTypeMismatch {
        label: Label,
        left_kind: NodeKind,
        right_kind: NodeKind,
    },
    #[error("composition puts two nodes labeled {label:?} on the {side} interface")]
    ResultingDuplicateInterfaceLabel { side: Side, label: Label },
    #[error("cannot compose an empty sequence of modules")]
    EmptySequence,
    #[error(transparent)]
    Module(#[from] ModuleError),
}

/// An element of `A*` and an equally labeled element of `*B`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct HarmonicPair {
    pub left_node: NodeId,
    pub right_node: NodeId,
    pub label: Label,
}

/// All harmonic pairs of `A*` and `*B`, ordered by label.
pub fn harmonic_pairs(a: &Module, b: &Module) -> Vec<HarmonicPair> {
    let mut pairs: Vec<HarmonicPair> = a
        .right()
        .iter()
        .filter_map(|x| {
            let label = a.label(x)?;
            b.interface_node(Side::Left, label).map(|y| HarmonicPair {
                left_node: x.clone(),
                right_node: y.clone(),
                label: label.clone(),
            })
        })
        .collect();
    pairs.sort_by(|p, q| p.label.cmp(&q.label));
    pairs
}

fn merged_id(origins: &BTreeSet<NodeId>) -> NodeId {
    let parts: Vec<&str> = origins.iter().map(NodeId::as_str).collect();
    NodeId::new(format!("{{{}}}", parts.join(",")))
}

/// `A • B`. The node sets of `a` and `b` must be disjoint.
pub fn compose(a: &Module, b: &Module) -> Result<Module, ComposeError> {
    if let Some(n) = a.net().nodes().find(|n| b.net().contains(n)) {
        return Err(ComposeError::NodeIdCollision(n.clone()));
    }
    let pairs = harmonic_pairs(a, b);

    // x ↦ x'
    let mut image: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut origins: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    origins.extend(a.origin_records().clone());
    origins.extend(b.origin_records().clone());
    for p in &pairs {
        let left_kind = a.net().kind(&p.left_node).expect("interface node");
        let right_kind = b.net().kind(&p.right_node).expect("interface node");
        if left_kind != right_kind {
            return Err(ComposeError::MergeTypeMismatch {
                label: p.label.clone(),
                left_kind,
                right_kind,
            });
        }
        origins.remove(&p.left_node);
        origins.remove(&p.right_node);
        let mut record = a.origins(&p.left_node);
        record.extend(b.origins(&p.right_node));
        let id = merged_id(&record);
        let clash = (a.net().contains(&id) && id != p.left_node)
            || (b.net().contains(&id) && id != p.right_node)
            || origins.contains_key(&id);
        if clash {
            return Err(ComposeError::NodeIdCollision(id));
        }
        image.insert(p.left_node.clone(), id.clone());
        image.insert(p.right_node.clone(), id.clone());
        origins.insert(id, record);
    }
    let img = |n: &NodeId| image.get(n).cloned().unwrap_or_else(|| n.clone());

    let mut places = BTreeSet::new();
    let mut transitions = BTreeSet::new();
    let mut labels = BTreeMap::new();
    for m in [a, b] {
        for n in m.net().nodes() {
            let x = img(n);
            match m.net().kind(n) {
                Some(NodeKind::Place) => places.insert(x.clone()),
                _ => transitions.insert(x.clone()),
            };
            labels.insert(x, m.label(n).expect("labeled").clone());
        }
    }
    let arcs = a
        .net()
        .arcs()
        .iter()
        .chain(b.net().arcs())
        .map(|(x, z)| (img(x), img(z)))
        .collect();

    let matched_left: BTreeSet<&NodeId> = pairs.iter().map(|p| &p.right_node).collect();
    let matched_right: BTreeSet<&NodeId> = pairs.iter().map(|p| &p.left_node).collect();
    let left_sources = a.left().iter().chain(b.left().iter().filter(|y| !matched_left.contains(y)));
    let right_sources = b.right().iter().chain(a.right().iter().filter(|x| !matched_right.contains(x)));

    let mut interfaces = [BTreeSet::new(), BTreeSet::new()];
    for (slot, (side, sources)) in [
        (Side::Left, left_sources.collect::<Vec<_>>()),
        (Side::Right, right_sources.collect::<Vec<_>>()),
    ]
    .into_iter()
    .enumerate()
    {
        let mut seen: BTreeMap<&Label, NodeId> = BTreeMap::new();
        for n in sources {
            let x = img(n);
            let label = &labels[&x];
            if let Some(prev) = seen.get(label) {
                if prev != &x {
                    return Err(ComposeError::ResultingDuplicateInterfaceLabel {
                        side,
                        label: label.clone(),
                    });
                }
            }
            seen.insert(label, x.clone());
            interfaces[slot].insert(x);
        }
    }
    let [left, right] = interfaces;

    let net = Net::new(places, transitions, arcs)?;
    Ok(Module::with_origins(net, labels, left, right, origins)?)
}

/// `m1 • m2 • ... • mn`, folded from the left.
pub fn compose_all(modules: &[Module]) -> Result<Module, ComposeError> {
    let (first, rest) = modules.split_first().ok_or(ComposeError::EmptySequence)?;
    rest.iter()
        .try_fold(first.clone(), |acc, m| compose(&acc, m))
}

/// Labels of `*m ∪ m*`.
pub fn interface_labels(m: &Module) -> BTreeSet<&Label> {
    let mut labels = m.interface_labels(Side::Left);
    labels.extend(m.interface_labels(Side::Right));
    labels
}

/// True iff no label occurs both in `*A ∪ A*` and in `*B ∪ B*`, the
/// criterion for `A • B = B • A`.
pub fn commutes(a: &Module, b: &Module) -> bool {
    interface_labels(a).is_disjoint(&interface_labels(b))
}

/// Pairs of harmonic pairs `{a,b}`, `{a',b'}` of `A*` and `*B` whose causal
/// orders disagree: `a < a'` in `A` while `b' < b` in `B`, or the mirror case.
pub fn dissenting_pairs(
    a: &OccurrenceModule,
    b: &OccurrenceModule,
) -> Vec<(HarmonicPair, HarmonicPair)> {
    let pairs = harmonic_pairs(a.module(), b.module());
    let mut out = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        for q in &pairs[i + 1..] {
            let before_a = |x: &NodeId, y: &NodeId| a.precedes(x, y);
            let before_b = |x: &NodeId, y: &NodeId| b.precedes(x, y);
            let dissent = (before_a(&p.left_node, &q.left_node)
                && before_b(&q.right_node, &p.right_node))
                || (before_a(&q.left_node, &p.left_node)
                    && before_b(&p.right_node, &q.right_node));
            if dissent {
                out.push((p.clone(), q.clone()));
            }
        }
    }
    out
}

/// A cycle of harmonic pairs that `A • B` would close, if any.
///
/// Pair `p` points to `q` when `p` precedes `q` in `A` or in `B`. For
/// interfaces made of transitions only, the composition is an occurrence
/// module exactly when no such cycle exists. Dissenting pairs are the cycles
/// of length two; longer cycles need no dissent at all.
pub fn ordering_cycle(a: &OccurrenceModule, b: &OccurrenceModule) -> Option<Vec<HarmonicPair>> {
    let pairs = harmonic_pairs(a.module(), b.module());
    let edge = |p: &HarmonicPair, q: &HarmonicPair| {
        a.precedes(&p.left_node, &q.left_node) || b.precedes(&p.right_node, &q.right_node)
    };
    // 0 unvisited, 1 on the stack, 2 finished
    let mut state = vec![0u8; pairs.len()];
    let mut stack = Vec::new();
    fn visit(
        i: usize,
        pairs: &[HarmonicPair],
        edge: &dyn Fn(&HarmonicPair, &HarmonicPair) -> bool,
        state: &mut [u8],
        stack: &mut Vec<usize>,
    ) -> Option<Vec<HarmonicPair>> {
        state[i] = 1;
        stack.push(i);
        for j in 0..pairs.len() {
            if !edge(&pairs[i], &pairs[j]) {
                continue;
            }
            if state[j] == 1 {
                let from = stack.iter().position(|&k| k == j).expect("on stack");
                return Some(stack[from..].iter().map(|&k| pairs[k].clone()).collect());
            }
            if state[j] == 0 {
                if let Some(c) = visit(j, pairs, edge, state, stack) {
                    return Some(c);
                }
            }
        }
        stack.pop();
        state[i] = 2;
        None
    }
    (0..pairs.len()).find_map(|i| {
        if state[i] == 0 {
            visit(i, &pairs, &edge, &mut state, &mut stack)
        } else {
            None
        }
    })
}
