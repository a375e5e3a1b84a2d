//! Seeded random generators for modules, occurrence modules, structures and
//! event logs.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

use sysmine::algebra::{FunctionDecl, Signature, Structure, Term};
use sysmine::logkit::{Event, EventLog, RolePolicy};
use sysmine::net::{Module, ModuleBuilder, NodeId, Side};
use sysmine::occurrence::{as_occurrence, OccurrenceModule};

/// Adds `id` to the given interface unless that interface already carries
/// `label`.
fn expose(
    b: ModuleBuilder,
    used: &mut BTreeSet<String>,
    side: Side,
    id: &str,
    label: &str,
) -> ModuleBuilder {
    if !used.insert(label.to_string()) {
        return b;
    }
    match side {
        Side::Left => b.left(id),
        Side::Right => b.right(id),
    }
}

/// A module with at most `max_nodes` nodes, ids prefixed by `prefix`, labels
/// drawn from `labels`, and disjoint left and right interfaces.
pub fn module(rng: &mut StdRng, prefix: &str, max_nodes: usize, labels: &[&str]) -> Module {
    let n = rng.gen_range(1..=max_nodes);
    let mut b = Module::builder();
    let mut places = Vec::new();
    let mut transitions = Vec::new();
    let mut left = BTreeSet::new();
    let mut right = BTreeSet::new();
    for i in 0..n {
        let id = format!("{prefix}{i}");
        let label = *labels.choose(rng).unwrap();
        if rng.gen_bool(0.5) {
            b = b.place(id.as_str(), label);
            places.push(id.clone());
        } else {
            b = b.transition(id.as_str(), label);
            transitions.push(id.clone());
        }
        let roll: f64 = rng.gen();
        if roll < 0.3 {
            b = expose(b, &mut left, Side::Left, &id, label);
        } else if roll < 0.6 {
            b = expose(b, &mut right, Side::Right, &id, label);
        }
    }
    for p in &places {
        for t in &transitions {
            if rng.gen_bool(0.3) {
                b = if rng.gen_bool(0.5) {
                    b.arc(p.as_str(), t.as_str())
                } else {
                    b.arc(t.as_str(), p.as_str())
                };
            }
        }
    }
    b.build().expect("generated modules are valid")
}

/// A random occurrence net with `1..=max_transitions` transitions `{prefix}t{i}`
/// in topological order of their index. Every place has a producer or a
/// consumer.
pub fn occurrence_builder(
    rng: &mut StdRng,
    prefix: &str,
    max_transitions: usize,
    density: f64,
) -> (ModuleBuilder, Vec<String>) {
    let n = rng.gen_range(1..=max_transitions);
    let ts: Vec<String> = (0..n).map(|i| format!("{prefix}t{i}")).collect();
    let mut b = Module::builder();
    for t in &ts {
        b = b.transition(t.as_str(), t.as_str());
    }
    let mut k = 0;
    let place = |b: ModuleBuilder, k: &mut usize| {
        let id = format!("{prefix}p{k}");
        *k += 1;
        (b.place(id.as_str(), id.as_str()), id)
    };
    for j in 0..n {
        for i in 0..j {
            if rng.gen_bool(density) {
                let (nb, p) = place(b, &mut k);
                b = nb.arc(ts[i].as_str(), p.as_str()).arc(p.as_str(), ts[j].as_str());
            }
        }
    }
    for t in &ts {
        if rng.gen_bool(0.5) {
            let (nb, p) = place(b, &mut k);
            b = nb.arc(p.as_str(), t.as_str());
        }
        if rng.gen_bool(0.5) {
            let (nb, p) = place(b, &mut k);
            b = nb.arc(t.as_str(), p.as_str());
        }
    }
    (b, ts)
}

/// Occurrence module whose transitions on `side` carry labels from
/// `labels` (unique within the interface); other nodes keep unique labels.
pub fn occurrence_with_interface(
    rng: &mut StdRng,
    prefix: &str,
    max_transitions: usize,
    side: Side,
    labels: &[&str],
) -> OccurrenceModule {
    let (mut b, ts) = occurrence_builder(rng, prefix, max_transitions, 0.3);
    let mut pool: Vec<&str> = labels.to_vec();
    pool.shuffle(rng);
    for t in &ts {
        if rng.gen_bool(0.7) {
            if let Some(label) = pool.pop() {
                b = b.transition(t.as_str(), label);
                b = match side {
                    Side::Left => b.left(t.as_str()),
                    Side::Right => b.right(t.as_str()),
                };
            }
        }
    }
    as_occurrence(&b.build().unwrap()).unwrap()
}

/// Independent oracle: flow acyclic (depth-first search) and no place with
/// two producers or two consumers.
pub fn is_occurrence_net(m: &Module) -> bool {
    let net = m.net();
    for p in net.places() {
        if net.preset(p).count() > 1 || net.postset(p).count() > 1 {
            return false;
        }
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let nodes: Vec<&NodeId> = net.nodes().collect();
    let index: BTreeMap<&NodeId, usize> = nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let mut mark = vec![Mark::New; nodes.len()];
    fn visit(
        i: usize,
        nodes: &[&NodeId],
        index: &BTreeMap<&NodeId, usize>,
        m: &Module,
        mark: &mut [Mark],
    ) -> bool {
        mark[i] = Mark::Open;
        for s in m.net().postset(nodes[i]) {
            let j = index[s];
            let state = mark[j];
            match state {
                Mark::Open => return false,
                Mark::New if !visit(j, nodes, index, m, mark) => return false,
                _ => {}
            }
        }
        mark[i] = Mark::Done;
        true
    }
    (0..nodes.len()).all(|i| mark[i] != Mark::New || visit(i, &nodes, &index, m, &mut mark))
}

/// Up to `limit` distinct linearizations of the transitions.
pub fn linearizations(o: &OccurrenceModule, limit: usize) -> Vec<Vec<NodeId>> {
    let ts: Vec<NodeId> = o.module().net().transitions().iter().cloned().collect();
    let mut out = Vec::new();
    let mut current = Vec::new();
    let mut used = vec![false; ts.len()];
    fn go(
        o: &OccurrenceModule,
        ts: &[NodeId],
        used: &mut Vec<bool>,
        current: &mut Vec<NodeId>,
        out: &mut Vec<Vec<NodeId>>,
        limit: usize,
    ) {
        if out.len() >= limit {
            return;
        }
        if current.len() == ts.len() {
            out.push(current.clone());
            return;
        }
        for i in 0..ts.len() {
            let ready = !used[i]
                && (0..ts.len()).all(|j| used[j] || j == i || !o.precedes(&ts[j], &ts[i]));
            if ready {
                used[i] = true;
                current.push(ts[i].clone());
                go(o, ts, used, current, out, limit);
                current.pop();
                used[i] = false;
            }
        }
    }
    go(o, &ts, &mut used, &mut current, &mut out, limit);
    out
}

/// A structure with 1 to 3 sorts, carriers of at most 5 values, a few
/// unary and binary functions and two variables per sort.
pub fn structure(rng: &mut StdRng) -> Structure {
    let n_sorts = rng.gen_range(1..=3);
    let sorts: Vec<String> = (0..n_sorts).map(|i| format!("s{i}")).collect();
    let mut carriers = BTreeMap::new();
    for (i, s) in sorts.iter().enumerate() {
        let size = rng.gen_range(1..=5);
        let values: BTreeSet<String> = (0..size).map(|j| format!("v{i}.{j}")).collect();
        carriers.insert(s.clone(), values);
    }
    let mut functions = BTreeMap::new();
    let mut tables = BTreeMap::new();
    for k in 0..rng.gen_range(0..=4) {
        let arity = rng.gen_range(0..=2);
        let args: Vec<String> = (0..arity).map(|_| sorts.choose(rng).unwrap().clone()).collect();
        let result = sorts.choose(rng).unwrap().clone();
        let mut rows = vec![Vec::new()];
        for a in &args {
            rows = rows
                .into_iter()
                .flat_map(|r: Vec<String>| {
                    carriers[a].iter().map(move |v| {
                        let mut r = r.clone();
                        r.push(v.clone());
                        r
                    })
                })
                .collect();
        }
        let results: Vec<&String> = carriers[&result].iter().collect();
        let table = rows
            .into_iter()
            .map(|r| (r, (*results.choose(rng).unwrap()).clone()))
            .collect();
        let name = format!("g{k}");
        functions.insert(name.clone(), FunctionDecl { args, result });
        tables.insert(name, table);
    }
    let mut variables = BTreeMap::new();
    for (i, s) in sorts.iter().enumerate() {
        variables.insert(format!("x{i}"), s.clone());
        variables.insert(format!("y{i}"), s.clone());
    }
    let sig = Signature::new(sorts.iter().cloned().collect(), functions, variables).unwrap();
    Structure::new(sig, carriers, tables).unwrap()
}

/// A well-sorted term of `sort` with depth at most `depth`.
pub fn term(rng: &mut StdRng, s: &Structure, sort: &str, depth: usize) -> Term {
    let sig = s.signature();
    let producers: Vec<(&String, &FunctionDecl)> =
        sig.functions().iter().filter(|(_, d)| d.result == sort).collect();
    if depth > 0 && !producers.is_empty() && rng.gen_bool(0.6) {
        let (f, decl) = producers.choose(rng).unwrap();
        let args = decl.args.iter().map(|a| term(rng, s, a, depth - 1)).collect();
        return Term::app((*f).clone(), args);
    }
    if rng.gen_bool(0.2) {
        let values: Vec<&String> = s.carrier(sort).unwrap().iter().collect();
        return Term::constant((*values.choose(rng).unwrap()).clone());
    }
    let vars: Vec<&str> = sig.variables_of(sort).collect();
    Term::var(*vars.choose(rng).unwrap())
}

/// A log of up to `max_events` events over up to `max_agents` agents with
/// strictly increasing timestamps, and a policy splitting the agents into
/// right-side shops and left-side clients.
pub fn log(rng: &mut StdRng, max_events: usize, max_agents: usize) -> (EventLog, RolePolicy) {
    let n_agents = rng.gen_range(2..=max_agents);
    let agents: Vec<String> = (0..n_agents).map(|i| format!("a{i}")).collect();
    let mut roles = BTreeMap::new();
    for a in &agents {
        let role = if rng.gen_bool(0.5) { "shop" } else { "client" };
        roles.insert(a.clone(), role.to_string());
    }
    let sides = BTreeMap::from([
        ("shop".to_string(), Side::Right),
        ("client".to_string(), Side::Left),
    ]);
    let start = chrono::DateTime::parse_from_rfc3339("2024-01-01T09:00:00+00:00").unwrap();
    let n_events = rng.gen_range(1..=max_events);
    let mut events = Vec::new();
    let mut clock = 0i64;
    for i in 0..n_events {
        clock += rng.gen_range(1..=120);
        let k = rng.gen_range(1..=3.min(n_agents));
        let involved: BTreeSet<String> = agents.choose_multiple(rng, k).cloned().collect();
        events.push(Event {
            name: format!("e{i}"),
            agents: involved,
            data: BTreeMap::new(),
            timestamp: start + chrono::Duration::seconds(clock),
        });
    }
    let mut shuffled = events;
    shuffled.shuffle(rng);
    (
        EventLog::new(shuffled).unwrap(),
        RolePolicy::new(roles, sides).unwrap(),
    )
}
