use std::collections::BTreeMap;

use super::*;
use crate::algebra::{parse_structure, Structure, Term, Valuation};
use crate::logkit::{mine_run, parse_log, EventLog, LogFormat, MinedRun, RolePolicy};
use crate::pipeline::{mine_system, SystemMining};

fn inputs() -> (EventLog, RolePolicy, Structure, PlaceRoleConfig) {
    let log = parse_log(
        include_str!("../../fixtures/retail.jsonl").as_bytes(),
        LogFormat::Jsonl,
    )
    .unwrap();
    let policy = RolePolicy::from_json(include_str!("../../fixtures/roles.json").as_bytes()).unwrap();
    let s = parse_structure(include_str!("../../fixtures/s0.json").as_bytes()).unwrap();
    let config =
        PlaceRoleConfig::from_json(include_str!("../../fixtures/place_roles.json").as_bytes()).unwrap();
    (log, policy, s, config)
}

fn retail() -> SystemMining {
    let (log, policy, s, config) = inputs();
    mine_system(&log, &policy, &s, &config).unwrap()
}

fn beta(pairs: &[(&str, &str)]) -> Valuation {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn tokens(net: &SystemNet, place: &str) -> Vec<Vec<String>> {
    net.marking
        .tokens(place)
        .flat_map(|(t, n)| std::iter::repeat_n(t.clone(), n))
        .collect()
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|x| x.to_string()).collect()
}

/// Inscriptions of an atom keyed by (input?, role label), as text.
fn by_role(a: &SystemAtom) -> BTreeMap<(bool, String), String> {
    a.inscriptions
        .iter()
        .map(|((x, y), terms)| {
            let input = y == &a.transition;
            let place = if input { x } else { y };
            let text = match terms.as_slice() {
                [t] => t.to_string(),
                ts => Term::Tuple(ts.to_vec()).to_string(),
            };
            ((input, a.roles[place].clone()), text)
        })
        .collect()
}

#[test]
fn shirt_atom_inscriptions() {
    let m = retail();
    let annotated = m.annotated.iter().find(|a| a.event == "shirt to take home").unwrap();
    let mut constants: Vec<Vec<String>> = annotated.inscriptions.values().cloned().collect();
    constants.sort();
    assert_eq!(
        constants,
        vec![
            strings(&["Alice", "50 €"]),
            strings(&["Alice", "shirt"]),
            strings(&["V1"]),
            strings(&["V1", "shirt"]),
        ]
    );

    let atom = m.atoms.iter().find(|a| a.event == "shirt to take home").unwrap();
    let expected: BTreeMap<(bool, String), String> = [
        ((true, "available vendors"), "y"),
        ((true, "clients with descriptions of items"), "(x, z)"),
        ((false, "vendors with items to pack"), "(y, z)"),
        ((false, "clients with debts"), "(x, f(z))"),
    ]
    .into_iter()
    .map(|((i, r), t)| ((i, r.to_string()), t.to_string()))
    .collect();
    assert_eq!(by_role(atom), expected);
    assert_eq!(atom.witness, beta(&[("x", "Alice"), ("y", "V1"), ("z", "shirt")]));
}

#[test]
fn handing_over_reuses_wrap_term() {
    let m = retail();
    let atom = m.atoms.iter().find(|a| a.event == "handing over").unwrap();
    let r = by_role(atom);
    assert_eq!(r[&(true, "vendors with wrapped items".into())], "(y, wrap(z))");
    assert_eq!(r[&(false, "served clients".into())], "(x, wrap(z))");
}

#[test]
fn every_atom_round_trips() {
    let (_, _, s, _) = inputs();
    let m = retail();
    assert_eq!(m.atoms.len(), 7);
    for (atom, source) in m.atoms.iter().zip(&m.annotated) {
        assert!(atom.reproduces(source, &s), "{}", atom.event);
    }
}

#[test]
fn symbolic_module_has_open_interfaces() {
    let m = retail();
    let module = &m.symbolic.module;
    assert_eq!(module.net().transitions().len(), 7);
    assert!(!module.left().is_empty() && !module.right().is_empty());
    assert_eq!(m.symbolic.marking.len(), module.left().len());
}

#[test]
fn folded_net_and_initial_marking() {
    let m = retail();
    let net = &m.net;
    assert_eq!(net.transitions.len(), 7);
    assert!(net.places.len() < m.symbolic.module.net().places().len());
    assert_eq!(net.transitions["shirt to take home"].label, "item to take home");
    assert_eq!(tokens(net, "available vendors"), [strings(&["V1"]), strings(&["V2"])]);
    assert_eq!(
        tokens(net, "clients with descriptions of items"),
        [
            strings(&["Alice", "shirt"]),
            strings(&["Bob", "shoes"]),
            strings(&["Claire", "hat"])
        ]
    );
    assert_eq!(tokens(net, "available cashiers"), [strings(&["cashier"])]);
    assert_eq!(net.marking.marked_places().count(), 3);
    assert_eq!(net.places["clients with debts"], strings(&["clients", "money"]));
}

#[test]
fn fold_preserves_arcs() {
    let m = retail();
    let arcs: usize = m
        .net
        .transitions
        .values()
        .map(|t| t.inputs.len() + t.outputs.len())
        .sum();
    assert_eq!(arcs, m.symbolic.module.net().arcs().len());
    for (x, y) in m.symbolic.inscriptions.keys() {
        let (place, t, input) = if m.symbolic.events.contains_key(y) {
            (x, y, true)
        } else {
            (y, x, false)
        };
        let tr = &m.net.transitions[&m.symbolic.events[t]];
        let list = if input { &tr.inputs } else { &tr.outputs };
        assert!(list.iter().any(|a| a.place == m.symbolic.roles[place]));
    }
}

#[test]
fn firing_item_to_take_home() {
    let (_, _, s, _) = inputs();
    let m = retail();
    let b = beta(&[("x", "Alice"), ("y", "V1"), ("z", "shirt")]);
    let after = fire(&m.net, &s, "item to take home", &b).unwrap();
    assert_eq!(tokens(&after, "available vendors"), [strings(&["V2"])]);
    assert_eq!(tokens(&after, "clients with debts"), [strings(&["Alice", "50 €"])]);
    assert_eq!(tokens(&after, "vendors with items to pack"), [strings(&["V1", "shirt"])]);
    assert_eq!(after.marking.total(), m.net.marking.total());

    let again = fire(&after, &s, "item to take home", &b).unwrap_err();
    let LiftError::NotEnabled { missing, .. } = again else {
        panic!("expected NotEnabled")
    };
    assert_eq!(missing.len(), 2);

    let unbound = fire(&m.net, &s, "item to take home", &beta(&[("x", "Alice")]));
    assert!(matches!(unbound, Err(LiftError::Algebra(_))));
    assert!(matches!(
        fire(&m.net, &s, "no such event", &b),
        Err(LiftError::UnknownTransition(_))
    ));
}

#[test]
fn token_count_changes_by_arc_balance() {
    let (_, _, s, _) = inputs();
    let m = retail();
    let mut net = m.net.clone();
    for t in m.mined.run.topological_transitions() {
        let key = &m.symbolic.events[&t];
        let tr = &net.transitions[key];
        let delta = tr.outputs.len() as isize - tr.inputs.len() as isize;
        let before = net.marking.total() as isize;
        net = fire(&net, &s, key, &m.symbolic.witnesses[&t]).unwrap();
        assert_eq!(net.marking.total() as isize, before + delta);
    }
}

#[test]
fn generalization_breadth() {
    let (_, _, s, _) = inputs();
    let m = retail();
    let clients = tokens(&m.net, "clients with descriptions of items");
    let vendors = tokens(&m.net, "available vendors");
    for c in &clients {
        for v in &vendors {
            let b = beta(&[("x", &c[0]), ("z", &c[1]), ("y", &v[0])]);
            assert!(m.net.is_enabled(&s, "item to take home", &b), "{c:?} {v:?}");
        }
    }
}

#[test]
fn replay_is_conformant() {
    let m = retail();
    assert!(m.report.conformant);
    assert_eq!(m.report.sequence.len(), 7);
}

#[test]
fn replay_edge_cases() {
    let (_, _, s, _) = inputs();
    let m = retail();
    let empty = crate::occurrence::as_occurrence(&crate::net::Module::empty()).unwrap();
    let report = replay(&m.net, &s, &empty, &BTreeMap::new()).unwrap();
    assert!(report.conformant);

    let mut net = m.net.clone();
    net.transitions.remove("handing over");
    assert_eq!(
        replay(&net, &s, &m.mined.run, &m.symbolic.witnesses).unwrap_err(),
        LiftError::UnknownTransitionLabel("handing over".into())
    );

    let mut net = m.net.clone();
    net.marking = Marking::new();
    let report = replay(&net, &s, &m.mined.run, &m.symbolic.witnesses).unwrap();
    assert!(!report.conformant);
    assert!(report.blocking.is_some());
}

#[test]
fn schema_round_trip() {
    let m = retail();
    let initial: BTreeMap<&str, &str> = m
        .schema
        .initial
        .iter()
        .map(|(p, t)| {
            assert!(t.elm);
            (p.as_str(), t.symbol.as_str())
        })
        .collect();
    assert_eq!(
        initial,
        BTreeMap::from([
            ("available cashiers", "CA"),
            ("available vendors", "VE"),
            ("clients with descriptions of items", "CL"),
        ])
    );
    assert_eq!(m.schema.symbols["VE"].elements, [strings(&["V1"]), strings(&["V2"])]);
    let back = instantiate(&m.schema, &m.schema.interpretation()).unwrap();
    assert_eq!(back, m.net);
    let json: NetSchema = serde_json::from_str(&m.schema.to_json()).unwrap();
    assert_eq!(json, m.schema);
    let net: SystemNet = serde_json::from_str(&m.net.to_json()).unwrap();
    assert_eq!(net, m.net);
}

#[test]
fn schema_errors() {
    let m = retail();
    let mut mapping = BTreeMap::from([("available vendors".to_string(), "VE".to_string())]);
    assert_eq!(
        schematize(&m.net, &mapping).unwrap_err(),
        LiftError::UnmappedMarkedPlace("available cashiers".into())
    );
    mapping.insert("nowhere".into(), "NO".into());
    assert_eq!(
        schematize(&m.net, &mapping).unwrap_err(),
        LiftError::UnknownPlace("nowhere".into())
    );
    assert_eq!(
        instantiate(&m.schema, &BTreeMap::new()).unwrap_err(),
        LiftError::UninterpretedSymbol("CA".into())
    );
}

fn mined() -> (MinedRun, EventLog, RolePolicy, Structure, PlaceRoleConfig) {
    let (log, policy, s, config) = inputs();
    (mine_run(&log, &policy).unwrap(), log, policy, s, config)
}

#[test]
fn unresolvable_value() {
    let text = include_str!("../../fixtures/retail.jsonl").replace("\"shirt\"", "\"sandals\"");
    let log = parse_log(text.as_bytes(), LogFormat::Jsonl).unwrap();
    let (_, policy, s, config) = inputs();
    let err = mine_system(&log, &policy, &s, &config).unwrap_err();
    assert_eq!(err.step, 4);
    assert!(err.message.contains("sandals"));
}

#[test]
fn single_agent_empty_data() {
    let text = r#"{"name":"browse","agents":["V1"],"ts":"2024-01-01T09:00:00Z"}"#;
    let log = parse_log(text.as_bytes(), LogFormat::Jsonl).unwrap();
    let (_, policy, s, mut config) = inputs();
    config.default_scheme = true;
    config.schema.clear();
    config.schema.insert("vendor:pre:browse".into(), "VE".into());
    let m = mine_system(&log, &policy, &s, &config).unwrap();
    assert_eq!(m.annotated[0].inscriptions.len(), 2);
    for tuple in m.annotated[0].inscriptions.values() {
        assert_eq!(tuple, &strings(&["V1"]));
    }
    assert!(m.report.conformant);
}

#[test]
fn missing_and_conflicting_place_roles() {
    let (mined, _, policy, _, mut config) = mined();
    config.rules.retain(|r| r.role != "cashier");
    let err = resolve_place_roles(&mined, &policy, &config).unwrap_err();
    assert!(matches!(err, LiftError::MissingPlaceRole(_)));

    config.default_scheme = true;
    let roles = resolve_place_roles(&mined, &policy, &config).unwrap();
    assert!(roles
        .places
        .values()
        .any(|r| r.label == "cashier:pre:Alice pays take home"));

    let (mined, _, policy, _, mut config) = self::mined();
    for r in &mut config.rules {
        if r.role == "vendor" && r.event == "V1 packs shirt" && r.position == Position::Pre {
            r.place = "somewhere else".into();
        }
    }
    assert!(matches!(
        resolve_place_roles(&mined, &policy, &config),
        Err(LiftError::PlaceRoleConflict { .. })
    ));
}

#[test]
fn token_mismatch_detected() {
    let text = include_str!("../../fixtures/retail.jsonl")
        .replace(r#""name": "Alice pays take home", "agents": ["cashier", "Alice"], "data": {"item": "shirt", "price": "50 €"}"#,
                 r#""name": "Alice pays take home", "agents": ["cashier", "Alice"], "data": {"item": "shirt", "price": "80 €"}"#);
    let log = parse_log(text.as_bytes(), LogFormat::Jsonl).unwrap();
    let (_, policy, s, config) = inputs();
    let err = mine_system(&log, &policy, &s, &config).unwrap_err();
    assert_eq!(err.step, 4);
    assert!(err.message.contains("hands on"), "{err}");
}

fn one_atom(constants: &[(&str, &[&str])]) -> AnnotatedAtom {
    let mut b = crate::net::Module::builder().transition("t", "e");
    let mut places = Vec::new();
    for (i, (role, _)) in constants.iter().enumerate() {
        let p = format!("p{i}");
        b = b.place(p.as_str(), format!("{role}/{i}")).arc("t", p.as_str()).right(p.as_str());
        places.push(p);
    }
    let occ = crate::occurrence::as_occurrence(&b.build().unwrap()).unwrap();
    let atom = occ.atom(&"t".into()).unwrap();
    let inscriptions = atom
        .post_places()
        .map(|c| {
            let i: usize = atom.source_place(c).unwrap().as_str()[1..].parse().unwrap();
            (("t".into(), c.clone()), strings(constants[i].1))
        })
        .collect();
    let roles = atom
        .post_places()
        .map(|c| {
            let i: usize = atom.source_place(c).unwrap().as_str()[1..].parse().unwrap();
            (c.clone(), constants[i].0.to_string())
        })
        .collect();
    AnnotatedAtom {
        atom,
        event: "e".into(),
        inscriptions,
        roles,
    }
}

#[test]
fn unrelated_constants_become_fresh_variables() {
    let (_, _, s, _) = inputs();
    let a = one_atom(&[("a", &["Alice", "V1"]), ("b", &["Bob", "cashier"])]);
    let g = generalize_atom(&a, &s, &[]).unwrap();
    let mut texts: Vec<String> = g
        .inscriptions
        .values()
        .map(|ts| Term::Tuple(ts.clone()).to_string())
        .collect();
    texts.sort();
    assert_eq!(texts, ["(x, y)", "(x2, c)"]);
    assert!(g.reproduces(&a, &s));
}

#[test]
fn functional_match_ambiguity_and_priority() {
    let text = r#"{"sorts": {"p": ["a", "b"], "m": ["1", "2"]},
        "functions": {"g": {"args": ["p"], "result": "m", "table": {"a": "1", "b": "2"}},
                      "h": {"args": ["p"], "result": "m", "table": {"a": "1", "b": "1"}}},
        "variables": {"u": "p", "n": "m"}}"#;
    let s = parse_structure(text.as_bytes()).unwrap();
    let a = one_atom(&[("r", &["a", "1"])]);
    match generalize_atom(&a, &s, &[]).unwrap_err() {
        LiftError::AmbiguousFunctionalMatch { constant, candidates } => {
            assert_eq!(constant, "1");
            assert_eq!(candidates, ["g(u)", "h(u)"]);
        }
        e => panic!("unexpected {e}"),
    }
    let g = generalize_atom(&a, &s, &strings(&["h", "g"])).unwrap();
    let terms = g.inscriptions.values().next().unwrap();
    assert_eq!(Term::Tuple(terms.clone()).to_string(), "(u, h(u))");
    assert!(g.reproduces(&a, &s));

    let b = one_atom(&[("r", &["b", "2"])]);
    let g = generalize_atom(&b, &s, &[]).unwrap();
    let terms = g.inscriptions.values().next().unwrap();
    assert_eq!(Term::Tuple(terms.clone()).to_string(), "(u, g(u))");
}

#[test]
fn sort_clash_on_fold() {
    let m = retail();
    let (_, _, s, _) = inputs();
    let mut sym = m.symbolic.clone();
    let p = sym.roles.iter().find(|(_, r)| *r == "served clients").unwrap().0.clone();
    sym.roles.insert(p, "available vendors".into());
    assert!(matches!(
        fold_places(&sym, &s, &BTreeMap::new()),
        Err(LiftError::SortClash { .. })
    ));
}

#[test]
fn single_atom_composes_to_itself() {
    let (_, _, s, _) = inputs();
    let m = retail();
    let atom = m.atoms[0].clone();
    let sym = compose_symbolic(std::slice::from_ref(&atom), &s).unwrap();
    assert_eq!(sym.module, atom.module);
    assert_eq!(sym.inscriptions, atom.inscriptions);
}

#[test]
fn prefix_of_three_atoms() {
    let (_, _, s, _) = inputs();
    let m = retail();
    let pick = |e: &str| m.atoms.iter().find(|a| a.event == e).unwrap().clone();
    let prefix = [
        pick("shirt to take home"),
        pick("V1 packs shirt"),
        pick("Alice pays take home"),
    ];
    let sym = compose_symbolic(&prefix, &s).unwrap();
    assert_eq!(sym.module.net().transitions().len(), 3);
    let inner = sym.module.interior().into_iter().filter(|n| sym.module.net().places().contains(n)).count();
    assert_eq!(inner, 2);
}
