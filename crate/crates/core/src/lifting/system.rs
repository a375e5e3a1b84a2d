use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::generalize::{eval_tuple, with_variables};
use super::{LiftError, SystemAtom};
use crate::algebra::{Sort, Structure, Term, Valuation};
use crate::composition::compose_all;
use crate::net::{Module, NodeId};
use crate::occurrence::OccurrenceModule;

/// A token: a tuple of carrier values.
pub type Token = Vec<String>;

/// Multiset of tokens per place. Serialized as `{place: [[v, ...], ...]}`
/// with repeated tuples for multiplicities above one.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Marking(BTreeMap<String, BTreeMap<Token, usize>>);

impl Marking {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, place: &str, token: Token) {
        *self
            .0
            .entry(place.to_string())
            .or_default()
            .entry(token)
            .or_insert(0) += 1;
    }

    /// Removes one copy of `token`; false if there is none.
    pub fn remove(&mut self, place: &str, token: &Token) -> bool {
        let Some(tokens) = self.0.get_mut(place) else {
            return false;
        };
        match tokens.get_mut(token) {
            Some(n) if *n > 1 => *n -= 1,
            Some(_) => {
                tokens.remove(token);
                if tokens.is_empty() {
                    self.0.remove(place);
                }
            }
            None => return false,
        }
        true
    }

    pub fn count(&self, place: &str, token: &Token) -> usize {
        self.0.get(place).and_then(|t| t.get(token)).copied().unwrap_or(0)
    }

    /// Tokens on `place` with their multiplicities.
    pub fn tokens(&self, place: &str) -> impl Iterator<Item = (&Token, usize)> {
        self.0.get(place).into_iter().flatten().map(|(t, n)| (t, *n))
    }

    pub fn marked_places(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn total(&self) -> usize {
        self.0.values().flat_map(|t| t.values()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Serialize for Marking {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let expanded: BTreeMap<&String, Vec<&Token>> = self
            .0
            .iter()
            .map(|(p, ts)| {
                let list = ts
                    .iter()
                    .flat_map(|(t, n)| std::iter::repeat_n(t, *n))
                    .collect();
                (p, list)
            })
            .collect();
        expanded.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Marking {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = BTreeMap::<String, Vec<Token>>::deserialize(deserializer)?;
        let mut m = Marking::new();
        for (p, ts) in raw {
            for t in ts {
                m.add(&p, t);
            }
        }
        Ok(m)
    }
}

fn profile(
    terms: &[Term],
    s: &Structure,
    variables: &BTreeMap<String, String>,
) -> Result<Vec<String>, LiftError> {
    let scoped = with_variables(s, variables)?;
    terms
        .iter()
        .map(|t| match scoped.sort_of(t)? {
            Sort::Named(n) => Ok(n),
            other => Ok(other.to_string()),
        })
        .collect()
}

/// Composition of system atoms, with inscriptions and initial tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicModule {
    pub module: Module,
    pub inscriptions: BTreeMap<(NodeId, NodeId), Vec<Term>>,
    /// Role label of each place.
    pub roles: BTreeMap<NodeId, String>,
    /// Event of each transition.
    pub events: BTreeMap<NodeId, String>,
    pub variables: BTreeMap<NodeId, BTreeMap<String, String>>,
    pub witnesses: BTreeMap<NodeId, Valuation>,
    /// Tokens on the left-interface places, as produced by the firing rule
    /// from the witnesses.
    pub marking: BTreeMap<NodeId, Token>,
}

/// Composes system atoms in the given order, carrying inscriptions along.
pub fn compose_symbolic(atoms: &[SystemAtom], s: &Structure) -> Result<SymbolicModule, LiftError> {
    let module = if atoms.is_empty() {
        Module::empty()
    } else {
        let modules: Vec<Module> = atoms.iter().map(|a| a.module.clone()).collect();
        compose_all(&modules)?
    };
    let mut by_arc = BTreeMap::new();
    let mut place_role = BTreeMap::new();
    for (i, a) in atoms.iter().enumerate() {
        for (arc, terms) in &a.inscriptions {
            by_arc.insert(arc.clone(), (i, terms));
        }
        place_role.extend(a.roles.iter());
    }

    let mut inscriptions = BTreeMap::new();
    let mut owner = BTreeMap::new();
    for (x, y) in module.net().arcs() {
        let found = module.origins(x).into_iter().find_map(|ox| {
            module
                .origins(y)
                .into_iter()
                .find_map(|oy| by_arc.get(&(ox.clone(), oy)))
        });
        let (i, terms) = found.expect("composed arcs come from atom arcs");
        inscriptions.insert((x.clone(), y.clone()), (*terms).clone());
        owner.insert((x.clone(), y.clone()), *i);
    }

    let mut roles = BTreeMap::new();
    for p in module.net().places() {
        let mut labels = module.origins(p).into_iter().filter_map(|o| place_role.get(&o));
        let first = labels.next().expect("atom places have roles");
        if let Some(other) = labels.find(|l| l != &first) {
            return Err(LiftError::PlaceRoleConflict {
                place: p.clone(),
                first: first.to_string(),
                second: other.to_string(),
            });
        }
        roles.insert(p.clone(), first.to_string());
    }

    let net = module.net();
    for p in net.places() {
        let (Some(t1), Some(t2)) = (net.preset(p).next(), net.postset(p).next()) else {
            continue;
        };
        let a1 = &atoms[owner[&(t1.clone(), p.clone())]];
        let a2 = &atoms[owner[&(p.clone(), t2.clone())]];
        let first = profile(&inscriptions[&(t1.clone(), p.clone())], s, &a1.variables)?;
        let second = profile(&inscriptions[&(p.clone(), t2.clone())], s, &a2.variables)?;
        if first != second {
            return Err(LiftError::SortClash {
                place: p.to_string(),
                first,
                second,
            });
        }
    }

    let mut marking = BTreeMap::new();
    for p in module.left() {
        if let Some(t) = net.postset(p).next() {
            let a = &atoms[owner[&(p.clone(), t.clone())]];
            let scoped = with_variables(s, &a.variables)?;
            let token = eval_tuple(&inscriptions[&(p.clone(), t.clone())], &scoped, &a.witness)?;
            marking.insert(p.clone(), token);
        }
    }

    let mut events = BTreeMap::new();
    let mut variables = BTreeMap::new();
    let mut witnesses = BTreeMap::new();
    for a in atoms {
        events.insert(a.transition.clone(), a.event.clone());
        variables.insert(a.transition.clone(), a.variables.clone());
        witnesses.insert(a.transition.clone(), a.witness.clone());
    }
    Ok(SymbolicModule {
        module,
        inscriptions,
        roles,
        events,
        variables,
        witnesses,
        marking,
    })
}

/// An arc between a system-net place and a transition, inscribed with a
/// tuple of terms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Arc {
    pub place: String,
    pub inscription: Vec<Term>,
}

impl Arc {
    pub fn inscription_text(&self) -> String {
        match self.inscription.as_slice() {
            [t] => t.to_string(),
            ts => Term::Tuple(ts.to_vec()).to_string(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ArcDoc {
    place: String,
    inscription: String,
}

impl Serialize for Arc {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ArcDoc {
            place: self.place.clone(),
            inscription: self.inscription_text(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Arc {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = ArcDoc::deserialize(deserializer)?;
        let inscription = match Term::parse(&doc.inscription).map_err(serde::de::Error::custom)? {
            Term::Tuple(ts) => ts,
            t => vec![t],
        };
        Ok(Arc {
            place: doc.place,
            inscription,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemTransition {
    pub label: String,
    pub inputs: Vec<Arc>,
    pub outputs: Vec<Arc>,
    pub variables: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct PlaceDoc {
    sorts: Vec<String>,
}

/// A high-level net: places typed by sort profiles, transitions with
/// term-inscribed arcs, and a marking. Transitions are keyed by event name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemNet {
    #[serde(with = "place_profiles")]
    pub places: BTreeMap<String, Vec<String>>,
    pub transitions: BTreeMap<String, SystemTransition>,
    pub marking: Marking,
}

mod place_profiles {
    use super::PlaceDoc;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(
        places: &BTreeMap<String, Vec<String>>,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        places
            .iter()
            .map(|(p, sorts)| (p, PlaceDoc { sorts: sorts.clone() }))
            .collect::<BTreeMap<_, _>>()
            .serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<BTreeMap<String, Vec<String>>, D::Error> {
        let raw = BTreeMap::<String, PlaceDoc>::deserialize(deserializer)?;
        Ok(raw.into_iter().map(|(p, d)| (p, d.sorts)).collect())
    }
}

impl SystemNet {
    /// Key of the transition named `name`, by key or by unique label.
    pub fn transition_key<'a>(&'a self, name: &'a str) -> Option<&'a str> {
        if self.transitions.contains_key(name) {
            return Some(name);
        }
        let mut hits = self.transitions.iter().filter(|(_, t)| t.label == name);
        match (hits.next(), hits.next()) {
            (Some((k, _)), None) => Some(k),
            _ => None,
        }
    }

    fn transition<'a>(&'a self, name: &'a str) -> Result<(&'a str, &'a SystemTransition), LiftError> {
        let key = self
            .transition_key(name)
            .ok_or_else(|| LiftError::UnknownTransition(name.to_string()))?;
        Ok((key, &self.transitions[key]))
    }

    /// Marking after firing `t` in `marking` under `beta`.
    pub fn fire_in(
        &self,
        s: &Structure,
        t: &str,
        beta: &Valuation,
        marking: &Marking,
    ) -> Result<Marking, LiftError> {
        let (key, tr) = self.transition(t)?;
        let scoped = with_variables(s, &tr.variables)?;
        let mut next = marking.clone();
        let mut missing = Vec::new();
        for arc in &tr.inputs {
            let token = eval_tuple(&arc.inscription, &scoped, beta)?;
            if !next.remove(&arc.place, &token) {
                missing.push((arc.place.clone(), token));
            }
        }
        if !missing.is_empty() {
            return Err(LiftError::NotEnabled {
                transition: key.to_string(),
                missing,
            });
        }
        for arc in &tr.outputs {
            next.add(&arc.place, eval_tuple(&arc.inscription, &scoped, beta)?);
        }
        Ok(next)
    }

    pub fn is_enabled(&self, s: &Structure, t: &str, beta: &Valuation) -> bool {
        self.fire_in(s, t, beta, &self.marking).is_ok()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("system net serializes")
    }
}

/// Identifies equally labeled places of a symbolic module.
pub fn fold_places(
    m: &SymbolicModule,
    s: &Structure,
    display: &BTreeMap<String, String>,
) -> Result<SystemNet, LiftError> {
    let net = m.module.net();
    let mut places: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut transitions = BTreeMap::new();
    for t in net.transitions() {
        let event = m.events[t].clone();
        let vars = &m.variables[t];
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        for ((x, y), terms) in &m.inscriptions {
            let (list, place) = if y == t {
                (&mut inputs, x)
            } else if x == t {
                (&mut outputs, y)
            } else {
                continue;
            };
            let role = &m.roles[place];
            let sorts = profile(terms, s, vars)?;
            match places.get(role) {
                Some(known) if *known != sorts => {
                    return Err(LiftError::SortClash {
                        place: role.clone(),
                        first: known.clone(),
                        second: sorts,
                    })
                }
                Some(_) => {}
                None => {
                    places.insert(role.clone(), sorts);
                }
            }
            list.push(Arc {
                place: role.clone(),
                inscription: terms.clone(),
            });
        }
        inputs.sort();
        outputs.sort();
        let label = display.get(&event).cloned().unwrap_or_else(|| event.clone());
        transitions.insert(
            event,
            SystemTransition {
                label,
                inputs,
                outputs,
                variables: vars.clone(),
            },
        );
    }
    for p in net.places() {
        places.entry(m.roles[p].clone()).or_default();
    }
    let mut marking = Marking::new();
    for (p, token) in &m.marking {
        marking.add(&m.roles[p], token.clone());
    }
    Ok(SystemNet {
        places,
        transitions,
        marking,
    })
}

/// Fires `t` under `beta`, returning the successor net.
pub fn fire(net: &SystemNet, s: &Structure, t: &str, beta: &Valuation) -> Result<SystemNet, LiftError> {
    let marking = net.fire_in(s, t, beta, &net.marking)?;
    Ok(SystemNet {
        marking,
        ..net.clone()
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Blocking {
    pub transition: String,
    pub missing: Vec<(String, Token)>,
}

/// Outcome of replaying a run on a system net.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConformanceReport {
    pub conformant: bool,
    /// Net transitions in a firable order, when conformant.
    pub sequence: Vec<String>,
    /// First blocked transition of the default linearization otherwise.
    pub blocking: Option<Blocking>,
}

/// Searches for a linearization of `run` that `net` can fire, each run
/// transition under its witness valuation.
pub fn replay(
    net: &SystemNet,
    s: &Structure,
    run: &OccurrenceModule,
    witnesses: &BTreeMap<NodeId, Valuation>,
) -> Result<ConformanceReport, LiftError> {
    let order = run.topological_transitions();
    let mut keys = Vec::with_capacity(order.len());
    for t in &order {
        let label = run.module().label(t).expect("labeled").as_str();
        let key = net
            .transition_key(label)
            .ok_or_else(|| LiftError::UnknownTransitionLabel(label.to_string()))?;
        keys.push(key.to_string());
        if !witnesses.contains_key(t) {
            return Err(LiftError::MissingWitness(t.clone()));
        }
    }
    let preds: Vec<Vec<usize>> = order
        .iter()
        .map(|t| {
            (0..order.len())
                .filter(|&j| run.precedes(&order[j], t))
                .collect()
        })
        .collect();

    struct Search<'a> {
        net: &'a SystemNet,
        s: &'a Structure,
        order: &'a [NodeId],
        keys: &'a [String],
        preds: &'a [Vec<usize>],
        witnesses: &'a BTreeMap<NodeId, Valuation>,
        failed: HashSet<Vec<bool>>,
    }

    impl Search<'_> {
        fn go(
            &mut self,
            fired: &mut Vec<bool>,
            marking: &Marking,
            seq: &mut Vec<String>,
        ) -> Result<bool, LiftError> {
            if fired.iter().all(|f| *f) {
                return Ok(true);
            }
            if self.failed.contains(fired) {
                return Ok(false);
            }
            for i in 0..self.order.len() {
                if fired[i] || !self.preds[i].iter().all(|&j| fired[j]) {
                    continue;
                }
                let beta = &self.witnesses[&self.order[i]];
                let next = match self.net.fire_in(self.s, &self.keys[i], beta, marking) {
                    Ok(m) => m,
                    Err(LiftError::NotEnabled { .. }) => continue,
                    Err(e) => return Err(e),
                };
                fired[i] = true;
                seq.push(self.keys[i].clone());
                if self.go(fired, &next, seq)? {
                    return Ok(true);
                }
                seq.pop();
                fired[i] = false;
            }
            self.failed.insert(fired.clone());
            Ok(false)
        }
    }

    let mut search = Search {
        net,
        s,
        order: &order,
        keys: &keys,
        preds: &preds,
        witnesses,
        failed: HashSet::new(),
    };
    let mut seq = Vec::new();
    if search.go(&mut vec![false; order.len()], &net.marking, &mut seq)? {
        return Ok(ConformanceReport {
            conformant: true,
            sequence: seq,
            blocking: None,
        });
    }
    let mut marking = net.marking.clone();
    for (t, key) in order.iter().zip(&keys) {
        match net.fire_in(s, key, &witnesses[t], &marking) {
            Ok(m) => marking = m,
            Err(LiftError::NotEnabled {
                transition,
                missing,
            }) => {
                return Ok(ConformanceReport {
                    conformant: false,
                    sequence: Vec::new(),
                    blocking: Some(Blocking {
                        transition,
                        missing,
                    }),
                })
            }
            Err(e) => return Err(e),
        }
    }
    unreachable!("the default linearization fires whenever the search fails")
}

/// An initial-marking entry of a schema: the elements (`elm`) of a set
/// symbol become individual tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaToken {
    pub symbol: String,
    pub elm: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolDecl {
    /// Sort profile of the symbol's elements.
    pub sorts: Vec<String>,
    /// Elements the symbol denotes in the mined system.
    pub elements: Vec<Token>,
}

/// A system net whose initial marking is given by set symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetSchema {
    #[serde(with = "place_profiles")]
    pub places: BTreeMap<String, Vec<String>>,
    pub transitions: BTreeMap<String, SystemTransition>,
    pub initial: BTreeMap<String, SchemaToken>,
    pub symbols: BTreeMap<String, SymbolDecl>,
}

impl NetSchema {
    /// The symbol interpretation recorded from the mined marking.
    pub fn interpretation(&self) -> BTreeMap<String, Vec<Token>> {
        self.symbols
            .iter()
            .map(|(s, d)| (s.clone(), d.elements.clone()))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }
}

/// Replaces the concrete initial marking by set symbols.
pub fn schematize(net: &SystemNet, mapping: &BTreeMap<String, String>) -> Result<NetSchema, LiftError> {
    if let Some(p) = mapping.keys().find(|p| !net.places.contains_key(*p)) {
        return Err(LiftError::UnknownPlace(p.clone()));
    }
    if let Some(p) = net.marking.marked_places().find(|p| !mapping.contains_key(*p)) {
        return Err(LiftError::UnmappedMarkedPlace(p.to_string()));
    }
    let mut symbols: BTreeMap<String, SymbolDecl> = BTreeMap::new();
    let mut initial = BTreeMap::new();
    for (place, symbol) in mapping {
        let elements: Vec<Token> = net
            .marking
            .tokens(place)
            .flat_map(|(t, n)| std::iter::repeat_n(t.clone(), n))
            .collect();
        let decl = SymbolDecl {
            sorts: net.places[place].clone(),
            elements,
        };
        match symbols.get(symbol) {
            Some(known) if *known != decl => return Err(LiftError::SymbolConflict(symbol.clone())),
            Some(_) => {}
            None => {
                symbols.insert(symbol.clone(), decl);
            }
        }
        initial.insert(
            place.clone(),
            SchemaToken {
                symbol: symbol.clone(),
                elm: true,
            },
        );
    }
    Ok(NetSchema {
        places: net.places.clone(),
        transitions: net.transitions.clone(),
        initial,
        symbols,
    })
}

/// A concrete system net from a schema and an interpretation of its set
/// symbols.
pub fn instantiate(
    schema: &NetSchema,
    interpretation: &BTreeMap<String, Vec<Token>>,
) -> Result<SystemNet, LiftError> {
    let mut marking = Marking::new();
    for (place, token) in &schema.initial {
        let elements = interpretation
            .get(&token.symbol)
            .ok_or_else(|| LiftError::UninterpretedSymbol(token.symbol.clone()))?;
        if !token.elm {
            return Err(LiftError::BadConfig(format!(
                "symbol {:?} on {place:?} is not an elm token; set-valued tokens are not supported",
                token.symbol
            )));
        }
        for e in elements {
            marking.add(place, e.clone());
        }
    }
    Ok(SystemNet {
        places: schema.places.clone(),
        transitions: schema.transitions.clone(),
        marking,
    })
}
