use std::collections::BTreeMap;

use super::{AnnotatedAtom, LiftError};
use crate::algebra::{eval, Structure, Term, Valuation, Value};
use crate::net::{Module, NodeId};

/// A single-transition module whose arcs carry terms, together with the
/// valuation that turns it back into its annotated atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemAtom {
    pub module: Module,
    pub transition: NodeId,
    pub event: String,
    pub inscriptions: BTreeMap<(NodeId, NodeId), Vec<Term>>,
    pub roles: BTreeMap<NodeId, String>,
    /// Sort of each variable the inscriptions use.
    pub variables: BTreeMap<String, String>,
    pub witness: Valuation,
}

impl SystemAtom {
    /// Evaluates every inscription under `beta`.
    pub fn instantiate_with(
        &self,
        s: &Structure,
        beta: &Valuation,
    ) -> Result<BTreeMap<(NodeId, NodeId), Vec<String>>, LiftError> {
        let scoped = with_variables(s, &self.variables)?;
        self.inscriptions
            .iter()
            .map(|(arc, terms)| Ok((arc.clone(), eval_tuple(terms, &scoped, beta)?)))
            .collect()
    }

    /// Evaluates every inscription under the witness valuation.
    pub fn instantiate(
        &self,
        s: &Structure,
    ) -> Result<BTreeMap<(NodeId, NodeId), Vec<String>>, LiftError> {
        self.instantiate_with(s, &self.witness)
    }

    /// Whether instantiating under the witness gives back `source`.
    pub fn reproduces(&self, source: &AnnotatedAtom, s: &Structure) -> bool {
        self.module == *source.atom.module()
            && self.roles == source.roles
            && self.instantiate(s).is_ok_and(|i| i == source.inscriptions)
    }
}

/// `s` with additional variable declarations.
pub(crate) fn with_variables(
    s: &Structure,
    variables: &BTreeMap<String, String>,
) -> Result<Structure, LiftError> {
    let mut scoped = s.clone();
    for (v, sort) in variables {
        scoped.declare_variable(v, sort)?;
    }
    Ok(scoped)
}

pub(crate) fn eval_tuple(
    terms: &[Term],
    s: &Structure,
    beta: &Valuation,
) -> Result<Vec<String>, LiftError> {
    terms
        .iter()
        .map(|t| match eval(t, s, beta)? {
            Value::Atom(v) => Ok(v),
            Value::Tuple(_) => unreachable!("inscription components are atomic"),
        })
        .collect()
}

struct Generalizer<'a> {
    s: &'a Structure,
    priority: &'a [String],
    bound: BTreeMap<String, Term>,
    // constants bound to plain variables, in binding order
    plain: Vec<(String, String)>,
    variables: BTreeMap<String, String>,
    witness: Valuation,
}

impl Generalizer<'_> {
    fn term_for(&mut self, c: &str) -> Result<Term, LiftError> {
        if let Some(t) = self.bound.get(c) {
            return Ok(t.clone());
        }
        let term = match self.functional_match(c)? {
            Some(t) => t,
            None => {
                let v = self.fresh_variable(c)?;
                self.plain.push((c.to_string(), v.clone()));
                Term::Var(v)
            }
        };
        self.bound.insert(c.to_string(), term.clone());
        Ok(term)
    }

    /// `g(v')` when `c = g(c')` for a unary `g` and a constant `c'` already
    /// bound to the variable `v'`.
    fn functional_match(&self, c: &str) -> Result<Option<Term>, LiftError> {
        let sig = self.s.signature();
        let mut candidates = Vec::new();
        for (g, decl) in sig.functions() {
            let [arg_sort] = decl.args.as_slice() else {
                continue;
            };
            for (c2, v2) in &self.plain {
                if self.variables[v2] == *arg_sort
                    && self.s.apply(g, std::slice::from_ref(c2)).ok() == Some(c)
                {
                    candidates.push(Term::app(g.clone(), vec![Term::var(v2.clone())]));
                }
            }
        }
        match candidates.len() {
            0 => return Ok(None),
            1 => return Ok(candidates.pop()),
            _ => {}
        }
        let rank = |t: &Term| match t {
            Term::App(g, _) => self.priority.iter().position(|p| p == g),
            _ => None,
        };
        let best = candidates.iter().filter_map(rank).min();
        let preferred: Vec<&Term> = candidates
            .iter()
            .filter(|t| best.is_some() && rank(t) == best)
            .collect();
        match preferred.as_slice() {
            [t] => Ok(Some((*t).clone())),
            _ => Err(LiftError::AmbiguousFunctionalMatch {
                constant: c.to_string(),
                candidates: candidates.iter().map(Term::to_string).collect(),
            }),
        }
    }

    /// A variable for constant `c`, named after the first declared variable
    /// of its sort, with suffixes 2, 3, ... when that name is taken.
    fn fresh_variable(&mut self, c: &str) -> Result<String, LiftError> {
        let sort = match self.s.sorts_containing(c).as_slice() {
            [] => return Err(LiftError::UnresolvableValue(c.to_string())),
            [s] => s.to_string(),
            many => {
                return Err(LiftError::AmbiguousValue {
                    value: c.to_string(),
                    sorts: many.iter().map(|s| s.to_string()).collect(),
                })
            }
        };
        let sig = self.s.signature();
        let base = sig.variables_of(&sort).next().map(String::from).unwrap_or_else(|| {
            sort.chars()
                .find(char::is_ascii_alphabetic)
                .map_or_else(|| "v".to_string(), |c| c.to_ascii_lowercase().to_string())
        });
        let free = |name: &str| {
            !self.variables.contains_key(name)
                && sig.function(name).is_none()
                && sig.variable_sort(name).is_none_or(|s| s == sort)
        };
        let name = std::iter::once(base.clone())
            .chain((2..).map(|i| format!("{base}{i}")))
            .find(|n| free(n))
            .expect("unbounded suffixes");
        self.variables.insert(name.clone(), sort);
        self.witness.insert(name.clone(), c.to_string());
        Ok(name)
    }
}

/// Replaces the constants of an annotated atom by variables and terms.
///
/// Input arcs are processed before output arcs, each group ordered by place
/// role and place id. A repeated constant reuses its term.
pub fn generalize_atom(
    a: &AnnotatedAtom,
    s: &Structure,
    priority: &[String],
) -> Result<SystemAtom, LiftError> {
    let t = a.atom.transition();
    let mut arcs: Vec<&(NodeId, NodeId)> = a.inscriptions.keys().collect();
    arcs.sort_by_key(|(x, y)| {
        let (output, place) = if x == t { (true, y) } else { (false, x) };
        (output, &a.roles[place], place)
    });
    let mut g = Generalizer {
        s,
        priority,
        bound: BTreeMap::new(),
        plain: Vec::new(),
        variables: BTreeMap::new(),
        witness: Valuation::new(),
    };
    let mut inscriptions = BTreeMap::new();
    for arc in arcs {
        let terms = a.inscriptions[arc]
            .iter()
            .map(|c| g.term_for(c))
            .collect::<Result<Vec<_>, _>>()?;
        inscriptions.insert(arc.clone(), terms);
    }
    Ok(SystemAtom {
        module: a.atom.module().clone(),
        transition: t.clone(),
        event: a.event.clone(),
        inscriptions,
        roles: a.roles.clone(),
        variables: g.variables,
        witness: g.witness,
    })
}

