//! JSON artifacts and Graphviz renderings.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;

use crate::algebra::{Term, Valuation};
use crate::lifting::{NetSchema, SymbolicModule, SystemAtom, SystemNet};
use crate::net::{Module, ModuleDoc, NodeId};

/// Version stamped on every artifact.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    format_version: u32,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON of `body` with a leading `format_version` field.
pub fn versioned_json<T: Serialize>(body: &T) -> String {
    let mut out = serde_json::to_string_pretty(&Versioned {
        format_version: FORMAT_VERSION,
        body,
    })
    .expect("artifacts serialize");
    out.push('\n');
    out
}

pub fn module_json(m: &Module) -> String {
    versioned_json(&ModuleDoc::from(m))
}

fn tuple_text(terms: &[Term]) -> String {
    match terms {
        [t] => t.to_string(),
        ts => Term::Tuple(ts.to_vec()).to_string(),
    }
}

#[derive(Serialize)]
struct InscribedArc<'a> {
    from: &'a NodeId,
    to: &'a NodeId,
    inscription: String,
}

fn inscribed(arcs: &BTreeMap<(NodeId, NodeId), Vec<Term>>) -> Vec<InscribedArc<'_>> {
    arcs.iter()
        .map(|((from, to), terms)| InscribedArc {
            from,
            to,
            inscription: tuple_text(terms),
        })
        .collect()
}

#[derive(Serialize)]
struct AtomDoc<'a> {
    event: &'a str,
    transition: &'a NodeId,
    arcs: Vec<InscribedArc<'a>>,
    roles: &'a BTreeMap<NodeId, String>,
    variables: &'a BTreeMap<String, String>,
    witness: &'a Valuation,
}

#[derive(Serialize)]
struct AtomsDoc<'a> {
    atoms: Vec<AtomDoc<'a>>,
}

pub fn atoms_json(atoms: &[SystemAtom]) -> String {
    let atoms = atoms
        .iter()
        .map(|a| AtomDoc {
            event: &a.event,
            transition: &a.transition,
            arcs: inscribed(&a.inscriptions),
            roles: &a.roles,
            variables: &a.variables,
            witness: &a.witness,
        })
        .collect();
    versioned_json(&AtomsDoc { atoms })
}

#[derive(Serialize)]
struct SymbolicDoc<'a> {
    module: ModuleDoc,
    arcs: Vec<InscribedArc<'a>>,
    roles: &'a BTreeMap<NodeId, String>,
    marking: &'a BTreeMap<NodeId, Vec<String>>,
}

pub fn symbolic_json(m: &SymbolicModule) -> String {
    versioned_json(&SymbolicDoc {
        module: ModuleDoc::from(&m.module),
        arcs: inscribed(&m.inscriptions),
        roles: &m.roles,
        marking: &m.marking,
    })
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Graphviz rendering of a module. Left-interface nodes are blue, right ones
/// yellow, nodes on both interfaces green.
pub fn module_dot(m: &Module) -> String {
    let mut out = String::from("digraph module {\n  rankdir=LR;\n");
    for n in m.net().nodes() {
        let shape = if m.net().places().contains(n) { "circle" } else { "box" };
        let fill = match (m.left().contains(n), m.right().contains(n)) {
            (true, true) => ", style=filled, fillcolor=palegreen",
            (true, false) => ", style=filled, fillcolor=lightblue",
            (false, true) => ", style=filled, fillcolor=lightyellow",
            (false, false) => "",
        };
        let label = m.label(n).map_or("", |l| l.as_str());
        let _ = writeln!(
            out,
            "  {} [shape={shape}, label={}{fill}];",
            quote(n.as_str()),
            quote(label)
        );
    }
    for (a, b) in m.net().arcs() {
        let _ = writeln!(out, "  {} -> {};", quote(a.as_str()), quote(b.as_str()));
    }
    out.push_str("}\n");
    out
}

fn place_node(name: &str) -> String {
    quote(&format!("p:{name}"))
}

fn transition_node(key: &str) -> String {
    quote(&format!("t:{key}"))
}

fn net_dot(
    name: &str,
    places: &BTreeMap<String, Vec<String>>,
    transitions: &BTreeMap<String, crate::lifting::SystemTransition>,
    place_text: impl Fn(&str) -> String,
) -> String {
    let mut out = format!("digraph {} {{\n  rankdir=LR;\n", quote(name));
    for p in places.keys() {
        let _ = writeln!(
            out,
            "  {} [shape=ellipse, label={}];",
            place_node(p),
            quote(&place_text(p))
        );
    }
    for (key, t) in transitions {
        let _ = writeln!(out, "  {} [shape=box, label={}];", transition_node(key), quote(&t.label));
        for a in &t.inputs {
            let _ = writeln!(
                out,
                "  {} -> {} [label={}];",
                place_node(&a.place),
                transition_node(key),
                quote(&a.inscription_text())
            );
        }
        for a in &t.outputs {
            let _ = writeln!(
                out,
                "  {} -> {} [label={}];",
                transition_node(key),
                place_node(&a.place),
                quote(&a.inscription_text())
            );
        }
    }
    out.push_str("}\n");
    out
}

/// Graphviz rendering of a system net with its tokens inside the places.
pub fn system_net_dot(net: &SystemNet) -> String {
    net_dot("system", &net.places, &net.transitions, |p| {
        let mut text = p.to_string();
        for (token, n) in net.marking.tokens(p) {
            let tuple = match token.as_slice() {
                [v] => v.clone(),
                vs => format!("({})", vs.join(", ")),
            };
            for _ in 0..n {
                text.push('\n');
                text.push_str(&tuple);
            }
        }
        text
    })
}

/// Graphviz rendering of a net schema with `elm(SYMBOL)` markings.
pub fn schema_dot(schema: &NetSchema) -> String {
    net_dot("schema", &schema.places, &schema.transitions, |p| match schema.initial.get(p) {
        Some(t) if t.elm => format!("{p}\nelm({})", t.symbol),
        Some(t) => format!("{p}\n{}", t.symbol),
        None => p.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn module_dot_escapes_and_colours() {
        let m = Module::builder()
            .place("p", "say \"hi\"")
            .transition("t", "go")
            .arc("p", "t")
            .left("p")
            .right("t")
            .build()
            .unwrap();
        let dot = module_dot(&m);
        assert!(dot.starts_with("digraph module {"));
        assert!(dot.contains(r#"label="say \"hi\"", style=filled, fillcolor=lightblue"#));
        assert!(dot.contains("fillcolor=lightyellow"));
        assert!(dot.contains(r#""p" -> "t";"#));
    }

    #[test]
    fn version_comes_first() {
        let m = Module::empty();
        let json = module_json(&m);
        assert!(json.starts_with("{\n  \"format_version\": 1,"));
        let back: Module = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}
