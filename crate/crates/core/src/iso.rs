//! Isomorphism of modules: a bijection of nodes preserving kind, label,
//! interface membership and arcs. Node ids and merge records are ignored.
//!
//! Colour refinement narrows the candidates, then a backtracking search
//! checks arc consistency. Modules in this crate are small.

use std::collections::BTreeMap;

use crate::net::{Module, NodeId, NodeKind};

struct Indexed {
    colour: Vec<usize>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
    adj: Vec<Vec<bool>>,
}

fn base_signature(m: &Module, n: &NodeId) -> String {
    let kind = match m.net().kind(n) {
        Some(NodeKind::Place) => 'P',
        _ => 'T',
    };
    format!(
        "{kind}|{}|{}|{}",
        m.left().contains(n) as u8,
        m.right().contains(n) as u8,
        m.label(n).map(|l| l.as_str()).unwrap_or_default()
    )
}

fn index(m: &Module) -> (Vec<NodeId>, Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let nodes: Vec<NodeId> = m.net().nodes().cloned().collect();
    let pos: BTreeMap<&NodeId, usize> = nodes.iter().enumerate().map(|(i, n)| (n, i)).collect();
    let mut succ = vec![Vec::new(); nodes.len()];
    let mut pred = vec![Vec::new(); nodes.len()];
    for (a, b) in m.net().arcs() {
        succ[pos[a]].push(pos[b]);
        pred[pos[b]].push(pos[a]);
    }
    (nodes, succ, pred)
}

// Refines colours of both graphs together so colour ids are comparable.
fn refine(a: &Module, b: &Module) -> Option<(Indexed, Indexed)> {
    let (na, sa, pa) = index(a);
    let (nb, sb, pb) = index(b);
    let mut sig_a: Vec<String> = na.iter().map(|n| base_signature(a, n)).collect();
    let mut sig_b: Vec<String> = nb.iter().map(|n| base_signature(b, n)).collect();
    let mut classes = 0;
    loop {
        let mut dict: Vec<&String> = sig_a.iter().chain(&sig_b).collect();
        dict.sort();
        dict.dedup();
        let id: BTreeMap<&String, usize> = dict.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let ca: Vec<usize> = sig_a.iter().map(|s| id[s]).collect();
        let cb: Vec<usize> = sig_b.iter().map(|s| id[s]).collect();
        let mut ha = ca.clone();
        let mut hb = cb.clone();
        ha.sort_unstable();
        hb.sort_unstable();
        if ha != hb {
            return None;
        }
        if dict.len() == classes {
            let build = |colour: Vec<usize>, succ: Vec<Vec<usize>>, pred: Vec<Vec<usize>>| {
                let n = colour.len();
                let mut adj = vec![vec![false; n]; n];
                for (i, js) in succ.iter().enumerate() {
                    for &j in js {
                        adj[i][j] = true;
                    }
                }
                Indexed { colour, succ, pred, adj }
            };
            return Some((build(ca, sa, pa), build(cb, sb, pb)));
        }
        classes = dict.len();
        let next = |c: &[usize], succ: &[Vec<usize>], pred: &[Vec<usize>]| -> Vec<String> {
            (0..c.len())
                .map(|i| {
                    let mut out: Vec<usize> = succ[i].iter().map(|&j| c[j]).collect();
                    let mut inc: Vec<usize> = pred[i].iter().map(|&j| c[j]).collect();
                    out.sort_unstable();
                    inc.sort_unstable();
                    format!("{}|{:?}|{:?}", c[i], out, inc)
                })
                .collect()
        };
        sig_a = next(&ca, &sa, &pa);
        sig_b = next(&cb, &sb, &pb);
    }
}

/// Whether there is a label-, kind-, interface- and arc-preserving bijection
/// between the nodes of `a` and `b`.
pub fn isomorphic(a: &Module, b: &Module) -> bool {
    if a.net().node_count() != b.net().node_count()
        || a.net().arcs().len() != b.net().arcs().len()
    {
        return false;
    }
    let Some((ia, ib)) = refine(a, b) else {
        return false;
    };
    let n = ia.colour.len();
    // Most constrained nodes first: small colour classes, then neighbours of
    // already placed nodes.
    let mut class_size: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in &ia.colour {
        *class_size.entry(c).or_default() += 1;
    }
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    while order.len() < n {
        let frontier = (0..n).filter(|&i| !placed[i]).min_by_key(|&i| {
            let linked = ia.succ[i].iter().chain(&ia.pred[i]).any(|&j| placed[j]);
            (!linked, class_size[&ia.colour[i]], i)
        });
        let i = frontier.expect("unplaced node");
        placed[i] = true;
        order.push(i);
    }
    let mut image = vec![usize::MAX; n];
    let mut used = vec![false; n];
    search(&ia, &ib, &order, 0, &mut image, &mut used)
}

fn search(
    a: &Indexed,
    b: &Indexed,
    order: &[usize],
    depth: usize,
    image: &mut [usize],
    used: &mut [bool],
) -> bool {
    let Some(&x) = order.get(depth) else {
        return true;
    };
    for y in 0..b.colour.len() {
        if used[y] || b.colour[y] != a.colour[x] {
            continue;
        }
        let consistent = order[..depth].iter().all(|&u| {
            let v = image[u];
            a.adj[u][x] == b.adj[v][y] && a.adj[x][u] == b.adj[y][v]
        }) && a.adj[x][x] == b.adj[y][y];
        if !consistent {
            continue;
        }
        image[x] = y;
        used[y] = true;
        if search(a, b, order, depth + 1, image, used) {
            return true;
        }
        used[y] = false;
        image[x] = usize::MAX;
    }
    false
}
