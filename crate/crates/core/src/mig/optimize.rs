// SPDX-License-Identifier: Apache-2.0
//! MIG optimization: structural hashing with the local axioms (absorption,
//! complement, constant folding, double inversion, inverter propagation)
//! plus cut-based functional rewriting.
//!
//! The rewriter enumerates cuts of up to three leaves, computes each cut's
//! 8-bit truth table and replaces the node by a constant, a (possibly
//! complemented) leaf or a single MAJ over complemented leaves and constants
//! whenever that is cheaper than the node's fanout-free cone. Costs mirror
//! the row activations a node tends to need once scheduled: a MAJ costs
//! [`MAJ_COST`], an inverter [`INV_COST`].

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::graph::{Builder, MiGraph, Node, NodeId};

pub const MAJ_COST: usize = 7;
pub const INV_COST: usize = 4;
const MAX_CUTS: usize = 16;
const MAX_PASSES: usize = 32;

/// Weighted size used to compare graphs.
pub fn cost(g: &MiGraph) -> usize {
    MAJ_COST * g.maj_count() + INV_COST * g.inv_count()
}

/// Longest MAJ/INV path from an input to an output.
pub fn depth(g: &MiGraph) -> usize {
    let lv = levels(g);
    g.outputs().iter().map(|(_, o)| lv[o.index()]).max().unwrap_or(0)
}

fn output_depths(g: &MiGraph) -> usize {
    let lv = levels(g);
    g.outputs().iter().map(|(_, o)| lv[o.index()]).sum()
}

fn levels(g: &MiGraph) -> Vec<usize> {
    let mut lv = vec![0usize; g.nodes().len()];
    for i in 0..lv.len() {
        lv[i] = match g.nodes()[i] {
            Node::Maj(f) => 1 + f.iter().map(|x| lv[x.index()]).max().unwrap_or(0),
            Node::Inv(x) => 1 + lv[x.index()],
            _ => 0,
        };
    }
    lv
}

/// Rebuilds `g` through the hashing builder, applying the local axioms.
pub fn rebuild(g: &MiGraph) -> MiGraph {
    let mut b = Builder::new(g.inputs().to_vec());
    let mut map: Vec<NodeId> = (0..g.nodes().len() as u32).map(NodeId).collect();
    for (i, n) in g.nodes().iter().enumerate() {
        map[i] = match *n {
            Node::Maj([x, y, z]) => b.maj(map[x.index()], map[y.index()], map[z.index()]),
            Node::Inv(x) => b.inv(map[x.index()]),
            _ => NodeId(i as u32),
        };
    }
    for (name, o) in g.outputs() {
        b.g.add_output(name.clone(), map[o.index()]);
    }
    b.finish()
}

/// Optimizes to a fixpoint. The result is functionally equivalent and never
/// has more MAJ nodes than `g`.
pub fn optimize_mig(g: &MiGraph) -> MiGraph {
    let mut cur = rebuild(g);
    for _ in 0..MAX_PASSES {
        let next = rewrite_pass(&cur);
        let (cn, cc) = (cost(&next), cost(&cur));
        let better =
            next.maj_count() <= cur.maj_count() && (cn < cc || cn == cc && output_depths(&next) < output_depths(&cur));
        if !better {
            break;
        }
        cur = next;
    }
    if cur.maj_count() > g.maj_count() {
        return g.cleanup();
    }
    cur
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Lit {
    Const(bool),
    Leaf(usize, bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Repl {
    Lit(Lit),
    Maj([Lit; 3]),
}

const LEAF_TT: [u8; 3] = [0xAA, 0xCC, 0xF0];

fn lit_tt(l: Lit) -> u8 {
    match l {
        Lit::Const(false) => 0,
        Lit::Const(true) => 0xFF,
        Lit::Leaf(i, neg) => {
            if neg {
                !LEAF_TT[i]
            } else {
                LEAF_TT[i]
            }
        }
    }
}

fn repl_cost(r: &Repl) -> (usize, usize) {
    let inv = |l: &Lit| matches!(l, Lit::Leaf(_, true));
    match r {
        Repl::Lit(l) => (0, if inv(l) { INV_COST } else { 0 }),
        Repl::Maj(ls) => {
            let mut negs: Vec<usize> =
                ls.iter().filter_map(|l| if let Lit::Leaf(i, true) = l { Some(*i) } else { None }).collect();
            negs.sort_unstable();
            negs.dedup();
            (1, MAJ_COST + INV_COST * negs.len())
        }
    }
}

/// Cheapest replacement per truth table, for cuts of `k` leaves.
fn replacement_table(k: usize) -> Vec<Option<Repl>> {
    let mut lits = vec![Lit::Const(false), Lit::Const(true)];
    for i in 0..k {
        lits.push(Lit::Leaf(i, false));
        lits.push(Lit::Leaf(i, true));
    }
    let mut best: Vec<Option<Repl>> = vec![None; 256];
    let mut consider = |r: Repl, tt: u8| {
        let slot = &mut best[tt as usize];
        if slot.is_none_or(|old| repl_cost(&r).1 < repl_cost(&old).1) {
            *slot = Some(r);
        }
    };
    for &l in &lits {
        consider(Repl::Lit(l), lit_tt(l));
    }
    for a in 0..lits.len() {
        for b in a + 1..lits.len() {
            for c in b + 1..lits.len() {
                let (x, y, z) = (lit_tt(lits[a]), lit_tt(lits[b]), lit_tt(lits[c]));
                consider(Repl::Maj([lits[a], lits[b], lits[c]]), (x & y) | (x & z) | (y & z));
            }
        }
    }
    best
}

fn merge_cuts(parts: &[&[NodeId]]) -> Option<Vec<NodeId>> {
    let mut v: Vec<NodeId> = parts.iter().flat_map(|p| p.iter().copied()).collect();
    v.sort_unstable();
    v.dedup();
    (v.len() <= 3).then_some(v)
}

fn enumerate_cuts(g: &MiGraph, live: &[bool]) -> Vec<Vec<Vec<NodeId>>> {
    let n = g.nodes().len();
    let mut cuts: Vec<Vec<Vec<NodeId>>> = vec![Vec::new(); n];
    for i in 0..n {
        if !live[i] {
            continue;
        }
        let id = NodeId(i as u32);
        let mut set: Vec<Vec<NodeId>> = Vec::new();
        match g.node(id) {
            Node::Const(_) => set.push(Vec::new()),
            Node::Input(_) => set.push(vec![id]),
            Node::Inv(x) => {
                set.push(vec![id]);
                set.extend(cuts[x.index()].iter().cloned());
            }
            Node::Maj([a, b, c]) => {
                set.push(vec![id]);
                for ca in &cuts[a.index()] {
                    for cb in &cuts[b.index()] {
                        for cc in &cuts[c.index()] {
                            if let Some(m) = merge_cuts(&[ca, cb, cc]) {
                                if !set.contains(&m) {
                                    set.push(m);
                                }
                            }
                        }
                    }
                }
            }
        }
        set.sort_by_key(|c| c.len());
        set.truncate(MAX_CUTS);
        cuts[i] = set;
    }
    cuts
}

fn cut_tt(g: &MiGraph, id: NodeId, cut: &[NodeId], memo: &mut BTreeMap<NodeId, u8>) -> u8 {
    if let Some(p) = cut.iter().position(|&c| c == id) {
        return LEAF_TT[p];
    }
    if let Some(&v) = memo.get(&id) {
        return v;
    }
    let v = match g.node(id) {
        Node::Const(b) => {
            if b {
                0xFF
            } else {
                0
            }
        }
        Node::Input(_) => unreachable!("cut does not cover input"),
        Node::Inv(x) => !cut_tt(g, x, cut, memo),
        Node::Maj([a, b, c]) => {
            let (x, y, z) = (cut_tt(g, a, cut, memo), cut_tt(g, b, cut, memo), cut_tt(g, c, cut, memo));
            (x & y) | (x & z) | (y & z)
        }
    };
    memo.insert(id, v);
    v
}

/// Weighted cost and MAJ count of the cone of `id` above `cut` that would
/// disappear if `id` were replaced.
fn mffc(g: &MiGraph, id: NodeId, cut: &[NodeId], refs: &mut [u32]) -> (usize, usize) {
    let mut touched = Vec::new();
    let mut stack = vec![id];
    let (mut cost, mut majs) = (0, 0);
    while let Some(n) = stack.pop() {
        match g.node(n) {
            Node::Maj(_) => {
                cost += MAJ_COST;
                majs += 1;
            }
            Node::Inv(_) => cost += INV_COST,
            _ => continue,
        }
        for &f in g.fanins(n) {
            if f.is_const() || cut.contains(&f) || matches!(g.node(f), Node::Input(_)) {
                continue;
            }
            refs[f.index()] -= 1;
            touched.push(f);
            if refs[f.index()] == 0 {
                stack.push(f);
            }
        }
    }
    for f in touched {
        refs[f.index()] += 1;
    }
    (cost, majs)
}

fn repl_depth(r: &Repl, cut: &[NodeId], lv: &[usize]) -> usize {
    let lit = |l: &Lit| match *l {
        Lit::Const(_) => 0,
        Lit::Leaf(i, neg) => lv[cut[i].index()] + neg as usize,
    };
    match r {
        Repl::Lit(l) => lit(l),
        Repl::Maj(ls) => 1 + ls.iter().map(lit).max().unwrap_or(0),
    }
}

fn rewrite_pass(g: &MiGraph) -> MiGraph {
    let live = g.live();
    let n = g.nodes().len();
    let mut refs = vec![0u32; n];
    for i in 0..n {
        if live[i] {
            for f in g.fanins(NodeId(i as u32)) {
                refs[f.index()] += 1;
            }
        }
    }
    for (_, o) in g.outputs() {
        refs[o.index()] += 1;
    }
    let cuts = enumerate_cuts(g, &live);
    let lv = levels(g);
    let tables: Vec<Vec<Option<Repl>>> = (0..=3).map(replacement_table).collect();

    let mut decision: BTreeMap<NodeId, (Vec<NodeId>, Repl)> = BTreeMap::new();
    for i in 0..n {
        let id = NodeId(i as u32);
        if !live[i] || !matches!(g.node(id), Node::Maj(_) | Node::Inv(_)) {
            continue;
        }
        let mut best: Option<((usize, usize), Vec<NodeId>, Repl)> = None;
        for cut in &cuts[i] {
            if cut.as_slice() == [id] {
                continue;
            }
            let tt = cut_tt(g, id, cut, &mut BTreeMap::new());
            let Some(r) = tables[cut.len()][tt as usize] else { continue };
            let (old_cost, old_majs) = mffc(g, id, cut, &mut refs);
            let (new_majs, new_cost) = repl_cost(&r);
            let new_depth = repl_depth(&r, cut, &lv);
            let shallower = new_depth < lv[i];
            if new_majs > old_majs || new_cost > old_cost || new_cost == old_cost && !shallower {
                continue;
            }
            let gain = (old_cost - new_cost, lv[i].saturating_sub(new_depth));
            if best.as_ref().is_none_or(|b| gain > b.0) {
                best = Some((gain, cut.clone(), r));
            }
        }
        if let Some((_, cut, r)) = best {
            decision.insert(id, (cut, r));
        }
    }

    let mut b = Builder::new(g.inputs().to_vec());
    let mut map: Vec<Option<NodeId>> = vec![None; n];
    for i in 0..n {
        if let Node::Const(_) | Node::Input(_) = g.nodes()[i] {
            map[i] = Some(NodeId(i as u32));
        }
    }
    for (name, o) in g.outputs() {
        let id = build(g, *o, &decision, &mut map, &mut b);
        b.g.add_output(name.clone(), id);
    }
    b.finish()
}

fn build(
    g: &MiGraph,
    id: NodeId,
    decision: &BTreeMap<NodeId, (Vec<NodeId>, Repl)>,
    map: &mut [Option<NodeId>],
    b: &mut Builder,
) -> NodeId {
    if let Some(m) = map[id.index()] {
        return m;
    }
    let out = if let Some((cut, r)) = decision.get(&id) {
        let leaves: Vec<NodeId> = cut.iter().map(|&l| build(g, l, decision, map, b)).collect();
        let lit = |l: Lit, b: &mut Builder| match l {
            Lit::Const(v) => MiGraph::constant(v),
            Lit::Leaf(i, false) => leaves[i],
            Lit::Leaf(i, true) => b.inv(leaves[i]),
        };
        match *r {
            Repl::Lit(l) => lit(l, b),
            Repl::Maj([x, y, z]) => {
                let (x, y, z) = (lit(x, b), lit(y, b), lit(z, b));
                b.maj(x, y, z)
            }
        }
    } else {
        match g.node(id) {
            Node::Maj([x, y, z]) => {
                let x = build(g, x, decision, map, b);
                let y = build(g, y, decision, map, b);
                let z = build(g, z, decision, map, b);
                b.maj(x, y, z)
            }
            Node::Inv(x) => {
                let x = build(g, x, decision, map, b);
                b.inv(x)
            }
            _ => unreachable!(),
        }
    };
    map[id.index()] = Some(out);
    out
}
