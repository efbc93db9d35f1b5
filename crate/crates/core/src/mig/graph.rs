// SPDX-License-Identifier: Apache-2.0
//! Majority-inverter graphs.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::netlist::{exhaustive_chunks, exhaustive_mask, exhaustive_word, GateOp, Netlist};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const FALSE: NodeId = NodeId(0);
    pub const TRUE: NodeId = NodeId(1);

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_const(self) -> bool {
        self.0 < 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Const(bool),
    /// Index into the graph's input list.
    Input(u32),
    Maj([NodeId; 3]),
    Inv(NodeId),
}

/// Nodes are stored in topological order: every fanin has a smaller id.
/// Ids 0 and 1 are the constants, followed by one node per input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MiGraph {
    nodes: Vec<Node>,
    inputs: Vec<String>,
    outputs: Vec<(String, NodeId)>,
}

impl MiGraph {
    pub fn new(inputs: Vec<String>) -> Self {
        let mut nodes = vec![Node::Const(false), Node::Const(true)];
        nodes.extend((0..inputs.len() as u32).map(Node::Input));
        MiGraph { nodes, inputs, outputs: Vec::new() }
    }

    pub fn constant(value: bool) -> NodeId {
        if value {
            NodeId::TRUE
        } else {
            NodeId::FALSE
        }
    }

    pub fn input(&self, i: usize) -> NodeId {
        assert!(i < self.inputs.len());
        NodeId(2 + i as u32)
    }

    /// Appends a node without any simplification.
    pub fn push(&mut self, node: Node) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        match node {
            Node::Maj(f) => assert!(f.iter().all(|x| *x < id)),
            Node::Inv(x) => assert!(x < id),
            _ => panic!("constants and inputs are created with the graph"),
        }
        self.nodes.push(node);
        id
    }

    pub fn add_output(&mut self, name: impl Into<String>, id: NodeId) {
        assert!(id.index() < self.nodes.len());
        self.outputs.push((name.into(), id));
    }

    pub fn node(&self, id: NodeId) -> Node {
        self.nodes[id.index()]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[(String, NodeId)] {
        &self.outputs
    }

    pub fn fanins(&self, id: NodeId) -> &[NodeId] {
        match &self.nodes[id.index()] {
            Node::Maj(f) => f,
            Node::Inv(x) => core::slice::from_ref(x),
            _ => &[],
        }
    }

    /// Nodes reachable from an output.
    pub fn live(&self) -> Vec<bool> {
        let mut live = vec![false; self.nodes.len()];
        for (_, o) in &self.outputs {
            live[o.index()] = true;
        }
        for i in (0..self.nodes.len()).rev() {
            if live[i] {
                for f in self.fanins(NodeId(i as u32)) {
                    live[f.index()] = true;
                }
            }
        }
        live
    }

    pub fn maj_count(&self) -> usize {
        self.count_live(|n| matches!(n, Node::Maj(_)))
    }

    pub fn inv_count(&self) -> usize {
        self.count_live(|n| matches!(n, Node::Inv(_)))
    }

    /// Live MAJ plus INV nodes.
    pub fn size(&self) -> usize {
        self.maj_count() + self.inv_count()
    }

    fn count_live(&self, pred: impl Fn(&Node) -> bool) -> usize {
        self.live().iter().zip(&self.nodes).filter(|(l, n)| **l && pred(n)).count()
    }

    pub fn eval_words(&self, inputs: &[u64]) -> Vec<u64> {
        assert_eq!(inputs.len(), self.inputs.len());
        let mut v = vec![0u64; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            v[i] = match *n {
                Node::Const(b) => {
                    if b {
                        !0
                    } else {
                        0
                    }
                }
                Node::Input(k) => inputs[k as usize],
                Node::Maj([a, b, c]) => {
                    let (a, b, c) = (v[a.index()], v[b.index()], v[c.index()]);
                    (a & b) | (a & c) | (b & c)
                }
                Node::Inv(a) => !v[a.index()],
            };
        }
        self.outputs.iter().map(|(_, o)| v[o.index()]).collect()
    }

    pub fn eval(&self, inputs: &[bool]) -> Vec<bool> {
        let words: Vec<u64> = inputs.iter().map(|&b| if b { !0 } else { 0 }).collect();
        self.eval_words(&words).into_iter().map(|w| w & 1 == 1).collect()
    }

    /// Exhaustive truth tables, one word vector per output.
    pub fn truth_tables(&self) -> Result<Vec<Vec<u64>>> {
        let n = self.inputs.len();
        if n > 20 {
            return Err(Error::Unsupported(alloc::format!("exhaustive simulation of {n} inputs")));
        }
        let mask = exhaustive_mask(n);
        let mut out = vec![Vec::new(); self.outputs.len()];
        for chunk in 0..exhaustive_chunks(n) {
            let ins: Vec<u64> = (0..n).map(|i| exhaustive_word(i, chunk)).collect();
            for (o, w) in self.eval_words(&ins).into_iter().enumerate() {
                out[o].push(w & mask);
            }
        }
        Ok(out)
    }

    /// Copy with dead nodes dropped and ids renumbered.
    pub fn cleanup(&self) -> MiGraph {
        let live = self.live();
        let mut g = MiGraph::new(self.inputs.clone());
        let mut map: Vec<NodeId> = (0..self.nodes.len() as u32).map(NodeId).collect();
        for (i, n) in self.nodes.iter().enumerate() {
            if !live[i] {
                continue;
            }
            map[i] = match *n {
                Node::Maj(f) => g.push(Node::Maj(f.map(|x| map[x.index()]))),
                Node::Inv(x) => g.push(Node::Inv(map[x.index()])),
                _ => NodeId(i as u32),
            };
        }
        for (name, o) in &self.outputs {
            g.add_output(name.clone(), map[o.index()]);
        }
        g
    }
}

/// Lowers a netlist without simplification: AND becomes `MAJ(a, b, 0)`, OR
/// `MAJ(a, b, 1)`, NOT an inverter. XOR gates are expanded first.
pub fn to_mig(netlist: &Netlist) -> MiGraph {
    let net = netlist.expand_xor();
    let mut g = MiGraph::new(net.inputs().to_vec());
    let mut sig: BTreeMap<&str, NodeId> = BTreeMap::new();
    for (i, name) in net.inputs().iter().enumerate() {
        sig.insert(name, g.input(i));
    }
    for gate in net.gates() {
        let a = sig[gate.args[0].as_str()];
        let id = match gate.op {
            GateOp::Not => g.push(Node::Inv(a)),
            GateOp::And => g.push(Node::Maj([a, sig[gate.args[1].as_str()], NodeId::FALSE])),
            GateOp::Or => g.push(Node::Maj([a, sig[gate.args[1].as_str()], NodeId::TRUE])),
            GateOp::Xor => unreachable!("expanded above"),
        };
        sig.insert(&gate.out, id);
    }
    for o in net.outputs() {
        g.add_output(o.clone(), sig[o.as_str()]);
    }
    g
}

/// Structurally hashed construction with the local MAJ/INV axioms applied
/// on the fly.
pub(crate) struct Builder {
    pub g: MiGraph,
    table: BTreeMap<Node, NodeId>,
}

impl Builder {
    pub fn new(inputs: Vec<String>) -> Self {
        Builder { g: MiGraph::new(inputs), table: BTreeMap::new() }
    }

    fn intern(&mut self, node: Node) -> NodeId {
        if let Some(&id) = self.table.get(&node) {
            return id;
        }
        let id = self.g.push(node);
        self.table.insert(node, id);
        id
    }

    fn complements(&self, a: NodeId, b: NodeId) -> bool {
        match (self.g.node(a), self.g.node(b)) {
            (Node::Const(x), Node::Const(y)) => x != y,
            (Node::Inv(x), _) if x == b => true,
            (_, Node::Inv(y)) if y == a => true,
            _ => false,
        }
    }

    pub fn inv(&mut self, a: NodeId) -> NodeId {
        match self.g.node(a) {
            Node::Const(b) => MiGraph::constant(!b),
            Node::Inv(x) => x,
            _ => self.intern(Node::Inv(a)),
        }
    }

    pub fn maj(&mut self, a: NodeId, b: NodeId, c: NodeId) -> NodeId {
        if a == b || a == c {
            return a;
        }
        if b == c {
            return b;
        }
        if self.complements(a, b) {
            return c;
        }
        if self.complements(a, c) {
            return b;
        }
        if self.complements(b, c) {
            return a;
        }
        let f = [a, b, c];
        let invs = f.iter().filter(|x| matches!(self.g.node(**x), Node::Inv(_))).count();
        if invs >= 2 && invs + f.iter().filter(|x| x.is_const()).count() == 3 {
            let [x, y, z] = f.map(|x| self.inv(x));
            let m = self.maj(x, y, z);
            return self.inv(m);
        }
        let mut f = f;
        f.sort_by_key(|x| (x.is_const(), *x));
        self.intern(Node::Maj(f))
    }

    pub fn finish(self) -> MiGraph {
        self.g.cleanup()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mig::netlist::parse_netlist;
    use alloc::string::ToString;

    #[test]
    fn and_or_lowering() {
        let n = parse_netlist("INPUT x y\nOUTPUT a o\na = AND x y\no = OR x y\n").unwrap();
        let g = to_mig(&n);
        let (x, y) = (g.input(0), g.input(1));
        assert_eq!(g.node(g.outputs()[0].1), Node::Maj([x, y, NodeId::FALSE]));
        assert_eq!(g.node(g.outputs()[1].1), Node::Maj([x, y, NodeId::TRUE]));
    }

    #[test]
    fn builder_axioms() {
        let mut b = Builder::new(["x".to_string(), "y".to_string(), "z".to_string()].to_vec());
        let (x, y, z) = (b.g.input(0), b.g.input(1), b.g.input(2));
        assert_eq!(b.maj(x, x, y), x);
        let nx = b.inv(x);
        assert_eq!(b.maj(x, nx, y), y);
        assert_eq!(b.maj(NodeId::FALSE, NodeId::TRUE, z), z);
        assert_eq!(b.inv(nx), x);
        let m1 = b.maj(x, y, z);
        let m2 = b.maj(z, x, y);
        assert_eq!(m1, m2);
        let ny = b.inv(y);
        let m = b.maj(nx, ny, NodeId::FALSE);
        assert!(matches!(b.g.node(m), Node::Inv(_)));
    }

    #[test]
    fn truth_tables_match_netlist() {
        let n = parse_netlist("INPUT a b c\nOUTPUT s\nt = XOR a b\ns = XOR t c\n").unwrap();
        let g = to_mig(&n);
        let tt = g.truth_tables().unwrap();
        assert_eq!(tt[0], [0x96]);
    }
}
