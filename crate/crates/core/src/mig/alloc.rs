// SPDX-License-Identifier: Apache-2.0
//! Greedy liveness-driven mapping of MIG nodes onto compute rows.
//!
//! Nodes are scheduled in topological order. Every MAJ becomes one TRA over
//! three compute rows; operands that are still needed afterwards are staged
//! with COPY because the TRA overwrites all three rows. Inverters become NOT
//! into a dual-contact row. When the compute rows run out, the value whose
//! next use is furthest away is dropped (if another copy exists) or spilled
//! to a temporary row.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::graph::{MiGraph, Node, NodeId};
use super::microprogram::{MicroOp, MicroProgram, RowRef, Slot};
use super::netlist::split_bus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionConfig {
    pub b_rows: usize,
    pub dcc_rows: usize,
    pub max_temps: usize,
}

impl Default for RegionConfig {
    fn default() -> Self {
        RegionConfig { b_rows: 6, dcc_rows: 2, max_temps: 64 }
    }
}

impl RegionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.b_rows < 3 {
            return Err(Error::Config(format!("compute region needs at least 3 rows, got {}", self.b_rows)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowAllocation {
    pub config: RegionConfig,
    pub inputs: Vec<Slot>,
    pub outputs: Vec<Slot>,
    /// Where each named input and output lives.
    pub operand_map: Vec<(String, RowRef)>,
    pub ops: Vec<MicroOp>,
    pub temps: usize,
    /// Values moved to temporary rows.
    pub spills: usize,
}

/// Groups `base[i]` names into multi-bit slots; plain names are one-bit slots.
#[allow(clippy::type_complexity)]
pub fn slots_of(names: &[String]) -> Result<(Vec<Slot>, Vec<(usize, usize)>)> {
    let mut slots: Vec<Slot> = Vec::new();
    let mut pos = Vec::with_capacity(names.len());
    let mut taken = BTreeMap::new();
    for n in names {
        let (base, idx) = split_bus(n);
        let bit = idx.unwrap_or(0);
        let slot = match slots.iter().position(|s| s.name == base) {
            Some(s) => s,
            None => {
                slots.push(Slot { name: base.to_string(), width: 0 });
                slots.len() - 1
            }
        };
        if taken.insert((slot, bit), n).is_some() {
            return Err(Error::Compile(format!("signal `{n}` collides with another bit of `{base}`")));
        }
        slots[slot].width = slots[slot].width.max(bit + 1);
        pos.push((slot, bit));
    }
    Ok((slots, pos))
}

struct State<'a> {
    g: &'a MiGraph,
    cfg: RegionConfig,
    ops: Vec<MicroOp>,
    loc: Vec<Vec<RowRef>>,
    holder: BTreeMap<RowRef, NodeId>,
    remaining: Vec<usize>,
    uses: Vec<Vec<usize>>,
    step: usize,
    temps: usize,
    spills: usize,
    consts: [bool; 2],
}

impl State<'_> {
    fn next_use(&self, v: NodeId) -> usize {
        self.uses[v.index()].iter().copied().find(|&s| s >= self.step).unwrap_or(usize::MAX)
    }

    /// Locations of `v` other than `row` that survive the pending TRA.
    fn other_copies(&self, v: NodeId, row: RowRef, claimed: &[RowRef]) -> usize {
        self.loc[v.index()].iter().filter(|r| **r != row && !claimed.contains(r)).count()
    }

    fn assign(&mut self, row: RowRef, v: NodeId) {
        if let Some(old) = self.holder.insert(row, v) {
            self.loc[old.index()].retain(|r| *r != row);
        }
        self.loc[v.index()].push(row);
    }

    fn release_if_dead(&mut self, v: NodeId) {
        if self.remaining[v.index()] == 0 {
            for r in core::mem::take(&mut self.loc[v.index()]) {
                if self.holder.get(&r) == Some(&v) {
                    self.holder.remove(&r);
                }
            }
        }
    }

    fn source(&mut self, v: NodeId, avoid: &[RowRef]) -> RowRef {
        if v.is_const() {
            self.consts[v.index()] = true;
        }
        let locs = &self.loc[v.index()];
        *locs.iter().find(|r| !avoid.contains(r)).or(locs.first()).expect("live value has a location")
    }

    fn free_temp(&mut self) -> Result<RowRef> {
        let i = (0..).find(|&i| !self.holder.contains_key(&RowRef::Temp(i))).unwrap();
        if i >= self.cfg.max_temps {
            return Err(Error::Compile(format!("more than {} temporary rows needed", self.cfg.max_temps)));
        }
        self.temps = self.temps.max(i + 1);
        Ok(RowRef::Temp(i))
    }

    /// A free row of the requested kind, spilling if necessary.
    fn free_row(&mut self, dcc: bool, claimed: &[RowRef], keep: &[RowRef]) -> Result<RowRef> {
        let rows: Vec<RowRef> = if dcc {
            (0..self.cfg.dcc_rows).map(RowRef::Dcc).collect()
        } else {
            (0..self.cfg.b_rows).map(RowRef::B).collect()
        };
        if rows.is_empty() {
            return Err(Error::Compile("the program needs NOT but the region has no DCC rows".into()));
        }
        if let Some(&r) = rows.iter().find(|r| !self.holder.contains_key(r) && !claimed.contains(r)) {
            return Ok(r);
        }
        let pick = |st: &Self, protect: &dyn Fn(&RowRef) -> bool| {
            rows.iter().copied().filter(|r| !protect(r)).max_by_key(|r| {
                let v = st.holder[r];
                (st.other_copies(v, *r, claimed) > 0, st.next_use(v))
            })
        };
        let victim_row = pick(self, &|r| claimed.contains(r) || keep.contains(r))
            .or_else(|| pick(self, &|r| claimed.contains(r)))
            .ok_or_else(|| Error::Compile("compute region exhausted".into()))?;
        let v = self.holder[&victim_row];
        if self.other_copies(v, victim_row, claimed) == 0 {
            let t = self.free_temp()?;
            self.ops.push(MicroOp::Copy { src: victim_row, dst: t });
            self.assign(t, v);
            self.spills += 1;
        }
        self.holder.remove(&victim_row);
        self.loc[v.index()].retain(|r| *r != victim_row);
        Ok(victim_row)
    }

    fn maj(&mut self, n: NodeId, fanins: [NodeId; 3]) -> Result<()> {
        let mut claimed: Vec<RowRef> = Vec::with_capacity(3);
        for f in fanins {
            self.remaining[f.index()] -= 1;
            let rem = self.remaining[f.index()];
            let locs = self.loc[f.index()].clone();
            let in_place = locs.iter().copied().find(|&r| {
                r.is_compute()
                    && !claimed.contains(&r)
                    && (rem == 0 || locs.iter().any(|o| *o != r && !claimed.contains(o)))
            });
            let row = match in_place {
                Some(r) => r,
                None => {
                    let dst = self.free_row(false, &claimed, &locs)?;
                    let src = self.source(f, &[]);
                    self.ops.push(MicroOp::Copy { src, dst });
                    self.assign(dst, f);
                    dst
                }
            };
            claimed.push(row);
        }
        self.ops.push(MicroOp::Tra([claimed[0], claimed[1], claimed[2]]));
        for r in claimed {
            self.assign(r, n);
        }
        for f in fanins {
            self.release_if_dead(f);
        }
        Ok(())
    }

    fn inv(&mut self, n: NodeId, x: NodeId) -> Result<()> {
        self.remaining[x.index()] -= 1;
        let locs = self.loc[x.index()].clone();
        let dst = self.free_row(true, &[], &locs)?;
        let src = self.source(x, &[dst]);
        self.ops.push(MicroOp::Not { src, dst });
        self.assign(dst, n);
        self.release_if_dead(x);
        Ok(())
    }

    fn emit_outputs(&mut self, v: NodeId, outs: &[(NodeId, RowRef)]) {
        for &(_, dst) in outs.iter().filter(|(o, _)| *o == v) {
            let src = self.source(v, &[]);
            self.ops.push(MicroOp::Copy { src, dst });
            self.remaining[v.index()] -= 1;
        }
        self.release_if_dead(v);
    }
}

pub fn allocate_rows(g: &MiGraph, config: RegionConfig) -> Result<RowAllocation> {
    config.validate()?;
    let (inputs, in_pos) = slots_of(g.inputs())?;
    let out_names: Vec<String> = g.outputs().iter().map(|(n, _)| n.clone()).collect();
    let (outputs, out_pos) = slots_of(&out_names)?;
    let live = g.live();
    let n = g.nodes().len();

    let schedule: Vec<NodeId> = (0..n)
        .filter(|&i| live[i] && matches!(g.nodes()[i], Node::Maj(_) | Node::Inv(_)))
        .map(|i| NodeId(i as u32))
        .collect();
    let mut uses = vec![Vec::new(); n];
    let mut remaining = vec![0usize; n];
    let mut step_of = vec![0usize; n];
    for (s, &id) in schedule.iter().enumerate() {
        step_of[id.index()] = s + 1;
        for f in g.fanins(id) {
            uses[f.index()].push(s + 1);
            remaining[f.index()] += 1;
        }
    }
    let outs: Vec<(NodeId, RowRef)> =
        g.outputs().iter().zip(&out_pos).map(|((_, id), &(slot, bit))| (*id, RowRef::Output { slot, bit })).collect();
    for &(id, _) in &outs {
        uses[id.index()].push(step_of[id.index()]);
        remaining[id.index()] += 1;
    }
    for u in uses.iter_mut() {
        u.sort_unstable();
    }

    let mut loc = vec![Vec::new(); n];
    loc[0].push(RowRef::C0);
    loc[1].push(RowRef::C1);
    for (i, &(slot, bit)) in in_pos.iter().enumerate() {
        loc[g.input(i).index()].push(RowRef::Input { slot, bit });
    }
    let mut st = State {
        g,
        cfg: config,
        ops: Vec::new(),
        loc,
        holder: BTreeMap::new(),
        remaining,
        uses,
        step: 0,
        temps: 0,
        spills: 0,
        consts: [false; 2],
    };

    let leaf_outs: Vec<NodeId> = {
        let mut v: Vec<NodeId> = outs.iter().map(|o| o.0).filter(|o| step_of[o.index()] == 0).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    for v in leaf_outs {
        st.emit_outputs(v, &outs);
    }
    for (s, &id) in schedule.iter().enumerate() {
        st.step = s + 1;
        match st.g.node(id) {
            Node::Maj(f) => st.maj(id, f)?,
            Node::Inv(x) => st.inv(id, x)?,
            _ => unreachable!(),
        }
        if outs.iter().any(|o| o.0 == id) {
            st.emit_outputs(id, &outs);
        }
    }

    let mut ops = Vec::new();
    if st.consts[0] {
        ops.push(MicroOp::Set { row: RowRef::C0, value: false });
    }
    if st.consts[1] {
        ops.push(MicroOp::Set { row: RowRef::C1, value: true });
    }
    ops.extend(st.ops);

    let mut operand_map = Vec::new();
    for (name, &(slot, bit)) in g.inputs().iter().zip(&in_pos) {
        operand_map.push((name.clone(), RowRef::Input { slot, bit }));
    }
    for (name, &(slot, bit)) in out_names.iter().zip(&out_pos) {
        operand_map.push((name.clone(), RowRef::Output { slot, bit }));
    }
    Ok(RowAllocation { config, inputs, outputs, operand_map, ops, temps: st.temps, spills: st.spills })
}

pub fn emit_microprogram(alloc: &RowAllocation, opcode: &str) -> MicroProgram {
    MicroProgram::new(
        opcode,
        alloc.inputs.clone(),
        alloc.outputs.clone(),
        alloc.config.b_rows,
        alloc.config.dcc_rows,
        alloc.temps,
        alloc.ops.clone(),
    )
}

/// Runs a micro-program symbolically on row values, one `u64` of lanes per
/// row. Used to check allocation without a chip.
pub fn interpret(p: &MicroProgram, inputs: &[Vec<u64>]) -> Result<Vec<Vec<u64>>> {
    let mut rows: BTreeMap<RowRef, u64> = BTreeMap::new();
    for (slot, bits) in inputs.iter().enumerate() {
        for (bit, &v) in bits.iter().enumerate() {
            rows.insert(RowRef::Input { slot, bit }, v);
        }
    }
    let get = |rows: &BTreeMap<RowRef, u64>, r: RowRef| {
        rows.get(&r).copied().ok_or_else(|| Error::Validation(format!("{r} read before it was written")))
    };
    for op in &p.ops {
        match *op {
            MicroOp::Set { row, value } => {
                rows.insert(row, if value { !0 } else { 0 });
            }
            MicroOp::Copy { src, dst } => {
                let v = get(&rows, src)?;
                rows.insert(dst, v);
            }
            MicroOp::Not { src, dst } => {
                let v = get(&rows, src)?;
                rows.insert(dst, !v);
            }
            MicroOp::Tra([a, b, c]) => {
                let (x, y, z) = (get(&rows, a)?, get(&rows, b)?, get(&rows, c)?);
                let m = (x & y) | (x & z) | (y & z);
                for r in [a, b, c] {
                    rows.insert(r, m);
                }
            }
        }
    }
    p.outputs
        .iter()
        .enumerate()
        .map(|(slot, s)| {
            (0..s.width).map(|bit| Ok(rows.get(&RowRef::Output { slot, bit }).copied().unwrap_or(0))).collect()
        })
        .collect()
}
