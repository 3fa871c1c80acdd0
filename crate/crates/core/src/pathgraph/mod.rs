//! Superset disassembly: every 2-byte-aligned offset of every executable
//! segment is decoded, successor edges are recorded, indirect transfers are
//! marked as points of interest, and the graph can be pruned to the nodes
//! that reach one of them.

mod blocks;
mod dot;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::image::MemoryImage;
use crate::isa::{decode, Instr};

pub use blocks::{merge_blocks, Block, BlockGraph};
pub use dot::to_dot;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathGraph {
    nodes: BTreeMap<u64, Instr>,
    edges: BTreeMap<u64, BTreeSet<u64>>,
    dangling: BTreeMap<u64, BTreeSet<u64>>,
    poi: BTreeSet<u64>,
}

impl PathGraph {
    pub(crate) fn from_parts(
        nodes: BTreeMap<u64, Instr>,
        edges: BTreeMap<u64, BTreeSet<u64>>,
        dangling: BTreeMap<u64, BTreeSet<u64>>,
        poi: BTreeSet<u64>,
    ) -> Self {
        PathGraph { nodes, edges, dangling, poi }
    }

    pub fn nodes(&self) -> &BTreeMap<u64, Instr> {
        &self.nodes
    }

    pub fn node(&self, address: u64) -> Option<&Instr> {
        self.nodes.get(&address)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Successors of `address` that are nodes of the graph.
    pub fn successors(&self, address: u64) -> impl Iterator<Item = u64> + '_ {
        self.edges.get(&address).into_iter().flatten().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.edges.iter().flat_map(|(&a, s)| s.iter().map(move |&b| (a, b)))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.values().map(BTreeSet::len).sum()
    }

    /// Static successor addresses of `address` that are not nodes: outside
    /// every executable segment, or not decodable.
    pub fn dangling(&self, address: u64) -> impl Iterator<Item = u64> + '_ {
        self.dangling.get(&address).into_iter().flatten().copied()
    }

    pub fn poi(&self) -> &BTreeSet<u64> {
        &self.poi
    }

    pub fn predecessors(&self) -> BTreeMap<u64, BTreeSet<u64>> {
        let mut preds: BTreeMap<u64, BTreeSet<u64>> = self.nodes.keys().map(|&a| (a, BTreeSet::new())).collect();
        for (a, b) in self.edges() {
            preds.entry(b).or_default().insert(a);
        }
        preds
    }

    /// The subgraph of nodes from which some point of interest is reachable.
    pub fn prune_coreachable(&self) -> PathGraph {
        let preds = self.predecessors();
        let mut keep: BTreeSet<u64> = self.poi.clone();
        let mut work: Vec<u64> = keep.iter().copied().collect();
        while let Some(n) = work.pop() {
            for &p in &preds[&n] {
                if keep.insert(p) {
                    work.push(p);
                }
            }
        }
        let nodes = self.nodes.iter().filter(|(a, _)| keep.contains(a)).map(|(&a, i)| (a, i.clone())).collect();
        let edges = self
            .edges
            .iter()
            .filter(|(a, _)| keep.contains(a))
            .map(|(&a, s)| (a, s.iter().copied().filter(|b| keep.contains(b)).collect()))
            .collect();
        let dangling = self.dangling.iter().filter(|(a, _)| keep.contains(a)).map(|(&a, s)| (a, s.clone())).collect();
        PathGraph { nodes, edges, dangling, poi: self.poi.clone() }
    }
}

/// Free-function form of [`PathGraph::prune_coreachable`].
pub fn prune_coreachable(g: &PathGraph) -> PathGraph {
    g.prune_coreachable()
}

/// Decode at every even address of every executable segment and connect
/// the results. The graph is returned unpruned.
pub fn build(image: &MemoryImage) -> PathGraph {
    let mut nodes = BTreeMap::new();
    for seg in image.executable_segments() {
        let first = seg.base + (seg.base & 1);
        let decoded: Vec<Instr> = (first..seg.end())
            .step_by(2)
            .collect::<Vec<_>>()
            .into_par_iter()
            .filter_map(|addr| decode(&seg.bytes[(addr - seg.base) as usize..], addr).ok())
            .collect();
        nodes.extend(decoded.into_iter().map(|i| (i.address, i)));
    }

    let mut edges = BTreeMap::new();
    let mut dangling: BTreeMap<u64, BTreeSet<u64>> = BTreeMap::new();
    let mut poi = BTreeSet::new();
    for (&addr, instr) in &nodes {
        let mut out = BTreeSet::new();
        for s in instr.successors() {
            if nodes.contains_key(&s) {
                out.insert(s);
            } else {
                dangling.entry(addr).or_default().insert(s);
            }
        }
        edges.insert(addr, out);
        if instr.flow.is_indirect() {
            poi.insert(addr);
        }
    }
    PathGraph { nodes, edges, dangling, poi }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::load_raw;
    use crate::isa::{encode, FlowClass, Operand};

    #[test]
    fn overlapping_pair() {
        let g = build(&load_raw(&[0x13, 0x4f, 0x83, 0x23, 0x0b, 0x00], 0x1000));
        assert_eq!(g.nodes().keys().copied().collect::<Vec<_>>(), [0x1000, 0x1002]);
        for i in g.nodes().values() {
            assert_eq!(i.width, 4);
            assert_eq!(i.flow, FlowClass::Fallthrough);
        }
        assert!(g.poi().is_empty());
        assert!(g.prune_coreachable().is_empty());
    }

    #[test]
    fn compressed_return_is_poi() {
        let ret = encode("c.jr", &[Operand::Reg(1)]).unwrap();
        assert_eq!(ret, [0x82, 0x80]);
        let g = build(&load_raw(&ret, 0x400));
        assert_eq!(g.len(), 1);
        assert_eq!(g.poi().iter().copied().collect::<Vec<_>>(), [0x400]);
        assert_eq!(g.prune_coreachable(), g);
    }

    #[test]
    fn empty_segment() {
        assert!(build(&load_raw(&[], 0)).is_empty());
    }

    #[test]
    fn edge_into_undecodable_bytes_dangles() {
        // c.j +4 over an all-zero halfword onto nothing.
        let mut bytes = encode("c.j", &[Operand::Imm(4)]).unwrap();
        bytes.extend([0, 0, 0, 0]);
        let g = build(&load_raw(&bytes, 0));
        assert_eq!(g.len(), 1);
        assert_eq!(g.dangling(0).collect::<Vec<_>>(), [4]);
        assert_eq!(g.edge_count(), 0);
    }
}
