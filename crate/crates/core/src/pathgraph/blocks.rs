use std::collections::{BTreeMap, BTreeSet};

use super::PathGraph;
use crate::isa::{FlowClass, Instr};

/// A chain of instructions with a single entry at the first one and a single
/// exit at the last one. Each instruction falls through to the next.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub instrs: Vec<Instr>,
}

impl Block {
    pub fn start(&self) -> u64 {
        self.instrs[0].address
    }

    pub fn last(&self) -> &Instr {
        self.instrs.last().expect("blocks are never empty")
    }

    pub fn addresses(&self) -> impl Iterator<Item = u64> + '_ {
        self.instrs.iter().map(|i| i.address)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BlockGraph {
    blocks: BTreeMap<u64, Block>,
    edges: BTreeMap<u64, BTreeSet<u64>>,
    dangling: BTreeMap<u64, BTreeSet<u64>>,
    poi: BTreeSet<u64>,
    owner: BTreeMap<u64, u64>,
}

impl BlockGraph {
    /// Blocks keyed by the address of their first instruction.
    pub fn blocks(&self) -> &BTreeMap<u64, Block> {
        &self.blocks
    }

    pub fn block(&self, start: u64) -> Option<&Block> {
        self.blocks.get(&start)
    }

    pub fn successors(&self, start: u64) -> impl Iterator<Item = u64> + '_ {
        self.edges.get(&start).into_iter().flatten().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.edges.iter().flat_map(|(&a, s)| s.iter().map(move |&b| (a, b)))
    }

    pub fn poi(&self) -> &BTreeSet<u64> {
        &self.poi
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Block containing the instruction at `address`.
    pub fn block_of(&self, address: u64) -> Option<&Block> {
        self.owner.get(&address).map(|s| &self.blocks[s])
    }

    /// Expand back into the instruction-level graph.
    pub fn flatten(&self) -> PathGraph {
        let mut nodes = BTreeMap::new();
        let mut edges: BTreeMap<u64, BTreeSet<u64>> = BTreeMap::new();
        for (&start, block) in &self.blocks {
            for pair in block.instrs.windows(2) {
                edges.insert(pair[0].address, BTreeSet::from([pair[1].address]));
            }
            edges.insert(block.last().address, self.edges[&start].clone());
            nodes.extend(block.instrs.iter().map(|i| (i.address, i.clone())));
        }
        PathGraph::from_parts(nodes, edges, self.dangling.clone(), self.poi.clone())
    }
}

/// Collapse chains of nodes into blocks. A block ends at a point of interest,
/// at any instruction that is not a plain fallthrough, and before any node
/// with several predecessors.
pub fn merge_blocks(g: &PathGraph) -> BlockGraph {
    let preds = g.predecessors();
    let continues = |u: u64, v: u64| -> bool {
        let i = &g.nodes()[&u];
        i.flow == FlowClass::Fallthrough && i.end() == v && preds[&v].len() == 1 && g.successors(u).eq([v])
    };
    let leader = |v: u64| -> bool {
        match preds[&v].iter().collect::<Vec<_>>()[..] {
            [&u] => !continues(u, v),
            _ => true,
        }
    };

    let mut blocks = BTreeMap::new();
    let mut edges = BTreeMap::new();
    for &start in g.nodes().keys().filter(|&&a| leader(a)) {
        let mut instrs = vec![g.nodes()[&start].clone()];
        let mut cur = start;
        loop {
            let next = g.successors(cur).next();
            match next {
                Some(v) if continues(cur, v) => {
                    instrs.push(g.nodes()[&v].clone());
                    cur = v;
                }
                _ => break,
            }
        }
        edges.insert(start, g.successors(cur).collect());
        blocks.insert(start, Block { instrs });
    }
    let dangling = g
        .nodes()
        .keys()
        .filter_map(|&a| {
            let d: BTreeSet<u64> = g.dangling(a).collect();
            (!d.is_empty()).then_some((a, d))
        })
        .collect();
    let owner = blocks.values().flat_map(|b: &Block| b.addresses().map(|a| (a, b.start()))).collect();
    BlockGraph { blocks, edges, dangling, poi: g.poi().clone(), owner }
}
