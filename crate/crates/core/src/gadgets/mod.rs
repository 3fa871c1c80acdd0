//! Gadget discovery over the superset graph, plus the single-LCSAJ
//! backward-scan baseline it is compared against.

mod galileo;
mod report;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::image::MemoryImage;
use crate::isa::{decode, FlowClass, Instr};
use crate::pathgraph::BlockGraph;

pub use galileo::{galileo_scan, DEFAULT_WINDOW};
pub use report::{diff_scans, report, DiffReport, Format};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum GadgetKind {
    StraightLine,
    MultiLcsaj,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gadget {
    pub instrs: Vec<Instr>,
    pub lcsaj_count: usize,
    /// One flag per instruction: set when the address is not on the main
    /// execution path.
    pub hep_mask: Vec<bool>,
    pub kind: GadgetKind,
}

impl Gadget {
    pub fn new(instrs: Vec<Instr>, mep: &MepSet) -> Gadget {
        let lcsaj_count = lcsaj_count(&instrs);
        let hep_mask = instrs.iter().map(|i| !mep.contains(i.address)).collect();
        let kind = if lcsaj_count == 1 { GadgetKind::StraightLine } else { GadgetKind::MultiLcsaj };
        Gadget { instrs, lcsaj_count, hep_mask, kind }
    }

    pub fn start(&self) -> u64 {
        self.instrs[0].address
    }

    pub fn terminal(&self) -> u64 {
        self.instrs.last().expect("gadgets are never empty").address
    }

    pub fn key(&self) -> (u64, u64) {
        (self.start(), self.terminal())
    }

    pub fn path(&self) -> Vec<u64> {
        self.instrs.iter().map(|i| i.address).collect()
    }

    pub fn width_bytes(&self) -> u64 {
        self.instrs.iter().map(|i| i.width as u64).sum()
    }

    pub fn has_hep(&self) -> bool {
        self.hep_mask.iter().any(|&h| h)
    }
}

/// Whether the hop `from -> to` leaves the straight line: a jump, branch or
/// call whose destination is not the next sequential instruction.
pub fn is_taken(from: &Instr, to: u64) -> bool {
    matches!(from.flow, FlowClass::DirectJump(_) | FlowClass::CondBranch(_) | FlowClass::Call(_)) && to != from.end()
}

/// Number of linear code sequences along a path.
pub fn lcsaj_count(path: &[Instr]) -> usize {
    1 + path.windows(2).filter(|w| is_taken(&w[0], w[1].address)).count()
}

/// Addresses reached by conventional disassembly.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MepSet(BTreeSet<u64>);

impl MepSet {
    pub fn contains(&self, address: u64) -> bool {
        self.0.contains(&address)
    }

    pub fn addresses(&self) -> &BTreeSet<u64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<u64> for MepSet {
    fn from_iter<T: IntoIterator<Item = u64>>(iter: T) -> Self {
        MepSet(iter.into_iter().collect())
    }
}

fn decode_at(image: &MemoryImage, address: u64) -> Option<Instr> {
    if address & 1 != 0 {
        return None;
    }
    decode(image.code_at(address)?, address).ok()
}

/// Recursive descent from the entry point and every function symbol. Calls
/// are followed into their target and past their return point; indirect
/// calls only past their return point. Images with neither an entry nor
/// symbols are swept linearly instead.
pub fn compute_mep(image: &MemoryImage) -> MepSet {
    let roots: Vec<u64> = image.entry().into_iter().chain(image.symbols().iter().map(|s| s.address)).collect();
    if roots.is_empty() {
        return linear_sweep(image);
    }
    let mut seen = BTreeSet::new();
    let mut work = roots;
    while let Some(a) = work.pop() {
        if seen.contains(&a) {
            continue;
        }
        let Some(instr) = decode_at(image, a) else { continue };
        seen.insert(a);
        work.extend(instr.successors());
        if instr.flow == FlowClass::IndirectCall {
            work.push(instr.end());
        }
    }
    MepSet(seen)
}

fn linear_sweep(image: &MemoryImage) -> MepSet {
    let mut out = BTreeSet::new();
    for seg in image.executable_segments() {
        let mut a = seg.base + (seg.base & 1);
        while a < seg.end() {
            match decode_at(image, a) {
                Some(i) => {
                    out.insert(a);
                    a = i.end();
                }
                None => a += 2,
            }
        }
    }
    MepSet(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_instructions: usize,
    pub max_lcsajs: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_instructions: 32, max_lcsajs: 4 }
    }
}

/// Search steps allowed per start address before the result is flagged as
/// truncated.
const STEP_BUDGET: usize = 2_000_000;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Enumeration {
    /// Ordered by terminal, then start.
    pub gadgets: Vec<Gadget>,
    /// Some path was cut short by the limits.
    pub truncated: bool,
}

/// All gadgets of a pruned graph within `limits`, one per (start, terminal)
/// pair. The path kept for a pair is the lexicographically smallest simple
/// path by address; a gadget whose path is a proper suffix of another
/// reported path is left out.
pub fn enumerate_gadgets(g: &BlockGraph, mep: &MepSet, limits: Limits) -> Enumeration {
    let mut all = enumerate_all_suffixes(g, mep, limits);
    let paths: HashMap<(u64, u64), Vec<u64>> = all.gadgets.iter().map(|g| (g.key(), g.path())).collect();
    let mut covered = BTreeSet::new();
    for p in paths.values() {
        let terminal = p[p.len() - 1];
        for i in 1..p.len() {
            if paths.get(&(p[i], terminal)).is_some_and(|q| q[..] == p[i..]) {
                covered.insert((p[i], terminal));
            }
        }
    }
    all.gadgets.retain(|g| !covered.contains(&g.key()));
    all
}

/// Like [`enumerate_gadgets`] but keeps suffix gadgets.
pub fn enumerate_all_suffixes(g: &BlockGraph, mep: &MepSet, limits: Limits) -> Enumeration {
    let flat = g.flatten();
    let succ: BTreeMap<u64, Vec<u64>> = flat.nodes().keys().map(|&a| (a, flat.successors(a).collect())).collect();
    let results: Vec<(Vec<Vec<u64>>, bool)> = flat
        .nodes()
        .keys()
        .copied()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|start| Search::run(&flat, &succ, start, limits))
        .collect();

    let mut truncated = false;
    let mut gadgets = Vec::new();
    for (paths, cut) in results {
        truncated |= cut;
        for p in paths {
            let instrs = p.iter().map(|a| flat.nodes()[a].clone()).collect();
            gadgets.push(Gadget::new(instrs, mep));
        }
    }
    gadgets.sort_by_key(|g| (g.terminal(), g.start()));
    Enumeration { gadgets, truncated }
}

struct Search<'a> {
    graph: &'a crate::pathgraph::PathGraph,
    succ: &'a BTreeMap<u64, Vec<u64>>,
    limits: Limits,
    path: Vec<u64>,
    on_path: BTreeSet<u64>,
    found: BTreeMap<u64, Vec<u64>>,
    truncated: bool,
    steps: usize,
}

impl Search<'_> {
    /// Depth-first over simple paths from `start`, successors in ascending
    /// order, so the first path reaching a terminal is the smallest one.
    fn run(
        graph: &crate::pathgraph::PathGraph,
        succ: &BTreeMap<u64, Vec<u64>>,
        start: u64,
        limits: Limits,
    ) -> (Vec<Vec<u64>>, bool) {
        let mut s = Search {
            graph,
            succ,
            limits,
            path: vec![start],
            on_path: BTreeSet::from([start]),
            found: BTreeMap::new(),
            truncated: false,
            steps: 0,
        };
        s.visit(start, 1);
        (s.found.into_values().collect(), s.truncated)
    }

    fn visit(&mut self, node: u64, lcsajs: usize) {
        self.steps += 1;
        if self.steps > STEP_BUDGET {
            self.truncated = true;
            return;
        }
        if self.graph.poi().contains(&node) {
            self.found.entry(node).or_insert_with(|| self.path.clone());
        }
        let instr = &self.graph.nodes()[&node];
        for &next in &self.succ[&node] {
            if self.on_path.contains(&next) {
                continue;
            }
            let l = lcsajs + is_taken(instr, next) as usize;
            if self.path.len() >= self.limits.max_instructions || l > self.limits.max_lcsajs {
                self.truncated = true;
                continue;
            }
            self.path.push(next);
            self.on_path.insert(next);
            self.visit(next, l);
            self.on_path.remove(&next);
            self.path.pop();
        }
    }
}
