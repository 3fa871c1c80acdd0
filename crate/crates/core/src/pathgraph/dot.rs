use std::collections::BTreeSet;
use std::fmt::Write;

use super::BlockGraph;

/// Graphviz rendering. Blocks made only of instructions outside `mep` are
/// filled grey; blocks mixing both are filled light grey. Labels carry no
/// addresses; node identifiers do, which keeps the output ordered and stable.
pub fn to_dot(g: &BlockGraph, mep: &BTreeSet<u64>) -> String {
    let mut out = String::from("digraph cfg {\n    node [shape=box, fontname=\"monospace\"];\n");
    for (&start, block) in g.blocks() {
        let label: String = block.instrs.iter().map(|i| format!("{}\\l", i.text())).collect();
        let hidden = block.addresses().filter(|a| !mep.contains(a)).count();
        let fill = if hidden == 0 {
            ""
        } else if hidden == block.instrs.len() {
            ", style=filled, fillcolor=grey"
        } else {
            ", style=filled, fillcolor=lightgrey"
        };
        writeln!(out, "    b{start:x} [label=\"{label}\"{fill}];").unwrap();
    }
    for (a, b) in g.edges() {
        writeln!(out, "    b{a:x} -> b{b:x};").unwrap();
    }
    out.push_str("}\n");
    out
}
