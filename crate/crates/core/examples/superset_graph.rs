// Build the superset graph of the function15c fixture, prune it to the
// part that reaches an indirect jump and print it as Graphviz DOT. Blocks
// only reachable by entering mid-instruction are filled grey.

use rvgadget::gadgets::compute_mep;
use rvgadget::pathgraph::{build, merge_blocks, to_dot};
use rvgadget::samples::function15c;

fn main() {
    let image = function15c();
    let full = build(&image);
    let pruned = full.prune_coreachable();
    let blocks = merge_blocks(&pruned);
    eprintln!(
        "{} decodable offsets, {} edges, {} after pruning, {} blocks",
        full.len(),
        full.edge_count(),
        pruned.len(),
        blocks.len()
    );
    print!("{}", to_dot(&blocks, compute_mep(&image).addresses()));
}
