// Enumerate gadgets in the function15c fixture and show the one that
// starts inside a `lui` and crosses a jump before reaching the return.

use rvgadget::gadgets::{report, Format, GadgetKind, Limits};
use rvgadget::samples::function15c;

fn main() {
    let e = rvgadget::cli::scan_image(&function15c(), Limits::default(), false);
    println!("{} gadgets{}", e.gadgets.len(), if e.truncated { " (truncated)" } else { "" });
    let hidden: Vec<_> = e.gadgets.iter().filter(|g| g.kind == GadgetKind::MultiLcsaj).cloned().collect();
    print!("{}", report(&hidden, Format::Text));
}
