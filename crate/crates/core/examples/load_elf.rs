// Load an ELF (the bundled fixture unless a path is given) and list its
// segments, entry point, symbols and the main execution path.

use rvgadget::gadgets::compute_mep;
use rvgadget::image::load_elf;

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/function15c.elf").to_string());
    let bytes = std::fs::read(&path).expect("readable file");
    let image = match load_elf(&bytes) {
        Ok(image) => image,
        Err(e) => {
            eprintln!("{path}: {e}");
            std::process::exit(2);
        }
    };
    for s in image.segments() {
        let x = if s.executable { "r-x" } else { "rw-" };
        println!("segment {:#x}..{:#x} {x}", s.base, s.end());
    }
    println!("entry {:x?}", image.entry());
    for s in image.symbols() {
        println!("symbol {} at {:#x} ({} bytes)", s.name, s.address, s.size);
    }
    println!("{} instructions on the main path", compute_mep(&image).len());
}
