// Compare the backward-from-return baseline against the full scan.

use rvgadget::gadgets::{diff_scans, galileo_scan, report, Format, Limits, DEFAULT_WINDOW};
use rvgadget::samples::function15c;

fn main() {
    let image = function15c();
    let base = galileo_scan(&image, DEFAULT_WINDOW);
    let full = rvgadget::cli::scan_image(&image, Limits::default(), false);
    println!("baseline: {} gadgets, full scan: {}", base.len(), full.gadgets.len());
    let d = diff_scans(&base, &full.gadgets);
    print!("{}", d.summary());
    println!();
    print!("{}", report(&d.missed, Format::Text));
}
