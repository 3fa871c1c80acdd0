// Plant several synthesized hidden gadgets in one image and count how many
// the baseline misses.

use rvgadget::gadgets::{diff_scans, galileo_scan, Limits, DEFAULT_WINDOW};
use rvgadget::overlapforge::{synthesize, HiddenSpec, OperandConstraint::*, Policy, Template};
use rvgadget::samples::planted_image;

fn main() {
    let specs = [
        vec![Template::new("addi", vec![Free, Free, Free]), Template::new("c.j", vec![Fixed(8)])],
        vec![Template::new("c.j", vec![Fixed(6)])],
        vec![Template::new("lui", vec![AnyOf(vec![5, 6, 7]), Free]), Template::new("c.j", vec![Fixed(12)])],
    ];
    let plans: Vec<_> = specs
        .into_iter()
        .map(|sequence| synthesize(&HiddenSpec { sequence }, &Policy::default()).expect("satisfiable"))
        .collect();
    let image = planted_image(&plans, 0x40000);
    let full = rvgadget::cli::scan_image(&image, Limits::default(), false);
    let d = diff_scans(&galileo_scan(&image, DEFAULT_WINDOW), &full.gadgets);
    println!("{} plants, {} bytes", plans.len(), image.segments()[0].bytes.len());
    print!("{}", d.summary());
    assert_eq!(d.missed_multi_lcsaj, plans.len());
}
