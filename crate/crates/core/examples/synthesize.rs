// Solve for `lui` carriers that hide `addi; lui; c.j 8`, check the plan and
// print it as a C function whose constants produce those carriers.

use rvgadget::overlapforge::{emit_c, synthesize, verify, Policy};
use rvgadget::samples::magic_constant_spec;

fn main() {
    let plan = synthesize(&magic_constant_spec(), &Policy::default()).expect("satisfiable");
    assert!(verify(&plan).is_pass());
    println!("main path:");
    for c in &plan.carriers {
        println!("  {c}");
    }
    println!("entered two bytes in:");
    for h in &plan.hidden {
        println!("  {h}");
    }
    println!();
    print!("{}", emit_c(&plan, "function15c").expect("lui carriers"));
}
