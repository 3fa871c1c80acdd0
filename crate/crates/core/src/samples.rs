//! Ready-made inputs: the `function15c` routine with its hidden gadget, the
//! carrier/hidden pairing that produces it, and builders for images with
//! planted hidden gadgets.

use crate::image::{load_raw, MemoryImage};
use crate::isa::{encode, Operand};
use crate::overlapforge::{HiddenSpec, OperandConstraint, OverlapPlan, PlanInstr, Template};
use Operand::{Imm, Reg};

pub const FUNCTION15C_BASE: u64 = 0x10000;
/// Call targets of `function15c`. They lie below the routine, outside any
/// image built here.
pub const DUMMY: u64 = 0xff00;
pub const DUMMY4: u64 = 0xff10;

/// `function15c` as compiled for RV64GC: save `ra`, call `dummy`, load the
/// three magic constants, call `dummy4`, restore and return. One `c.nop` of
/// alignment padding follows.
pub fn function15c_listing() -> Vec<(&'static str, Vec<Operand>)> {
    let call = |from: u64, to: u64| vec![Reg(1), Imm(to as i64 - from as i64)];
    vec![
        ("c.addi16sp", vec![Imm(-16)]),
        ("c.sdsp", vec![Reg(1), Imm(8)]),
        ("jal", call(FUNCTION15C_BASE + 4, DUMMY)),
        ("lui", vec![Reg(10), Imm(0x9932)]),
        ("lui", vec![Reg(13), Imm(0x23371)]),
        ("lui", vec![Reg(12), Imm(0xa0212)]),
        ("c.li", vec![Reg(11), Imm(0)]),
        ("jal", call(FUNCTION15C_BASE + 0x16, DUMMY4)),
        ("c.ldsp", vec![Reg(1), Imm(8)]),
        ("c.li", vec![Reg(10), Imm(0)]),
        ("c.addi16sp", vec![Imm(16)]),
        ("c.jr", vec![Reg(1)]),
        ("c.nop", vec![]),
    ]
}

pub fn assemble(listing: &[(&str, Vec<Operand>)]) -> Vec<u8> {
    listing.iter().flat_map(|(m, ops)| encode(m, ops).unwrap_or_else(|e| panic!("{m}: {e}"))).collect()
}

pub fn function15c_bytes() -> Vec<u8> {
    assemble(&function15c_listing())
}

/// Raw image of `function15c` at [`FUNCTION15C_BASE`], no symbols.
pub fn function15c() -> MemoryImage {
    load_raw(&function15c_bytes(), FUNCTION15C_BASE)
}

/// The three magic-constant loads of `function15c` and the instructions
/// they hide when entered two bytes in.
pub fn magic_constant_plan() -> OverlapPlan {
    let p = |m: &str, ops: Vec<Operand>| PlanInstr::new(m, ops).expect("valid instruction");
    OverlapPlan {
        carriers: vec![
            p("lui", vec![Reg(10), Imm(0x9932)]),
            p("lui", vec![Reg(13), Imm(0x23371)]),
            p("lui", vec![Reg(12), Imm(0xa0212)]),
        ],
        hidden: vec![
            p("addi", vec![Reg(19), Reg(14), Imm(363)]),
            p("lui", vec![Reg(6), Imm(0x26372)]),
            p("c.j", vec![Imm(8)]),
        ],
        base_free: true,
    }
}

/// An `addi` into a callee-saved register, a `lui` into a temporary, then
/// `c.j +8`.
pub fn magic_constant_spec() -> HiddenSpec {
    use OperandConstraint::{AnyOf, Fixed, Free};
    let callee_saved = [8, 9, 18, 19, 20, 21, 22, 23, 24, 25, 26, 27];
    let temporaries = [5, 6, 7, 28, 29, 30, 31];
    HiddenSpec {
        sequence: vec![
            Template::new("addi", vec![AnyOf(callee_saved.to_vec()), Free, Free]),
            Template::new("lui", vec![AnyOf(temporaries.to_vec()), Free]),
            Template::new("c.j", vec![Fixed(8)]),
        ],
    }
}

/// Epilogue used behind planted gadgets: reload `ra`, pop the frame, return.
pub fn restore_sequence() -> Vec<u8> {
    assemble(&[("c.ldsp", vec![Reg(1), Imm(8)]), ("c.addi16sp", vec![Imm(16)]), ("c.jr", vec![Reg(1)])])
}

/// Lay out a plan's carriers followed by `c.nop` filler up to the escape
/// jump's target, then the restore sequence. The result is the code of one
/// function; the hidden path starts two bytes in.
pub fn plant(plan: &OverlapPlan) -> Vec<u8> {
    let mut bytes = plan.carrier_bytes();
    let jump = plan.hidden.last().and_then(|j| j.operands.last()).map_or(0, |o| o.value());
    let target = bytes.len() as i64 - 2 + jump;
    while (bytes.len() as i64) < target {
        bytes.extend(encode("c.nop", &[]).unwrap());
    }
    bytes.extend(restore_sequence());
    bytes
}

/// Several planted functions back to back in one raw image.
pub fn planted_image(plans: &[OverlapPlan], base: u64) -> MemoryImage {
    let bytes: Vec<u8> = plans.iter().flat_map(plant).collect();
    load_raw(&bytes, base)
}
