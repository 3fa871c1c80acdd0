//! RV64GC instruction handling: length rule, decoding, encoding and the
//! classifications the rest of the crate builds on.
//!
//! Operands are stored in a fixed per-format order, independent of the
//! assembly syntax used for display:
//!
//! | format                          | operands                       |
//! |---------------------------------|--------------------------------|
//! | register-register               | `rd, rs1, rs2`                 |
//! | immediate ALU, loads, `jalr`    | `rd, rs1, imm`                 |
//! | stores                          | `rs2, rs1, imm`                |
//! | conditional branches            | `rs1, rs2, offset`             |
//! | `lui` / `auipc`                 | `rd, imm20` (unsigned field)   |
//! | `jal`                           | `rd, offset`                   |
//! | CSR access                      | `rd, rs1 \| uimm, csr`         |
//!
//! Compressed forms keep their own mnemonics (`c.lw`, `c.j`, ...) and only
//! carry the operands their encoding exposes; [`Instr::expand`] maps them
//! to the equivalent base instruction.

mod decode;
mod encode;
mod regs;

use std::fmt;

use serde::Serialize;

pub use decode::{decode, decode_compressed, decode_word, DecodeError};
pub use encode::{encode, encode_word, signature, signatures, Domain, EncodeError, Signature};
pub use regs::{abi_name, fp_abi_name};

/// Result of applying the length-encoding rule to the first halfword of an
/// instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Length {
    Two,
    Four,
    Invalid,
}

impl Length {
    pub fn bytes(self) -> Option<u8> {
        match self {
            Length::Two => Some(2),
            Length::Four => Some(4),
            Length::Invalid => None,
        }
    }
}

/// Instruction length from the lowest halfword.
///
/// The all-zero halfword is architecturally illegal, and prefixes of 48-bit
/// or longer encodings (`bits[4:2] == 0b111` with `bits[1:0] == 0b11`) are
/// not defined by RV64GC, so both are reported as [`Length::Invalid`].
pub fn instr_length(first_halfword: u16) -> Length {
    if first_halfword == 0 {
        Length::Invalid
    } else if first_halfword & 0b11 != 0b11 {
        Length::Two
    } else if first_halfword & 0b11100 != 0b11100 {
        Length::Four
    } else {
        Length::Invalid
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Operand {
    Reg(u8),
    #[serde(rename = "freg")]
    FReg(u8),
    Imm(i64),
}

impl Operand {
    pub fn reg(self) -> Option<u8> {
        match self {
            Operand::Reg(r) => Some(r),
            _ => None,
        }
    }

    pub fn imm(self) -> Option<i64> {
        match self {
            Operand::Imm(v) => Some(v),
            _ => None,
        }
    }

    /// The raw numeric value regardless of operand kind.
    pub fn value(self) -> i64 {
        match self {
            Operand::Reg(r) | Operand::FReg(r) => r as i64,
            Operand::Imm(v) => v,
        }
    }
}

/// Control-flow behaviour of an instruction. Offsets are signed byte
/// displacements from the instruction's own address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FlowClass {
    Fallthrough,
    DirectJump(i64),
    CondBranch(i64),
    Call(i64),
    IndirectJump,
    IndirectCall,
    Syscall,
    Halting,
}

impl FlowClass {
    pub fn is_indirect(self) -> bool {
        matches!(self, FlowClass::IndirectJump | FlowClass::IndirectCall)
    }

    /// Statically known jump target displacement, if any.
    pub fn offset(self) -> Option<i64> {
        match self {
            FlowClass::DirectJump(o) | FlowClass::CondBranch(o) | FlowClass::Call(o) => Some(o),
            _ => None,
        }
    }
}

/// How a 4-byte instruction's upper halfword can be reinterpreted when
/// execution starts two bytes into it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum OverlapClass {
    /// The upper halfword begins another 4-byte instruction.
    I1Candidate,
    /// The upper halfword is itself a valid compressed instruction.
    I2,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instr {
    pub address: u64,
    pub width: u8,
    pub mnemonic: &'static str,
    pub operands: Vec<Operand>,
    pub flow: FlowClass,
    /// Instruction bits; only the low `8 * width` bits are meaningful.
    pub raw: u32,
}

impl Instr {
    pub fn bytes(&self) -> Vec<u8> {
        self.raw.to_le_bytes()[..self.width as usize].to_vec()
    }

    pub fn end(&self) -> u64 {
        self.address + self.width as u64
    }

    pub fn is_compressed(&self) -> bool {
        self.width == 2
    }

    /// `jalr x0, 0(ra)` or `c.jr ra`.
    pub fn is_return(&self) -> bool {
        match self.mnemonic {
            "jalr" => self.operands == [Operand::Reg(0), Operand::Reg(1), Operand::Imm(0)],
            "c.jr" => self.operands == [Operand::Reg(1)],
            _ => false,
        }
    }

    /// Static successor addresses.
    pub fn successors(&self) -> Vec<u64> {
        successors(self)
    }

    /// The base-ISA instruction a compressed form stands for. Base
    /// instructions are returned unchanged.
    pub fn expand(&self) -> (&'static str, Vec<Operand>) {
        expand(self.mnemonic, &self.operands)
    }

    /// Assembly text with ABI register names, e.g. `lw t2,0(s6)`.
    pub fn text(&self) -> String {
        format_asm(self.mnemonic, &self.operands)
    }
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

/// Control-flow class of an instruction; depends only on its mnemonic and
/// operands.
pub fn flow_of(mnemonic: &str, operands: &[Operand]) -> FlowClass {
    let imm_at = |i: usize| operands.get(i).and_then(|o| o.imm()).unwrap_or(0);
    let reg_at = |i: usize| operands.get(i).and_then(|o| o.reg()).unwrap_or(0);
    match mnemonic {
        "jal" if reg_at(0) == 0 => FlowClass::DirectJump(imm_at(1)),
        "jal" => FlowClass::Call(imm_at(1)),
        "c.j" => FlowClass::DirectJump(imm_at(0)),
        "jalr" if reg_at(0) == 0 => FlowClass::IndirectJump,
        "jalr" => FlowClass::IndirectCall,
        "c.jr" => FlowClass::IndirectJump,
        "c.jalr" => FlowClass::IndirectCall,
        "beq" | "bne" | "blt" | "bge" | "bltu" | "bgeu" => FlowClass::CondBranch(imm_at(2)),
        "c.beqz" | "c.bnez" => FlowClass::CondBranch(imm_at(1)),
        "ecall" => FlowClass::Syscall,
        "ebreak" | "c.ebreak" | "mret" | "sret" => FlowClass::Halting,
        _ => FlowClass::Fallthrough,
    }
}

pub fn successors(instr: &Instr) -> Vec<u64> {
    let next = instr.end();
    let target = |off: i64| instr.address.wrapping_add(off as u64);
    let mut out = match instr.flow {
        FlowClass::Fallthrough | FlowClass::Syscall => vec![next],
        FlowClass::DirectJump(off) => vec![target(off)],
        FlowClass::CondBranch(off) | FlowClass::Call(off) => vec![next, target(off)],
        FlowClass::IndirectJump | FlowClass::IndirectCall | FlowClass::Halting => vec![],
    };
    out.sort_unstable();
    out.dedup();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("overlap classification needs a 4-byte instruction, got width {0}")]
pub struct NotFourByte(pub u8);

pub fn overlap_class(instr: &Instr) -> Result<OverlapClass, NotFourByte> {
    if instr.width != 4 {
        return Err(NotFourByte(instr.width));
    }
    let upper = (instr.raw >> 16) as u16;
    Ok(match instr_length(upper) {
        Length::Four => OverlapClass::I1Candidate,
        Length::Two if decode_compressed(upper).is_some() => OverlapClass::I2,
        _ => OverlapClass::None,
    })
}

pub fn expand(mnemonic: &'static str, ops: &[Operand]) -> (&'static str, Vec<Operand>) {
    use Operand::{Imm, Reg};
    const SP: Operand = Reg(2);
    const ZERO: Operand = Reg(0);
    let o = |i: usize| ops[i];
    match mnemonic {
        "c.addi4spn" => ("addi", vec![o(0), SP, o(1)]),
        "c.fld" => ("fld", ops.to_vec()),
        "c.lw" => ("lw", ops.to_vec()),
        "c.ld" => ("ld", ops.to_vec()),
        "c.fsd" => ("fsd", ops.to_vec()),
        "c.sw" => ("sw", ops.to_vec()),
        "c.sd" => ("sd", ops.to_vec()),
        "c.nop" => ("addi", vec![ZERO, ZERO, Imm(0)]),
        "c.addi" => ("addi", vec![o(0), o(0), o(1)]),
        "c.addiw" => ("addiw", vec![o(0), o(0), o(1)]),
        "c.li" => ("addi", vec![o(0), ZERO, o(1)]),
        "c.addi16sp" => ("addi", vec![SP, SP, o(0)]),
        "c.lui" => ("lui", vec![o(0), Imm(o(1).value() & 0xf_ffff)]),
        "c.srli" => ("srli", vec![o(0), o(0), o(1)]),
        "c.srai" => ("srai", vec![o(0), o(0), o(1)]),
        "c.andi" => ("andi", vec![o(0), o(0), o(1)]),
        "c.sub" => ("sub", vec![o(0), o(0), o(1)]),
        "c.xor" => ("xor", vec![o(0), o(0), o(1)]),
        "c.or" => ("or", vec![o(0), o(0), o(1)]),
        "c.and" => ("and", vec![o(0), o(0), o(1)]),
        "c.subw" => ("subw", vec![o(0), o(0), o(1)]),
        "c.addw" => ("addw", vec![o(0), o(0), o(1)]),
        "c.j" => ("jal", vec![ZERO, o(0)]),
        "c.beqz" => ("beq", vec![o(0), ZERO, o(1)]),
        "c.bnez" => ("bne", vec![o(0), ZERO, o(1)]),
        "c.slli" => ("slli", vec![o(0), o(0), o(1)]),
        "c.fldsp" => ("fld", vec![o(0), SP, o(1)]),
        "c.lwsp" => ("lw", vec![o(0), SP, o(1)]),
        "c.ldsp" => ("ld", vec![o(0), SP, o(1)]),
        "c.jr" => ("jalr", vec![ZERO, o(0), Imm(0)]),
        "c.mv" => ("add", vec![o(0), ZERO, o(1)]),
        "c.ebreak" => ("ebreak", vec![]),
        "c.jalr" => ("jalr", vec![Reg(1), o(0), Imm(0)]),
        "c.add" => ("add", vec![o(0), o(0), o(1)]),
        "c.fsdsp" => ("fsd", vec![o(0), SP, o(1)]),
        "c.swsp" => ("sw", vec![o(0), SP, o(1)]),
        "c.sdsp" => ("sd", vec![o(0), SP, o(1)]),
        _ => (mnemonic, ops.to_vec()),
    }
}

fn is_memory_form(mnemonic: &str) -> bool {
    matches!(
        mnemonic,
        "lb" | "lh"
            | "lw"
            | "ld"
            | "lbu"
            | "lhu"
            | "lwu"
            | "sb"
            | "sh"
            | "sw"
            | "sd"
            | "flw"
            | "fld"
            | "fsw"
            | "fsd"
            | "jalr"
            | "c.lw"
            | "c.ld"
            | "c.fld"
            | "c.sw"
            | "c.sd"
            | "c.fsd"
    )
}

fn is_sp_relative(mnemonic: &str) -> bool {
    matches!(mnemonic, "c.lwsp" | "c.ldsp" | "c.fldsp" | "c.swsp" | "c.sdsp" | "c.fsdsp")
}

/// Render `mnemonic operands` with ABI register names.
pub fn format_asm(mnemonic: &str, ops: &[Operand]) -> String {
    let show = |op: &Operand| match *op {
        Operand::Reg(r) => abi_name(r).to_string(),
        Operand::FReg(r) => fp_abi_name(r).to_string(),
        Operand::Imm(v) => match mnemonic {
            "lui" | "auipc" => format!("{v:#x}"),
            "c.lui" => format!("{:#x}", v & 0xf_ffff),
            _ => v.to_string(),
        },
    };
    let body = if is_memory_form(mnemonic) && ops.len() == 3 {
        format!("{},{}({})", show(&ops[0]), show(&ops[2]), show(&ops[1]))
    } else if is_sp_relative(mnemonic) && ops.len() == 2 {
        format!("{},{}(sp)", show(&ops[0]), show(&ops[1]))
    } else {
        ops.iter().map(show).collect::<Vec<_>>().join(",")
    };
    if body.is_empty() {
        mnemonic.to_string()
    } else {
        format!("{mnemonic} {body}")
    }
}
