//! Test oracles that work straight from raw bytes, without the graph code,
//! plus generators for random inputs.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rvgadget::isa::{decode, encode, FlowClass, Instr, Operand};
use rvgadget::overlapforge::{HiddenSpec, OperandConstraint, Template};

/// Raw code at a base address.
pub struct Code<'a> {
    pub bytes: &'a [u8],
    pub base: u64,
}

impl Code<'_> {
    pub fn at(&self, addr: u64) -> Option<Instr> {
        if !addr.is_multiple_of(2) || addr < self.base || addr >= self.base + self.bytes.len() as u64 {
            return None;
        }
        decode(&self.bytes[(addr - self.base) as usize..], addr).ok()
    }

    pub fn offsets(&self) -> impl Iterator<Item = u64> + '_ {
        (self.base..self.base + self.bytes.len() as u64).filter(|a| a % 2 == 0)
    }

    /// Successors recomputed from the flow class, restricted to decodable
    /// addresses.
    pub fn next(&self, i: &Instr) -> Vec<u64> {
        let end = i.address + i.width as u64;
        let to = |o: i64| i.address.wrapping_add(o as u64);
        let mut v = match i.flow {
            FlowClass::Fallthrough | FlowClass::Syscall => vec![end],
            FlowClass::DirectJump(o) => vec![to(o)],
            FlowClass::CondBranch(o) | FlowClass::Call(o) => vec![end, to(o)],
            _ => vec![],
        };
        v.sort_unstable();
        v.dedup();
        v.retain(|&a| self.at(a).is_some());
        v
    }

    pub fn is_poi(i: &Instr) -> bool {
        matches!(i.flow, FlowClass::IndirectJump | FlowClass::IndirectCall)
    }

    /// Every decodable even address from which some indirect transfer is
    /// reachable.
    pub fn coreachable(&self) -> BTreeSet<u64> {
        self.offsets()
            .filter(|&a| {
                let Some(_) = self.at(a) else { return false };
                let mut seen = BTreeSet::from([a]);
                let mut work = vec![a];
                while let Some(n) = work.pop() {
                    let i = self.at(n).unwrap();
                    if Self::is_poi(&i) {
                        return true;
                    }
                    for s in self.next(&i) {
                        if seen.insert(s) {
                            work.push(s);
                        }
                    }
                }
                false
            })
            .collect()
    }

    /// Exhaustive gadget search: all simple paths ending at an indirect
    /// transfer within the limits; per (start, terminal) the smallest path;
    /// with `suffixes` false, paths that are proper suffixes of other kept
    /// paths are dropped. Returns path -> LCSAJ count.
    pub fn gadgets(&self, max_insns: usize, max_lcsajs: usize, suffixes: bool) -> BTreeMap<Vec<u64>, usize> {
        let mut best: BTreeMap<(u64, u64), (Vec<u64>, usize)> = BTreeMap::new();
        for start in self.offsets() {
            if self.at(start).is_none() {
                continue;
            }
            let mut stack = vec![(vec![start], 1usize)];
            while let Some((path, l)) = stack.pop() {
                let last = self.at(*path.last().unwrap()).unwrap();
                if Self::is_poi(&last) {
                    let key = (start, last.address);
                    let better = best.get(&key).is_none_or(|(p, _)| path < *p);
                    if better {
                        best.insert(key, (path.clone(), l));
                    }
                    continue;
                }
                if path.len() == max_insns {
                    continue;
                }
                for s in self.next(&last) {
                    if path.contains(&s) {
                        continue;
                    }
                    let taken =
                        matches!(last.flow, FlowClass::DirectJump(_) | FlowClass::CondBranch(_) | FlowClass::Call(_))
                            && s != last.address + last.width as u64;
                    let nl = l + taken as usize;
                    if nl > max_lcsajs {
                        continue;
                    }
                    let mut p = path.clone();
                    p.push(s);
                    stack.push((p, nl));
                }
            }
        }
        let all: Vec<(Vec<u64>, usize)> = best.into_values().collect();
        all.iter()
            .filter(|(p, _)| suffixes || !all.iter().any(|(q, _)| q.len() > p.len() && q.ends_with(p)))
            .cloned()
            .collect()
    }
}

fn enc(m: &str, ops: &[Operand]) -> Vec<u8> {
    encode(m, ops).unwrap_or_else(|e| panic!("{m} {ops:?}: {e}"))
}

/// Random code of at most `max_len` bytes, biased toward control flow so that
/// gadgets, joins, loops and overlapping decodes all occur.
pub fn random_image(rng: &mut impl Rng, max_len: usize) -> Vec<u8> {
    use Operand::{Imm, Reg};
    let target = rng.gen_range(2..=max_len / 2) * 2;
    let mut out = Vec::new();
    while out.len() < target {
        let small = |rng: &mut dyn RngCore| (rng.gen_range(-8i64..=8) * 2).clamp(-16, 16);
        let r = |rng: &mut dyn RngCore| rng.gen_range(8u8..16);
        let piece = match rng.gen_range(0..16) {
            0 | 1 => enc("c.jr", &[Reg(1)]),
            2 => enc("jalr", &[Reg(0), Reg(rng.gen_range(1..32)), Imm(0)]),
            3 => enc("c.jalr", &[Reg(rng.gen_range(1..32))]),
            4 => {
                let o = small(rng);
                enc("c.j", &[Imm(if o == 0 { 2 } else { o })])
            }
            5 => {
                let o = small(rng);
                let m = if rng.gen() { "c.beqz" } else { "c.bnez" };
                enc(m, &[Reg(r(rng)), Imm(if o == 0 { 2 } else { o }.clamp(-16, 16))])
            }
            6 => enc("jal", &[Reg(if rng.gen() { 0 } else { 1 }), Imm(small(rng))]),
            7 => enc("beq", &[Reg(r(rng)), Reg(r(rng)), Imm(small(rng))]),
            8 => enc("lui", &[Reg(r(rng)), Imm(rng.gen_range(0..0x100000))]),
            9 => enc("addi", &[Reg(r(rng)), Reg(r(rng)), Imm(rng.gen_range(-2048..2048))]),
            10 => enc("c.li", &[Reg(r(rng)), Imm(rng.gen_range(-32..32))]),
            11 => enc("c.nop", &[]),
            12 => enc("ld", &[Reg(r(rng)), Reg(2), Imm(rng.gen_range(-2048..2048))]),
            _ => rng.gen::<u16>().to_le_bytes().to_vec(),
        };
        out.extend(piece);
    }
    out.truncate(max_len);
    out
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 4-byte mnemonics with plain fallthrough flow that may appear hidden.
pub const HIDDEN_MNEMONICS: &[&str] = &[
    "addi", "slti", "sltiu", "xori", "ori", "andi", "addiw", "lui", "auipc", "add", "sub", "and", "or", "xor", "sll",
    "srl", "sra", "slt", "sltu", "addw", "subw", "mul", "mulh", "div", "rem", "mulw", "lb", "lh", "lw", "ld", "lbu",
    "lhu", "lwu", "sb", "sh", "sw", "sd", "slli", "srli", "srai",
];

/// Relax a concrete operand list into constraints the operands satisfy.
pub fn relax(rng: &mut impl Rng, ops: &[Operand]) -> Vec<OperandConstraint> {
    ops.iter()
        .map(|o| match rng.gen_range(0..3) {
            0 => OperandConstraint::Free,
            1 => OperandConstraint::Fixed(o.value()),
            _ => {
                let mut vs: Vec<i64> = (0..rng.gen_range(0..4)).map(|_| rng.gen_range(0..32)).collect();
                vs.push(o.value());
                vs.sort_unstable();
                vs.dedup();
                OperandConstraint::AnyOf(vs)
            }
        })
        .collect()
}

/// A spec known to be satisfiable under the default policy, built from a
/// random witness chain of `lui` carriers into distinct argument registers.
pub fn random_satisfiable_spec(rng: &mut impl Rng) -> (HiddenSpec, Vec<u32>) {
    loop {
        let n = rng.gen_range(1..=3usize);
        let mut regs: Vec<u8> = (10..=17).collect();
        regs.shuffle(rng);
        let lows: Vec<u16> = (0..n).map(|k| 0x37 | (regs[k] as u16) << 7 | (rng.gen_range(0..16u16) << 12)).collect();
        let jump_off = rng.gen_range(2..=12i64) * 2;
        let jump = encode("c.j", &[Operand::Imm(jump_off)]).unwrap();
        let jump = u16::from_le_bytes([jump[0], jump[1]]);
        // Hidden low halves: random 4-byte instructions' low halves.
        let mut highs = Vec::new();
        let mut templates = Vec::new();
        let mut ok = true;
        for j in 0..n - 1 {
            let m = HIDDEN_MNEMONICS.choose(rng).unwrap();
            let sig = rvgadget::isa::signature(m).unwrap();
            let sample: Vec<Operand> = sig.operands.iter().map(|d| d.first().unwrap()).collect();
            let opcode = rvgadget::isa::encode_word(m, &sample).unwrap() as u16 & 0x7f;
            let low = opcode | rng.gen_range(0..512u16) << 7;
            let word = low as u32 | (lows[j + 1] as u32) << 16;
            match rvgadget::isa::decode_word(word) {
                Some((dm, ops)) if HIDDEN_MNEMONICS.contains(&dm) => {
                    templates.push(Template { mnemonic: dm.to_string(), operands: relax(rng, &ops) });
                    highs.push(low);
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        templates.push(Template::new("c.j", vec![OperandConstraint::Fixed(jump_off)]));
        highs.push(jump);
        let words = (0..n).map(|k| lows[k] as u32 | (highs[k] as u32) << 16).collect();
        return (HiddenSpec { sequence: templates }, words);
    }
}

/// Uniform member of an operand domain.
pub fn sample(rng: &mut impl Rng, d: &rvgadget::isa::Domain) -> Operand {
    use rvgadget::isa::Domain;
    let reg = |rng: &mut dyn RngCore, mask: u32| {
        let regs: Vec<u8> = (0..32).filter(|r| mask & (1 << r) != 0).collect();
        *regs.choose(rng).unwrap()
    };
    match *d {
        Domain::Reg(mask) => Operand::Reg(reg(rng, mask)),
        Domain::FReg(mask) => Operand::FReg(reg(rng, mask)),
        Domain::Imm { min, max, step, nonzero } => loop {
            let lo = min.div_euclid(step) + (min.rem_euclid(step) != 0) as i64;
            let v = rng.gen_range(lo..=max.div_euclid(step)) * step;
            if !(nonzero && v == 0) {
                break Operand::Imm(v);
            }
        },
    }
}

/// Random encodable operands. `c.addi zero,0` is excluded on top of the
/// per-operand domains since those bits are `c.nop`.
pub fn sample_operands(rng: &mut impl Rng, sig: &rvgadget::isa::Signature) -> Vec<Operand> {
    loop {
        let ops: Vec<Operand> = sig.operands.iter().map(|d| sample(rng, d)).collect();
        if !(sig.mnemonic == "c.addi" && ops == [Operand::Reg(0), Operand::Imm(0)]) {
            return ops;
        }
    }
}
