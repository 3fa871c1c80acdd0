mod common;

use proptest::prelude::*;
use rvgadget::isa::{
    decode, decode_compressed, encode, instr_length, overlap_class, signatures, Length, Operand, OverlapClass,
};

const LLVM_VECTORS: &str = include_str!("fixtures/llvm_vectors.txt");

fn parse_operand(s: &str) -> Operand {
    if let Some(r) = s.strip_prefix('x') {
        Operand::Reg(r.parse().unwrap())
    } else if let Some(r) = s.strip_prefix('f') {
        Operand::FReg(r.parse().unwrap())
    } else {
        Operand::Imm(s.parse().unwrap())
    }
}

fn hex_bytes(s: &str) -> Vec<u8> {
    (0..s.len()).step_by(2).map(|i| u8::from_str_radix(&s[i..i + 2], 16).unwrap()).collect()
}

/// Vectors assembled by LLVM's RISC-V backend (see fixtures/gen_llvm_vectors.py).
#[test]
fn matches_reference_assembler() {
    let mut checked = 0;
    for line in LLVM_VECTORS.lines().filter(|l| !l.trim().is_empty()) {
        let mut parts = line.split_whitespace();
        let bytes = hex_bytes(parts.next().unwrap());
        let mnemonic = parts.next().unwrap();
        let rest: Vec<&str> = parts.collect();
        let instr = decode(&bytes, 0x1000).unwrap_or_else(|e| panic!("{line}: {e}"));
        assert_eq!(instr.mnemonic, mnemonic, "{line}");
        assert_eq!(instr.width as usize, bytes.len(), "{line}");
        if rest == ["coarse"] {
            continue;
        }
        let ops: Vec<Operand> = rest.iter().map(|s| parse_operand(s)).collect();
        assert_eq!(instr.operands, ops, "{line}");
        assert_eq!(encode(mnemonic, &ops).unwrap(), bytes, "{line}");
        checked += 1;
    }
    assert!(checked > 2000);
}

/// Bit rule restated from scratch: 16-bit iff low two bits differ from 11,
/// 32-bit iff they equal 11 and the next three differ from 111.
#[test]
fn length_rule_exhaustive() {
    for h in 0..=u16::MAX {
        let low2 = h & 0b11;
        let next3 = (h >> 2) & 0b111;
        let expected = if h == 0 {
            Length::Invalid
        } else if low2 != 0b11 {
            Length::Two
        } else if next3 != 0b111 {
            Length::Four
        } else {
            Length::Invalid
        };
        assert_eq!(instr_length(h), expected, "{h:#06x}");
    }
}

#[test]
fn compressed_decoder_respects_length_rule() {
    for h in 0..=u16::MAX {
        if decode_compressed(h).is_some() {
            assert_eq!(instr_length(h), Length::Two, "{h:#06x}");
        }
    }
}

#[test]
fn overlapping_rows_display() {
    let xori_lw = [0x13u8, 0x4f, 0x83, 0x23, 0x0b, 0x00];
    assert_eq!(decode(&xori_lw, 0).unwrap().text(), "xori t5,t1,568");
    assert_eq!(decode(&xori_lw[2..], 2).unwrap().text(), "lw t2,0(s6)");

    let addi_word = 0x4004_0a13u32.to_le_bytes();
    let outer = decode(&addi_word, 0).unwrap();
    assert_eq!(outer.text(), "addi s4,s0,1024");
    assert_eq!(overlap_class(&outer), Ok(OverlapClass::I2));
    let inner = decode(&addi_word[2..], 2).unwrap();
    let (m, ops) = inner.expand();
    assert_eq!(rvgadget::isa::format_asm(m, &ops), "lw s1,0(s0)");
}

proptest! {
    #[test]
    fn overlap_class_agrees_with_upper_length(word in any::<u32>()) {
        if let Ok(instr) = decode(&word.to_le_bytes(), 0) {
            if instr.width == 4 {
                let upper = (word >> 16) as u16;
                match overlap_class(&instr).unwrap() {
                    OverlapClass::I1Candidate => prop_assert_eq!(instr_length(upper), Length::Four),
                    OverlapClass::I2 => {
                        prop_assert_eq!(instr_length(upper), Length::Two);
                        prop_assert!(decode_compressed(upper).is_some());
                    }
                    OverlapClass::None => prop_assert!(
                        instr_length(upper) == Length::Invalid || decode_compressed(upper).is_none()
                    ),
                }
            }
        }
    }

    #[test]
    fn flow_is_function_of_mnemonic_and_operands(word in any::<u32>()) {
        if let Ok(a) = decode(&word.to_le_bytes(), 0x4000) {
            let b = decode(&a.bytes(), 0x9000).unwrap();
            prop_assert_eq!(a.flow, b.flow);
            prop_assert_eq!(a.flow, rvgadget::isa::flow_of(a.mnemonic, &a.operands));
        }
    }
}

#[test]
fn encode_then_decode_is_identity() {
    let mut r = common::rng(0x12);
    for sig in signatures() {
        for _ in 0..300 {
            let ops = common::sample_operands(&mut r, sig);
            let bytes = encode(sig.mnemonic, &ops).unwrap();
            assert_eq!(bytes.len(), sig.width as usize);
            let i = decode(&bytes, 0).unwrap();
            assert_eq!((i.mnemonic, &i.operands), (sig.mnemonic, &ops));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20_000))]
    #[test]
    fn decode_then_encode_is_identity(word in any::<u32>()) {
        // The encoder covers a subset of what the decoder accepts.
        if let Some(i) = decode(&word.to_le_bytes(), 0).ok().filter(|i| rvgadget::isa::signature(i.mnemonic).is_some()) {
            prop_assert_eq!(encode(i.mnemonic, &i.operands).unwrap(), i.bytes());
        }
    }
}
