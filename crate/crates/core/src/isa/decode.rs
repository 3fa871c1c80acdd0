use super::{flow_of, instr_length, Instr, Length, Operand};

use Operand::{FReg, Imm, Reg};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, thiserror::Error)]
pub enum DecodeError {
    #[error("fewer bytes than the instruction length requires")]
    Truncated,
    #[error("halfword fails the length rule")]
    Length,
    #[error("reserved or unsupported encoding")]
    Reserved,
}

type Decoded = (&'static str, Vec<Operand>);

/// Decode one instruction from the start of `bytes` (little-endian).
pub fn decode(bytes: &[u8], address: u64) -> Result<Instr, DecodeError> {
    if bytes.len() < 2 {
        return Err(DecodeError::Truncated);
    }
    let low = u16::from_le_bytes([bytes[0], bytes[1]]);
    let (width, raw, decoded) = match instr_length(low) {
        Length::Invalid => return Err(DecodeError::Length),
        Length::Two => (2, low as u32, decode_compressed(low)),
        Length::Four => {
            if bytes.len() < 4 {
                return Err(DecodeError::Truncated);
            }
            let word = u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
            (4, word, decode_word(word))
        }
    };
    let (mnemonic, operands) = decoded.ok_or(DecodeError::Reserved)?;
    let flow = flow_of(mnemonic, &operands);
    Ok(Instr { address, width, mnemonic, operands, flow, raw })
}

fn bits(w: u32, hi: u32, lo: u32) -> u32 {
    (w >> lo) & ((1u32 << (hi - lo + 1)) - 1)
}

fn sext(value: u32, width: u32) -> i64 {
    let shift = 64 - width;
    ((value as i64) << shift) >> shift
}

fn valid_rm(rm: u32) -> bool {
    rm <= 4 || rm == 7
}

/// Decode a 32-bit instruction word. Returns `None` for reserved encodings
/// and for words whose low bits do not announce a 32-bit instruction.
pub fn decode_word(w: u32) -> Option<Decoded> {
    if instr_length(w as u16) != Length::Four {
        return None;
    }
    let opcode = w & 0x7f;
    let rd = bits(w, 11, 7) as u8;
    let f3 = bits(w, 14, 12);
    let rs1 = bits(w, 19, 15) as u8;
    let rs2 = bits(w, 24, 20) as u8;
    let f7 = bits(w, 31, 25);
    let imm_i = sext(bits(w, 31, 20), 12);
    let imm_s = sext((bits(w, 31, 25) << 5) | bits(w, 11, 7), 12);
    let imm_b =
        sext((bits(w, 31, 31) << 12) | (bits(w, 7, 7) << 11) | (bits(w, 30, 25) << 5) | (bits(w, 11, 8) << 1), 13);
    let imm_u = bits(w, 31, 12) as i64;
    let imm_j =
        sext((bits(w, 31, 31) << 20) | (bits(w, 19, 12) << 12) | (bits(w, 20, 20) << 11) | (bits(w, 30, 21) << 1), 21);

    let r = |m: &'static str| Some((m, vec![Reg(rd), Reg(rs1), Reg(rs2)]));
    let i = |m: &'static str| Some((m, vec![Reg(rd), Reg(rs1), Imm(imm_i)]));

    match opcode {
        0x37 => Some(("lui", vec![Reg(rd), Imm(imm_u)])),
        0x17 => Some(("auipc", vec![Reg(rd), Imm(imm_u)])),
        0x6f => Some(("jal", vec![Reg(rd), Imm(imm_j)])),
        0x67 if f3 == 0 => i("jalr"),
        0x63 => {
            let m = match f3 {
                0 => "beq",
                1 => "bne",
                4 => "blt",
                5 => "bge",
                6 => "bltu",
                7 => "bgeu",
                _ => return None,
            };
            Some((m, vec![Reg(rs1), Reg(rs2), Imm(imm_b)]))
        }
        0x03 => {
            let m = ["lb", "lh", "lw", "ld", "lbu", "lhu", "lwu"].get(f3 as usize)?;
            i(m)
        }
        0x23 => {
            let m = ["sb", "sh", "sw", "sd"].get(f3 as usize)?;
            Some((m, vec![Reg(rs2), Reg(rs1), Imm(imm_s)]))
        }
        0x13 => match f3 {
            0 => i("addi"),
            2 => i("slti"),
            3 => i("sltiu"),
            4 => i("xori"),
            6 => i("ori"),
            7 => i("andi"),
            1 | 5 => {
                let shamt = bits(w, 25, 20) as i64;
                let m = match (f3, bits(w, 31, 26)) {
                    (1, 0) => "slli",
                    (5, 0) => "srli",
                    (5, 0x10) => "srai",
                    _ => return None,
                };
                Some((m, vec![Reg(rd), Reg(rs1), Imm(shamt)]))
            }
            _ => unreachable!(),
        },
        0x1b => {
            let shamt = Imm(rs2 as i64);
            match (f3, f7) {
                (0, _) => i("addiw"),
                (1, 0) => Some(("slliw", vec![Reg(rd), Reg(rs1), shamt])),
                (5, 0) => Some(("srliw", vec![Reg(rd), Reg(rs1), shamt])),
                (5, 0x20) => Some(("sraiw", vec![Reg(rd), Reg(rs1), shamt])),
                _ => None,
            }
        }
        0x33 => {
            let m = match (f7, f3) {
                (0, _) => ["add", "sll", "slt", "sltu", "xor", "srl", "or", "and"][f3 as usize],
                (0x20, 0) => "sub",
                (0x20, 5) => "sra",
                (1, _) => ["mul", "mulh", "mulhsu", "mulhu", "div", "divu", "rem", "remu"][f3 as usize],
                _ => return None,
            };
            r(m)
        }
        0x3b => {
            let m = match (f7, f3) {
                (0, 0) => "addw",
                (0, 1) => "sllw",
                (0, 5) => "srlw",
                (0x20, 0) => "subw",
                (0x20, 5) => "sraw",
                (1, 0) => "mulw",
                (1, 4) => "divw",
                (1, 5) => "divuw",
                (1, 6) => "remw",
                (1, 7) => "remuw",
                _ => return None,
            };
            r(m)
        }
        0x0f => match f3 {
            0 if rd == 0 && rs1 == 0 => {
                let fm = bits(w, 31, 28);
                let pred = bits(w, 27, 24) as i64;
                let succ = bits(w, 23, 20) as i64;
                match fm {
                    0 => Some(("fence", vec![Imm(pred), Imm(succ)])),
                    8 if pred == 3 && succ == 3 => Some(("fence.tso", vec![])),
                    _ => None,
                }
            }
            1 if w == 0x0000_100f => Some(("fence.i", vec![])),
            _ => None,
        },
        0x73 => {
            let csr = Imm(bits(w, 31, 20) as i64);
            match f3 {
                0 => match w {
                    0x0000_0073 => Some(("ecall", vec![])),
                    0x0010_0073 => Some(("ebreak", vec![])),
                    0x1050_0073 => Some(("wfi", vec![])),
                    0x3020_0073 => Some(("mret", vec![])),
                    0x1020_0073 => Some(("sret", vec![])),
                    _ => None,
                },
                1 => Some(("csrrw", vec![Reg(rd), Reg(rs1), csr])),
                2 => Some(("csrrs", vec![Reg(rd), Reg(rs1), csr])),
                3 => Some(("csrrc", vec![Reg(rd), Reg(rs1), csr])),
                5 => Some(("csrrwi", vec![Reg(rd), Imm(rs1 as i64), csr])),
                6 => Some(("csrrsi", vec![Reg(rd), Imm(rs1 as i64), csr])),
                7 => Some(("csrrci", vec![Reg(rd), Imm(rs1 as i64), csr])),
                _ => None,
            }
        }
        0x2f => decode_amo(w, rd, f3, rs1, rs2),
        0x07 => {
            let m = match f3 {
                2 => "flw",
                3 => "fld",
                _ => return None,
            };
            Some((m, vec![FReg(rd), Reg(rs1), Imm(imm_i)]))
        }
        0x27 => {
            let m = match f3 {
                2 => "fsw",
                3 => "fsd",
                _ => return None,
            };
            Some((m, vec![FReg(rs2), Reg(rs1), Imm(imm_s)]))
        }
        0x43 | 0x47 | 0x4b | 0x4f => {
            if !valid_rm(f3) {
                return None;
            }
            let double = match bits(w, 26, 25) {
                0 => false,
                1 => true,
                _ => return None,
            };
            let m = match (opcode, double) {
                (0x43, false) => "fmadd.s",
                (0x43, true) => "fmadd.d",
                (0x47, false) => "fmsub.s",
                (0x47, true) => "fmsub.d",
                (0x4b, false) => "fnmsub.s",
                (0x4b, true) => "fnmsub.d",
                (0x4f, false) => "fnmadd.s",
                _ => "fnmadd.d",
            };
            let rs3 = bits(w, 31, 27) as u8;
            Some((m, vec![FReg(rd), FReg(rs1), FReg(rs2), FReg(rs3), Imm(f3 as i64)]))
        }
        0x53 => decode_op_fp(rd, f3, rs1, rs2, f7),
        _ => None,
    }
}

fn decode_amo(w: u32, rd: u8, f3: u32, rs1: u8, rs2: u8) -> Option<Decoded> {
    let double = match f3 {
        2 => false,
        3 => true,
        _ => return None,
    };
    let aqrl = Imm(bits(w, 26, 25) as i64);
    let pick = |s: &'static str, d: &'static str| if double { d } else { s };
    let m = match bits(w, 31, 27) {
        0x02 if rs2 == 0 => return Some((pick("lr.w", "lr.d"), vec![Reg(rd), Reg(rs1), aqrl])),
        0x03 => pick("sc.w", "sc.d"),
        0x01 => pick("amoswap.w", "amoswap.d"),
        0x00 => pick("amoadd.w", "amoadd.d"),
        0x04 => pick("amoxor.w", "amoxor.d"),
        0x0c => pick("amoand.w", "amoand.d"),
        0x08 => pick("amoor.w", "amoor.d"),
        0x10 => pick("amomin.w", "amomin.d"),
        0x14 => pick("amomax.w", "amomax.d"),
        0x18 => pick("amominu.w", "amominu.d"),
        0x1c => pick("amomaxu.w", "amomaxu.d"),
        _ => return None,
    };
    Some((m, vec![Reg(rd), Reg(rs1), Reg(rs2), aqrl]))
}

fn decode_op_fp(rd: u8, f3: u32, rs1: u8, rs2: u8, f7: u32) -> Option<Decoded> {
    let double = f7 & 1 == 1;
    let pick = |s: &'static str, d: &'static str| if double { d } else { s };
    let rm = Imm(f3 as i64);
    let arith = |m: &'static str| valid_rm(f3).then(|| (m, vec![FReg(rd), FReg(rs1), FReg(rs2), rm]));
    match f7 {
        0x00 | 0x01 => arith(pick("fadd.s", "fadd.d")),
        0x04 | 0x05 => arith(pick("fsub.s", "fsub.d")),
        0x08 | 0x09 => arith(pick("fmul.s", "fmul.d")),
        0x0c | 0x0d => arith(pick("fdiv.s", "fdiv.d")),
        0x2c | 0x2d if rs2 == 0 && valid_rm(f3) => Some((pick("fsqrt.s", "fsqrt.d"), vec![FReg(rd), FReg(rs1), rm])),
        0x10 | 0x11 => {
            let m = match f3 {
                0 => pick("fsgnj.s", "fsgnj.d"),
                1 => pick("fsgnjn.s", "fsgnjn.d"),
                2 => pick("fsgnjx.s", "fsgnjx.d"),
                _ => return None,
            };
            Some((m, vec![FReg(rd), FReg(rs1), FReg(rs2)]))
        }
        0x14 | 0x15 => {
            let m = match f3 {
                0 => pick("fmin.s", "fmin.d"),
                1 => pick("fmax.s", "fmax.d"),
                _ => return None,
            };
            Some((m, vec![FReg(rd), FReg(rs1), FReg(rs2)]))
        }
        0x20 if rs2 == 1 && valid_rm(f3) => Some(("fcvt.s.d", vec![FReg(rd), FReg(rs1), rm])),
        0x21 if rs2 == 0 && valid_rm(f3) => Some(("fcvt.d.s", vec![FReg(rd), FReg(rs1), rm])),
        0x60 | 0x61 if rs2 <= 3 && valid_rm(f3) => {
            let m = match (double, rs2) {
                (false, 0) => "fcvt.w.s",
                (false, 1) => "fcvt.wu.s",
                (false, 2) => "fcvt.l.s",
                (false, _) => "fcvt.lu.s",
                (true, 0) => "fcvt.w.d",
                (true, 1) => "fcvt.wu.d",
                (true, 2) => "fcvt.l.d",
                (true, _) => "fcvt.lu.d",
            };
            Some((m, vec![Reg(rd), FReg(rs1), rm]))
        }
        0x68 | 0x69 if rs2 <= 3 && valid_rm(f3) => {
            let m = match (double, rs2) {
                (false, 0) => "fcvt.s.w",
                (false, 1) => "fcvt.s.wu",
                (false, 2) => "fcvt.s.l",
                (false, _) => "fcvt.s.lu",
                (true, 0) => "fcvt.d.w",
                (true, 1) => "fcvt.d.wu",
                (true, 2) => "fcvt.d.l",
                (true, _) => "fcvt.d.lu",
            };
            Some((m, vec![FReg(rd), Reg(rs1), rm]))
        }
        0x70 | 0x71 if rs2 == 0 => match f3 {
            0 => Some((pick("fmv.x.w", "fmv.x.d"), vec![Reg(rd), FReg(rs1)])),
            1 => Some((pick("fclass.s", "fclass.d"), vec![Reg(rd), FReg(rs1)])),
            _ => None,
        },
        0x50 | 0x51 => {
            let m = match f3 {
                2 => pick("feq.s", "feq.d"),
                1 => pick("flt.s", "flt.d"),
                0 => pick("fle.s", "fle.d"),
                _ => return None,
            };
            Some((m, vec![Reg(rd), FReg(rs1), FReg(rs2)]))
        }
        0x78 | 0x79 if rs2 == 0 && f3 == 0 => Some((pick("fmv.w.x", "fmv.d.x"), vec![FReg(rd), Reg(rs1)])),
        _ => None,
    }
}

/// Decode a 16-bit RV64C instruction.
pub fn decode_compressed(h: u16) -> Option<Decoded> {
    if instr_length(h) != Length::Two {
        return None;
    }
    let w = h as u32;
    let f3 = bits(w, 15, 13);
    let rd = bits(w, 11, 7) as u8;
    let rs2 = bits(w, 6, 2) as u8;
    let rdp = bits(w, 4, 2) as u8 + 8;
    let rs1p = bits(w, 9, 7) as u8 + 8;
    let imm6 = sext((bits(w, 12, 12) << 5) | bits(w, 6, 2), 6);
    let uimm6 = ((bits(w, 12, 12) << 5) | bits(w, 6, 2)) as i64;
    // c.lw / c.sw offset and c.ld / c.sd / c.fld / c.fsd offset.
    let off_w = ((bits(w, 12, 10) << 3) | (bits(w, 6, 6) << 2) | (bits(w, 5, 5) << 6)) as i64;
    let off_d = ((bits(w, 12, 10) << 3) | (bits(w, 6, 5) << 6)) as i64;

    match (w & 3, f3) {
        (0, 0) => {
            let nzuimm = (bits(w, 12, 11) << 4) | (bits(w, 10, 7) << 6) | (bits(w, 6, 6) << 2) | (bits(w, 5, 5) << 3);
            (nzuimm != 0).then(|| ("c.addi4spn", vec![Reg(rdp), Imm(nzuimm as i64)]))
        }
        (0, 1) => Some(("c.fld", vec![FReg(rdp), Reg(rs1p), Imm(off_d)])),
        (0, 2) => Some(("c.lw", vec![Reg(rdp), Reg(rs1p), Imm(off_w)])),
        (0, 3) => Some(("c.ld", vec![Reg(rdp), Reg(rs1p), Imm(off_d)])),
        (0, 4) => None,
        (0, 5) => Some(("c.fsd", vec![FReg(rdp), Reg(rs1p), Imm(off_d)])),
        (0, 6) => Some(("c.sw", vec![Reg(rdp), Reg(rs1p), Imm(off_w)])),
        (0, 7) => Some(("c.sd", vec![Reg(rdp), Reg(rs1p), Imm(off_d)])),

        (1, 0) if rd == 0 && imm6 == 0 => Some(("c.nop", vec![])),
        (1, 0) => Some(("c.addi", vec![Reg(rd), Imm(imm6)])),
        (1, 1) if rd == 0 => None,
        (1, 1) => Some(("c.addiw", vec![Reg(rd), Imm(imm6)])),
        (1, 2) => Some(("c.li", vec![Reg(rd), Imm(imm6)])),
        (1, 3) if rd == 2 => {
            let nzimm = sext(
                (bits(w, 12, 12) << 9)
                    | (bits(w, 6, 6) << 4)
                    | (bits(w, 5, 5) << 6)
                    | (bits(w, 4, 3) << 7)
                    | (bits(w, 2, 2) << 5),
                10,
            );
            (nzimm != 0).then(|| ("c.addi16sp", vec![Imm(nzimm)]))
        }
        (1, 3) => (imm6 != 0).then(|| ("c.lui", vec![Reg(rd), Imm(imm6)])),
        (1, 4) => match bits(w, 11, 10) {
            0 => Some(("c.srli", vec![Reg(rs1p), Imm(uimm6)])),
            1 => Some(("c.srai", vec![Reg(rs1p), Imm(uimm6)])),
            2 => Some(("c.andi", vec![Reg(rs1p), Imm(imm6)])),
            _ => {
                let m = match (bits(w, 12, 12), bits(w, 6, 5)) {
                    (0, 0) => "c.sub",
                    (0, 1) => "c.xor",
                    (0, 2) => "c.or",
                    (0, 3) => "c.and",
                    (1, 0) => "c.subw",
                    (1, 1) => "c.addw",
                    _ => return None,
                };
                Some((m, vec![Reg(rs1p), Reg(rdp)]))
            }
        },
        (1, 5) => {
            let off = sext(
                (bits(w, 12, 12) << 11)
                    | (bits(w, 11, 11) << 4)
                    | (bits(w, 10, 9) << 8)
                    | (bits(w, 8, 8) << 10)
                    | (bits(w, 7, 7) << 6)
                    | (bits(w, 6, 6) << 7)
                    | (bits(w, 5, 3) << 1)
                    | (bits(w, 2, 2) << 5),
                12,
            );
            Some(("c.j", vec![Imm(off)]))
        }
        (1, 6) | (1, 7) => {
            let off = sext(
                (bits(w, 12, 12) << 8)
                    | (bits(w, 11, 10) << 3)
                    | (bits(w, 6, 5) << 6)
                    | (bits(w, 4, 3) << 1)
                    | (bits(w, 2, 2) << 5),
                9,
            );
            let m = if f3 == 6 { "c.beqz" } else { "c.bnez" };
            Some((m, vec![Reg(rs1p), Imm(off)]))
        }

        (2, 0) => Some(("c.slli", vec![Reg(rd), Imm(uimm6)])),
        (2, 1) => {
            let off = (bits(w, 12, 12) << 5) | (bits(w, 6, 5) << 3) | (bits(w, 4, 2) << 6);
            Some(("c.fldsp", vec![FReg(rd), Imm(off as i64)]))
        }
        (2, 2) if rd == 0 => None,
        (2, 2) => {
            let off = (bits(w, 12, 12) << 5) | (bits(w, 6, 4) << 2) | (bits(w, 3, 2) << 6);
            Some(("c.lwsp", vec![Reg(rd), Imm(off as i64)]))
        }
        (2, 3) if rd == 0 => None,
        (2, 3) => {
            let off = (bits(w, 12, 12) << 5) | (bits(w, 6, 5) << 3) | (bits(w, 4, 2) << 6);
            Some(("c.ldsp", vec![Reg(rd), Imm(off as i64)]))
        }
        (2, 4) => match (bits(w, 12, 12), rd, rs2) {
            (0, 0, 0) => None,
            (0, _, 0) => Some(("c.jr", vec![Reg(rd)])),
            (0, _, _) => Some(("c.mv", vec![Reg(rd), Reg(rs2)])),
            (_, 0, 0) => Some(("c.ebreak", vec![])),
            (_, _, 0) => Some(("c.jalr", vec![Reg(rd)])),
            _ => Some(("c.add", vec![Reg(rd), Reg(rs2)])),
        },
        (2, 5) => {
            let off = (bits(w, 12, 10) << 3) | (bits(w, 9, 7) << 6);
            Some(("c.fsdsp", vec![FReg(rs2), Imm(off as i64)]))
        }
        (2, 6) => {
            let off = (bits(w, 12, 9) << 2) | (bits(w, 8, 7) << 6);
            Some(("c.swsp", vec![Reg(rs2), Imm(off as i64)]))
        }
        (2, 7) => {
            let off = (bits(w, 12, 10) << 3) | (bits(w, 9, 7) << 6);
            Some(("c.sdsp", vec![Reg(rs2), Imm(off as i64)]))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::FlowClass;

    #[test]
    fn xori_lw_overlap() {
        let a = decode(&[0x13, 0x4f, 0x83, 0x23], 0x1000).unwrap();
        assert_eq!(a.mnemonic, "xori");
        assert_eq!(a.operands, vec![Reg(30), Reg(6), Imm(568)]);
        assert_eq!(a.width, 4);
        assert_eq!(a.flow, FlowClass::Fallthrough);

        let b = decode(&[0x83, 0x23, 0x0b, 0x00], 0x1002).unwrap();
        assert_eq!(b.mnemonic, "lw");
        assert_eq!(b.operands, vec![Reg(7), Reg(22), Imm(0)]);
    }

    #[test]
    fn addi_lw_overlap() {
        let a = decode(&0x4004_0a13u32.to_le_bytes(), 0).unwrap();
        assert_eq!(a.mnemonic, "addi");
        assert_eq!(a.operands, vec![Reg(20), Reg(8), Imm(1024)]);
        let (m, ops) = decode_compressed(0x4004).unwrap();
        assert_eq!(m, "c.lw");
        assert_eq!(ops, vec![Reg(9), Reg(8), Imm(0)]);
    }

    #[test]
    fn compressed_jump() {
        let j = decode(&[0x21, 0xa0], 0).unwrap();
        assert_eq!(j.mnemonic, "c.j");
        assert_eq!(j.width, 2);
        assert_eq!(j.flow, FlowClass::DirectJump(8));
    }

    #[test]
    fn nop() {
        let n = decode(&[0x13, 0, 0, 0], 0).unwrap();
        assert_eq!((n.mnemonic, n.width), ("addi", 4));
        assert_eq!(n.operands, vec![Reg(0), Reg(0), Imm(0)]);
    }

    #[test]
    fn error_paths() {
        assert_eq!(decode(&[], 0), Err(DecodeError::Truncated));
        assert_eq!(decode(&[0x13], 0), Err(DecodeError::Truncated));
        assert_eq!(decode(&[0x13, 0x4f, 0x83], 0), Err(DecodeError::Truncated));
        assert_eq!(decode(&[0, 0], 0), Err(DecodeError::Length));
        assert_eq!(decode(&[0x3f, 0, 0, 0], 0), Err(DecodeError::Length));
        // quadrant 0, funct3 100
        assert_eq!(decode(&[0x00, 0x80], 0), Err(DecodeError::Reserved));
        // c.lwsp x0
        assert_eq!(decode(&[0x02, 0x40], 0), Err(DecodeError::Reserved));
        // branch funct3 010
        assert_eq!(decode(&0x0000_2063u32.to_le_bytes(), 0), Err(DecodeError::Reserved));
    }

    #[test]
    fn coarse_extensions() {
        // amoadd.w a0, a1, (a2)
        let (m, _) = decode_word(0x00b6_252f).unwrap();
        assert_eq!(m, "amoadd.w");
        // fadd.d fa0, fa1, fa2 with rm=dyn
        let (m, ops) = decode_word(0x02c5_f553).unwrap();
        assert_eq!(m, "fadd.d");
        assert_eq!(ops[0], FReg(10));
        // rounding mode 5 is reserved
        assert!(decode_word(0x02c5_d553).is_none());
    }
}
