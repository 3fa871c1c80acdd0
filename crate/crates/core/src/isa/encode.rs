use super::Operand;

/// Set of values an operand may take in a given encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Integer register; bit `i` of the mask allows `x{i}`.
    Reg(u32),
    /// Floating-point register; bit `i` of the mask allows `f{i}`.
    FReg(u32),
    /// Signed immediate in `min..=max` that is a multiple of `step`.
    Imm { min: i64, max: i64, step: i64, nonzero: bool },
}

impl Domain {
    pub fn contains(&self, op: &Operand) -> bool {
        match (*self, *op) {
            (Domain::Reg(mask), Operand::Reg(r)) | (Domain::FReg(mask), Operand::FReg(r)) => {
                r < 32 && mask & (1 << r) != 0
            }
            (Domain::Imm { min, max, step, nonzero }, Operand::Imm(v)) => {
                (min..=max).contains(&v) && v.rem_euclid(step) == 0 && !(nonzero && v == 0)
            }
            _ => false,
        }
    }

    /// Smallest member.
    pub fn first(&self) -> Option<Operand> {
        match *self {
            Domain::Reg(mask) => (mask != 0).then(|| Operand::Reg(mask.trailing_zeros() as u8)),
            Domain::FReg(mask) => (mask != 0).then(|| Operand::FReg(mask.trailing_zeros() as u8)),
            Domain::Imm { min, max, step, nonzero } => {
                let mut v = min + (step - min.rem_euclid(step)) % step;
                if nonzero && v == 0 {
                    v += step;
                }
                (v <= max).then_some(Operand::Imm(v))
            }
        }
    }

    /// All members in ascending order.
    pub fn values(&self) -> Vec<Operand> {
        match *self {
            Domain::Reg(mask) => (0..32).filter(|r| mask & (1 << r) != 0).map(Operand::Reg).collect(),
            Domain::FReg(mask) => (0..32).filter(|r| mask & (1 << r) != 0).map(Operand::FReg).collect(),
            Domain::Imm { min, max, step, nonzero } => {
                let first = min + (step - min.rem_euclid(step)) % step;
                (first..=max).step_by(step as usize).filter(|&v| !(nonzero && v == 0)).map(Operand::Imm).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Form {
    R(u32),
    I(u32),
    Shift(u32),
    S(u32),
    B(u32),
    U(u32),
    J(u32),
    Fixed(u32),
    CsrReg(u32),
    CsrImm(u32),
    Fence,
    Compressed,
}

/// Operand layout and encoding recipe for one encodable mnemonic.
#[derive(Debug, Clone, Copy)]
pub struct Signature {
    pub mnemonic: &'static str,
    pub operands: &'static [Domain],
    pub width: u8,
    form: Form,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("unsupported mnemonic `{0}`")]
    UnsupportedMnemonic(String),
    #[error("`{mnemonic}` takes {expected} operands, got {got}")]
    OperandCount { mnemonic: &'static str, expected: usize, got: usize },
    #[error("operand {index} of `{mnemonic}` out of range: {operand:?}")]
    OutOfRange { mnemonic: &'static str, index: usize, operand: Operand },
}

const X: Domain = Domain::Reg(u32::MAX);
const XNZ: Domain = Domain::Reg(!1);
const XNOT_SP: Domain = Domain::Reg(!(1 << 2));
const XC: Domain = Domain::Reg(0xff00);
const FC: Domain = Domain::FReg(0xff00);
const F: Domain = Domain::FReg(u32::MAX);

const fn imm(min: i64, max: i64) -> Domain {
    Domain::Imm { min, max, step: 1, nonzero: false }
}

const fn aligned(min: i64, max: i64, step: i64) -> Domain {
    Domain::Imm { min, max, step, nonzero: false }
}

const fn nonzero(min: i64, max: i64, step: i64) -> Domain {
    Domain::Imm { min, max, step, nonzero: true }
}

const I12: Domain = imm(-2048, 2047);
const SH6: Domain = imm(0, 63);
const SH5: Domain = imm(0, 31);
const U20: Domain = imm(0, 0xf_ffff);
const B13: Domain = aligned(-4096, 4094, 2);
const J21: Domain = aligned(-(1 << 20), (1 << 20) - 2, 2);
const CSR: Domain = imm(0, 4095);
const NIBBLE: Domain = imm(0, 15);
const C6: Domain = imm(-32, 31);

const RRR: &[Domain] = &[X, X, X];
const RRI: &[Domain] = &[X, X, I12];
const RRS6: &[Domain] = &[X, X, SH6];
const RRS5: &[Domain] = &[X, X, SH5];
const BR: &[Domain] = &[X, X, B13];
const NONE: &[Domain] = &[];

const fn base(opcode: u32, f3: u32, f7: u32) -> u32 {
    opcode | (f3 << 12) | (f7 << 25)
}

macro_rules! sig {
    ($m:expr, $ops:expr, $form:expr) => {
        Signature { mnemonic: $m, operands: $ops, width: 4, form: $form }
    };
    (c $m:expr, $ops:expr) => {
        Signature { mnemonic: $m, operands: $ops, width: 2, form: Form::Compressed }
    };
}

static SIGNATURES: &[Signature] = &[
    sig!("lui", &[X, U20], Form::U(0x37)),
    sig!("auipc", &[X, U20], Form::U(0x17)),
    sig!("jal", &[X, J21], Form::J(0x6f)),
    sig!("jalr", RRI, Form::I(base(0x67, 0, 0))),
    sig!("beq", BR, Form::B(base(0x63, 0, 0))),
    sig!("bne", BR, Form::B(base(0x63, 1, 0))),
    sig!("blt", BR, Form::B(base(0x63, 4, 0))),
    sig!("bge", BR, Form::B(base(0x63, 5, 0))),
    sig!("bltu", BR, Form::B(base(0x63, 6, 0))),
    sig!("bgeu", BR, Form::B(base(0x63, 7, 0))),
    sig!("lb", RRI, Form::I(base(0x03, 0, 0))),
    sig!("lh", RRI, Form::I(base(0x03, 1, 0))),
    sig!("lw", RRI, Form::I(base(0x03, 2, 0))),
    sig!("ld", RRI, Form::I(base(0x03, 3, 0))),
    sig!("lbu", RRI, Form::I(base(0x03, 4, 0))),
    sig!("lhu", RRI, Form::I(base(0x03, 5, 0))),
    sig!("lwu", RRI, Form::I(base(0x03, 6, 0))),
    sig!("sb", RRI, Form::S(base(0x23, 0, 0))),
    sig!("sh", RRI, Form::S(base(0x23, 1, 0))),
    sig!("sw", RRI, Form::S(base(0x23, 2, 0))),
    sig!("sd", RRI, Form::S(base(0x23, 3, 0))),
    sig!("addi", RRI, Form::I(base(0x13, 0, 0))),
    sig!("slti", RRI, Form::I(base(0x13, 2, 0))),
    sig!("sltiu", RRI, Form::I(base(0x13, 3, 0))),
    sig!("xori", RRI, Form::I(base(0x13, 4, 0))),
    sig!("ori", RRI, Form::I(base(0x13, 6, 0))),
    sig!("andi", RRI, Form::I(base(0x13, 7, 0))),
    sig!("slli", RRS6, Form::Shift(base(0x13, 1, 0))),
    sig!("srli", RRS6, Form::Shift(base(0x13, 5, 0))),
    sig!("srai", RRS6, Form::Shift(base(0x13, 5, 0x20))),
    sig!("add", RRR, Form::R(base(0x33, 0, 0))),
    sig!("sub", RRR, Form::R(base(0x33, 0, 0x20))),
    sig!("sll", RRR, Form::R(base(0x33, 1, 0))),
    sig!("slt", RRR, Form::R(base(0x33, 2, 0))),
    sig!("sltu", RRR, Form::R(base(0x33, 3, 0))),
    sig!("xor", RRR, Form::R(base(0x33, 4, 0))),
    sig!("srl", RRR, Form::R(base(0x33, 5, 0))),
    sig!("sra", RRR, Form::R(base(0x33, 5, 0x20))),
    sig!("or", RRR, Form::R(base(0x33, 6, 0))),
    sig!("and", RRR, Form::R(base(0x33, 7, 0))),
    sig!("addiw", RRI, Form::I(base(0x1b, 0, 0))),
    sig!("slliw", RRS5, Form::Shift(base(0x1b, 1, 0))),
    sig!("srliw", RRS5, Form::Shift(base(0x1b, 5, 0))),
    sig!("sraiw", RRS5, Form::Shift(base(0x1b, 5, 0x20))),
    sig!("addw", RRR, Form::R(base(0x3b, 0, 0))),
    sig!("subw", RRR, Form::R(base(0x3b, 0, 0x20))),
    sig!("sllw", RRR, Form::R(base(0x3b, 1, 0))),
    sig!("srlw", RRR, Form::R(base(0x3b, 5, 0))),
    sig!("sraw", RRR, Form::R(base(0x3b, 5, 0x20))),
    sig!("mul", RRR, Form::R(base(0x33, 0, 1))),
    sig!("mulh", RRR, Form::R(base(0x33, 1, 1))),
    sig!("mulhsu", RRR, Form::R(base(0x33, 2, 1))),
    sig!("mulhu", RRR, Form::R(base(0x33, 3, 1))),
    sig!("div", RRR, Form::R(base(0x33, 4, 1))),
    sig!("divu", RRR, Form::R(base(0x33, 5, 1))),
    sig!("rem", RRR, Form::R(base(0x33, 6, 1))),
    sig!("remu", RRR, Form::R(base(0x33, 7, 1))),
    sig!("mulw", RRR, Form::R(base(0x3b, 0, 1))),
    sig!("divw", RRR, Form::R(base(0x3b, 4, 1))),
    sig!("divuw", RRR, Form::R(base(0x3b, 5, 1))),
    sig!("remw", RRR, Form::R(base(0x3b, 6, 1))),
    sig!("remuw", RRR, Form::R(base(0x3b, 7, 1))),
    sig!("fence", &[NIBBLE, NIBBLE], Form::Fence),
    sig!("fence.tso", NONE, Form::Fixed(0x8330_000f)),
    sig!("fence.i", NONE, Form::Fixed(0x0000_100f)),
    sig!("ecall", NONE, Form::Fixed(0x0000_0073)),
    sig!("ebreak", NONE, Form::Fixed(0x0010_0073)),
    sig!("wfi", NONE, Form::Fixed(0x1050_0073)),
    sig!("mret", NONE, Form::Fixed(0x3020_0073)),
    sig!("sret", NONE, Form::Fixed(0x1020_0073)),
    sig!("csrrw", &[X, X, CSR], Form::CsrReg(base(0x73, 1, 0))),
    sig!("csrrs", &[X, X, CSR], Form::CsrReg(base(0x73, 2, 0))),
    sig!("csrrc", &[X, X, CSR], Form::CsrReg(base(0x73, 3, 0))),
    sig!("csrrwi", &[X, SH5, CSR], Form::CsrImm(base(0x73, 5, 0))),
    sig!("csrrsi", &[X, SH5, CSR], Form::CsrImm(base(0x73, 6, 0))),
    sig!("csrrci", &[X, SH5, CSR], Form::CsrImm(base(0x73, 7, 0))),
    sig!(c "c.addi4spn", &[XC, nonzero(4, 1020, 4)]),
    sig!(c "c.fld", &[FC, XC, aligned(0, 248, 8)]),
    sig!(c "c.lw", &[XC, XC, aligned(0, 124, 4)]),
    sig!(c "c.ld", &[XC, XC, aligned(0, 248, 8)]),
    sig!(c "c.fsd", &[FC, XC, aligned(0, 248, 8)]),
    sig!(c "c.sw", &[XC, XC, aligned(0, 124, 4)]),
    sig!(c "c.sd", &[XC, XC, aligned(0, 248, 8)]),
    sig!(c "c.nop", NONE),
    sig!(c "c.addi", &[X, C6]),
    sig!(c "c.addiw", &[XNZ, C6]),
    sig!(c "c.li", &[X, C6]),
    sig!(c "c.addi16sp", &[nonzero(-512, 496, 16)]),
    sig!(c "c.lui", &[XNOT_SP, nonzero(-32, 31, 1)]),
    sig!(c "c.srli", &[XC, SH6]),
    sig!(c "c.srai", &[XC, SH6]),
    sig!(c "c.andi", &[XC, C6]),
    sig!(c "c.sub", &[XC, XC]),
    sig!(c "c.xor", &[XC, XC]),
    sig!(c "c.or", &[XC, XC]),
    sig!(c "c.and", &[XC, XC]),
    sig!(c "c.subw", &[XC, XC]),
    sig!(c "c.addw", &[XC, XC]),
    sig!(c "c.j", &[aligned(-2048, 2046, 2)]),
    sig!(c "c.beqz", &[XC, aligned(-256, 254, 2)]),
    sig!(c "c.bnez", &[XC, aligned(-256, 254, 2)]),
    sig!(c "c.slli", &[X, SH6]),
    sig!(c "c.fldsp", &[F, aligned(0, 504, 8)]),
    sig!(c "c.lwsp", &[XNZ, aligned(0, 252, 4)]),
    sig!(c "c.ldsp", &[XNZ, aligned(0, 504, 8)]),
    sig!(c "c.jr", &[XNZ]),
    sig!(c "c.mv", &[X, XNZ]),
    sig!(c "c.ebreak", NONE),
    sig!(c "c.jalr", &[XNZ]),
    sig!(c "c.add", &[X, XNZ]),
    sig!(c "c.fsdsp", &[F, aligned(0, 504, 8)]),
    sig!(c "c.swsp", &[X, aligned(0, 252, 4)]),
    sig!(c "c.sdsp", &[X, aligned(0, 504, 8)]),
];

/// Every mnemonic the encoder supports.
pub fn signatures() -> &'static [Signature] {
    SIGNATURES
}

pub fn signature(mnemonic: &str) -> Option<&'static Signature> {
    SIGNATURES.iter().find(|s| s.mnemonic == mnemonic)
}

/// Encode to little-endian bytes (2 or 4 of them).
pub fn encode(mnemonic: &str, operands: &[Operand]) -> Result<Vec<u8>, EncodeError> {
    let sig = checked_signature(mnemonic, operands)?;
    let raw = encode_checked(sig, operands);
    Ok(raw.to_le_bytes()[..sig.width as usize].to_vec())
}

/// Encode to raw instruction bits; compressed forms occupy the low 16 bits.
pub fn encode_word(mnemonic: &str, operands: &[Operand]) -> Result<u32, EncodeError> {
    let sig = checked_signature(mnemonic, operands)?;
    Ok(encode_checked(sig, operands))
}

fn checked_signature(mnemonic: &str, operands: &[Operand]) -> Result<&'static Signature, EncodeError> {
    let sig = signature(mnemonic).ok_or_else(|| EncodeError::UnsupportedMnemonic(mnemonic.to_string()))?;
    if sig.operands.len() != operands.len() {
        return Err(EncodeError::OperandCount {
            mnemonic: sig.mnemonic,
            expected: sig.operands.len(),
            got: operands.len(),
        });
    }
    for (index, (dom, op)) in sig.operands.iter().zip(operands).enumerate() {
        if !dom.contains(op) {
            return Err(EncodeError::OutOfRange { mnemonic: sig.mnemonic, index, operand: *op });
        }
    }
    // The one joint constraint: `c.addi zero,0` is the `c.nop` encoding.
    if sig.mnemonic == "c.addi" && operands[0] == Operand::Reg(0) && operands[1] == Operand::Imm(0) {
        return Err(EncodeError::OutOfRange { mnemonic: sig.mnemonic, index: 1, operand: operands[1] });
    }
    Ok(sig)
}

/// Bits `hi..=lo` of `v`, shifted down to bit 0.
fn field(v: i64, hi: u32, lo: u32) -> u32 {
    ((v >> lo) as u32) & ((1u32 << (hi - lo + 1)) - 1)
}

fn encode_checked(sig: &Signature, ops: &[Operand]) -> u32 {
    let v = |i: usize| ops[i].value();
    let r = |i: usize| ops[i].value() as u32;
    match sig.form {
        Form::R(b) => b | (r(0) << 7) | (r(1) << 15) | (r(2) << 20),
        Form::I(b) => b | (r(0) << 7) | (r(1) << 15) | (field(v(2), 11, 0) << 20),
        Form::Shift(b) => b | (r(0) << 7) | (r(1) << 15) | (r(2) << 20),
        Form::S(b) => b | (field(v(2), 4, 0) << 7) | (r(1) << 15) | (r(0) << 20) | (field(v(2), 11, 5) << 25),
        Form::B(b) => {
            let o = v(2);
            b | (field(o, 11, 11) << 7)
                | (field(o, 4, 1) << 8)
                | (r(0) << 15)
                | (r(1) << 20)
                | (field(o, 10, 5) << 25)
                | (field(o, 12, 12) << 31)
        }
        Form::U(b) => b | (r(0) << 7) | (field(v(1), 19, 0) << 12),
        Form::J(b) => {
            let o = v(1);
            b | (r(0) << 7)
                | (field(o, 19, 12) << 12)
                | (field(o, 11, 11) << 20)
                | (field(o, 10, 1) << 21)
                | (field(o, 20, 20) << 31)
        }
        Form::Fixed(w) => w,
        Form::CsrReg(b) | Form::CsrImm(b) => b | (r(0) << 7) | (r(1) << 15) | (r(2) << 20),
        Form::Fence => 0x0f | (r(0) << 24) | (r(1) << 20),
        Form::Compressed => encode_compressed(sig.mnemonic, ops) as u32,
    }
}

fn encode_compressed(mnemonic: &str, ops: &[Operand]) -> u16 {
    let v = |i: usize| ops[i].value();
    // 3-bit register field for x8..x15 / f8..f15.
    let p = |i: usize| (ops[i].value() as u32 - 8) & 7;
    let f3 = |n: u32| n << 13;
    let w: u32 = match mnemonic {
        "c.addi4spn" => {
            let u = v(1);
            (field(u, 5, 4) << 11) | (field(u, 9, 6) << 7) | (field(u, 2, 2) << 6) | (field(u, 3, 3) << 5) | (p(0) << 2)
        }
        "c.fld" | "c.ld" | "c.fsd" | "c.sd" => {
            let n = match mnemonic {
                "c.fld" => 1,
                "c.ld" => 3,
                "c.fsd" => 5,
                _ => 7,
            };
            let u = v(2);
            f3(n) | (field(u, 5, 3) << 10) | (p(1) << 7) | (field(u, 7, 6) << 5) | (p(0) << 2)
        }
        "c.lw" | "c.sw" => {
            let n = if mnemonic == "c.lw" { 2 } else { 6 };
            let u = v(2);
            f3(n) | (field(u, 5, 3) << 10) | (p(1) << 7) | (field(u, 2, 2) << 6) | (field(u, 6, 6) << 5) | (p(0) << 2)
        }
        "c.nop" => 0x0001,
        "c.addi" | "c.addiw" | "c.li" | "c.lui" => {
            let n = match mnemonic {
                "c.addi" => 0,
                "c.addiw" => 1,
                "c.li" => 2,
                _ => 3,
            };
            let i = v(1);
            f3(n) | (field(i, 5, 5) << 12) | ((v(0) as u32) << 7) | (field(i, 4, 0) << 2) | 1
        }
        "c.addi16sp" => {
            let i = v(0);
            f3(3)
                | (field(i, 9, 9) << 12)
                | (2 << 7)
                | (field(i, 4, 4) << 6)
                | (field(i, 6, 6) << 5)
                | (field(i, 8, 7) << 3)
                | (field(i, 5, 5) << 2)
                | 1
        }
        "c.srli" | "c.srai" | "c.andi" => {
            let sel = match mnemonic {
                "c.srli" => 0,
                "c.srai" => 1,
                _ => 2,
            };
            let i = v(1);
            f3(4) | (field(i, 5, 5) << 12) | (sel << 10) | (p(0) << 7) | (field(i, 4, 0) << 2) | 1
        }
        "c.sub" | "c.xor" | "c.or" | "c.and" | "c.subw" | "c.addw" => {
            let (b12, f2) = match mnemonic {
                "c.sub" => (0, 0),
                "c.xor" => (0, 1),
                "c.or" => (0, 2),
                "c.and" => (0, 3),
                "c.subw" => (1, 0),
                _ => (1, 1),
            };
            f3(4) | (b12 << 12) | (3 << 10) | (p(0) << 7) | (f2 << 5) | (p(1) << 2) | 1
        }
        "c.j" => {
            let o = v(0);
            f3(5)
                | (field(o, 11, 11) << 12)
                | (field(o, 4, 4) << 11)
                | (field(o, 9, 8) << 9)
                | (field(o, 10, 10) << 8)
                | (field(o, 6, 6) << 7)
                | (field(o, 7, 7) << 6)
                | (field(o, 3, 1) << 3)
                | (field(o, 5, 5) << 2)
                | 1
        }
        "c.beqz" | "c.bnez" => {
            let n = if mnemonic == "c.beqz" { 6 } else { 7 };
            let o = v(1);
            f3(n)
                | (field(o, 8, 8) << 12)
                | (field(o, 4, 3) << 10)
                | (p(0) << 7)
                | (field(o, 7, 6) << 5)
                | (field(o, 2, 1) << 3)
                | (field(o, 5, 5) << 2)
                | 1
        }
        "c.slli" => {
            let i = v(1);
            (field(i, 5, 5) << 12) | ((v(0) as u32) << 7) | (field(i, 4, 0) << 2) | 2
        }
        "c.fldsp" | "c.ldsp" => {
            let n = if mnemonic == "c.fldsp" { 1 } else { 3 };
            let u = v(1);
            f3(n) | (field(u, 5, 5) << 12) | ((v(0) as u32) << 7) | (field(u, 4, 3) << 5) | (field(u, 8, 6) << 2) | 2
        }
        "c.lwsp" => {
            let u = v(1);
            f3(2) | (field(u, 5, 5) << 12) | ((v(0) as u32) << 7) | (field(u, 4, 2) << 4) | (field(u, 7, 6) << 2) | 2
        }
        "c.jr" => f3(4) | ((v(0) as u32) << 7) | 2,
        "c.mv" => f3(4) | ((v(0) as u32) << 7) | ((v(1) as u32) << 2) | 2,
        "c.ebreak" => 0x9002,
        "c.jalr" => f3(4) | (1 << 12) | ((v(0) as u32) << 7) | 2,
        "c.add" => f3(4) | (1 << 12) | ((v(0) as u32) << 7) | ((v(1) as u32) << 2) | 2,
        "c.fsdsp" | "c.sdsp" => {
            let n = if mnemonic == "c.fsdsp" { 5 } else { 7 };
            let u = v(1);
            f3(n) | (field(u, 5, 3) << 10) | (field(u, 8, 6) << 7) | ((v(0) as u32) << 2) | 2
        }
        "c.swsp" => {
            let u = v(1);
            f3(6) | (field(u, 5, 2) << 9) | (field(u, 7, 6) << 7) | ((v(0) as u32) << 2) | 2
        }
        other => unreachable!("no compressed recipe for {other}"),
    };
    w as u16
}
