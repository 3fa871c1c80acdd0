//! Hidden-instruction construction. A run of 4-byte "carrier" instructions
//! is chosen so that decoding it two bytes late yields a requested hidden
//! sequence ending in a short relative jump.

mod emit;
mod synth;

use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use crate::isa::{decode, encode, overlap_class, EncodeError, Instr, Operand, OverlapClass};

pub use emit::{emit_c, EmitError};
pub use synth::{synthesize, SynthError};

/// Allowed values of one hidden operand. Registers are given by index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperandConstraint {
    Free,
    Fixed(i64),
    AnyOf(Vec<i64>),
}

impl OperandConstraint {
    pub fn allows(&self, value: i64) -> bool {
        match self {
            OperandConstraint::Free => true,
            OperandConstraint::Fixed(v) => *v == value,
            OperandConstraint::AnyOf(vs) => vs.contains(&value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    pub mnemonic: String,
    pub operands: Vec<OperandConstraint>,
}

impl Template {
    pub fn new(mnemonic: &str, operands: Vec<OperandConstraint>) -> Template {
        Template { mnemonic: mnemonic.to_string(), operands }
    }

    pub fn matches(&self, mnemonic: &str, operands: &[Operand]) -> bool {
        mnemonic == self.mnemonic
            && operands.len() == self.operands.len()
            && operands.iter().zip(&self.operands).all(|(o, c)| c.allows(o.value()))
    }
}

/// Requested hidden sequence: 4-byte instructions followed by one `c.j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HiddenSpec {
    pub sequence: Vec<Template>,
}

/// Which instructions may serve as carriers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    /// Carrier mnemonics: `lui`, `auipc`, or the immediate ALU forms.
    pub carriers: Vec<String>,
    /// Allowed destination register indices.
    pub destinations: Vec<u8>,
    /// Give every carrier its own destination register, so each carrier can
    /// be written as a separate call argument.
    #[serde(default = "yes")]
    pub distinct_destinations: bool,
}

fn yes() -> bool {
    true
}

impl Default for Policy {
    /// `lui` into the argument registers `a0`..`a7`.
    fn default() -> Self {
        Policy { carriers: vec!["lui".into()], destinations: (10..=17).collect(), distinct_destinations: true }
    }
}

/// One concrete instruction of a plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlanInstr {
    pub mnemonic: String,
    pub operands: Vec<Operand>,
    #[serde(serialize_with = "hex")]
    pub bytes: Vec<u8>,
}

fn hex<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&bytes.iter().map(|b| format!("{b:02x}")).collect::<String>())
}

impl PlanInstr {
    pub fn new(mnemonic: &str, operands: Vec<Operand>) -> Result<PlanInstr, EncodeError> {
        let bytes = encode(mnemonic, &operands)?;
        Ok(PlanInstr { mnemonic: mnemonic.to_string(), operands, bytes })
    }

    pub fn from_instr(i: &Instr) -> PlanInstr {
        PlanInstr { mnemonic: i.mnemonic.to_string(), operands: i.operands.clone(), bytes: i.bytes() }
    }

    fn same_as(&self, i: &Instr) -> bool {
        self.mnemonic == i.mnemonic && self.operands == i.operands
    }
}

impl fmt::Display for PlanInstr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::isa::format_asm(&self.mnemonic, &self.operands))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OverlapPlan {
    pub carriers: Vec<PlanInstr>,
    /// Instructions seen when decoding from the first carrier's address + 2.
    pub hidden: Vec<PlanInstr>,
    /// The construction does not depend on where it is placed.
    pub base_free: bool,
}

impl OverlapPlan {
    pub fn carrier_bytes(&self) -> Vec<u8> {
        self.carriers.iter().flat_map(|c| c.bytes.iter().copied()).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail { position: usize, reason: String },
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        *self == Verdict::Pass
    }
}

/// Re-encode the carriers, lay them out, and check that decoding at +0 and
/// at +2 reproduces the plan. Positions are carrier indices.
pub fn verify(plan: &OverlapPlan) -> Verdict {
    let fail = |position: usize, reason: String| Verdict::Fail { position, reason };
    let mut bytes = Vec::new();
    for (n, c) in plan.carriers.iter().enumerate() {
        match encode(&c.mnemonic, &c.operands) {
            Ok(b) if b.len() != 4 => return fail(n, format!("carrier `{c}` is not a 4-byte instruction")),
            Ok(b) if b != c.bytes => return fail(n, format!("carrier `{c}` does not encode to its recorded bytes")),
            Ok(b) => bytes.extend(b),
            Err(e) => return fail(n, format!("carrier does not encode: {e}")),
        }
    }
    if plan.carriers.is_empty() {
        return if plan.hidden.is_empty() {
            Verdict::Pass
        } else {
            fail(0, "hidden instructions without carriers".into())
        };
    }

    for (n, c) in plan.carriers.iter().enumerate() {
        let at = 4 * n;
        let instr = match decode(&bytes[at..], at as u64) {
            Ok(i) if c.same_as(&i) => i,
            _ => return fail(n, format!("carrier `{c}` does not decode back to itself")),
        };
        let class = overlap_class(&instr).expect("carriers are 4 bytes");
        let last = n + 1 == plan.carriers.len();
        let want = match plan.hidden.last() {
            Some(h) if last && h.bytes.len() == 2 => OverlapClass::I2,
            _ => OverlapClass::I1Candidate,
        };
        if class != want {
            return fail(n, format!("carrier `{c}` classifies as {class:?}, expected {want:?}"));
        }
    }

    let mut at = 2;
    for h in &plan.hidden {
        let position = at / 4;
        if at >= bytes.len() {
            return fail(position.min(plan.carriers.len() - 1), format!("hidden `{h}` lies past the carriers"));
        }
        match decode(&bytes[at..], at as u64) {
            Ok(i) if h.same_as(&i) => at = i.end() as usize,
            Ok(i) => return fail(position, format!("expected hidden `{h}`, decoded `{i}`")),
            Err(e) => return fail(position, format!("expected hidden `{h}`: {e}")),
        }
    }
    if at != bytes.len() {
        return fail(plan.carriers.len() - 1, "hidden sequence does not end with the last carrier".into());
    }
    Verdict::Pass
}
