use std::collections::HashSet;

use super::{HiddenSpec, OverlapPlan, PlanInstr, Policy};
use crate::isa::{decode_word, encode_word, instr_length, signature, Length, Operand};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthError {
    #[error("malformed spec at position {position}: {reason}")]
    MalformedSpec { position: usize, reason: String },
    #[error("invalid policy: {0}")]
    BadPolicy(String),
    #[error("unsatisfiable at position {position}: {reason}")]
    Unsat { position: usize, reason: String },
}

/// Carrier mnemonics with a free upper halfword, and the low-halfword bits
/// left free once opcode, function and destination are fixed.
fn carrier_free_bits(mnemonic: &str) -> Option<u16> {
    match mnemonic {
        "lui" | "auipc" => Some(0xf000),
        "addi" | "slti" | "sltiu" | "xori" | "ori" | "andi" | "addiw" => Some(0x8000),
        _ => None,
    }
}

/// Values of the bits selected by `mask`, in ascending order.
fn subsets(mask: u16) -> impl Iterator<Item = u16> {
    let mut next = Some(0u16);
    std::iter::from_fn(move || {
        let cur = next?;
        next = (cur != mask).then(|| (cur.wrapping_sub(mask)) & mask);
        Some(cur)
    })
}

struct Solver<'a> {
    policy: &'a Policy,
    /// Possible carrier low halfwords, preferred first.
    lows: Vec<u16>,
    /// Per 4-byte hidden position: (hidden low, hidden high) pairs matching
    /// the template, with the high half drawn from `lows`.
    options: Vec<Vec<(u16, u16)>>,
    /// Encodings allowed for the closing `c.j`.
    jumps: Vec<u16>,
    dead: HashSet<(usize, u16, u32)>,
    deepest: usize,
}

impl Solver<'_> {
    /// Destination register of `word` when it is an allowed carrier.
    fn carrier(&self, word: u32) -> Option<u8> {
        let (m, ops) = decode_word(word)?;
        let rd = ops.first()?.reg()?;
        (self.policy.carriers.iter().any(|c| c == m) && self.policy.destinations.contains(&rd)).then_some(rd)
    }

    fn fresh(&self, rd: u8, used: u32) -> bool {
        !self.policy.distinct_destinations || used & (1 << rd) == 0
    }

    /// Choose the rest of the chain given carrier `j`'s low halfword.
    fn solve(&mut self, j: usize, low: u16, used: u32, words: &mut Vec<u32>) -> bool {
        self.deepest = self.deepest.max(j);
        if self.dead.contains(&(j, low, used)) {
            return false;
        }
        if j == self.options.len() {
            for k in 0..self.jumps.len() {
                let word = low as u32 | (self.jumps[k] as u32) << 16;
                if self.carrier(word).is_some_and(|rd| self.fresh(rd, used)) {
                    words.push(word);
                    return true;
                }
            }
        } else {
            for k in 0..self.options[j].len() {
                let (l, h) = self.options[j][k];
                let word = low as u32 | (l as u32) << 16;
                let Some(rd) = self.carrier(word).filter(|&rd| self.fresh(rd, used)) else { continue };
                words.push(word);
                if self.solve(j + 1, h, used | 1 << rd, words) {
                    return true;
                }
                words.pop();
            }
        }
        self.dead.insert((j, low, used));
        false
    }
}

fn check_spec(spec: &HiddenSpec) -> Result<(), SynthError> {
    let bad = |position: usize, reason: String| Err(SynthError::MalformedSpec { position, reason });
    let Some(last) = spec.sequence.len().checked_sub(1) else {
        return bad(0, "empty sequence; the final element must be a `c.j`".into());
    };
    for (n, t) in spec.sequence.iter().enumerate() {
        let Some(sig) = signature(&t.mnemonic) else {
            return bad(n, format!("unsupported mnemonic `{}`", t.mnemonic));
        };
        if sig.operands.len() != t.operands.len() {
            return bad(n, format!("`{}` takes {} operands, got {}", t.mnemonic, sig.operands.len(), t.operands.len()));
        }
        if n == last && t.mnemonic != "c.j" {
            return bad(n, format!("final element must be `c.j`, got `{}`", t.mnemonic));
        }
        if n != last && sig.width != 4 {
            return bad(n, format!("`{}` is not a 4-byte instruction", t.mnemonic));
        }
    }
    Ok(())
}

/// Find carriers whose shifted decode is the requested hidden sequence.
/// The search order prefers low destination registers, then low immediate
/// bits, and is fully deterministic.
pub fn synthesize(spec: &HiddenSpec, policy: &Policy) -> Result<OverlapPlan, SynthError> {
    check_spec(spec)?;
    if policy.carriers.is_empty() || policy.destinations.is_empty() {
        return Err(SynthError::BadPolicy("no carrier mnemonics or no destination registers".into()));
    }
    let mut dests = policy.destinations.clone();
    dests.sort_unstable();
    dests.dedup();
    if let Some(&r) = dests.iter().find(|&&r| r == 0 || r > 31) {
        return Err(SynthError::BadPolicy(format!("destination x{r} cannot be written")));
    }

    let mut lows = Vec::new();
    for &rd in &dests {
        for m in &policy.carriers {
            let free = carrier_free_bits(m).ok_or_else(|| SynthError::BadPolicy(format!("`{m}` cannot carry")))?;
            let ops = match m.as_str() {
                "lui" | "auipc" => vec![Operand::Reg(rd), Operand::Imm(0)],
                _ => vec![Operand::Reg(rd), Operand::Reg(0), Operand::Imm(0)],
            };
            let base = encode_word(m, &ops).expect("carrier template encodes") as u16;
            lows.extend(subsets(free).map(|bits| base | bits));
        }
    }

    let (body, jump) = spec.sequence.split_at(spec.sequence.len() - 1);
    let mut options = Vec::new();
    for (position, t) in body.iter().enumerate() {
        let sig = signature(&t.mnemonic).expect("checked above");
        let sample: Vec<Operand> = sig.operands.iter().map(|d| d.first().expect("non-empty domain")).collect();
        let opcode = encode_word(sig.mnemonic, &sample).expect("sample encodes") as u16 & 0x7f;
        let mut opts = Vec::new();
        for &h in &lows {
            for x in 0..512u16 {
                let l = opcode | x << 7;
                if let Some((m, ops)) = decode_word(l as u32 | (h as u32) << 16) {
                    if t.matches(m, &ops) {
                        opts.push((l, h));
                    }
                }
            }
        }
        if opts.is_empty() {
            return Err(SynthError::Unsat {
                position,
                reason: format!(
                    "no `{}` encoding has an upper halfword that an allowed carrier can begin with",
                    t.mnemonic
                ),
            });
        }
        options.push(opts);
    }

    let jump_sig = signature("c.j").expect("c.j is encodable");
    let jumps: Vec<u16> = jump_sig.operands[0]
        .values()
        .into_iter()
        .filter(|o| jump[0].operands[0].allows(o.value()))
        .map(|o| encode_word("c.j", &[o]).expect("in domain") as u16)
        .collect();
    if jumps.is_empty() {
        return Err(SynthError::Unsat {
            position: body.len(),
            reason: "no jump offset satisfies the constraint".into(),
        });
    }
    debug_assert!(jumps.iter().all(|&j| instr_length(j) == Length::Two));

    let mut solver = Solver { policy, lows, options, jumps, dead: HashSet::new(), deepest: 0 };
    let mut words = Vec::new();
    let starts = solver.lows.clone();
    let found = starts.into_iter().any(|low| solver.solve(0, low, 0, &mut words));
    if !found {
        return Err(SynthError::Unsat {
            position: solver.deepest,
            reason: "no carrier choice links this position with its neighbours".into(),
        });
    }

    let carriers: Vec<PlanInstr> = words
        .iter()
        .map(|&w| {
            let (m, ops) = decode_word(w).expect("carriers decode");
            PlanInstr { mnemonic: m.to_string(), operands: ops, bytes: w.to_le_bytes().to_vec() }
        })
        .collect();
    let mut bytes: Vec<u8> = words.iter().flat_map(|w| w.to_le_bytes()).collect();
    bytes.drain(..2);
    let mut hidden = Vec::new();
    let mut at = 0;
    while at < bytes.len() {
        let i = crate::isa::decode(&bytes[at..], at as u64 + 2).expect("hidden words decode");
        at += i.width as usize;
        hidden.push(PlanInstr::from_instr(&i));
    }
    Ok(OverlapPlan { carriers, hidden, base_free: true })
}
