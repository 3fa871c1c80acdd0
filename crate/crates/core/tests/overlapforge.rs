mod common;

use common::{random_satisfiable_spec, relax, rng, HIDDEN_MNEMONICS};
use rand::prelude::*;
use rvgadget::gadgets::{compute_mep, galileo_scan, GadgetKind, Limits, DEFAULT_WINDOW};
use rvgadget::image::load_raw;
use rvgadget::isa::{decode, decode_word, encode_word, instr_length, signature, Length, Operand};
use rvgadget::overlapforge::{
    emit_c, synthesize, verify, HiddenSpec, OperandConstraint, OverlapPlan, Policy, SynthError, Template, Verdict,
};
use rvgadget::pathgraph::build;
use rvgadget::samples::{magic_constant_plan, magic_constant_spec, plant};

const BASE: u64 = 0x40000;

/// Plant the plan behind a return and check both scanners' view of it.
fn check_planted(plan: &OverlapPlan) {
    let bytes = plant(plan);
    let image = load_raw(&bytes, BASE);
    let full = rvgadget::cli::scan_image(&image, Limits::default(), false);
    let hidden = full
        .gadgets
        .iter()
        .find(|g| g.start() == BASE + 2)
        .unwrap_or_else(|| panic!("no gadget at the hidden entry: {plan:?}"));
    assert_eq!(hidden.kind, GadgetKind::MultiLcsaj);
    assert!(hidden.hep_mask[0]);
    assert!(galileo_scan(&image, DEFAULT_WINDOW).iter().all(|g| g.start() != BASE + 2));

    // Both decodes are present in the superset graph.
    let g = build(&image);
    for (n, c) in plan.carriers.iter().enumerate() {
        assert_eq!(g.node(BASE + 4 * n as u64).unwrap().mnemonic, c.mnemonic);
    }
    let mut at = BASE + 2;
    for h in &plan.hidden {
        let i = g.node(at).unwrap();
        assert_eq!(i.mnemonic, h.mnemonic);
        at += i.width as u64;
    }
    assert!(!compute_mep(&image).contains(BASE + 2));
}

#[test]
fn randomized_specs_are_sound() {
    let mut r = rng(0xf0f0);
    for _ in 0..120 {
        let (spec, witness) = random_satisfiable_spec(&mut r);
        let plan = synthesize(&spec, &Policy::default()).unwrap_or_else(|e| panic!("{e}: {spec:?} {witness:x?}"));
        assert_eq!(verify(&plan), Verdict::Pass);
        for (t, h) in spec.sequence.iter().zip(&plan.hidden) {
            assert!(t.matches(&h.mnemonic, &h.operands), "{t:?} vs {h}");
        }
        assert_eq!(synthesize(&spec, &Policy::default()).unwrap(), plan);
        check_planted(&plan);
    }
}

#[test]
fn magic_constant_region_plants() {
    check_planted(&magic_constant_plan());
    let plan = synthesize(&magic_constant_spec(), &Policy::default()).unwrap();
    check_planted(&plan);
    assert!(emit_c(&plan, "f").is_ok());
}

/// Brute force for `[T; c.j off]`: some lower halfword and some carrier
/// low halfword with a different destination make a word matching T, and
/// the second carrier's word (its low half, then the jump) is a `lui`.
fn oracle_sat(t: &Template, off: i64) -> bool {
    let jump = encode_word("c.j", &[Operand::Imm(off)]).unwrap();
    let carrier_lows: Vec<u16> =
        (10u16..=17).flat_map(|rd| (0..16u16).map(move |n| 0x37 | rd << 7 | n << 12)).collect();
    carrier_lows.iter().any(|&h| {
        decode_word(h as u32 | jump << 16).is_some_and(|(m, _)| m == "lui")
            && (0..=u16::MAX)
                .filter(|&l| instr_length(l) == Length::Four)
                .any(|l| decode_word(l as u32 | (h as u32) << 16).is_some_and(|(m, ops)| t.matches(m, &ops)))
    })
}

fn limit_free(t: &mut Template, r: &mut impl Rng) {
    let mut free = 0;
    for c in t.operands.iter_mut() {
        if *c == OperandConstraint::Free {
            free += 1;
            if free > 2 {
                *c = OperandConstraint::Fixed(r.gen_range(0..32));
            }
        }
    }
}

#[test]
fn exhaustive_agreement_on_single_instruction_specs() {
    let mut r = rng(0xe4a);
    let (mut sat, mut unsat) = (0, 0);
    for n in 0..24 {
        let t = if n % 2 == 0 {
            // From a satisfiable witness, with at most two fields left free.
            let (spec, _) = loop {
                let (s, w) = random_satisfiable_spec(&mut r);
                if s.sequence.len() == 2 {
                    break (s, w);
                }
            };
            let mut t = spec.sequence[0].clone();
            limit_free(&mut t, &mut r);
            t
        } else {
            let m = if n % 8 == 7 { "ecall" } else { HIDDEN_MNEMONICS.choose(&mut r).unwrap() };
            let sig = signature(m).unwrap();
            let ops: Vec<Operand> = sig
                .operands
                .iter()
                .map(|d| {
                    let vs = d.values();
                    // Only the 20-bit upper immediates exceed this.
                    if vs.len() > 4096 {
                        Operand::Imm(r.gen_range(0..0x100000))
                    } else {
                        *vs.choose(&mut r).unwrap()
                    }
                })
                .collect();
            let mut t = Template { mnemonic: m.to_string(), operands: relax(&mut r, &ops) };
            limit_free(&mut t, &mut r);
            t
        };
        let off = r.gen_range(2..=20i64) * 2;
        let spec = HiddenSpec { sequence: vec![t.clone(), Template::new("c.j", vec![OperandConstraint::Fixed(off)])] };
        let got = synthesize(&spec, &Policy::default());
        let expected = oracle_sat(&t, off);
        match got {
            Ok(plan) => {
                assert!(expected, "solver found {plan:?} but oracle says unsat for {t:?}");
                assert!(verify(&plan).is_pass());
                sat += 1;
            }
            Err(SynthError::Unsat { .. }) => {
                assert!(!expected, "solver says unsat but oracle found a solution for {t:?}");
                unsat += 1;
            }
            Err(e) => panic!("{e}"),
        }
    }
    assert!(sat > 3 && unsat > 3, "{sat} sat, {unsat} unsat");
}

#[test]
fn synthesis_is_deterministic() {
    let a = synthesize(&magic_constant_spec(), &Policy::default()).unwrap();
    for _ in 0..3 {
        assert_eq!(synthesize(&magic_constant_spec(), &Policy::default()).unwrap().to_json(), a.to_json());
    }
}

#[test]
fn other_carrier_families() {
    let spec = HiddenSpec { sequence: vec![Template::new("c.j", vec![OperandConstraint::Fixed(12)])] };
    let policy = Policy { carriers: vec!["addi".into()], destinations: vec![5, 6, 7], distinct_destinations: true };
    let plan = synthesize(&spec, &policy).unwrap();
    assert_eq!(plan.carriers[0].mnemonic, "addi");
    assert!(verify(&plan).is_pass());
    assert!(emit_c(&plan, "f").is_err());
    let word = u32::from_le_bytes(plan.carriers[0].bytes.clone().try_into().unwrap());
    assert_eq!(decode(&word.to_le_bytes()[2..], 2).unwrap().text(), "c.j 12");
}
