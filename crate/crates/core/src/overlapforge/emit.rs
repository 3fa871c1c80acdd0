use std::fmt::Write;

use super::OverlapPlan;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmitError {
    #[error("carrier {position} (`{text}`) is not a `lui` into a distinct argument register")]
    UnsupportedCarrier { position: usize, text: String },
}

/// C source whose compiled form should contain the plan's carriers: a call
/// to `dummy` forces a stack frame, then a call to `dummy<N>` takes one
/// argument per argument register, each carrier's constant in the register
/// it loads and 0 elsewhere.
pub fn emit_c(plan: &OverlapPlan, function_name: &str) -> Result<String, EmitError> {
    let mut args: Vec<Option<u32>> = Vec::new();
    for (position, c) in plan.carriers.iter().enumerate() {
        let unsupported = || EmitError::UnsupportedCarrier { position, text: c.to_string() };
        let (Some(rd), Some(imm)) = (c.operands.first().and_then(|o| o.reg()), c.operands.get(1).and_then(|o| o.imm()))
        else {
            return Err(unsupported());
        };
        if c.mnemonic != "lui" || !(10..=17).contains(&rd) {
            return Err(unsupported());
        }
        let slot = (rd - 10) as usize;
        if args.len() <= slot {
            args.resize(slot + 1, None);
        }
        if args[slot].replace((imm as u32) << 12).is_some() {
            return Err(unsupported());
        }
    }

    let mut s = String::from("/*\n * Carriers, in the order they must appear in the compiled code:\n");
    for c in &plan.carriers {
        writeln!(s, " *   {c}").unwrap();
    }
    s.push_str(" * Entered two bytes into the first carrier, the same bytes execute as:\n");
    for h in &plan.hidden {
        writeln!(s, " *   {h}").unwrap();
    }
    s.push_str(
        " * The compiler chooses register allocation and instruction order; check\n \
         * the generated code for one lui per constant, in the listed registers,\n \
         * with nothing scheduled between them.\n */\n",
    );
    let params = vec!["int"; args.len()].join(", ");
    let callee = format!("dummy{}", args.len());
    writeln!(s, "void dummy(void);").unwrap();
    writeln!(s, "void {callee}({});\n", if params.is_empty() { "void" } else { &params }).unwrap();
    let list: Vec<String> = args
        .iter()
        .map(|a| match a {
            Some(v) => format!("(signed) {v:#x}"),
            None => "0".to_string(),
        })
        .collect();
    writeln!(s, "int {function_name}(void)\n{{").unwrap();
    writeln!(s, "    dummy();").unwrap();
    writeln!(s, "    {callee}({});", list.join(", ")).unwrap();
    writeln!(s, "    return 0;\n}}").unwrap();
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::Operand::{Imm, Reg};
    use crate::overlapforge::PlanInstr;
    use crate::samples::magic_constant_plan;

    #[test]
    fn magic_constants() {
        let c = emit_c(&magic_constant_plan(), "function15c").unwrap();
        assert!(c.contains("dummy4((signed) 0x9932000, 0, (signed) 0xa0212000, (signed) 0x23371000);"), "{c}");
        assert!(c.contains("int function15c(void)"));
    }

    #[test]
    fn single_carrier() {
        let plan = OverlapPlan {
            carriers: vec![PlanInstr::new("lui", vec![Reg(10), Imm(0xa0215)]).unwrap()],
            hidden: vec![PlanInstr::new("c.j", vec![Imm(8)]).unwrap()],
            base_free: true,
        };
        let c = emit_c(&plan, "f").unwrap();
        assert!(c.contains("dummy1((signed) 0xa0215000);"), "{c}");
    }

    #[test]
    fn store_carrier_rejected() {
        let plan = OverlapPlan {
            carriers: vec![PlanInstr::new("sd", vec![Reg(10), Reg(2), Imm(8)]).unwrap()],
            hidden: vec![],
            base_free: true,
        };
        assert!(matches!(emit_c(&plan, "f"), Err(EmitError::UnsupportedCarrier { position: 0, .. })));
    }
}
