use std::collections::BTreeSet;
use std::fmt::Write;

use serde::Serialize;

use super::{Gadget, GadgetKind};
use crate::isa::Operand;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

#[derive(Serialize)]
struct JsonGadget<'a> {
    start: u64,
    terminal: u64,
    width_bytes: u64,
    lcsaj_count: usize,
    kind: GadgetKind,
    instructions: Vec<JsonInstr<'a>>,
}

#[derive(Serialize)]
struct JsonInstr<'a> {
    address: u64,
    mnemonic: &'a str,
    operands: &'a [Operand],
    text: String,
    hep: bool,
}

/// Render gadgets as a JSON array, or as text with one paragraph per gadget.
pub fn report(gadgets: &[Gadget], format: Format) -> String {
    match format {
        Format::Json => {
            let items: Vec<JsonGadget<'_>> = gadgets
                .iter()
                .map(|g| JsonGadget {
                    start: g.start(),
                    terminal: g.terminal(),
                    width_bytes: g.width_bytes(),
                    lcsaj_count: g.lcsaj_count,
                    kind: g.kind,
                    instructions: g
                        .instrs
                        .iter()
                        .zip(&g.hep_mask)
                        .map(|(i, &hep)| JsonInstr {
                            address: i.address,
                            mnemonic: i.mnemonic,
                            operands: &i.operands,
                            text: i.text(),
                            hep,
                        })
                        .collect(),
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&items).expect("plain data serializes");
            s.push('\n');
            s
        }
        Format::Text => {
            let mut s = String::new();
            for (n, g) in gadgets.iter().enumerate() {
                if n > 0 {
                    s.push('\n');
                }
                writeln!(
                    s,
                    "{:#x} -> {:#x}  {:?}  lcsajs={}  bytes={}",
                    g.start(),
                    g.terminal(),
                    g.kind,
                    g.lcsaj_count,
                    g.width_bytes()
                )
                .unwrap();
                for (i, &hep) in g.instrs.iter().zip(&g.hep_mask) {
                    let tag = if hep { "  [hep]" } else { "" };
                    writeln!(s, "  {:#x}  {}{}", i.address, i.text(), tag).unwrap();
                }
            }
            s
        }
    }
}

/// Gadgets of the full scan whose (start, terminal) pair the baseline did
/// not report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffReport {
    pub missed: Vec<Gadget>,
    /// Missed gadgets containing at least one instruction off the main path.
    pub missed_hep: usize,
    pub missed_multi_lcsaj: usize,
}

impl DiffReport {
    pub fn summary(&self) -> String {
        format!(
            "missed: {}\nmissed with hidden instructions: {}\nmissed spanning several LCSAJs: {}\n",
            self.missed.len(),
            self.missed_hep,
            self.missed_multi_lcsaj
        )
    }
}

pub fn diff_scans(galileo: &[Gadget], full: &[Gadget]) -> DiffReport {
    let seen: BTreeSet<(u64, u64)> = galileo.iter().map(Gadget::key).collect();
    let missed: Vec<Gadget> = full.iter().filter(|g| !seen.contains(&g.key())).cloned().collect();
    DiffReport {
        missed_hep: missed.iter().filter(|g| g.has_hep()).count(),
        missed_multi_lcsaj: missed.iter().filter(|g| g.kind == GadgetKind::MultiLcsaj).count(),
        missed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadgets::{compute_mep, MepSet};
    use crate::image::load_raw;
    use crate::isa::decode;

    fn ret_gadget() -> Gadget {
        Gadget::new(vec![decode(&[0x82, 0x80], 0x40).unwrap()], &MepSet::default())
    }

    #[test]
    fn empty_json() {
        assert_eq!(report(&[], Format::Json).trim(), "[]");
        assert_eq!(report(&[], Format::Text), "");
    }

    #[test]
    fn single_return_json() {
        let img = load_raw(&[0x82, 0x80], 0x40);
        let g = Gadget::new(vec![decode(&[0x82, 0x80], 0x40).unwrap()], &compute_mep(&img));
        let v: serde_json::Value = serde_json::from_str(&report(&[g], Format::Json)).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 1);
        assert_eq!(v[0]["lcsaj_count"], 1);
        assert_eq!(v[0]["kind"], "StraightLine");
        assert_eq!(v[0]["instructions"][0]["mnemonic"], "c.jr");
        assert_eq!(v[0]["instructions"][0]["hep"], false);
        let keys: Vec<_> = v[0].as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys.len(), 6);
    }

    #[test]
    fn text_uses_abi_names() {
        let t = report(&[ret_gadget()], Format::Text);
        assert!(t.contains("c.jr ra  [hep]"), "{t}");
    }

    #[test]
    fn identical_scans_have_empty_diff() {
        let g = vec![ret_gadget()];
        let d = diff_scans(&g, &g);
        assert!(d.missed.is_empty());
        assert!(d.summary().starts_with("missed: 0\n"));
    }
}
