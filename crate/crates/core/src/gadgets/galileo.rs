use crate::image::MemoryImage;
use crate::isa::{FlowClass, Instr};

use super::{compute_mep, decode_at, Gadget};

pub const DEFAULT_WINDOW: u64 = 64;

/// Backward scan from every return: each start address within `window`
/// bytes of the end of the return whose linear decode consists of plain
/// fallthrough instructions landing exactly on the return yields one gadget.
pub fn galileo_scan(image: &MemoryImage, window: u64) -> Vec<Gadget> {
    let mep = compute_mep(image);
    let mut out = Vec::new();
    for seg in image.executable_segments() {
        let first = seg.base + (seg.base & 1);
        for ret in (first..seg.end()).step_by(2).filter_map(|a| decode_at(image, a)).filter(Instr::is_return) {
            let lowest = ret.end().saturating_sub(window).max(first);
            let mut start = ret.address;
            while start >= lowest {
                if let Some(seq) = straight_line(image, start, &ret) {
                    out.push(Gadget::new(seq, &mep));
                }
                if start < 2 {
                    break;
                }
                start -= 2;
            }
        }
    }
    out.sort_by_key(|g| (g.terminal(), g.start()));
    out
}

fn straight_line(image: &MemoryImage, start: u64, ret: &Instr) -> Option<Vec<Instr>> {
    let mut seq = Vec::new();
    let mut a = start;
    while a < ret.address {
        let i = decode_at(image, a)?;
        if i.flow != FlowClass::Fallthrough {
            return None;
        }
        a = i.end();
        seq.push(i);
    }
    (a == ret.address).then(|| {
        seq.push(ret.clone());
        seq
    })
}
