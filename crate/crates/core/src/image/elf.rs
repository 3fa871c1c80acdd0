//! Minimal ELF64 little-endian RISC-V loader: program headers for the
//! memory layout, `.symtab` (or `.dynsym`) for function symbols.

use super::{MemoryImage, Segment, Symbol};

const EM_RISCV: u16 = 243;
const PT_LOAD: u32 = 1;
const PF_X: u32 = 1;
const SHT_SYMTAB: u32 = 2;
const SHT_DYNSYM: u32 = 11;
const STT_FUNC: u8 = 2;
const EHDR_SIZE: usize = 64;
const PHDR_SIZE: usize = 56;
const SHDR_SIZE: usize = 64;
const SYM_SIZE: usize = 24;
/// Upper bound on zero-fill past the file image of one segment.
const MAX_BSS: u64 = 64 << 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ElfError {
    #[error("bad ELF magic at offset {offset:#x}")]
    BadMagic { offset: usize },
    #[error("not an ELF64 file (class byte {class} at offset {offset:#x})")]
    WrongClass { offset: usize, class: u8 },
    #[error("not little-endian (data byte {data} at offset {offset:#x})")]
    WrongEndianness { offset: usize, data: u8 },
    #[error("not a RISC-V file (e_machine {machine} at offset {offset:#x})")]
    WrongMachine { offset: usize, machine: u16 },
    #[error("truncated ELF header: need {needed} bytes at offset {offset:#x}")]
    TruncatedHeader { offset: usize, needed: usize },
    #[error("malformed program header at offset {offset:#x}: {reason}")]
    MalformedProgramHeader { offset: usize, reason: &'static str },
    #[error("loadable segments overlap (program header at offset {offset:#x})")]
    OverlappingSegments { offset: usize },
}

struct Reader<'a>(&'a [u8]);

impl Reader<'_> {
    fn u8(&self, at: usize) -> Option<u8> {
        self.0.get(at).copied()
    }
    fn u16(&self, at: usize) -> Option<u16> {
        Some(u16::from_le_bytes(self.0.get(at..at.checked_add(2)?)?.try_into().ok()?))
    }
    fn u32(&self, at: usize) -> Option<u32> {
        Some(u32::from_le_bytes(self.0.get(at..at.checked_add(4)?)?.try_into().ok()?))
    }
    fn u64(&self, at: usize) -> Option<u64> {
        Some(u64::from_le_bytes(self.0.get(at..at.checked_add(8)?)?.try_into().ok()?))
    }
    fn slice(&self, offset: u64, len: u64) -> Option<&[u8]> {
        let start = usize::try_from(offset).ok()?;
        let end = start.checked_add(usize::try_from(len).ok()?)?;
        self.0.get(start..end)
    }
}

pub fn load_elf(bytes: &[u8]) -> Result<MemoryImage, ElfError> {
    let r = Reader(bytes);
    const MAGIC: [u8; 4] = [0x7f, b'E', b'L', b'F'];
    let prefix = bytes.len().min(4);
    if bytes[..prefix] != MAGIC[..prefix] {
        let offset = (0..prefix).find(|&i| bytes[i] != MAGIC[i]).unwrap_or(0);
        return Err(ElfError::BadMagic { offset });
    }
    let truncated = |needed| ElfError::TruncatedHeader { offset: bytes.len(), needed };
    let class = r.u8(4).ok_or(truncated(EHDR_SIZE))?;
    if class != 2 {
        return Err(ElfError::WrongClass { offset: 4, class });
    }
    let data = r.u8(5).ok_or(truncated(EHDR_SIZE))?;
    if data != 1 {
        return Err(ElfError::WrongEndianness { offset: 5, data });
    }
    if bytes.len() < EHDR_SIZE {
        return Err(truncated(EHDR_SIZE));
    }
    let machine = r.u16(0x12).unwrap();
    if machine != EM_RISCV {
        return Err(ElfError::WrongMachine { offset: 0x12, machine });
    }
    let entry = r.u64(0x18).unwrap();
    let phoff = r.u64(0x20).unwrap();
    let shoff = r.u64(0x28).unwrap();
    let phentsize = r.u16(0x36).unwrap() as usize;
    let phnum = r.u16(0x38).unwrap() as usize;

    let segments = program_headers(&r, phoff, phentsize, phnum)?;
    let symbols = symbols(&r, shoff).unwrap_or_default();
    let entry = (entry != 0).then_some(entry);
    MemoryImage::new(segments, entry, symbols).ok_or(ElfError::OverlappingSegments { offset: phoff as usize })
}

fn program_headers(r: &Reader<'_>, phoff: u64, entsize: usize, num: usize) -> Result<Vec<Segment>, ElfError> {
    let malformed = |offset: usize, reason| ElfError::MalformedProgramHeader { offset, reason };
    if num == 0 {
        return Ok(Vec::new());
    }
    if entsize != PHDR_SIZE {
        return Err(malformed(0x36, "unexpected e_phentsize"));
    }
    let table = usize::try_from(phoff).map_err(|_| malformed(0x20, "e_phoff out of range"))?;
    if r.slice(phoff, (num * PHDR_SIZE) as u64).is_none() {
        return Err(malformed(table, "program header table past end of file"));
    }
    let mut out: Vec<(usize, Segment)> = Vec::new();
    for i in 0..num {
        let at = table + i * PHDR_SIZE;
        if r.u32(at).unwrap() != PT_LOAD {
            continue;
        }
        let flags = r.u32(at + 4).unwrap();
        let offset = r.u64(at + 8).unwrap();
        let vaddr = r.u64(at + 16).unwrap();
        let filesz = r.u64(at + 32).unwrap();
        let memsz = r.u64(at + 40).unwrap();
        if memsz < filesz {
            return Err(malformed(at, "p_memsz smaller than p_filesz"));
        }
        if memsz - filesz > MAX_BSS {
            return Err(malformed(at, "p_memsz too large"));
        }
        if vaddr.checked_add(memsz).is_none() {
            return Err(malformed(at, "segment wraps the address space"));
        }
        let mut data = r.slice(offset, filesz).ok_or(malformed(at, "segment data past end of file"))?.to_vec();
        data.resize(memsz as usize, 0);
        let seg = Segment { base: vaddr, bytes: data, executable: flags & PF_X != 0 };
        if let Some((_, prev)) = out.iter().find(|(_, s)| s.base < seg.end() && seg.base < s.end()) {
            if !prev.bytes.is_empty() && !seg.bytes.is_empty() {
                return Err(ElfError::OverlappingSegments { offset: at });
            }
        }
        out.push((at, seg));
    }
    Ok(out.into_iter().map(|(_, s)| s).collect())
}

/// Defined function symbols. Any inconsistency in the section table yields
/// `None`; symbols are optional.
fn symbols(r: &Reader<'_>, shoff: u64) -> Option<Vec<Symbol>> {
    if shoff == 0 {
        return Some(Vec::new());
    }
    let shentsize = r.u16(0x3a)? as usize;
    let shnum = r.u16(0x3c)? as usize;
    if shentsize != SHDR_SIZE {
        return None;
    }
    let section = |i: usize| -> Option<(u32, u64, u64, u32)> {
        let at = usize::try_from(shoff).ok()?.checked_add(i.checked_mul(SHDR_SIZE)?)?;
        let f = |o: usize| at.checked_add(o);
        Some((r.u32(f(4)?)?, r.u64(f(24)?)?, r.u64(f(32)?)?, r.u32(f(40)?)?))
    };
    let headers: Vec<_> = (0..shnum).map(section).collect::<Option<_>>()?;
    let table = headers.iter().find(|h| h.0 == SHT_SYMTAB).or_else(|| headers.iter().find(|h| h.0 == SHT_DYNSYM))?;
    let (_, sym_off, sym_size, link) = *table;
    let (_, str_off, str_size, _) = *headers.get(link as usize)?;
    let strtab = r.slice(str_off, str_size)?;
    let syms = r.slice(sym_off, sym_size)?;
    let mut out = Vec::new();
    for raw in syms.chunks_exact(SYM_SIZE) {
        let e = Reader(raw);
        let name_off = e.u32(0)? as usize;
        let info = e.u8(4)?;
        let shndx = e.u16(6)?;
        let value = e.u64(8)?;
        let size = e.u64(16)?;
        if info & 0xf != STT_FUNC || shndx == 0 || value == 0 {
            continue;
        }
        let name_bytes = strtab.get(name_off..)?;
        let end = name_bytes.iter().position(|&b| b == 0)?;
        let name = String::from_utf8_lossy(&name_bytes[..end]).into_owned();
        out.push(Symbol { name, address: value, size });
    }
    out.sort_by(|a, b| (a.address, &a.name).cmp(&(b.address, &b.name)));
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> Vec<u8> {
        let mut h = vec![0u8; EHDR_SIZE];
        h[..4].copy_from_slice(&[0x7f, b'E', b'L', b'F']);
        h[4] = 2;
        h[5] = 1;
        h[6] = 1;
        h[0x12..0x14].copy_from_slice(&EM_RISCV.to_le_bytes());
        h
    }

    #[test]
    fn empty_input_is_truncated() {
        assert!(matches!(load_elf(&[]), Err(ElfError::TruncatedHeader { .. })));
        assert!(matches!(load_elf(b"\x7fEL"), Err(ElfError::TruncatedHeader { .. })));
    }

    #[test]
    fn bad_magic() {
        assert_eq!(load_elf(b"MZ\x90\x00"), Err(ElfError::BadMagic { offset: 0 }));
        assert_eq!(load_elf(b"\x7fELG"), Err(ElfError::BadMagic { offset: 3 }));
    }

    #[test]
    fn wrong_class_endianness_machine() {
        assert_eq!(load_elf(b"\x7fELF\x01"), Err(ElfError::WrongClass { offset: 4, class: 1 }));
        let mut h = header();
        h[5] = 2;
        assert_eq!(load_elf(&h), Err(ElfError::WrongEndianness { offset: 5, data: 2 }));
        let mut h = header();
        h[0x12] = 62;
        h[0x13] = 0;
        assert_eq!(load_elf(&h), Err(ElfError::WrongMachine { offset: 0x12, machine: 62 }));
        assert!(matches!(load_elf(&header()[..40]), Err(ElfError::TruncatedHeader { .. })));
    }

    #[test]
    fn header_without_segments() {
        let img = load_elf(&header()).unwrap();
        assert!(img.segments().is_empty());
        assert_eq!(img.entry(), None);
    }

    #[test]
    fn phdr_table_past_end() {
        let mut h = header();
        h[0x20..0x28].copy_from_slice(&64u64.to_le_bytes());
        h[0x36..0x38].copy_from_slice(&56u16.to_le_bytes());
        h[0x38..0x3a].copy_from_slice(&1u16.to_le_bytes());
        assert!(matches!(load_elf(&h), Err(ElfError::MalformedProgramHeader { offset: 64, .. })));
    }
}
