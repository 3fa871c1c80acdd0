//! Program bytes and metadata in a uniform shape, whatever the container.

mod elf;

pub use elf::{load_elf, ElfError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub base: u64,
    pub bytes: Vec<u8>,
    pub executable: bool,
}

impl Segment {
    pub fn end(&self) -> u64 {
        self.base + self.bytes.len() as u64
    }

    pub fn contains(&self, address: u64) -> bool {
        address >= self.base && address < self.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Symbol {
    pub name: String,
    pub address: u64,
    pub size: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("address {0:#x} is not mapped by any segment")]
pub struct Unmapped(pub u64);

/// Loaded program: segments sorted by base address, an optional entry
/// point and an optional symbol list.
///
/// Only executable segments are ever scanned. Executable segments never
/// overlap; the entry point, when present, lies in an executable segment;
/// and every symbol lies in some segment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MemoryImage {
    segments: Vec<Segment>,
    entry: Option<u64>,
    symbols: Vec<Symbol>,
}

impl MemoryImage {
    /// Build from parts, dropping anything that would break the invariants
    /// (an entry outside executable code, symbols outside all segments).
    /// Returns `None` when executable segments overlap.
    pub fn new(mut segments: Vec<Segment>, entry: Option<u64>, symbols: Vec<Symbol>) -> Option<Self> {
        segments.sort_by_key(|s| (s.base, !s.executable));
        let exec: Vec<&Segment> = segments.iter().filter(|s| s.executable).collect();
        if exec.windows(2).any(|w| w[0].end() > w[1].base) {
            return None;
        }
        let mut image = MemoryImage { segments, entry: None, symbols: Vec::new() };
        image.entry = entry.filter(|&e| image.executable_segment(e).is_some());
        image.symbols =
            symbols.into_iter().filter(|s| image.segments.iter().any(|seg| seg.contains(s.address))).collect();
        Some(image)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn executable_segments(&self) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(|s| s.executable)
    }

    pub fn entry(&self) -> Option<u64> {
        self.entry
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    /// Add a symbol; ignored when the address is unmapped.
    pub fn with_symbol(mut self, name: &str, address: u64, size: u64) -> Self {
        if self.segments.iter().any(|s| s.contains(address)) {
            self.symbols.push(Symbol { name: name.to_string(), address, size });
        }
        self
    }

    pub fn executable_segment(&self, address: u64) -> Option<&Segment> {
        self.executable_segments().find(|s| s.contains(address))
    }

    pub fn read(&self, address: u64) -> Result<u8, Unmapped> {
        self.segments
            .iter()
            .find(|s| s.contains(address))
            .map(|s| s.bytes[(address - s.base) as usize])
            .ok_or(Unmapped(address))
    }

    /// Bytes from `address` to the end of its executable segment.
    pub fn code_at(&self, address: u64) -> Option<&[u8]> {
        self.executable_segment(address).map(|s| &s.bytes[(address - s.base) as usize..])
    }

    pub fn symbol_at(&self, address: u64) -> Option<&Symbol> {
        self.symbols.iter().find(|s| s.address == address)
    }
}

/// A single executable segment at `base` with no entry point or symbols.
pub fn load_raw(bytes: &[u8], base: u64) -> MemoryImage {
    MemoryImage {
        segments: vec![Segment { base, bytes: bytes.to_vec(), executable: true }],
        entry: None,
        symbols: Vec::new(),
    }
}
