//! Command-line front end. [`run`] takes the argument list and output
//! streams so it can be driven from tests as well as from `main`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::gadgets::{self, compute_mep, diff_scans, enumerate_gadgets, galileo_scan, Gadget, Limits};
use crate::image::{load_elf, load_raw, MemoryImage};
use crate::isa::Operand;
use crate::overlapforge::{emit_c, synthesize, verify, HiddenSpec, Policy, SynthError, Verdict};
use crate::pathgraph::{build, merge_blocks, to_dot};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_UNSAT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "rvgadget", version, about = "Find and build hidden ROP gadgets in RISC-V code")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report every gadget reachable through the superset graph.
    Scan {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        limits: LimitArgs,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
        /// Also report gadgets whose path is a suffix of another gadget.
        #[arg(long)]
        all_suffixes: bool,
    },
    /// Backward scan from returns, single straight-line sequences only.
    Galileo {
        #[command(flatten)]
        input: InputArgs,
        /// Longest gadget considered, in bytes, return included.
        #[arg(long, default_value_t = gadgets::DEFAULT_WINDOW, value_parser = parse_window)]
        window: u64,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
        /// Report the gadgets the full scan finds and this one misses.
        #[arg(long)]
        diff: bool,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Block graph in Graphviz form; hidden-only blocks are filled grey.
    Graph {
        #[command(flatten)]
        input: InputArgs,
        /// Keep nodes that reach no indirect jump.
        #[arg(long)]
        unpruned: bool,
        #[arg(long, value_enum, default_value_t = OutputFormat::Dot)]
        format: OutputFormat,
    },
    /// Solve a hidden-sequence spec for carrier instructions.
    Synth {
        /// JSON spec file.
        spec: PathBuf,
        /// Print a C stub instead of the plan.
        #[arg(long)]
        emit_c: bool,
        /// Function name used by --emit-c.
        #[arg(long, default_value = "gadget")]
        name: String,
    },
    /// List every instruction decodable at an even offset.
    Decode {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
}

#[derive(Debug, Args)]
struct InputArgs {
    /// ELF file, or a flat binary with --raw.
    input: PathBuf,
    /// Treat the input as raw bytes loaded at --base.
    #[arg(long, requires = "base")]
    raw: bool,
    /// Load address for --raw, in hex.
    #[arg(long, value_parser = parse_hex, requires = "raw")]
    base: Option<u64>,
}

#[derive(Debug, Args)]
struct LimitArgs {
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..))]
    max_insns: u64,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    max_lcsajs: u64,
}

impl LimitArgs {
    fn limits(&self) -> Limits {
        Limits { max_instructions: self.max_insns as usize, max_lcsajs: self.max_lcsajs as usize }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Text,
    Dot,
}

fn parse_hex(s: &str) -> Result<u64, String> {
    let digits = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
    u64::from_str_radix(digits, 16).map_err(|e| format!("`{s}` is not a hex address: {e}"))
}

fn parse_window(s: &str) -> Result<u64, String> {
    match s.parse::<u64>() {
        Ok(w) if w >= 2 && w % 2 == 0 => Ok(w),
        _ => Err(format!("`{s}` is not an even number of bytes >= 2")),
    }
}

/// Spec file contents: the hidden sequence plus an optional carrier policy.
#[derive(Debug, Serialize, Deserialize)]
pub struct SpecFile {
    #[serde(flatten)]
    pub spec: HiddenSpec,
    #[serde(default)]
    pub policy: Option<Policy>,
}

struct Failure(i32, String);

fn load(input: &InputArgs) -> Result<MemoryImage, Failure> {
    let bytes = std::fs::read(&input.input)
        .map_err(|e| Failure(EXIT_INPUT, format!("cannot read {}: {e}", input.input.display())))?;
    match input.base {
        Some(base) if input.raw => Ok(load_raw(&bytes, base)),
        _ => load_elf(&bytes).map_err(|e| Failure(EXIT_INPUT, format!("{}: {e}", input.input.display()))),
    }
}

/// Full pipeline: build, prune, merge, main path, enumeration.
pub fn scan_image(image: &MemoryImage, limits: Limits, all_suffixes: bool) -> gadgets::Enumeration {
    let g = merge_blocks(&build(image).prune_coreachable());
    let mep = compute_mep(image);
    if all_suffixes {
        gadgets::enumerate_all_suffixes(&g, &mep, limits)
    } else {
        enumerate_gadgets(&g, &mep, limits)
    }
}

/// DOT text of the (optionally unpruned) block graph with hidden shading.
pub fn graph_dot(image: &MemoryImage, pruned: bool) -> String {
    let g = build(image);
    let g = if pruned { g.prune_coreachable() } else { g };
    to_dot(&merge_blocks(&g), compute_mep(image).addresses())
}

fn report(gadgets: &[Gadget], format: OutputFormat) -> Result<String, Failure> {
    match format {
        OutputFormat::Json => Ok(gadgets::report(gadgets, gadgets::Format::Json)),
        OutputFormat::Text => Ok(gadgets::report(gadgets, gadgets::Format::Text)),
        OutputFormat::Dot => Err(Failure(EXIT_USAGE, "--format dot is only available for graphs".into())),
    }
}

#[derive(Serialize)]
struct JsonDiff {
    missed: usize,
    missed_hep: usize,
    missed_multi_lcsaj: usize,
    gadgets: serde_json::Value,
}

#[derive(Serialize)]
struct JsonDecoded<'a> {
    address: u64,
    bytes: String,
    mnemonic: &'a str,
    operands: &'a [Operand],
    mep: bool,
    poi: bool,
}

fn execute(command: Command, err: &mut dyn Write) -> Result<String, Failure> {
    match command {
        Command::Scan { input, limits, format, all_suffixes } => {
            let image = load(&input)?;
            if format == OutputFormat::Dot {
                return Ok(graph_dot(&image, true));
            }
            let e = scan_image(&image, limits.limits(), all_suffixes);
            if e.truncated {
                let _ = writeln!(err, "warning: some paths were cut short by the limits");
            }
            report(&e.gadgets, format)
        }
        Command::Galileo { input, window, format, diff, limits } => {
            let image = load(&input)?;
            let base = galileo_scan(&image, window);
            if !diff {
                return report(&base, format);
            }
            let full = scan_image(&image, limits.limits(), false);
            let d = diff_scans(&base, &full.gadgets);
            match format {
                OutputFormat::Json => {
                    let gadgets = serde_json::from_str(&report(&d.missed, format)?).expect("report is JSON");
                    let j = JsonDiff {
                        missed: d.missed.len(),
                        missed_hep: d.missed_hep,
                        missed_multi_lcsaj: d.missed_multi_lcsaj,
                        gadgets,
                    };
                    Ok(serde_json::to_string_pretty(&j).expect("plain data serializes") + "\n")
                }
                _ => {
                    let body = report(&d.missed, format)?;
                    Ok(if body.is_empty() { d.summary() } else { format!("{}\n{body}", d.summary()) })
                }
            }
        }
        Command::Graph { input, unpruned, format } => {
            if format != OutputFormat::Dot {
                return Err(Failure(EXIT_USAGE, "graph output is always --format dot".into()));
            }
            Ok(graph_dot(&load(&input)?, !unpruned))
        }
        Command::Synth { spec, emit_c: want_c, name } => {
            let text = std::fs::read_to_string(&spec)
                .map_err(|e| Failure(EXIT_INPUT, format!("cannot read {}: {e}", spec.display())))?;
            let file: SpecFile = serde_json::from_str(&text)
                .map_err(|e| Failure(EXIT_INPUT, format!("{}: spec parse error: {e}", spec.display())))?;
            let policy = file.policy.unwrap_or_default();
            let plan = synthesize(&file.spec, &policy).map_err(|e| match e {
                SynthError::Unsat { .. } => Failure(EXIT_UNSAT, e.to_string()),
                _ => Failure(EXIT_INPUT, e.to_string()),
            })?;
            if let Verdict::Fail { position, reason } = verify(&plan) {
                return Err(Failure(EXIT_INPUT, format!("plan failed verification at {position}: {reason}")));
            }
            if want_c {
                emit_c(&plan, &name).map_err(|e| Failure(EXIT_INPUT, e.to_string()))
            } else {
                Ok(plan.to_json())
            }
        }
        Command::Decode { input, format } => {
            let image = load(&input)?;
            let g = build(&image);
            let mep = compute_mep(&image);
            match format {
                OutputFormat::Text => {
                    let mut s = String::new();
                    for (a, i) in g.nodes() {
                        let hex: String = i.bytes().iter().map(|b| format!("{b:02x}")).collect();
                        let side = if mep.contains(*a) { "mep" } else { "hep" };
                        let poi = if g.poi().contains(a) { "  poi" } else { "" };
                        s.push_str(&format!("{a:#010x}  {hex:<8}  {:<28}  {side}{poi}\n", i.text()));
                    }
                    Ok(s)
                }
                OutputFormat::Json => {
                    let items: Vec<JsonDecoded<'_>> = g
                        .nodes()
                        .iter()
                        .map(|(a, i)| JsonDecoded {
                            address: *a,
                            bytes: i.bytes().iter().map(|b| format!("{b:02x}")).collect(),
                            mnemonic: i.mnemonic,
                            operands: &i.operands,
                            mep: mep.contains(*a),
                            poi: g.poi().contains(a),
                        })
                        .collect();
                    Ok(serde_json::to_string_pretty(&items).expect("plain data serializes") + "\n")
                }
                OutputFormat::Dot => Err(Failure(EXIT_USAGE, "--format dot is only available for graphs".into())),
            }
        }
    }
}

/// Parse `args` (program name first) and run the command. Reports go to
/// `out`, diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let help = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let text = e.render().to_string();
            if help {
                let _ = out.write_all(text.as_bytes());
                return EXIT_OK;
            }
            let _ = err.write_all(text.as_bytes());
            return EXIT_USAGE;
        }
    };
    match execute(cli.command, err) {
        Ok(text) => {
            let _ = out.write_all(text.as_bytes());
            EXIT_OK
        }
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}
