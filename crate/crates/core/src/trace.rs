//! Weighted instruction streams and their straight-line blocks.
//!
//! Two text formats are accepted. The histogram format has one executed
//! instruction per line:
//!
//! ```text
//! # pc       encoding  count
//! 80000000   00000013  5
//! 80000004   0001      5
//! ```
//!
//! The encoding width (4 or 8 hex digits) must match the RVC length rule.
//! The assembly format is meant for hand-written listings:
//!
//! ```text
//! @base 1000
//! add a4, a4, a5      ; count=10
//! 35a60: slli a5, a5, 0x20
//! ```
//!
//! `@base` starts automatic layout; explicit `PC:` prefixes move the cursor.
//! Counts default to 1. `#` and `//` start comments.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::Serialize;
use thiserror::Error;

use crate::decoder::{assemble_at, decode16, decode32, instr_length, AsmError, Instruction, LengthError};

/// One static instruction together with how often it executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WeightedInstruction {
    pub pc: u64,
    pub instr: Instruction,
    pub count: u64,
}

impl WeightedInstruction {
    pub fn next_pc(&self) -> u64 {
        self.pc + self.instr.len as u64
    }
}

/// A pc-contiguous run with control flow only at its end.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    pub start_pc: u64,
    pub items: Vec<WeightedInstruction>,
}

impl Block {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn instrs(&self) -> impl Iterator<Item = &Instruction> + '_ {
        self.items.iter().map(|w| &w.instr)
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: expected `PC_HEX ENC_HEX COUNT`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: bad {field} `{text}`")]
    BadField { line: usize, field: &'static str, text: String },
    #[error("line {line}: pc {pc:#x} is not 2-byte aligned")]
    Misaligned { line: usize, pc: u64 },
    #[error("line {line}: duplicate pc {pc:#x}")]
    DuplicatePc { line: usize, pc: u64 },
    #[error("line {line}: pc {pc:#x} overlaps the preceding instruction")]
    Overlap { line: usize, pc: u64 },
    #[error("line {line}: {digits}-digit encoding {text} does not match its {len}-byte length")]
    LengthMismatch { line: usize, digits: usize, len: u8, text: String },
    #[error("line {line}: {source}")]
    Length { line: usize, source: LengthError },
    #[error("line {line}: count must be at least 1")]
    ZeroCount { line: usize },
    #[error("line {line}: {source}")]
    Asm { line: usize, source: AsmError },
    #[error("line {line}: no pc given and no `@base` directive seen")]
    NoPc { line: usize },
    #[error("read failed: {0}")]
    Io(#[from] std::io::Error),
}

fn strip_comment(line: &str) -> &str {
    let cut = [line.find('#'), line.find("//")].into_iter().flatten().min();
    cut.map_or(line, |c| &line[..c]).trim()
}

fn parse_pc(text: &str, line: usize) -> Result<u64, TraceError> {
    let pc =
        u64::from_str_radix(text, 16).map_err(|_| TraceError::BadField { line, field: "pc", text: text.into() })?;
    if pc % 2 != 0 {
        return Err(TraceError::Misaligned { line, pc });
    }
    Ok(pc)
}

fn parse_count(text: &str, line: usize) -> Result<u64, TraceError> {
    let count: u64 = text.parse().map_err(|_| TraceError::BadField { line, field: "count", text: text.into() })?;
    if count == 0 {
        return Err(TraceError::ZeroCount { line });
    }
    Ok(count)
}

fn insert(
    map: &mut BTreeMap<u64, WeightedInstruction>,
    item: WeightedInstruction,
    line: usize,
) -> Result<(), TraceError> {
    if map.contains_key(&item.pc) {
        return Err(TraceError::DuplicatePc { line, pc: item.pc });
    }
    let overlaps_prev = map.range(..item.pc).next_back().is_some_and(|(_, p)| p.next_pc() > item.pc);
    let overlaps_next = map.range(item.pc..).next().is_some_and(|(pc, _)| *pc < item.next_pc());
    if overlaps_prev || overlaps_next {
        return Err(TraceError::Overlap { line, pc: item.pc });
    }
    map.insert(item.pc, item);
    Ok(())
}

/// Parses the `PC_HEX ENC_HEX COUNT` histogram format.
pub fn parse_trace<R: BufRead>(reader: R) -> Result<Vec<WeightedInstruction>, TraceError> {
    let mut items = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let body = strip_comment(&line);
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        let [pc, enc, count] = fields[..] else {
            return Err(TraceError::Malformed { line: line_no, text: body.into() });
        };
        let pc = parse_pc(pc, line_no)?;
        let raw = u32::from_str_radix(enc, 16)
            .ok()
            .filter(|_| enc.len() == 4 || enc.len() == 8)
            .ok_or_else(|| TraceError::BadField { line: line_no, field: "encoding", text: enc.into() })?;
        let len = instr_length(raw as u16).map_err(|source| TraceError::Length { line: line_no, source })?;
        if enc.len() != 2 * len as usize {
            return Err(TraceError::LengthMismatch { line: line_no, digits: enc.len(), len, text: enc.into() });
        }
        let instr = if len == 2 { decode16(raw as u16) } else { decode32(raw) };
        let count = parse_count(count, line_no)?;
        insert(&mut items, WeightedInstruction { pc, instr, count }, line_no)?;
    }
    Ok(items.into_values().collect())
}

/// Parses the assembly listing format.
pub fn parse_asm_trace<R: BufRead>(reader: R) -> Result<Vec<WeightedInstruction>, TraceError> {
    let mut items = BTreeMap::new();
    let mut cursor: Option<u64> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let (stmt, annotation) = match line.split_once(';') {
            Some((s, a)) => (s, Some(a)),
            None => (line.as_str(), None),
        };
        let mut body = strip_comment(stmt);
        if body.is_empty() {
            continue;
        }
        if let Some(base) = body.strip_prefix("@base") {
            cursor = Some(parse_pc(base.trim().trim_start_matches("0x"), line_no)?);
            continue;
        }
        if let Some((pc, rest)) = body.split_once(':') {
            cursor = Some(parse_pc(pc.trim().trim_start_matches("0x"), line_no)?);
            body = rest.trim();
        }
        let pc = cursor.ok_or(TraceError::NoPc { line: line_no })?;
        let count = match annotation.map(strip_comment) {
            Some(a) if !a.is_empty() => {
                let value = a
                    .strip_prefix("count")
                    .and_then(|r| r.trim_start().strip_prefix('='))
                    .ok_or_else(|| TraceError::BadField { line: line_no, field: "annotation", text: a.into() })?;
                parse_count(value.trim(), line_no)?
            }
            _ => 1,
        };
        let instr = assemble_at(body, pc).map_err(|source| TraceError::Asm { line: line_no, source })?;
        let item = WeightedInstruction { pc, instr, count };
        cursor = Some(item.next_pc());
        insert(&mut items, item, line_no)?;
    }
    Ok(items.into_values().collect())
}

/// Splits pc-sorted items into blocks: a block ends after any control-flow
/// instruction and wherever the next pc is not contiguous.
pub fn segment_blocks(items: &[WeightedInstruction]) -> Vec<Block> {
    let mut blocks = Vec::new();
    let mut current: Vec<WeightedInstruction> = Vec::new();
    for item in items {
        if let Some(last) = current.last() {
            if last.next_pc() != item.pc {
                blocks.push(Block { start_pc: current[0].pc, items: std::mem::take(&mut current) });
            }
        }
        current.push(*item);
        if item.instr.op.is_control_flow() {
            blocks.push(Block { start_pc: current[0].pc, items: std::mem::take(&mut current) });
        }
    }
    if !current.is_empty() {
        blocks.push(Block { start_pc: current[0].pc, items: current });
    }
    blocks
}
