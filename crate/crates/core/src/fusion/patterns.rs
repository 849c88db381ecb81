use serde::Serialize;

use super::IdiomKind;
use crate::decoder::{Instruction, OpClass, Opcode, Reg};
use crate::trace::Block;

/// Result of a successful [`match_at`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PatternMatch {
    /// The kind to record. A clear-upper-shift by exactly 32 is reported
    /// as [`IdiomKind::ClearUpperWord`].
    pub kind: IdiomKind,
    pub arity: usize,
    pub writebacks: u8,
}

/// Tests whether `kind` matches the instructions of `block` starting at `i`.
pub fn match_at(block: &Block, i: usize, kind: IdiomKind) -> Option<PatternMatch> {
    let window: Vec<Instruction> = block.items.get(i..)?.iter().take(kind.arity()).map(|w| w.instr).collect();
    match_instrs(&window, kind)
}

/// A non-zero integer destination.
fn dest(i: &Instruction) -> Option<Reg> {
    i.int_dest().filter(|r| !r.is_zero())
}

fn is(i: &Instruction, op: Opcode) -> bool {
    i.op == op
}

fn scaled_shift(i: &Instruction) -> bool {
    is(i, Opcode::Slli) && matches!(i.imm, Some(1..=3))
}

/// `add rd, rd, rs2` in either source order, with the other source distinct
/// from `rd` so that it still carries the pre-shift value.
fn accumulates_into(i: &Instruction, rd: Reg) -> bool {
    is(i, Opcode::Add) && i.rd == Some(rd) && ((i.rs1 == Some(rd)) != (i.rs2 == Some(rd)))
}

/// Integer load that overwrites its own base register.
fn load_into_base(i: &Instruction, rd: Reg) -> bool {
    i.class() == OpClass::Load && i.rd == Some(rd) && i.rs1 == Some(rd)
}

fn zero_offset(i: &Instruction) -> bool {
    i.imm == Some(0)
}

fn same_sources(a: &Instruction, b: &Instruction) -> bool {
    a.rs1 == b.rs1 && a.rs2 == b.rs2
}

fn reads(i: &Instruction, r: Reg) -> bool {
    i.rs1 == Some(r) || i.rs2 == Some(r)
}

fn one(kind: IdiomKind) -> PatternMatch {
    PatternMatch { kind, arity: kind.arity(), writebacks: 1 }
}

pub(crate) fn match_instrs(w: &[Instruction], kind: IdiomKind) -> Option<PatternMatch> {
    use IdiomKind::*;
    if w.len() < kind.arity() {
        return None;
    }
    let (a, b) = (&w[0], &w[1]);
    match kind {
        Lea => {
            let rd = dest(a)?;
            (scaled_shift(a) && accumulates_into(b, rd)).then_some(one(kind))
        }
        IndexedLoad => {
            let rd = dest(a)?;
            (is(a, Opcode::Add) && load_into_base(b, rd) && zero_offset(b)).then_some(one(kind))
        }
        IndexedLoadLong => {
            let c = &w[2];
            let rd = dest(a)?;
            (scaled_shift(a) && accumulates_into(b, rd) && load_into_base(c, rd) && zero_offset(c)).then_some(one(kind))
        }
        ClearUpperWord | ClearUpperShift => {
            let rd = dest(a)?;
            let widths: &[i64] = if kind == ClearUpperWord { &[32] } else { &[29, 30, 31, 32] };
            let shape = is(a, Opcode::Slli)
                && a.imm == Some(32)
                && is(b, Opcode::Srli)
                && b.rd == Some(rd)
                && b.rs1 == Some(rd)
                && widths.contains(&b.imm?);
            let recorded = if b.imm == Some(32) { ClearUpperWord } else { ClearUpperShift };
            shape.then_some(one(recorded))
        }
        LuiImmOp => {
            let rd = dest(a)?;
            (is(a, Opcode::Lui) && b.class() == OpClass::IntRegImm && b.rd == Some(rd) && b.rs1 == Some(rd))
                .then_some(one(kind))
        }
        LuiLoad | AuipcLoad => {
            let rd = dest(a)?;
            let upper = if kind == LuiLoad { Opcode::Lui } else { Opcode::Auipc };
            (is(a, upper) && load_into_base(b, rd)).then_some(one(kind))
        }
        AuipcJalr => {
            let rd = dest(a)?;
            let link = b.rd?;
            let ok =
                is(a, Opcode::Auipc) && is(b, Opcode::Jalr) && b.rs1 == Some(rd) && (link == rd || link == Reg::RA);
            ok.then(|| PatternMatch { kind, arity: 2, writebacks: if link == rd { 1 } else { 2 } })
        }
        MulhMul | DivRem => {
            let (hi, lo) = (dest(a)?, dest(b)?);
            let pair = match (a.op, b.op) {
                (Opcode::Mulh | Opcode::Mulhu | Opcode::Mulhsu, Opcode::Mul) => kind == MulhMul,
                (Opcode::Div, Opcode::Rem) | (Opcode::Divu, Opcode::Remu) => kind == DivRem,
                _ => false,
            };
            // The second instruction must still see the original sources.
            (pair && same_sources(a, b) && hi != lo && !reads(a, hi)).then_some(PatternMatch {
                kind,
                arity: 2,
                writebacks: 2,
            })
        }
        LoadPair => {
            let (r1, r2) = (dest(a)?, dest(b)?);
            let size = i64::from(a.op.access_size()?);
            let ok = a.class() == OpClass::Load
                && b.class() == OpClass::Load
                && b.op.access_size() == a.op.access_size()
                && a.rs1 == b.rs1
                && (b.imm? - a.imm?).abs() == size
                && r1 != r2
                && a.rs1 != Some(r1);
            ok.then_some(PatternMatch { kind, arity: 2, writebacks: 2 })
        }
        StorePair => {
            let size = i64::from(a.op.access_size()?);
            let ok = a.class() == OpClass::Store
                && b.class() == OpClass::Store
                && b.op.access_size() == a.op.access_size()
                && a.rs1 == b.rs1
                && (b.imm? - a.imm?).abs() == size;
            ok.then_some(PatternMatch { kind, arity: 2, writebacks: 0 })
        }
        PostIndexedLoad | PostIndexedStore => {
            let base = a.rs1.filter(|r| !r.is_zero())?;
            let bump = is(b, Opcode::Addi) && b.rd == Some(base) && b.rs1 == Some(base);
            if kind == PostIndexedLoad {
                let rd = dest(a)?;
                (a.class() == OpClass::Load && bump && rd != base).then_some(PatternMatch {
                    kind,
                    arity: 2,
                    writebacks: 2,
                })
            } else {
                (a.class() == OpClass::Store && bump).then_some(PatternMatch { kind, arity: 2, writebacks: 1 })
            }
        }
    }
}
