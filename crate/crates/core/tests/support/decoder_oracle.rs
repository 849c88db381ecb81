//! Independent reading of the clang/capstone decoder transcript.
//!
//! Expected fields come from parsing the assembler source text (and the
//! capstone rendering where it is not an alias) with a parser that shares
//! nothing with the crate's own assembler. Compressed mnemonics are expanded
//! with the base-ISA equivalences from the C-extension mapping table.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::Path;

use rvfuse::decoder::{decode, Instruction};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fields {
    pub op: String,
    pub rd: Option<u8>,
    pub rs1: Option<u8>,
    pub rs2: Option<u8>,
    pub imm: Option<i64>,
}

#[derive(Debug, Default)]
pub struct CorpusSummary {
    pub total: usize,
    pub compressed: usize,
    pub capstone_checked: usize,
    pub mismatches: Vec<String>,
    pub opcodes_seen: BTreeSet<String>,
}

const INT: [&str; 32] = [
    "zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2", "s0", "s1", "a0", "a1", "a2", "a3", "a4", "a5", "a6", "a7", "s2",
    "s3", "s4", "s5", "s6", "s7", "s8", "s9", "s10", "s11", "t3", "t4", "t5", "t6",
];
const FP: [&str; 32] = [
    "ft0", "ft1", "ft2", "ft3", "ft4", "ft5", "ft6", "ft7", "fs0", "fs1", "fa0", "fa1", "fa2", "fa3", "fa4", "fa5",
    "fa6", "fa7", "fs2", "fs3", "fs4", "fs5", "fs6", "fs7", "fs8", "fs9", "fs10", "fs11", "ft8", "ft9", "ft10", "ft11",
];

const R_OPS: &[&str] = &[
    "add", "sub", "sll", "slt", "sltu", "xor", "srl", "sra", "or", "and", "addw", "subw", "sllw", "srlw", "sraw",
    "mul", "mulh", "mulhsu", "mulhu", "mulw", "div", "divu", "rem", "remu", "divw", "divuw", "remw", "remuw",
];
const I_OPS: &[&str] =
    &["addi", "slti", "sltiu", "xori", "ori", "andi", "addiw", "slli", "srli", "srai", "slliw", "srliw", "sraiw"];
const LOADS: &[&str] = &["lb", "lh", "lw", "ld", "lbu", "lhu", "lwu", "flw", "fld", "jalr"];
const STORES: &[&str] = &["sb", "sh", "sw", "sd", "fsw", "fsd"];
const BRANCHES: &[&str] = &["beq", "bne", "blt", "bge", "bltu", "bgeu"];

fn reg(s: &str) -> u8 {
    let s = s.trim();
    INT.iter()
        .position(|n| *n == s)
        .or_else(|| FP.iter().position(|n| *n == s))
        .unwrap_or_else(|| panic!("unknown register {s}")) as u8
}

fn num(s: &str) -> i64 {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let v = match body.strip_prefix("0x") {
        Some(h) => i64::from_str_radix(h, 16).unwrap(),
        None => body.parse().unwrap(),
    };
    if neg {
        -v
    } else {
        v
    }
}

fn mem(s: &str) -> (i64, u8) {
    let (off, rest) = s.split_once('(').unwrap();
    let base = rest.trim_end_matches(')');
    let off = if off.trim().is_empty() { 0 } else { num(off) };
    (off, reg(base))
}

fn upper(s: &str) -> i64 {
    let v = num(s) & 0xfffff;
    ((v << 44) >> 44) << 12
}

fn f(op: &str, rd: Option<u8>, rs1: Option<u8>, rs2: Option<u8>, imm: Option<i64>) -> Fields {
    Fields { op: op.to_string(), rd, rs1, rs2, imm }
}

/// Expected decode of one assembly statement in canonical (non-alias) form.
pub fn expected(mnemonic: &str, operands: &str) -> Fields {
    let ops: Vec<&str> = if operands.trim().is_empty() { vec![] } else { operands.split(',').map(str::trim).collect() };
    let m = mnemonic;
    let (sp, zero, ra) = (Some(2u8), Some(0u8), Some(1u8));
    if R_OPS.contains(&m) {
        return f(m, Some(reg(ops[0])), Some(reg(ops[1])), Some(reg(ops[2])), None);
    }
    if I_OPS.contains(&m) {
        return f(m, Some(reg(ops[0])), Some(reg(ops[1])), None, Some(num(ops[2])));
    }
    if m == "jalr" && ops.len() == 3 {
        return f(m, Some(reg(ops[0])), Some(reg(ops[1])), None, Some(num(ops[2])));
    }
    if LOADS.contains(&m) {
        let (off, base) = mem(ops[1]);
        return f(m, Some(reg(ops[0])), Some(base), None, Some(off));
    }
    if STORES.contains(&m) {
        let (off, base) = mem(ops[1]);
        return f(m, None, Some(base), Some(reg(ops[0])), Some(off));
    }
    if BRANCHES.contains(&m) {
        return f(m, None, Some(reg(ops[0])), Some(reg(ops[1])), Some(num(ops[2])));
    }
    match m {
        "jal" => f(m, Some(reg(ops[0])), None, None, Some(num(ops[1]))),
        "lui" | "auipc" => f(m, Some(reg(ops[0])), None, None, Some(upper(ops[1]))),
        "c.nop" => f("addi", zero, zero, None, Some(0)),
        "c.addi4spn" => f("addi", Some(reg(ops[0])), sp, None, Some(num(ops[2]))),
        "c.lw" | "c.ld" | "c.fld" | "c.lwsp" | "c.ldsp" | "c.fldsp" => {
            let base = m.trim_start_matches("c.").trim_end_matches("sp");
            let (off, b) = mem(ops[1]);
            f(base, Some(reg(ops[0])), Some(b), None, Some(off))
        }
        "c.sw" | "c.sd" | "c.fsd" | "c.swsp" | "c.sdsp" | "c.fsdsp" => {
            let base = m.trim_start_matches("c.").trim_end_matches("sp");
            let (off, b) = mem(ops[1]);
            f(base, None, Some(b), Some(reg(ops[0])), Some(off))
        }
        "c.addi" | "c.addiw" | "c.srli" | "c.srai" | "c.andi" | "c.slli" => {
            let rd = Some(reg(ops[0]));
            f(&m[2..], rd, rd, None, Some(num(ops[1])))
        }
        "c.addi16sp" => f("addi", sp, sp, None, Some(num(ops[1]))),
        "c.li" => f("addi", Some(reg(ops[0])), zero, None, Some(num(ops[1]))),
        "c.lui" => f("lui", Some(reg(ops[0])), None, None, Some(upper(ops[1]))),
        "c.sub" | "c.xor" | "c.or" | "c.and" | "c.subw" | "c.addw" | "c.add" => {
            let rd = Some(reg(ops[0]));
            f(&m[2..], rd, rd, Some(reg(ops[1])), None)
        }
        "c.mv" => f("add", Some(reg(ops[0])), zero, Some(reg(ops[1])), None),
        "c.j" => f("jal", zero, None, None, Some(num(ops[0]))),
        "c.beqz" => f("beq", None, Some(reg(ops[0])), zero, Some(num(ops[1]))),
        "c.bnez" => f("bne", None, Some(reg(ops[0])), zero, Some(num(ops[1]))),
        "c.jr" => f("jalr", zero, Some(reg(ops[0])), None, Some(0)),
        "c.jalr" => f("jalr", ra, Some(reg(ops[0])), None, Some(0)),
        _ => f("other", None, None, None, None),
    }
}

pub fn actual(i: &Instruction) -> Fields {
    Fields {
        op: i.op.mnemonic().to_string(),
        rd: i.rd.map(|r| r.index()),
        rs1: i.rs1.map(|r| r.index()),
        rs2: i.rs2.map(|r| r.index()),
        imm: i.imm,
    }
}

fn split_stmt(s: &str) -> (&str, &str) {
    let s = s.trim();
    match s.find(char::is_whitespace) {
        Some(p) => (&s[..p], s[p..].trim()),
        None => (s, ""),
    }
}

/// Checks every transcript row and returns the agreement summary.
pub fn check_corpus(path: &Path) -> CorpusSummary {
    let text = std::fs::read_to_string(path).expect("decoder corpus");
    let mut summary = CorpusSummary::default();
    for (lineno, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        assert_eq!(cols.len(), 6, "line {}: {line}", lineno + 1);
        let raw = u32::from_str_radix(cols[0], 16).unwrap();
        let len: u8 = cols[1].parse().unwrap();
        let (src_m, src_ops) = split_stmt(cols[2]);
        let (cs_mnemonic, cs_ops, cs_id) = (cols[3], cols[4], cols[5]);

        summary.total += 1;
        if len == 2 {
            summary.compressed += 1;
        }
        let mut fail = |why: String| summary.mismatches.push(format!("line {}: {} ({})", lineno + 1, cols[2], why));

        let decoded = match decode(raw) {
            Ok(i) => i,
            Err(e) => {
                fail(format!("length error {e}"));
                continue;
            }
        };
        if decoded.len != len {
            fail(format!("length {} != {}", decoded.len, len));
        }
        let want = expected(src_m, src_ops);
        let got = actual(&decoded);
        if want != got {
            fail(format!("source says {want:?}, decoder says {got:?}"));
        }
        // capstone canonical instruction id must name the same operation
        if op_of_id(cs_id) != want.op {
            fail(format!("capstone id {cs_id} vs {}", want.op));
        }
        if cs_mnemonic == cs_id && want.op != "other" {
            let cs_fields = expected(cs_mnemonic, cs_ops);
            if cs_fields != got {
                fail(format!("capstone says {cs_fields:?}, decoder says {got:?}"));
            }
            summary.capstone_checked += 1;
        }
        summary.opcodes_seen.insert(got.op.clone());
    }
    summary
}

fn op_of_id(id: &str) -> String {
    let base = [R_OPS, I_OPS, LOADS, STORES, BRANCHES, &["jal", "lui", "auipc"]];
    if base.iter().any(|set| set.contains(&id)) {
        return id.to_string();
    }
    op_of_form(id)
}

fn op_of_form(id: &str) -> String {
    // Forms whose base opcode cannot be recovered from an operand-less parse.
    match id {
        "c.lw" | "c.lwsp" => "lw",
        "c.ld" | "c.ldsp" => "ld",
        "c.fld" | "c.fldsp" => "fld",
        "c.sw" | "c.swsp" => "sw",
        "c.sd" | "c.sdsp" => "sd",
        "c.fsd" | "c.fsdsp" => "fsd",
        "c.addi" | "c.li" | "c.addi16sp" | "c.addi4spn" | "c.nop" => "addi",
        "c.addiw" => "addiw",
        "c.lui" => "lui",
        "c.srli" => "srli",
        "c.srai" => "srai",
        "c.andi" => "andi",
        "c.slli" => "slli",
        "c.sub" => "sub",
        "c.xor" => "xor",
        "c.or" => "or",
        "c.and" => "and",
        "c.subw" => "subw",
        "c.addw" => "addw",
        "c.add" | "c.mv" => "add",
        "c.j" => "jal",
        "c.beqz" => "beq",
        "c.bnez" => "bne",
        "c.jr" | "c.jalr" => "jalr",
        _ => "other",
    }
    .to_string()
}
