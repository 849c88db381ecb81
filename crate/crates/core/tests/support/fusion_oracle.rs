//! Brute-force fusion oracle that works on assembly text.
//!
//! Every listing line is rewritten by hand-written rules into a base form
//! (op, destination, sources, memory base, immediate), every (index, idiom)
//! candidate is tested against the idiom rules written directly over those
//! strings, and the leftmost/priority rule picks the selection. Only the
//! mnemonics that occur in the golden listings are understood; anything
//! else panics so that an unexpected listing cannot silently pass.

#![allow(dead_code)]

use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub pc: u64,
    pub len: u64,
    pub count: u64,
    pub op: String,
    pub dst: Option<String>,
    pub srcs: Vec<String>,
    pub base: Option<String>,
    pub imm: Option<i64>,
    pub control: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleFusion {
    pub pc: u64,
    pub kind: &'static str,
    pub arity: usize,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleNearMiss {
    pub pc: u64,
    pub kind: &'static str,
    pub blocking: String,
    pub rename: String,
}

/// Default priority: the 3-instruction form first, then declaration order.
pub const PRIORITY: &[&str] = &[
    "indexed-load-long",
    "lea",
    "indexed-load",
    "clear-upper-word",
    "clear-upper-shift",
    "lui-immop",
    "lui-load",
    "auipc-load",
    "auipc-jalr",
    "mulh-mul",
    "div-rem",
    "load-pair",
    "store-pair",
    "post-indexed-load",
    "post-indexed-store",
];

pub const DEFAULT_SET: &[&str] = &["indexed-load-long", "lea", "indexed-load", "clear-upper-word"];
const MULTI_WRITE: &[&str] = &["mulh-mul", "div-rem", "load-pair", "post-indexed-load"];
const SINGLE_WRITE: &[&str] =
    &["lea", "indexed-load", "clear-upper-word", "clear-upper-shift", "lui-immop", "lui-load", "auipc-load"];

const LOADS: &[(&str, i64)] = &[("lb", 1), ("lbu", 1), ("lh", 2), ("lhu", 2), ("lw", 4), ("lwu", 4), ("ld", 8)];
const STORES: &[(&str, i64)] = &[("sb", 1), ("sh", 2), ("sw", 4), ("sd", 8)];

fn num(s: &str) -> i64 {
    let s = s.trim();
    match s.strip_prefix("0x") {
        Some(h) => i64::from_str_radix(h, 16).unwrap(),
        None => s.parse().unwrap(),
    }
}

fn mem(s: &str) -> (i64, String) {
    let (off, rest) = s.split_once('(').unwrap();
    (num(off), rest.trim_end_matches(')').trim().to_string())
}

fn width(table: &[(&str, i64)], op: &str) -> Option<i64> {
    table.iter().find(|(n, _)| *n == op).map(|(_, w)| *w)
}

fn canon(op: &str, ops: &[&str]) -> (String, Option<String>, Vec<String>, Option<String>, Option<i64>, bool) {
    let s = |x: &str| x.to_string();
    let alu3 = ["add", "and", "xor", "or", "sub", "addw", "subw"];
    let imm3 = ["addi", "addiw", "slli", "srli", "andi"];
    let branch2 = ["bne", "beq", "blt", "bltu", "bge", "bgeu", "ble", "bgt"];
    if alu3.contains(&op) {
        return (s(op), Some(s(ops[0])), vec![s(ops[1]), s(ops[2])], None, None, false);
    }
    if imm3.contains(&op) {
        return (s(op), Some(s(ops[0])), vec![s(ops[1])], None, Some(num(ops[2])), false);
    }
    if width(LOADS, op).is_some() {
        let (off, b) = mem(ops[1]);
        return (s(op), Some(s(ops[0])), vec![b.clone()], Some(b), Some(off), false);
    }
    if width(STORES, op).is_some() {
        let (off, b) = mem(ops[1]);
        return (s(op), None, vec![s(ops[0]), b.clone()], Some(b), Some(off), false);
    }
    if branch2.contains(&op) {
        return (s("branch"), None, vec![s(ops[0]), s(ops[1])], None, None, true);
    }
    match op {
        "bnez" | "beqz" => (s("branch"), None, vec![s(ops[0])], None, None, true),
        "li" => (s("addi"), Some(s(ops[0])), vec![s("zero")], None, Some(num(ops[1])), false),
        "mv" => (s("addi"), Some(s(ops[0])), vec![s(ops[1])], None, Some(0), false),
        "c.mv" => (s("add"), Some(s(ops[0])), vec![s("zero"), s(ops[1])], None, None, false),
        "c.add" | "c.xor" | "c.and" | "c.or" | "c.sub" => {
            (s(&op[2..]), Some(s(ops[0])), vec![s(ops[0]), s(ops[1])], None, None, false)
        }
        "c.addi" | "c.addiw" | "c.slli" | "c.srli" | "c.andi" => {
            (s(&op[2..]), Some(s(ops[0])), vec![s(ops[0])], None, Some(num(ops[1])), false)
        }
        "c.ld" | "c.lw" | "c.sd" | "c.sw" => canon(&op[2..], ops),
        _ => panic!("oracle does not know `{op}`"),
    }
}

/// Reads a golden listing: `[PC:] asm [; count=N]`, `@base PC`, `#` comments.
pub fn load_listing(path: &Path) -> Vec<Stmt> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut out = Vec::new();
    let mut next_pc = None;
    for line in text.lines() {
        let line = line.split('#').next().unwrap();
        let (body, count) = match line.split_once(';') {
            Some((b, c)) => (b, c.trim().strip_prefix("count=").unwrap().trim().parse().unwrap()),
            None => (line, 1),
        };
        let body = body.trim();
        if body.is_empty() {
            continue;
        }
        if let Some(b) = body.strip_prefix("@base") {
            next_pc = Some(u64::from_str_radix(b.trim(), 16).unwrap());
            continue;
        }
        let (pc, stmt) = match body.split_once(':') {
            Some((p, s)) => (u64::from_str_radix(p.trim(), 16).unwrap(), s.trim()),
            None => (next_pc.expect("pc"), body),
        };
        let (mnemonic, rest) = stmt.split_once(char::is_whitespace).unwrap_or((stmt, ""));
        let ops: Vec<&str> = rest.split(',').map(str::trim).filter(|o| !o.is_empty()).collect();
        let (op, dst, srcs, base, imm, control) = canon(mnemonic, &ops);
        let len = if mnemonic.starts_with("c.") { 2 } else { 4 };
        out.push(Stmt { pc, len, count, op, dst, srcs, base, imm, control });
        next_pc = Some(pc + len);
    }
    out
}

/// Splits after control flow and at pc gaps.
pub fn blocks(stmts: &[Stmt]) -> Vec<Vec<Stmt>> {
    let mut out: Vec<Vec<Stmt>> = vec![];
    let mut cur: Vec<Stmt> = vec![];
    for s in stmts {
        if let Some(last) = cur.last() {
            if last.pc + last.len != s.pc {
                out.push(std::mem::take(&mut cur));
            }
        }
        cur.push(s.clone());
        if s.control {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn dst_is(s: &Stmt, r: &str) -> bool {
    s.dst.as_deref() == Some(r)
}

fn live_dst(s: &Stmt) -> Option<&str> {
    s.dst.as_deref().filter(|d| *d != "zero")
}

/// Does `kind` hold for the statements starting at `w[0]`?
/// Returns the recorded kind (clear-upper-shift by 32 is bucketed as
/// clear-upper-word) and arity.
pub fn rule(kind: &'static str, w: &[Stmt]) -> Option<(&'static str, usize)> {
    let a = w.first()?;
    let b = w.get(1)?;
    let shl123 = |s: &Stmt| s.op == "slli" && matches!(s.imm, Some(1..=3));
    let add_into =
        |s: &Stmt, rd: &str| s.op == "add" && dst_is(s, rd) && (s.srcs.iter().filter(|x| *x == rd).count() == 1);
    let load_from =
        |s: &Stmt, rd: &str| width(LOADS, &s.op).is_some() && dst_is(s, rd) && s.base.as_deref() == Some(rd);
    match kind {
        "lea" => {
            let rd = live_dst(a)?;
            (shl123(a) && add_into(b, rd)).then_some(("lea", 2))
        }
        "indexed-load" => {
            let rd = live_dst(a)?;
            (a.op == "add" && load_from(b, rd) && b.imm == Some(0)).then_some(("indexed-load", 2))
        }
        "indexed-load-long" => {
            let c = w.get(2)?;
            let rd = live_dst(a)?;
            (shl123(a) && add_into(b, rd) && load_from(c, rd) && c.imm == Some(0)).then_some(("indexed-load-long", 3))
        }
        "clear-upper-word" | "clear-upper-shift" => {
            let rd = live_dst(a)?;
            let ok = a.op == "slli" && a.imm == Some(32) && b.op == "srli" && dst_is(b, rd) && b.srcs == [rd];
            let allowed: &[i64] = if kind == "clear-upper-word" { &[32] } else { &[29, 30, 31, 32] };
            let sh = b.imm?;
            (ok && allowed.contains(&sh))
                .then_some((if sh == 32 { "clear-upper-word" } else { "clear-upper-shift" }, 2))
        }
        "load-pair" => {
            let (wa, wb) = (width(LOADS, &a.op)?, width(LOADS, &b.op)?);
            let (r1, r2) = (live_dst(a)?, live_dst(b)?);
            let ok = wa == wb
                && a.base == b.base
                && (b.imm? - a.imm?).abs() == wa
                && r1 != r2
                && a.base.as_deref() != Some(r1);
            ok.then_some(("load-pair", 2))
        }
        "store-pair" => {
            let (wa, wb) = (width(STORES, &a.op)?, width(STORES, &b.op)?);
            (wa == wb && a.base == b.base && (b.imm? - a.imm?).abs() == wa).then_some(("store-pair", 2))
        }
        "post-indexed-load" | "post-indexed-store" => {
            let base = a.base.clone()?;
            let is_load = kind == "post-indexed-load";
            let mem_ok = if is_load {
                width(LOADS, &a.op).is_some() && live_dst(a).is_some() && live_dst(a) != Some(base.as_str())
            } else {
                width(STORES, &a.op).is_some()
            };
            let bump = b.op == "addi" && dst_is(b, &base) && b.srcs == [base.clone()] && base != "zero";
            (mem_ok && bump).then_some((kind, 2))
        }
        // No golden listing uses lui, auipc, mulh or div.
        _ => None,
    }
}

pub fn select(block: &[Stmt], enabled: &[&str], multi_writeback: bool) -> Vec<OracleFusion> {
    let mut out = vec![];
    let mut i = 0;
    while i < block.len() {
        let hit = PRIORITY
            .iter()
            .filter(|k| enabled.contains(k))
            .filter(|k| multi_writeback || !MULTI_WRITE.contains(k))
            .find_map(|k| rule(k, &block[i..]));
        match hit {
            Some((kind, arity)) => {
                let weight = block[i..i + arity].iter().map(|s| s.count).min().unwrap();
                out.push(OracleFusion { pc: block[i].pc, kind, arity, weight });
                i += arity;
            }
            None => i += 1,
        }
    }
    out
}

/// Whether `reg` is dead immediately before `block[from]`: a later write
/// comes before any read. Falling off the block end counts as a read.
pub fn dead_from(block: &[Stmt], from: usize, reg: &str) -> bool {
    for s in &block[from..] {
        if s.srcs.iter().any(|r| r == reg) {
            return false;
        }
        if dst_is(s, reg) {
            return true;
        }
    }
    false
}

pub fn near_misses(block: &[Stmt], enabled: &[&str], multi_writeback: bool) -> Vec<OracleNearMiss> {
    let fused = select(block, enabled, multi_writeback);
    let covered = |i: usize| {
        fused.iter().any(|f| {
            let s = block.iter().position(|b| b.pc == f.pc).unwrap();
            (s..s + f.arity).contains(&i)
        })
    };
    let mut out = vec![];
    let mut i = 0;
    while i + 1 < block.len() {
        let (a, b) = (&block[i], &block[i + 1]);
        let candidate = (|| {
            if covered(i) || covered(i + 1) {
                return None;
            }
            let ra = live_dst(a)?.to_string();
            let rb = live_dst(b)?.to_string();
            if ra == rb || !b.srcs.contains(&ra) || b.srcs.contains(&rb) || !dead_from(block, i + 2, &ra) {
                return None;
            }
            let mut a2 = a.clone();
            a2.dst = Some(rb.clone());
            let mut b2 = b.clone();
            for s in &mut b2.srcs {
                if *s == ra {
                    *s = rb.clone();
                }
            }
            if b2.base.as_deref() == Some(ra.as_str()) {
                b2.base = Some(rb.clone());
            }
            let pair = [a2, b2];
            PRIORITY
                .iter()
                .filter(|k| enabled.contains(k) && SINGLE_WRITE.contains(k))
                .find_map(|k| rule(k, &pair))
                .map(|(kind, _)| OracleNearMiss { pc: a.pc, kind, blocking: ra.clone(), rename: rb.clone() })
        })();
        match candidate {
            Some(nm) => {
                out.push(nm);
                i += 2;
            }
            None => i += 1,
        }
    }
    out
}
