//! Generators and property bodies shared by the proptest suite and the
//! acceptance runner.

#![allow(dead_code)]

use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::sample::select;
use proptest::test_runner::TestCaseError;

use rvfuse::analysis::{analyze_blocks, analyze_blocks_sequential};
use rvfuse::decoder::{assemble_line, decode16, decode32, Instruction, Reg};
use rvfuse::fusion::{
    fusion_stats, liveness, match_at, near_misses, select_fusions, FusionConfig, FusionMatch, IdiomKind, Selection,
};
use rvfuse::metrics::{
    armv8_uop_adjust, cdf, dynamic_count, effective_count, geomean, normalize, ArmMemoryMix, IsaCountTable,
};
use rvfuse::trace::{segment_blocks, Block, WeightedInstruction};

pub type Check = Result<(), TestCaseError>;

pub const REGS: &[&str] = &["zero", "a0", "a1", "a2", "a3"];

fn reg() -> impl Strategy<Value = &'static str> {
    select(REGS)
}

/// Straight-line statements drawn so that idiom shapes and register
/// collisions are common.
fn stmt() -> impl Strategy<Value = String> {
    prop_oneof![
        (reg(), reg(), select(&[1, 2, 3, 32][..])).prop_map(|(d, s, sh)| format!("slli {d}, {s}, {sh}")),
        (reg(), reg(), 29..=32).prop_map(|(d, s, sh)| format!("srli {d}, {s}, {sh}")),
        (reg(), reg(), reg()).prop_map(|(d, a, b)| format!("add {d}, {a}, {b}")),
        (select(&["ld", "lw", "lbu", "lwu"][..]), reg(), select(&[0, 4, 8][..]), reg())
            .prop_map(|(op, d, off, b)| format!("{op} {d}, {off}({b})")),
        (select(&["sd", "sw"][..]), reg(), select(&[0, 4, 8][..]), reg())
            .prop_map(|(op, s, off, b)| format!("{op} {s}, {off}({b})")),
        (reg(), reg(), -8..8).prop_map(|(d, s, k)| format!("addi {d}, {s}, {k}")),
        (select(&["lui", "auipc"][..]), reg(), 0..4).prop_map(|(op, d, k)| format!("{op} {d}, {k}")),
        (select(&["mulh", "mulhu", "mul", "div", "divu", "rem", "remu"][..]), reg(), reg(), reg())
            .prop_map(|(op, d, a, b)| format!("{op} {d}, {a}, {b}")),
        reg().prop_map(|b| format!("fld fa0, 0({b})")),
        Just(".word 0x0000000f".to_string()),
    ]
}

fn build(lines: &[(String, u64)], base: u64) -> Block {
    let mut pc = base;
    let items = lines
        .iter()
        .map(|(text, count)| {
            let instr = assemble_line(text).unwrap_or_else(|e| panic!("{text}: {e}"));
            let w = WeightedInstruction { pc, instr, count: *count };
            pc += instr.len as u64;
            w
        })
        .collect();
    Block { start_pc: base, items }
}

/// A valid block: straight-line body, optionally ending in a `jalr`.
pub fn block_with(counts: impl Strategy<Value = u64>) -> impl Strategy<Value = Block> {
    let body = prop::collection::vec((stmt(), counts), 0..16);
    let tail = prop::option::of((reg(), reg()).prop_map(|(d, s)| format!("jalr {d}, 0({s})")));
    (body, tail).prop_map(|(mut lines, tail)| {
        if let Some(t) = tail {
            let c = lines.last().map_or(1, |l| l.1);
            lines.push((t, c));
        }
        build(&lines, 0x1000)
    })
}

pub fn block() -> impl Strategy<Value = Block> {
    block_with(1u64..=50)
}

/// Several blocks at disjoint addresses.
pub fn blocks() -> impl Strategy<Value = Vec<Block>> {
    prop::collection::vec(block(), 1..5).prop_map(|bs| {
        bs.into_iter()
            .enumerate()
            .map(|(i, b)| {
                let base = 0x10_0000 * (i as u64 + 1);
                let items = b.items.iter().map(|w| WeightedInstruction { pc: w.pc - 0x1000 + base, ..*w }).collect();
                Block { start_pc: base, items }
            })
            .collect()
    })
}

/// Random enabled set, writeback gate, priority order and selection.
pub fn config() -> impl Strategy<Value = FusionConfig> {
    let kinds = IdiomKind::ALL.to_vec();
    (any::<u16>(), any::<bool>(), Just(kinds).prop_shuffle(), any::<bool>()).prop_map(|(mask, multi, prio, opt)| {
        let enabled = IdiomKind::ALL.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, k)| *k);
        let selection = if opt { Selection::MaxSavings } else { Selection::Greedy };
        FusionConfig::with_enabled(enabled).multi_writeback(multi).with_priority(prio).unwrap().selection(selection)
    })
}

/// Raw cross-ISA counts: (baseline, x, y) per benchmark.
pub fn count_rows() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((0.1f64..1e4, 0.1f64..1e4, 0.1f64..1e4), 1..12)
}

/// Items with arbitrary pcs: gaps, 2- and 4-byte instructions, control flow.
pub fn trace_items() -> impl Strategy<Value = Vec<WeightedInstruction>> {
    let instr = prop_oneof![
        Just(decode32(0x0000_0013)),
        Just(decode16(0x0001)),
        Just(assemble_line("beq a0, a1, 8").unwrap()),
        Just(assemble_line("jal ra, 16").unwrap()),
        Just(assemble_line("c.jr ra").unwrap()),
    ];
    prop::collection::vec((instr, any::<bool>(), 1u64..9), 0..40).prop_map(|v| {
        let mut pc = 0x8000_0000u64;
        v.into_iter()
            .map(|(instr, gap, count)| {
                if gap {
                    pc += 0x40;
                }
                let w = WeightedInstruction { pc, instr, count };
                pc += instr.len as u64;
                w
            })
            .collect()
    })
}

pub fn items_of(blocks: &[Block]) -> Vec<WeightedInstruction> {
    blocks.iter().flat_map(|b| b.items.iter().copied()).collect()
}

fn saved(ms: &[FusionMatch]) -> u64 {
    ms.iter().map(FusionMatch::saved).sum()
}

fn int_dest(i: &Instruction) -> Option<Reg> {
    i.int_dest().filter(|r| !r.is_zero())
}

pub fn no_overlap(b: &Block, config: &FusionConfig) -> Check {
    let mut owner = vec![false; b.len()];
    for m in select_fusions(0, b, config) {
        prop_assert!(m.start + m.arity <= b.len());
        for k in m.range() {
            prop_assert!(!owner[k], "index {} used twice", k);
            owner[k] = true;
        }
    }
    Ok(())
}

pub fn well_formed(b: &Block, config: &FusionConfig) -> Check {
    for m in select_fusions(0, b, config) {
        prop_assert!(
            config.is_active(m.kind)
                || (m.kind == IdiomKind::ClearUpperWord && config.is_active(IdiomKind::ClearUpperShift))
        );
        let members = &b.items[m.range()];
        prop_assert_eq!(m.weight, members.iter().map(|w| w.count).min().unwrap());
        prop_assert!(config.active().any(|k| match_at(b, m.start, k).is_some()));
        if m.kind.is_single_write() {
            prop_assert_eq!(m.writebacks, 1);
            // Every member writes the one surviving register.
            let dests: BTreeSet<_> = members.iter().map(|w| int_dest(&w.instr)).collect();
            prop_assert_eq!(dests.len(), 1);
            prop_assert!(dests.iter().next().unwrap().is_some());
        }
    }
    Ok(())
}

pub fn conservation(bs: &[Block], config: &FusionConfig) -> Check {
    let total = dynamic_count(&items_of(bs));
    let r = analyze_blocks(bs, config);
    let eff = effective_count(total, &r.matches).unwrap();
    prop_assert_eq!(eff + saved(&r.matches), total);
    prop_assert_eq!(fusion_stats(bs, config).effective_count, eff);
    Ok(())
}

pub fn disabled_is_unit(bs: &[Block], config: &FusionConfig) -> Check {
    let none = FusionConfig { enabled: Default::default(), ..config.clone() };
    let s = fusion_stats(bs, &none);
    prop_assert_eq!(s.macro_op_ratio, 1.0);
    prop_assert_eq!(s.effective_count, s.total_count);
    Ok(())
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Integer-derived quantities are compared bit for bit, log-domain ones
/// to 1e-12 relative.
pub fn scaling(bs: &[Block], config: &FusionConfig, k: u64, top: usize, table: &[(f64, f64, f64)]) -> Check {
    let scaled: Vec<Block> = bs
        .iter()
        .map(|b| Block {
            start_pc: b.start_pc,
            items: b.items.iter().map(|w| WeightedInstruction { count: w.count * k, ..*w }).collect(),
        })
        .collect();
    let (s1, s2) = (fusion_stats(bs, config), fusion_stats(&scaled, config));
    prop_assert_eq!(s2.total_count, s1.total_count * k);
    prop_assert_eq!(s2.effective_count, s1.effective_count * k);
    prop_assert_eq!(s1.macro_op_ratio.to_bits(), s2.macro_op_ratio.to_bits());
    if s1.total_count > 0 {
        let (c1, c2) = (cdf(&items_of(bs), top).unwrap(), cdf(&items_of(&scaled), top).unwrap());
        for (p, q) in c1.iter().zip(&c2) {
            prop_assert_eq!(p.fraction.to_bits(), q.fraction.to_bits());
            prop_assert_eq!(p.pc, q.pc);
        }
    }

    let kf = k as f64;
    let rows = |f: f64| {
        let mut t = vec![];
        for (i, (a, b, c)) in table.iter().enumerate() {
            let name = format!("b{i}");
            t.push((name.clone(), "base".to_string(), a * f));
            t.push((name.clone(), "x".to_string(), b * f));
            t.push((name, "y".to_string(), c * f));
        }
        IsaCountTable::new(t).unwrap()
    };
    let (n1, n2) = (normalize(&rows(1.0), "base").unwrap(), normalize(&rows(kf), "base").unwrap());
    for (r1, r2) in n1.benchmarks.iter().zip(&n2.benchmarks) {
        for (a, b) in r1.ratios.iter().zip(&r2.ratios) {
            prop_assert!(close(a.unwrap(), b.unwrap()));
        }
    }
    for (a, b) in n1.geomeans.iter().zip(&n2.geomeans) {
        prop_assert!(close(a.unwrap(), b.unwrap()));
    }
    Ok(())
}

/// Applies each reported rename and checks that it buys at least one more
/// fusion (more savings under max-savings) and that the renamed register
/// really is dead.
pub fn near_miss_sound(b: &Block, config: &FusionConfig) -> Check {
    let before = select_fusions(0, b, config);
    let live = liveness(b);
    for nm in near_misses(0, b, config) {
        let (i, ra, rb) = (nm.start, nm.blocking_register, nm.suggested_rename);
        // Independent deadness check: after the pair, the first mention of
        // `ra` is a write that does not also read it.
        let mut dead = false;
        for w in &b.items[i + 2..] {
            let reads = match w.instr.int_sources() {
                Some(mut s) => s.any(|r| r == ra),
                None => true,
            };
            if reads {
                break;
            }
            if int_dest(&w.instr) == Some(ra) {
                dead = true;
                break;
            }
        }
        prop_assert!(dead, "{:?} is still read after the pair", ra);
        prop_assert!(!live[i + 2].contains(ra));

        let mut renamed = b.clone();
        renamed.items[i].instr.rd = Some(rb);
        let second = &mut renamed.items[i + 1].instr;
        if second.rs1 == Some(ra) {
            second.rs1 = Some(rb);
        }
        if second.rs2 == Some(ra) {
            second.rs2 = Some(rb);
        }
        let after = select_fusions(0, &renamed, config);
        match config.selection {
            Selection::Greedy => prop_assert!(after.len() > before.len(), "{:?} -> {:?}", before, after),
            Selection::MaxSavings => prop_assert!(saved(&after) > saved(&before)),
        }
        prop_assert!(after.iter().any(|m| m.range().contains(&i)));
    }
    Ok(())
}

pub fn cdf_monotone(bs: &[Block], top: usize) -> Check {
    let items = items_of(bs);
    let points = cdf(&items, top).unwrap();
    prop_assert_eq!(points.len(), top);
    prop_assert!(points.windows(2).all(|w| w[0].fraction <= w[1].fraction));
    if top >= items.len() {
        prop_assert_eq!(points.last().unwrap().fraction, 1.0);
    }
    Ok(())
}

fn with_extra(config: &FusionConfig, extra: u16, skip: Option<IdiomKind>) -> FusionConfig {
    let mut large = config.clone();
    for (i, k) in IdiomKind::ALL.iter().enumerate() {
        if extra & (1 << i) != 0 && Some(*k) != skip {
            large.enabled.insert(*k);
        }
    }
    large
}

pub fn max_savings_monotone(b: &Block, config: &FusionConfig, extra: u16) -> Check {
    let small = config.clone().selection(Selection::MaxSavings);
    let large = with_extra(&small, extra, None);
    prop_assert!(saved(&select_fusions(0, b, &large)) >= saved(&select_fusions(0, b, &small)));
    Ok(())
}

/// With equal counts and lui-immop left out, greedy cannot lose savings
/// by enabling more idioms.
pub fn greedy_uniform_monotone(b: &Block, config: &FusionConfig, extra: u16) -> Check {
    let mut small =
        config.clone().selection(Selection::Greedy).with_priority(FusionConfig::default_priority()).unwrap();
    small.enabled.remove(&IdiomKind::LuiImmOp);
    let large = with_extra(&small, extra, Some(IdiomKind::LuiImmOp));
    prop_assert!(saved(&select_fusions(0, b, &large)) >= saved(&select_fusions(0, b, &small)));
    Ok(())
}

pub fn deterministic(bs: &[Block], config: &FusionConfig) -> Check {
    let a = analyze_blocks(bs, config);
    prop_assert_eq!(&a, &analyze_blocks(bs, config));
    prop_assert_eq!(&a, &analyze_blocks_sequential(bs, config));
    Ok(())
}

/// A single-write match stops matching once its last member writes some
/// other register.
pub fn clobber_necessary(b: &Block, config: &FusionConfig) -> Check {
    for m in select_fusions(0, b, config).iter().filter(|m| m.kind.is_single_write()) {
        let first = int_dest(&b.items[m.start].instr).unwrap();
        let last = m.start + m.arity - 1;
        let kind = if m.kind == IdiomKind::ClearUpperWord && !config.is_active(IdiomKind::ClearUpperWord) {
            IdiomKind::ClearUpperShift
        } else {
            m.kind
        };
        for other in (1..32).filter_map(Reg::new).filter(|r| *r != first) {
            let mut mutated = b.clone();
            mutated.items[last].instr.rd = Some(other);
            prop_assert!(match_at(&mutated, m.start, kind).is_none());
        }
    }
    Ok(())
}

pub fn geomean_composes(values: &[(f64, f64)]) -> Check {
    let ratios: Vec<f64> = values.iter().map(|(a, b)| a / b).collect();
    let num: Vec<f64> = values.iter().map(|v| v.0).collect();
    let den: Vec<f64> = values.iter().map(|v| v.1).collect();
    let lhs = geomean(&ratios).unwrap();
    let rhs = geomean(&num).unwrap() / geomean(&den).unwrap();
    prop_assert!(close(lhs, rhs));
    Ok(())
}

pub fn armv8_linear(x: [f64; 8], y: [f64; 8], a: f64) -> Check {
    let mix = |v: [f64; 8]| ArmMemoryMix {
        ld: v[0],
        ldia: v[1],
        ldp: v[2],
        ldpia: v[3],
        st: v[4],
        stia: v[5],
        stp: v[6],
        stpia: v[7],
    };
    let combined: [f64; 8] = std::array::from_fn(|i| a * x[i] + y[i]);
    let lhs = armv8_uop_adjust(&mix(combined));
    let rhs = a * armv8_uop_adjust(&mix(x)) + armv8_uop_adjust(&mix(y));
    prop_assert!((lhs - rhs).abs() <= 1e-9);
    Ok(())
}

/// Blocks cover the trace in order, are contiguous, end only at control
/// flow or gaps, and segmenting again changes nothing.
pub fn partition(items: &[WeightedInstruction]) -> Check {
    let bs = segment_blocks(items);
    prop_assert_eq!(items_of(&bs), items.to_vec());
    for b in &bs {
        prop_assert!(!b.is_empty());
        prop_assert_eq!(b.start_pc, b.items[0].pc);
        for w in b.items.windows(2) {
            prop_assert_eq!(w[0].pc + w[0].instr.len as u64, w[1].pc);
            prop_assert!(!w[0].instr.op.is_control_flow());
        }
    }
    prop_assert_eq!(segment_blocks(&items_of(&bs)), bs);
    Ok(())
}
