use super::liveness::liveness;
use super::patterns::match_instrs;
use super::{FusionConfig, FusionMatch, IdiomKind, NearMiss, Selection};
use crate::decoder::{Instruction, OpClass, Reg};
use crate::trace::Block;

fn min_count(block: &Block, range: std::ops::Range<usize>) -> u64 {
    block.items[range].iter().map(|w| w.count).min().unwrap_or(0)
}

/// Selects non-overlapping fusions in `block` according to
/// `config.selection`.
///
/// The greedy rule takes, at each position not yet consumed, the first
/// active kind in priority order that matches. The max-savings rule solves
/// the weighted interval problem over all candidates exactly.
pub fn select_fusions(block_index: usize, block: &Block, config: &FusionConfig) -> Vec<FusionMatch> {
    let instrs: &[Instruction] = &block.instrs().copied().collect::<Vec<_>>();
    let active: &[IdiomKind] = &config.active().collect::<Vec<_>>();
    let at = move |i: usize| {
        active.iter().filter_map(move |k| match_instrs(&instrs[i..], *k)).map(move |p| FusionMatch {
            block_index,
            start: i,
            arity: p.arity,
            kind: p.kind,
            weight: min_count(block, i..i + p.arity),
            writebacks: p.writebacks,
        })
    };
    match config.selection {
        Selection::Greedy => {
            let mut out = Vec::new();
            let mut i = 0;
            while i < instrs.len() {
                match at(i).next() {
                    Some(m) => {
                        out.push(m);
                        i += m.arity;
                    }
                    None => i += 1,
                }
            }
            out
        }
        Selection::MaxSavings => {
            let n = instrs.len();
            // best[i]: most instructions removable from i onward, and the
            // match taken at i (if any) to achieve it.
            let mut best: Vec<(u64, Option<FusionMatch>)> = vec![(0, None); n + 1];
            for i in (0..n).rev() {
                let mut choice = (best[i + 1].0, None);
                for m in at(i) {
                    let value = m.saved() + best[i + m.arity].0;
                    if value > choice.0 || (value == choice.0 && choice.1.is_none()) {
                        choice = (value, Some(m));
                    }
                }
                best[i] = choice;
            }
            let mut out = Vec::new();
            let mut i = 0;
            while i < n {
                match best[i].1 {
                    Some(m) => {
                        out.push(m);
                        i += m.arity;
                    }
                    None => i += 1,
                }
            }
            out
        }
    }
}

/// Near-miss pairs of `block` under `config`, skipping any pair that
/// overlaps a fusion `select_fusions` would pick.
pub fn near_misses(block_index: usize, block: &Block, config: &FusionConfig) -> Vec<NearMiss> {
    let selected = select_fusions(block_index, block, config);
    near_misses_excluding(block_index, block, config, &selected)
}

fn dest(i: &Instruction) -> Option<Reg> {
    i.int_dest().filter(|r| !r.is_zero())
}

/// Rewrites the integer reads of `from` in `i` to `to`.
fn rename_reads(mut i: Instruction, from: Reg, to: Reg) -> Instruction {
    if i.rs1 == Some(from) {
        i.rs1 = Some(to);
    }
    if i.rs2 == Some(from) && i.class() != OpClass::FpStore {
        i.rs2 = Some(to);
    }
    i
}

/// Like [`near_misses`] with the selection supplied by the caller.
///
/// A pair `(A, B)` is reported when B reads A's destination `ra`, writes a
/// different register `rb` that it does not read, `ra` is dead after B,
/// and making A write `rb` (with B reading `rb` in place of `ra`) turns the
/// pair into an active single-write idiom. Pairs are scanned left to right
/// and a reported pair is not reused.
pub fn near_misses_excluding(
    block_index: usize,
    block: &Block,
    config: &FusionConfig,
    selected: &[FusionMatch],
) -> Vec<NearMiss> {
    let n = block.len();
    let mut covered = vec![false; n];
    for m in selected.iter().filter(|m| m.block_index == block_index) {
        covered[m.range()].iter_mut().for_each(|c| *c = true);
    }
    let kinds: Vec<IdiomKind> = config.active().filter(|k| k.is_single_write() && k.arity() == 2).collect();
    if kinds.is_empty() || n < 2 {
        return Vec::new();
    }
    let live = liveness(block);
    let mut out = Vec::new();
    let mut i = 0;
    while i + 1 < n {
        let found = (|| {
            if covered[i] || covered[i + 1] {
                return None;
            }
            let (a, b) = (block.items[i].instr, block.items[i + 1].instr);
            let (ra, rb) = (dest(&a)?, dest(&b)?);
            if ra == rb || !b.reads_int(ra) || b.reads_int(rb) || live[i + 2].contains(ra) {
                return None;
            }
            let renamed = [Instruction { rd: Some(rb), ..a }, rename_reads(b, ra, rb)];
            let p = kinds.iter().find_map(|k| match_instrs(&renamed, *k))?;
            Some(NearMiss {
                block_index,
                start: i,
                kind: p.kind,
                blocking_register: ra,
                suggested_rename: rb,
                weight: min_count(block, i..i + 2),
            })
        })();
        match found {
            Some(nm) => {
                out.push(nm);
                i += 2;
            }
            None => i += 1,
        }
    }
    out
}
