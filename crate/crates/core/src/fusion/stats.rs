use serde::Serialize;

use super::{FusionConfig, FusionMatch, IdiomKind};
use crate::analysis::analyze_blocks;
use crate::trace::Block;

/// Per-idiom totals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdiomStats {
    pub kind: IdiomKind,
    /// Number of selected static matches.
    pub matches: usize,
    /// Weighted (dynamic) number of fused groups.
    pub fused: u64,
    /// Dynamic instructions removed, `fused * (arity - 1)`.
    pub saved: u64,
    /// `saved` as a percentage of the total dynamic count.
    pub reduction_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusionStats {
    pub total_count: u64,
    pub effective_count: u64,
    /// `effective_count / total_count`; 1.0 for an empty trace.
    pub macro_op_ratio: f64,
    /// One row per enabled idiom, in declaration order.
    pub idioms: Vec<IdiomStats>,
}

impl FusionStats {
    /// Aggregates `matches` against `total_count` dynamic instructions.
    /// Rows are emitted for every kind in `kinds` plus any kind that
    /// appears in `matches`.
    pub fn from_matches(total_count: u64, matches: &[FusionMatch], kinds: impl IntoIterator<Item = IdiomKind>) -> Self {
        let mut shown: Vec<IdiomKind> = kinds.into_iter().chain(matches.iter().map(|m| m.kind)).collect();
        shown.sort();
        shown.dedup();
        let pct = |n: u64| if total_count == 0 { 0.0 } else { n as f64 / total_count as f64 * 100.0 };
        let idioms: Vec<IdiomStats> = shown
            .into_iter()
            .map(|kind| {
                let of_kind = matches.iter().filter(|m| m.kind == kind);
                let (count, fused, saved) =
                    of_kind.fold((0, 0, 0), |(c, f, s), m| (c + 1, f + m.weight, s + m.saved()));
                IdiomStats { kind, matches: count, fused, saved, reduction_pct: pct(saved) }
            })
            .collect();
        let saved: u64 = idioms.iter().map(|s| s.saved).sum();
        let effective_count = total_count.saturating_sub(saved);
        let macro_op_ratio = if total_count == 0 { 1.0 } else { effective_count as f64 / total_count as f64 };
        FusionStats { total_count, effective_count, macro_op_ratio, idioms }
    }
}

/// Selects fusions in every block and aggregates them.
pub fn fusion_stats(blocks: &[Block], config: &FusionConfig) -> FusionStats {
    let total: u64 = blocks.iter().flat_map(|b| &b.items).map(|w| w.count).sum();
    let result = analyze_blocks(blocks, config);
    FusionStats::from_matches(total, &result.matches, config.enabled.iter().copied())
}
