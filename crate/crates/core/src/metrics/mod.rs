//! Dynamic counts, byte totals, fusion-adjusted counts, CDFs and
//! cross-ISA comparisons.

mod isa;
mod report;

use serde::Serialize;
use thiserror::Error;

pub use isa::{normalize, ArmMemoryMix, BenchmarkRatios, Comparison, IsaCountTable};
pub use report::{build_report, MetricsReport};

use crate::fusion::FusionMatch;
use crate::trace::WeightedInstruction;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("empty trace")]
    EmptyTrace,
    #[error("fusions remove {saved} instructions from a total of {total}; selections overlap")]
    Overlap { total: u64, saved: u64 },
    #[error("top-n must be at least 1")]
    ZeroTopN,
    #[error("geometric mean needs positive values, got {0}")]
    NonPositive(f64),
    #[error("geometric mean of no values")]
    NoValues,
    #[error("benchmark `{benchmark}` has no `{baseline}` row")]
    MissingBaseline { benchmark: String, baseline: String },
    #[error("expected CSV header `{expected}`, got `{got}`")]
    BadHeader { expected: String, got: String },
    #[error("line {line}: duplicate row for `{benchmark}`/`{isa}`")]
    DuplicateRow { line: u64, benchmark: String, isa: String },
    #[error("line {line}: bad value `{text}`")]
    BadValue { line: u64, text: String },
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
}

/// Sum of execution counts.
pub fn dynamic_count(items: &[WeightedInstruction]) -> u64 {
    items.iter().map(|w| w.count).sum()
}

/// Sum of execution count times encoded length.
pub fn dynamic_bytes(items: &[WeightedInstruction]) -> u64 {
    items.iter().map(|w| w.count * u64::from(w.instr.len)).sum()
}

/// `total` minus the instructions removed by `matches`.
pub fn effective_count(total: u64, matches: &[FusionMatch]) -> Result<u64, MetricsError> {
    let saved: u64 = matches.iter().map(FusionMatch::saved).sum();
    total.checked_sub(saved).ok_or(MetricsError::Overlap { total, saved })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdfPoint {
    pub rank: usize,
    /// The instruction at this rank; `None` on padding rows.
    pub pc: Option<u64>,
    pub count: u64,
    /// Share of the total dynamic count covered by ranks `1..=rank`.
    pub fraction: f64,
}

/// Cumulative share of the dynamic count covered by the `top_n` most
/// executed static instructions (ties broken by ascending pc). When
/// `top_n` exceeds the number of items the tail repeats the last value.
pub fn cdf(items: &[WeightedInstruction], top_n: usize) -> Result<Vec<CdfPoint>, MetricsError> {
    if top_n == 0 {
        return Err(MetricsError::ZeroTopN);
    }
    let total = dynamic_count(items);
    if total == 0 {
        return Err(MetricsError::EmptyTrace);
    }
    let mut order: Vec<&WeightedInstruction> = items.iter().collect();
    order.sort_by(|a, b| b.count.cmp(&a.count).then(a.pc.cmp(&b.pc)));
    let mut running = 0u64;
    let mut out = Vec::with_capacity(top_n);
    for rank in 1..=top_n {
        let here = order.get(rank - 1);
        let count = here.map_or(0, |w| w.count);
        running += count;
        out.push(CdfPoint { rank, pc: here.map(|w| w.pc), count, fraction: running as f64 / total as f64 });
    }
    Ok(out)
}

/// `exp(mean(ln v))`.
pub fn geomean(values: &[f64]) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::NoValues);
    }
    if let Some(bad) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(MetricsError::NonPositive(*bad));
    }
    let log_sum: f64 = values.iter().map(|v| v.ln()).sum();
    Ok((log_sum / values.len() as f64).exp())
}

/// Percentage increase in operation count when every ARMv8 load that
/// writes back more than one register is cracked into one micro-op per
/// written register. Stores and single-destination loads are unchanged.
pub fn armv8_uop_adjust(mix: &ArmMemoryMix) -> f64 {
    mix.ldia + mix.ldp + 2.0 * mix.ldpia
}
