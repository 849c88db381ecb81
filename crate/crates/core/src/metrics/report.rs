use serde::Serialize;

use super::{
    cdf, dynamic_bytes, dynamic_count, effective_count, normalize, CdfPoint, Comparison, IsaCountTable, MetricsError,
};
use crate::fusion::{FusionConfig, FusionMatch, FusionStats, IdiomStats};
use crate::trace::WeightedInstruction;

/// Everything `analyze` reports for one trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub static_instructions: usize,
    pub total_count: u64,
    pub total_bytes: u64,
    pub bytes_per_instruction: f64,
    pub effective_count: u64,
    pub macro_op_ratio: f64,
    pub idioms: Vec<IdiomStats>,
    pub cdf: Vec<CdfPoint>,
    pub comparison: Option<Comparison>,
}

/// Assembles a report from one trace and the fusions selected over it.
/// `counts` adds a cross-ISA comparison normalized to the given baseline.
pub fn build_report(
    items: &[WeightedInstruction],
    matches: &[FusionMatch],
    config: &FusionConfig,
    top_n: usize,
    counts: Option<(&IsaCountTable, &str)>,
) -> Result<MetricsReport, MetricsError> {
    let total_count = dynamic_count(items);
    if total_count == 0 {
        return Err(MetricsError::EmptyTrace);
    }
    let total_bytes = dynamic_bytes(items);
    let effective = effective_count(total_count, matches)?;
    let stats = FusionStats::from_matches(total_count, matches, config.enabled.iter().copied());
    debug_assert_eq!(stats.effective_count, effective);
    let comparison = counts.map(|(table, baseline)| normalize(table, baseline)).transpose()?;
    Ok(MetricsReport {
        static_instructions: items.len(),
        total_count,
        total_bytes,
        bytes_per_instruction: total_bytes as f64 / total_count as f64,
        effective_count: effective,
        macro_op_ratio: stats.macro_op_ratio,
        idioms: stats.idioms,
        cdf: cdf(items, top_n)?,
        comparison,
    })
}
