//! Per-block fusion selection and near-miss detection over a whole trace.
//!
//! Blocks are independent, so with the `parallel` feature the work is
//! spread across a rayon pool. Results are concatenated in block order, so
//! both paths return identical output.

use serde::Serialize;

use crate::fusion::{near_misses_excluding, select_fusions, FusionConfig, FusionMatch, NearMiss};
use crate::trace::Block;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BlockAnalysis {
    /// Selected fusions ordered by (block, start).
    pub matches: Vec<FusionMatch>,
    /// Near-miss pairs ordered by (block, start).
    pub near_misses: Vec<NearMiss>,
}

fn analyze_one(index: usize, block: &Block, config: &FusionConfig) -> BlockAnalysis {
    let matches = select_fusions(index, block, config);
    let near_misses = near_misses_excluding(index, block, config, &matches);
    BlockAnalysis { matches, near_misses }
}

fn concat(parts: impl IntoIterator<Item = BlockAnalysis>) -> BlockAnalysis {
    let mut out = BlockAnalysis::default();
    for p in parts {
        out.matches.extend(p.matches);
        out.near_misses.extend(p.near_misses);
    }
    out
}

/// Single-threaded path.
pub fn analyze_blocks_sequential(blocks: &[Block], config: &FusionConfig) -> BlockAnalysis {
    concat(blocks.iter().enumerate().map(|(i, b)| analyze_one(i, b, config)))
}

/// Data-parallel path over blocks.
#[cfg(feature = "parallel")]
pub fn analyze_blocks_parallel(blocks: &[Block], config: &FusionConfig) -> BlockAnalysis {
    use rayon::prelude::*;
    let parts: Vec<BlockAnalysis> = blocks.par_iter().enumerate().map(|(i, b)| analyze_one(i, b, config)).collect();
    concat(parts)
}

/// Uses the parallel path when the `parallel` feature is enabled.
pub fn analyze_blocks(blocks: &[Block], config: &FusionConfig) -> BlockAnalysis {
    #[cfg(feature = "parallel")]
    {
        analyze_blocks_parallel(blocks, config)
    }
    #[cfg(not(feature = "parallel"))]
    {
        analyze_blocks_sequential(blocks, config)
    }
}
