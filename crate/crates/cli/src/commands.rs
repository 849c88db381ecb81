//! The four subcommands. Each returns the sections to render, or a
//! message for a parse/validation failure.

use std::fs::File;
use std::io::{self, BufReader, Read};
use std::path::Path;

use rvfuse::analysis::analyze_blocks;
use rvfuse::decoder::disassemble;
use rvfuse::fusion::{FusionConfig, Selection};
use rvfuse::metrics::{
    build_report, cdf, dynamic_count, effective_count, normalize, CdfPoint, Comparison, IsaCountTable,
};
use rvfuse::trace::{parse_asm_trace, parse_trace, segment_blocks, WeightedInstruction};

use crate::render::{Cell, Section};

/// Decimal places for ratios of counts.
pub const RATIO_DP: usize = 6;
/// Decimal places for percentages.
pub const PCT_DP: usize = 4;
/// Decimal places for cross-ISA ratios and geomeans.
pub const COMPARE_DP: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure(pub String);

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Trace,
    Asm,
}

impl InputFormat {
    /// `.asm` and `.s` files are listings; anything else is a histogram.
    pub fn infer(path: &Path) -> InputFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("asm" | "s" | "S") => InputFormat::Asm,
            _ => InputFormat::Trace,
        }
    }
}

pub struct Input<'a> {
    pub path: &'a Path,
    pub format: InputFormat,
}

impl Input<'_> {
    fn open(&self) -> Result<Box<dyn Read>, Failure> {
        if self.path == Path::new("-") {
            return Ok(Box::new(io::stdin()));
        }
        let f = File::open(self.path).map_err(|e| Failure(format!("cannot read {}: {e}", self.path.display())))?;
        Ok(Box::new(f))
    }

    pub fn load(&self) -> Result<Vec<WeightedInstruction>, Failure> {
        let reader = BufReader::new(self.open()?);
        let items = match self.format {
            InputFormat::Trace => parse_trace(reader),
            InputFormat::Asm => parse_asm_trace(reader),
        }
        .map_err(|e| Failure(format!("{}: {e}", self.path.display())))?;
        if dynamic_count(&items) == 0 {
            return Err(Failure("empty trace".into()));
        }
        Ok(items)
    }
}

pub fn load_counts(path: &Path) -> Result<IsaCountTable, Failure> {
    let f = File::open(path).map_err(|e| Failure(format!("cannot read {}: {e}", path.display())))?;
    IsaCountTable::from_csv(f).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn selection_name(s: Selection) -> &'static str {
    match s {
        Selection::Greedy => "greedy",
        Selection::MaxSavings => "max-savings",
    }
}

fn idiom_list(config: &FusionConfig) -> String {
    let names: Vec<&str> = config.enabled.iter().map(|k| k.name()).collect();
    if names.is_empty() {
        "none".into()
    } else {
        names.join(",")
    }
}

fn pct(part: u64, total: u64) -> f64 {
    part as f64 / total as f64 * 100.0
}

fn comparison_section(c: &Comparison) -> Section {
    let mut s = Section::table("comparison", std::iter::once("benchmark".to_string()).chain(c.isas.iter().cloned()));
    let fixed = |v: Option<f64>| v.map_or(Cell::Null, |v| Cell::Fixed(v, COMPARE_DP));
    for b in &c.benchmarks {
        s.push(std::iter::once(Cell::text(&b.benchmark)).chain(b.ratios.iter().map(|r| fixed(*r))).collect());
    }
    s.push(std::iter::once(Cell::text("geomean")).chain(c.geomeans.iter().map(|g| fixed(*g))).collect());
    s
}

fn cdf_section(points: &[CdfPoint]) -> Section {
    let mut s = Section::table("cdf", ["rank", "pc", "count", "fraction"]);
    for p in points {
        s.push(vec![
            Cell::Int(p.rank as u64),
            p.pc.map_or(Cell::Null, Cell::hex),
            Cell::Int(p.count),
            Cell::Fixed(p.fraction, RATIO_DP),
        ]);
    }
    s
}

pub fn analyze(
    input: &Input,
    config: &FusionConfig,
    top_n: usize,
    counts: Option<(&IsaCountTable, &str)>,
) -> Result<Vec<Section>, Failure> {
    let items = input.load()?;
    let blocks = segment_blocks(&items);
    let result = analyze_blocks(&blocks, config);
    let report = build_report(&items, &result.matches, config, top_n, counts)?;
    let saved = report.total_count - report.effective_count;

    let summary = Section::record(
        "summary",
        [
            ("input", Cell::text(input.path.display().to_string())),
            ("idioms", Cell::text(idiom_list(config))),
            ("multi_writeback", Cell::text(config.allow_multi_writeback.to_string())),
            ("selection", Cell::text(selection_name(config.selection))),
            ("static_instructions", Cell::Int(report.static_instructions as u64)),
            ("blocks", Cell::Int(blocks.len() as u64)),
            ("total_count", Cell::Int(report.total_count)),
            ("total_bytes", Cell::Int(report.total_bytes)),
            ("bytes_per_instruction", Cell::Fixed(report.bytes_per_instruction, PCT_DP)),
            ("effective_count", Cell::Int(report.effective_count)),
            ("macro_op_ratio", Cell::Fixed(report.macro_op_ratio, RATIO_DP)),
            ("reduction_pct", Cell::Fixed(pct(saved, report.total_count), PCT_DP)),
        ],
    );
    let mut idioms = Section::table("idioms", ["idiom", "matches", "fused", "saved", "reduction_pct"]);
    for s in &report.idioms {
        idioms.push(vec![
            Cell::text(s.kind.name()),
            Cell::Int(s.matches as u64),
            Cell::Int(s.fused),
            Cell::Int(s.saved),
            Cell::Fixed(s.reduction_pct, PCT_DP),
        ]);
    }
    let mut fusions = Section::table("fusions", ["pc", "idiom", "weight", "writebacks"]);
    for m in &result.matches {
        let pc = blocks[m.block_index].items[m.start].pc;
        fusions.push(vec![
            Cell::hex(pc),
            Cell::text(m.kind.name()),
            Cell::Int(m.weight),
            Cell::Int(m.writebacks.into()),
        ]);
    }
    let mut out = vec![summary, idioms, fusions, cdf_section(&report.cdf)];
    if let Some(c) = &report.comparison {
        out.push(comparison_section(c));
    }
    Ok(out)
}

pub fn nearmiss(input: &Input, config: &FusionConfig) -> Result<Vec<Section>, Failure> {
    let items = input.load()?;
    let blocks = segment_blocks(&items);
    let result = analyze_blocks(&blocks, config);
    let total = dynamic_count(&items);

    let mut list = Section::table(
        "near_misses",
        ["pc", "idiom", "blocking_register", "suggested_rename", "weight", "reduction_pct", "first", "second"],
    );
    for nm in &result.near_misses {
        let b = &blocks[nm.block_index];
        let (first, second) = (&b.items[nm.start], &b.items[nm.start + 1]);
        list.push(vec![
            Cell::hex(first.pc),
            Cell::text(nm.kind.name()),
            Cell::text(nm.blocking_register.abi_name()),
            Cell::text(nm.suggested_rename.abi_name()),
            Cell::Int(nm.weight),
            Cell::Fixed(pct(nm.weight, total), PCT_DP),
            Cell::text(disassemble(&first.instr)),
            Cell::text(disassemble(&second.instr)),
        ]);
    }
    let recoverable: u64 = result.near_misses.iter().map(|nm| nm.weight).sum();
    let effective = effective_count(total, &result.matches)?;
    let summary = Section::record(
        "summary",
        [
            ("near_misses", Cell::Int(result.near_misses.len() as u64)),
            ("total_count", Cell::Int(total)),
            ("effective_count", Cell::Int(effective)),
            ("recoverable", Cell::Int(recoverable)),
            ("recoverable_pct", Cell::Fixed(pct(recoverable, total), PCT_DP)),
        ],
    );
    Ok(vec![list, summary])
}

pub fn compare(table: &IsaCountTable, baseline: &str) -> Result<Vec<Section>, Failure> {
    Ok(vec![comparison_section(&normalize(table, baseline)?)])
}

pub fn cdf_only(input: &Input, top_n: usize) -> Result<Vec<Section>, Failure> {
    Ok(vec![cdf_section(&cdf(&input.load()?, top_n)?)])
}
