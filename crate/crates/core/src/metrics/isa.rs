use std::collections::HashMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{geomean, MetricsError};

const HEADER: [&str; 3] = ["benchmark", "isa", "count"];

/// Dynamic instruction counts per (benchmark, ISA), in any consistent unit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IsaCountTable {
    rows: Vec<(String, String, f64)>,
    index: HashMap<(String, String), usize>,
}

impl IsaCountTable {
    /// Builds a table, rejecting duplicate pairs and non-positive counts.
    pub fn new<B, I>(rows: impl IntoIterator<Item = (B, I, f64)>) -> Result<Self, MetricsError>
    where
        B: Into<String>,
        I: Into<String>,
    {
        let mut table = IsaCountTable::default();
        for (line, (b, i, c)) in rows.into_iter().enumerate() {
            table.push(line as u64 + 1, b.into(), i.into(), c)?;
        }
        Ok(table)
    }

    fn push(&mut self, line: u64, benchmark: String, isa: String, count: f64) -> Result<(), MetricsError> {
        if !(count > 0.0 && count.is_finite()) {
            return Err(MetricsError::BadValue { line, text: count.to_string() });
        }
        let key = (benchmark.clone(), isa.clone());
        if self.index.contains_key(&key) {
            return Err(MetricsError::DuplicateRow { line, benchmark, isa });
        }
        self.index.insert(key, self.rows.len());
        self.rows.push((benchmark, isa, count));
        Ok(())
    }

    /// Reads CSV with the header `benchmark,isa,count`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, MetricsError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header != HEADER {
            return Err(MetricsError::BadHeader { expected: HEADER.join(","), got: header.join(",") });
        }
        let mut table = IsaCountTable::default();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let text = &record[2];
            let count: f64 = text.parse().map_err(|_| MetricsError::BadValue { line, text: text.to_string() })?;
            table.push(line, record[0].to_string(), record[1].to_string(), count)?;
        }
        Ok(table)
    }

    pub fn get(&self, benchmark: &str, isa: &str) -> Option<f64> {
        self.index.get(&(benchmark.to_string(), isa.to_string())).map(|i| self.rows[*i].2)
    }

    /// Benchmarks in order of first appearance.
    pub fn benchmarks(&self) -> Vec<&str> {
        first_seen(self.rows.iter().map(|r| r.0.as_str()))
    }

    /// ISAs in order of first appearance.
    pub fn isas(&self) -> Vec<&str> {
        first_seen(self.rows.iter().map(|r| r.1.as_str()))
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.rows.iter().map(|(b, i, c)| (b.as_str(), i.as_str(), *c))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn first_seen<'a>(names: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for n in names {
        if !out.contains(&n) {
            out.push(n);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRatios {
    pub benchmark: String,
    /// One entry per ISA of [`Comparison::isas`]; `None` if not measured.
    pub ratios: Vec<Option<f64>>,
}

/// Per-benchmark counts divided by the baseline ISA's count, with the
/// geometric mean of each ISA column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub baseline: String,
    pub isas: Vec<String>,
    pub benchmarks: Vec<BenchmarkRatios>,
    pub geomeans: Vec<Option<f64>>,
}

/// Normalizes every benchmark to `baseline`.
pub fn normalize(table: &IsaCountTable, baseline: &str) -> Result<Comparison, MetricsError> {
    let isas = table.isas();
    let mut benchmarks = Vec::new();
    for bench in table.benchmarks() {
        let base = table.get(bench, baseline).ok_or_else(|| MetricsError::MissingBaseline {
            benchmark: bench.to_string(),
            baseline: baseline.to_string(),
        })?;
        let ratios = isas.iter().map(|isa| table.get(bench, isa).map(|c| c / base)).collect();
        benchmarks.push(BenchmarkRatios { benchmark: bench.to_string(), ratios });
    }
    if benchmarks.is_empty() {
        return Err(MetricsError::MissingBaseline { benchmark: "(none)".into(), baseline: baseline.to_string() });
    }
    let geomeans = (0..isas.len())
        .map(|col| {
            let column: Vec<f64> = benchmarks.iter().filter_map(|b| b.ratios[col]).collect();
            geomean(&column).ok()
        })
        .collect();
    Ok(Comparison {
        baseline: baseline.to_string(),
        isas: isas.into_iter().map(str::to_string).collect(),
        benchmarks,
        geomeans,
    })
}

/// ARMv8 memory instructions by category, as percentages of all
/// instructions: plain, post-indexed (`ia`) and pair (`p`) loads and
/// stores.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ArmMemoryMix {
    pub ld: f64,
    pub ldia: f64,
    pub ldp: f64,
    pub ldpia: f64,
    pub st: f64,
    pub stia: f64,
    pub stp: f64,
    pub stpia: f64,
}

#[derive(Deserialize)]
struct ArmRow {
    benchmark: String,
    ld: f64,
    ldia: f64,
    ldp: f64,
    ldpia: f64,
    st: f64,
    stia: f64,
    stp: f64,
    stpia: f64,
}

impl ArmMemoryMix {
    /// Reads CSV with the header
    /// `benchmark,ld,ldia,ldp,ldpia,st,stia,stp,stpia`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Vec<(String, ArmMemoryMix)>, MetricsError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut out = Vec::new();
        for row in rdr.deserialize::<ArmRow>() {
            let r = row?;
            let mix = ArmMemoryMix {
                ld: r.ld,
                ldia: r.ldia,
                ldp: r.ldp,
                ldpia: r.ldpia,
                st: r.st,
                stia: r.stia,
                stp: r.stp,
                stpia: r.stpia,
            };
            out.push((r.benchmark, mix));
        }
        Ok(out)
    }
}
