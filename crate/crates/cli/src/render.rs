//! Output model shared by every command, and its json/csv/md renderings.
//!
//! Numbers are formatted once (fixed decimals) and the same text is used
//! in all three formats, so they always agree.

use std::fmt::Write as _;

use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutFormat {
    Json,
    Csv,
    Md,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    /// A value and its number of decimal places.
    Fixed(f64, usize),
    Text(String),
    Null,
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Cell {
        Cell::Text(s.into())
    }

    pub fn hex(v: u64) -> Cell {
        Cell::Text(format!("{v:#x}"))
    }

    fn plain(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Fixed(v, dp) => format!("{v:.dp$}"),
            Cell::Text(s) => s.clone(),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Fixed(v, _) if !v.is_finite() => Value::Null,
            Cell::Fixed(..) => {
                Value::Number(self.plain().parse::<Number>().expect("fixed-point text is a JSON number"))
            }
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Null => Value::Null,
        }
    }
}

/// A named table. A `record` section has exactly one row and renders as
/// an object (json) or `field: value` lines (md).
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: &'static str,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub record: bool,
}

impl Section {
    pub fn table(name: &'static str, columns: impl IntoIterator<Item = impl Into<String>>) -> Section {
        Section { name, columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new(), record: false }
    }

    pub fn record(name: &'static str, fields: impl IntoIterator<Item = (&'static str, Cell)>) -> Section {
        let (columns, row): (Vec<String>, Vec<Cell>) = fields.into_iter().map(|(k, v)| (k.to_string(), v)).unzip();
        Section { name, columns, rows: vec![row], record: true }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

pub fn render(sections: &[Section], format: OutFormat) -> String {
    match format {
        OutFormat::Json => json(sections),
        OutFormat::Csv => csv(sections),
        OutFormat::Md => md(sections),
    }
}

fn json(sections: &[Section]) -> String {
    let object = |cols: &[String], row: &[Cell]| -> Value {
        Value::Object(cols.iter().cloned().zip(row.iter().map(Cell::json)).collect::<Map<_, _>>())
    };
    let mut top = Map::new();
    for s in sections {
        let value = if s.record {
            object(&s.columns, &s.rows[0])
        } else {
            Value::Array(s.rows.iter().map(|r| object(&s.columns, r)).collect())
        };
        top.insert(s.name.to_string(), value);
    }
    let mut out = serde_json::to_string_pretty(&Value::Object(top)).expect("JSON values always serialize");
    out.push('\n');
    out
}

/// One section renders as a plain table; several render in long form
/// (`section,row,field,value`) so the output stays a single CSV table.
fn csv(sections: &[Section]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let result = match sections {
        [only] => (|| {
            w.write_record(&only.columns)?;
            for row in &only.rows {
                w.write_record(row.iter().map(Cell::plain))?;
            }
            Ok::<_, csv::Error>(())
        })(),
        _ => (|| {
            w.write_record(["section", "row", "field", "value"])?;
            for s in sections {
                for (i, row) in s.rows.iter().enumerate() {
                    for (col, cell) in s.columns.iter().zip(row) {
                        w.write_record([s.name, &(i + 1).to_string(), col, &cell.plain()])?;
                    }
                }
            }
            Ok(())
        })(),
    };
    result.expect("writing CSV to memory cannot fail");
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("CSV input was UTF-8")
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|")
}

fn md(sections: &[Section]) -> String {
    let mut out = String::new();
    for (n, s) in sections.iter().enumerate() {
        if n > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "## {}\n", s.name);
        if s.record {
            for (col, cell) in s.columns.iter().zip(&s.rows[0]) {
                let text = match cell {
                    Cell::Null => "-".to_string(),
                    c => md_escape(&c.plain()),
                };
                let _ = writeln!(out, "- {col}: {text}");
            }
            continue;
        }
        let _ = writeln!(out, "| {} |", s.columns.join(" | "));
        let _ = writeln!(out, "|{}", "---|".repeat(s.columns.len()));
        for row in &s.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Null => "-".to_string(),
                    c => md_escape(&c.plain()),
                })
                .collect();
            let _ = writeln!(out, "| {} |", cells.join(" | "));
        }
        if s.rows.is_empty() {
            let _ = writeln!(out, "\n(none)");
        }
    }
    out
}
