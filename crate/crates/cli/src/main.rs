//! `rvfuse`: macro-op fusion and instruction-count analysis of RV64GC
//! traces.
//!
//! Exit status: 0 on success, 1 when an input fails to parse or validate,
//! 2 for bad command-line flags.

mod commands;
mod render;

use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rvfuse::fusion::{FusionConfig, IdiomKind, Selection};

use commands::{Failure, Input, InputFormat};
use render::OutFormat;

#[derive(Parser)]
#[command(name = "rvfuse", version, about = "Macro-op fusion and dynamic instruction-count analysis for RV64GC traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Counts, bytes, selected fusions, per-idiom reductions and the CDF.
    Analyze {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        fusion: FusionArgs,
        /// Ranks in the CDF.
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        top: u64,
        /// Add a cross-ISA comparison from a `benchmark,isa,count` CSV.
        #[arg(long, value_name = "CSV")]
        counts: Option<PathBuf>,
        /// ISA the comparison is normalized to.
        #[arg(long, default_value = "x86-64")]
        baseline: String,
    },
    /// Pairs that would fuse after renaming one destination register.
    Nearmiss {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        fusion: FusionArgs,
    },
    /// Per-benchmark instruction counts normalized to a baseline ISA.
    Compare {
        /// A `benchmark,isa,count` CSV.
        #[arg(long, value_name = "CSV")]
        counts: PathBuf,
        #[arg(long, default_value = "x86-64")]
        baseline: String,
        #[arg(long, value_enum)]
        out: Option<Out>,
    },
    /// Cumulative share of the dynamic count covered by the most executed
    /// static instructions.
    Cdf {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        top: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Trace,
    Asm,
    /// Same as `--out json`.
    Json,
    /// Same as `--out csv`.
    Csv,
    /// Same as `--out md`.
    Md,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Out {
    Json,
    Csv,
    Md,
}

impl From<Out> for OutFormat {
    fn from(o: Out) -> Self {
        match o {
            Out::Json => OutFormat::Json,
            Out::Csv => OutFormat::Csv,
            Out::Md => OutFormat::Md,
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// Trace file, or `-` for standard input.
    #[arg(value_name = "INPUT", required_unless_present = "input", conflicts_with = "input")]
    path: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    /// Input format (inferred from the extension when absent). The output
    /// formats are accepted as aliases for `--out`.
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, value_enum)]
    out: Option<Out>,
}

#[derive(Args)]
struct FusionArgs {
    /// Comma-separated idiom names, `all`, `none` or `default`; `-name`
    /// removes a name.
    #[arg(long, default_value = "default", value_parser = parse_idioms)]
    idioms: BTreeSet<IdiomKind>,
    /// Allow idioms whose fused operation writes two registers.
    #[arg(long)]
    multi_writeback: bool,
    /// How overlapping candidates are resolved.
    #[arg(long, default_value = "greedy", value_parser = parse_selection)]
    selection: Selection,
}

fn parse_idioms(s: &str) -> Result<BTreeSet<IdiomKind>, String> {
    FusionConfig::parse_idioms(s).map_err(|e| e.to_string())
}

fn parse_selection(s: &str) -> Result<Selection, String> {
    s.parse().map_err(|e: rvfuse::fusion::ConfigError| e.to_string())
}

impl FusionArgs {
    fn config(&self) -> FusionConfig {
        FusionConfig::with_enabled(self.idioms.iter().copied())
            .multi_writeback(self.multi_writeback)
            .selection(self.selection)
    }
}

enum Error {
    Usage(String),
    Failure(Failure),
}

impl From<Failure> for Error {
    fn from(f: Failure) -> Self {
        Error::Failure(f)
    }
}

impl InputArgs {
    fn resolve(&self, default_out: Out) -> Result<(Input<'_>, OutFormat), Error> {
        let path = self.path.as_deref().or(self.input.as_deref()).expect("clap requires an input");
        let alias = match self.format {
            Some(Format::Json) => Some(Out::Json),
            Some(Format::Csv) => Some(Out::Csv),
            Some(Format::Md) => Some(Out::Md),
            _ => None,
        };
        let out = match (alias, self.out) {
            (Some(a), Some(o)) if a != o => {
                return Err(Error::Usage("--format and --out name different output formats".into()))
            }
            (a, o) => o.or(a).unwrap_or(default_out),
        };
        let format = match self.format {
            Some(Format::Trace) => InputFormat::Trace,
            Some(Format::Asm) => InputFormat::Asm,
            _ => InputFormat::infer(path),
        };
        Ok((Input { path, format }, out.into()))
    }
}

fn run(command: Command) -> Result<String, Error> {
    let (sections, out) = match command {
        Command::Analyze { input, fusion, top, counts, baseline } => {
            let (input, out) = input.resolve(Out::Json)?;
            let table = counts.as_deref().map(commands::load_counts).transpose()?;
            let counts = table.as_ref().map(|t| (t, baseline.as_str()));
            (commands::analyze(&input, &fusion.config(), top as usize, counts)?, out)
        }
        Command::Nearmiss { input, fusion } => {
            let (input, out) = input.resolve(Out::Md)?;
            (commands::nearmiss(&input, &fusion.config())?, out)
        }
        Command::Compare { counts, baseline, out } => {
            let table = commands::load_counts(&counts)?;
            (commands::compare(&table, &baseline)?, out.unwrap_or(Out::Md).into())
        }
        Command::Cdf { input, top } => {
            let (input, out) = input.resolve(Out::Csv)?;
            (commands::cdf_only(&input, top as usize)?, out)
        }
    };
    Ok(render::render(&sections, out))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli.command) {
        Ok(text) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(Error::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Error::Failure(Failure(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
