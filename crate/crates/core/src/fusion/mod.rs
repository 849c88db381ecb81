//! Macro-op fusion idioms over straight-line blocks.
//!
//! [`match_at`] tests one idiom at one position, [`select_fusions`] picks a
//! non-overlapping set (greedily from the left unless configured
//! otherwise), and [`near_misses`] finds
//! pairs that would fuse if the first instruction wrote the second one's
//! destination instead. [`FusionStats`] aggregates the selections.

mod liveness;
mod patterns;
mod select;
mod stats;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

pub use liveness::{liveness, RegSet};
pub use patterns::{match_at, PatternMatch};
pub use select::{near_misses, near_misses_excluding, select_fusions};
pub use stats::{fusion_stats, FusionStats, IdiomStats};

use crate::decoder::Reg;

macro_rules! idioms {
    ($($variant:ident => $name:literal, $arity:literal;)*) => {
        /// A fusible instruction idiom.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
        #[serde(into = "&'static str")]
        pub enum IdiomKind {
            $($variant,)*
        }

        impl IdiomKind {
            /// All kinds in declaration order.
            pub const ALL: &'static [IdiomKind] = &[$(IdiomKind::$variant,)*];

            /// The lowercase command-line name.
            pub fn name(self) -> &'static str {
                match self {
                    $(IdiomKind::$variant => $name,)*
                }
            }

            /// Number of instructions the idiom fuses.
            pub fn arity(self) -> usize {
                match self {
                    $(IdiomKind::$variant => $arity,)*
                }
            }
        }
    };
}

idioms! {
    Lea => "lea", 2;
    IndexedLoad => "indexed-load", 2;
    IndexedLoadLong => "indexed-load-long", 3;
    ClearUpperWord => "clear-upper-word", 2;
    ClearUpperShift => "clear-upper-shift", 2;
    LuiImmOp => "lui-immop", 2;
    LuiLoad => "lui-load", 2;
    AuipcLoad => "auipc-load", 2;
    AuipcJalr => "auipc-jalr", 2;
    MulhMul => "mulh-mul", 2;
    DivRem => "div-rem", 2;
    LoadPair => "load-pair", 2;
    StorePair => "store-pair", 2;
    PostIndexedLoad => "post-indexed-load", 2;
    PostIndexedStore => "post-indexed-store", 2;
}

impl IdiomKind {
    /// Kinds whose fused operation writes two registers. They only take
    /// part when [`FusionConfig::allow_multi_writeback`] is set.
    pub fn needs_multi_writeback(self) -> bool {
        use IdiomKind::*;
        matches!(self, MulhMul | DivRem | LoadPair | PostIndexedLoad)
    }

    /// Kinds where the second instruction overwrites the first one's
    /// destination, leaving exactly one architectural write.
    pub fn is_single_write(self) -> bool {
        use IdiomKind::*;
        matches!(
            self,
            Lea | IndexedLoad | IndexedLoadLong | ClearUpperWord | ClearUpperShift | LuiImmOp | LuiLoad | AuipcLoad
        )
    }

    pub fn from_name(name: &str) -> Option<IdiomKind> {
        IdiomKind::ALL.iter().copied().find(|k| k.name() == name)
    }
}

impl From<IdiomKind> for &'static str {
    fn from(kind: IdiomKind) -> &'static str {
        kind.name()
    }
}

impl fmt::Display for IdiomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("unknown idiom `{0}`")]
    UnknownIdiom(String),
    #[error("priority list must name every idiom exactly once")]
    BadPriority,
    #[error("unknown selection strategy `{0}` (expected greedy or max-savings)")]
    UnknownSelection(String),
}

impl FromStr for IdiomKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IdiomKind::from_name(s).ok_or_else(|| ConfigError::UnknownIdiom(s.to_string()))
    }
}

/// How overlapping candidates are resolved within a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    /// Scan left to right; at each free position the first matching kind
    /// in priority order wins.
    #[default]
    Greedy,
    /// Pick the non-overlapping set that removes the most dynamic
    /// instructions. Ties prefer the greedy choice at the leftmost
    /// position.
    MaxSavings,
}

impl FromStr for Selection {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy" => Ok(Selection::Greedy),
            "max-savings" => Ok(Selection::MaxSavings),
            other => Err(ConfigError::UnknownSelection(other.to_string())),
        }
    }
}

/// Which idioms are considered and in what order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FusionConfig {
    pub enabled: BTreeSet<IdiomKind>,
    pub allow_multi_writeback: bool,
    /// Every kind, in the order they are tried at each position.
    pub priority: Vec<IdiomKind>,
    pub selection: Selection,
}

impl Default for FusionConfig {
    /// The load-effective-address, indexed-load and clear-upper-word idioms.
    fn default() -> Self {
        use IdiomKind::*;
        FusionConfig::with_enabled([Lea, IndexedLoad, IndexedLoadLong, ClearUpperWord])
    }
}

impl FusionConfig {
    /// The 3-instruction form first, then declaration order.
    pub fn default_priority() -> Vec<IdiomKind> {
        let mut order = vec![IdiomKind::IndexedLoadLong];
        order.extend(IdiomKind::ALL.iter().copied().filter(|k| *k != IdiomKind::IndexedLoadLong));
        order
    }

    pub fn with_enabled(kinds: impl IntoIterator<Item = IdiomKind>) -> Self {
        FusionConfig {
            enabled: kinds.into_iter().collect(),
            allow_multi_writeback: false,
            priority: FusionConfig::default_priority(),
            selection: Selection::Greedy,
        }
    }

    pub fn all() -> Self {
        FusionConfig::with_enabled(IdiomKind::ALL.iter().copied())
    }

    pub fn none() -> Self {
        FusionConfig::with_enabled([])
    }

    pub fn multi_writeback(mut self, allow: bool) -> Self {
        self.allow_multi_writeback = allow;
        self
    }

    pub fn selection(mut self, selection: Selection) -> Self {
        self.selection = selection;
        self
    }

    /// Replaces the priority order; it must be a permutation of all kinds.
    pub fn with_priority(mut self, priority: Vec<IdiomKind>) -> Result<Self, ConfigError> {
        let distinct: BTreeSet<_> = priority.iter().collect();
        if priority.len() != IdiomKind::ALL.len() || distinct.len() != priority.len() {
            return Err(ConfigError::BadPriority);
        }
        self.priority = priority;
        Ok(self)
    }

    /// Parses an idiom list: `all`, `none`, `default`, or comma-separated
    /// names. A leading `-` removes a name from the set built so far, so
    /// `default,-lea` is the default set without LEA.
    pub fn parse_idioms(spec: &str) -> Result<BTreeSet<IdiomKind>, ConfigError> {
        let mut set = BTreeSet::new();
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (remove, name) = match item.strip_prefix('-') {
                Some(n) => (true, n),
                None => (false, item),
            };
            let kinds: Vec<IdiomKind> = match name {
                "all" => IdiomKind::ALL.to_vec(),
                "none" => vec![],
                "default" => FusionConfig::default().enabled.into_iter().collect(),
                other => vec![other.parse()?],
            };
            if name == "none" && !remove {
                set.clear();
            }
            for k in kinds {
                if remove {
                    set.remove(&k);
                } else {
                    set.insert(k);
                }
            }
        }
        Ok(set)
    }

    /// Whether `kind` takes part in selection under this config.
    pub fn is_active(&self, kind: IdiomKind) -> bool {
        self.enabled.contains(&kind) && (self.allow_multi_writeback || !kind.needs_multi_writeback())
    }

    /// Active kinds in priority order.
    pub fn active(&self) -> impl Iterator<Item = IdiomKind> + '_ {
        self.priority.iter().copied().filter(|k| self.is_active(*k))
    }
}

/// A selected fusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FusionMatch {
    pub block_index: usize,
    /// Index of the first member within the block.
    pub start: usize,
    pub arity: usize,
    pub kind: IdiomKind,
    /// Smallest execution count among the members.
    pub weight: u64,
    /// Architectural register writes of the fused operation.
    pub writebacks: u8,
}

impl FusionMatch {
    /// Dynamic instructions removed by this fusion.
    pub fn saved(&self) -> u64 {
        self.weight * (self.arity as u64 - 1)
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.arity
    }
}

/// A pair that would fuse if the first instruction's destination were
/// renamed to the second instruction's destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NearMiss {
    pub block_index: usize,
    pub start: usize,
    pub kind: IdiomKind,
    /// Destination of the first instruction. It is dead after the pair.
    pub blocking_register: Reg,
    /// Destination of the second instruction; the first should write it.
    pub suggested_rename: Reg,
    pub weight: u64,
}
