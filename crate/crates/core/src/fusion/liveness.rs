use std::fmt;

use crate::decoder::{Instruction, Reg};
use crate::trace::Block;

/// A set of integer registers. `x0` is never a member.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RegSet(u32);

impl RegSet {
    pub const EMPTY: RegSet = RegSet(0);
    /// Every register except `x0`.
    pub const ALL: RegSet = RegSet(!1);

    pub fn contains(self, r: Reg) -> bool {
        self.0 & (1 << r.index()) != 0
    }

    pub fn insert(&mut self, r: Reg) {
        self.0 |= (1 << r.index()) & !1;
    }

    pub fn remove(&mut self, r: Reg) {
        self.0 &= !(1 << r.index());
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Reg> {
        (1..32u8).filter(move |i| self.0 & (1 << i) != 0).filter_map(Reg::new)
    }
}

impl FromIterator<Reg> for RegSet {
    fn from_iter<I: IntoIterator<Item = Reg>>(iter: I) -> Self {
        let mut s = RegSet::EMPTY;
        for r in iter {
            s.insert(r);
        }
        s
    }
}

impl fmt::Debug for RegSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|r| r.abi_name())).finish()
    }
}

/// Integer registers the instruction reads. Opaque instructions read all.
pub(crate) fn uses(i: &Instruction) -> RegSet {
    match i.int_sources() {
        Some(srcs) => srcs.collect(),
        None => RegSet::ALL,
    }
}

/// Integer registers live before each instruction of `block`, by backward
/// dataflow. The result has one extra trailing entry, the live-out set,
/// which is every register because successors are unknown.
pub fn liveness(block: &Block) -> Vec<RegSet> {
    let mut live = vec![RegSet::ALL; block.len() + 1];
    for (k, item) in block.items.iter().enumerate().rev() {
        let mut before = live[k + 1];
        if let Some(rd) = item.instr.int_dest() {
            before.remove(rd);
        }
        live[k] = RegSet(before.0 | uses(&item.instr).0);
    }
    live
}
