//! RV64GC decoding at the granularity needed for fusion analysis.
//!
//! Integer ALU, M-extension, load/store, control-flow and FP load/store
//! encodings are decoded into an [`Instruction`] with explicit register and
//! immediate fields. Everything else (FP arithmetic, atomics, CSR, fences)
//! decodes to [`Opcode::Other`] with the raw bits preserved. Decoding never
//! fails on arbitrary input; only [`instr_length`] rejects encodings reserved
//! for instructions longer than four bytes.

mod asm;
mod encode;
mod rvc;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use asm::{assemble_at, assemble_line, disassemble, AsmError};
pub use encode::encode32;
pub use rvc::{decode16, encode16, rvc_form, RvcForm};

/// An integer or floating-point register index in `0..32`.
///
/// Which register file an index refers to is a property of the opcode and
/// operand position, see [`Instruction::int_dest`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Reg(u8);

const ABI_NAMES: [&str; 32] = [
    "zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2", "s0", "s1", "a0", "a1", "a2", "a3", "a4", "a5", "a6", "a7", "s2",
    "s3", "s4", "s5", "s6", "s7", "s8", "s9", "s10", "s11", "t3", "t4", "t5", "t6",
];

const FP_ABI_NAMES: [&str; 32] = [
    "ft0", "ft1", "ft2", "ft3", "ft4", "ft5", "ft6", "ft7", "fs0", "fs1", "fa0", "fa1", "fa2", "fa3", "fa4", "fa5",
    "fa6", "fa7", "fs2", "fs3", "fs4", "fs5", "fs6", "fs7", "fs8", "fs9", "fs10", "fs11", "ft8", "ft9", "ft10", "ft11",
];

impl Reg {
    pub const ZERO: Reg = Reg(0);
    pub const RA: Reg = Reg(1);
    pub const SP: Reg = Reg(2);

    pub fn new(index: u8) -> Option<Reg> {
        (index < 32).then_some(Reg(index))
    }

    /// Builds a register from a 5-bit field; higher bits are masked off.
    pub(crate) fn from_field(bits: u32) -> Reg {
        Reg((bits & 0x1f) as u8)
    }

    /// One of the eight registers addressable by 3-bit RVC fields (x8..x15).
    pub(crate) fn from_compact(bits: u32) -> Reg {
        Reg(8 + (bits & 0x7) as u8)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Whether the register can be named by a 3-bit RVC field.
    pub fn is_compact(self) -> bool {
        (8..16).contains(&self.0)
    }

    pub fn abi_name(self) -> &'static str {
        ABI_NAMES[self.0 as usize]
    }

    pub fn fp_abi_name(self) -> &'static str {
        FP_ABI_NAMES[self.0 as usize]
    }

    /// Parses `xN`, an integer ABI name, or `fp` (alias of `s0`).
    pub fn parse_int(name: &str) -> Option<Reg> {
        if name == "fp" {
            return Some(Reg(8));
        }
        if let Some(pos) = ABI_NAMES.iter().position(|n| *n == name) {
            return Some(Reg(pos as u8));
        }
        parse_numbered(name, 'x')
    }

    /// Parses `fN` or an FP ABI name.
    pub fn parse_fp(name: &str) -> Option<Reg> {
        if let Some(pos) = FP_ABI_NAMES.iter().position(|n| *n == name) {
            return Some(Reg(pos as u8));
        }
        parse_numbered(name, 'f')
    }
}

fn parse_numbered(name: &str, prefix: char) -> Option<Reg> {
    let digits = name.strip_prefix(prefix)?;
    if digits.is_empty() || (digits.len() > 1 && digits.starts_with('0')) {
        return None;
    }
    digits.parse::<u8>().ok().and_then(Reg::new)
}

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abi_name())
    }
}

/// Coarse instruction classes used by the analyses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum OpClass {
    IntRegReg,
    IntRegImm,
    Load,
    Store,
    Branch,
    Jal,
    Jalr,
    Lui,
    Auipc,
    Mul,
    Div,
    FpLoad,
    FpStore,
    Other,
}

macro_rules! opcodes {
    ($($variant:ident => $name:literal, $class:ident;)*) => {
        /// Every operation the decoder distinguishes.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
        pub enum Opcode {
            $($variant,)*
        }

        impl Opcode {
            pub const ALL: &'static [Opcode] = &[$(Opcode::$variant,)*];

            pub fn mnemonic(self) -> &'static str {
                match self {
                    $(Opcode::$variant => $name,)*
                }
            }

            pub fn class(self) -> OpClass {
                match self {
                    $(Opcode::$variant => OpClass::$class,)*
                }
            }

            pub fn from_mnemonic(name: &str) -> Option<Opcode> {
                match name {
                    $($name => Some(Opcode::$variant),)*
                    _ => None,
                }
            }
        }
    };
}

opcodes! {
    Add => "add", IntRegReg;
    Sub => "sub", IntRegReg;
    Sll => "sll", IntRegReg;
    Slt => "slt", IntRegReg;
    Sltu => "sltu", IntRegReg;
    Xor => "xor", IntRegReg;
    Srl => "srl", IntRegReg;
    Sra => "sra", IntRegReg;
    Or => "or", IntRegReg;
    And => "and", IntRegReg;
    Addw => "addw", IntRegReg;
    Subw => "subw", IntRegReg;
    Sllw => "sllw", IntRegReg;
    Srlw => "srlw", IntRegReg;
    Sraw => "sraw", IntRegReg;
    Addi => "addi", IntRegImm;
    Slti => "slti", IntRegImm;
    Sltiu => "sltiu", IntRegImm;
    Xori => "xori", IntRegImm;
    Ori => "ori", IntRegImm;
    Andi => "andi", IntRegImm;
    Slli => "slli", IntRegImm;
    Srli => "srli", IntRegImm;
    Srai => "srai", IntRegImm;
    Addiw => "addiw", IntRegImm;
    Slliw => "slliw", IntRegImm;
    Srliw => "srliw", IntRegImm;
    Sraiw => "sraiw", IntRegImm;
    Lb => "lb", Load;
    Lh => "lh", Load;
    Lw => "lw", Load;
    Ld => "ld", Load;
    Lbu => "lbu", Load;
    Lhu => "lhu", Load;
    Lwu => "lwu", Load;
    Sb => "sb", Store;
    Sh => "sh", Store;
    Sw => "sw", Store;
    Sd => "sd", Store;
    Beq => "beq", Branch;
    Bne => "bne", Branch;
    Blt => "blt", Branch;
    Bge => "bge", Branch;
    Bltu => "bltu", Branch;
    Bgeu => "bgeu", Branch;
    Jal => "jal", Jal;
    Jalr => "jalr", Jalr;
    Lui => "lui", Lui;
    Auipc => "auipc", Auipc;
    Mul => "mul", Mul;
    Mulh => "mulh", Mul;
    Mulhsu => "mulhsu", Mul;
    Mulhu => "mulhu", Mul;
    Mulw => "mulw", Mul;
    Div => "div", Div;
    Divu => "divu", Div;
    Rem => "rem", Div;
    Remu => "remu", Div;
    Divw => "divw", Div;
    Divuw => "divuw", Div;
    Remw => "remw", Div;
    Remuw => "remuw", Div;
    Flw => "flw", FpLoad;
    Fld => "fld", FpLoad;
    Fsw => "fsw", FpStore;
    Fsd => "fsd", FpStore;
    Other => "other", Other;
}

impl Opcode {
    /// Size in bytes of the memory access, for loads and stores.
    pub fn access_size(self) -> Option<u8> {
        use Opcode::*;
        match self {
            Lb | Lbu | Sb => Some(1),
            Lh | Lhu | Sh => Some(2),
            Lw | Lwu | Sw | Flw | Fsw => Some(4),
            Ld | Sd | Fld | Fsd => Some(8),
            _ => None,
        }
    }

    pub fn is_load(self) -> bool {
        matches!(self.class(), OpClass::Load | OpClass::FpLoad)
    }

    pub fn is_store(self) -> bool {
        matches!(self.class(), OpClass::Store | OpClass::FpStore)
    }

    pub fn is_control_flow(self) -> bool {
        matches!(self.class(), OpClass::Branch | OpClass::Jal | OpClass::Jalr)
    }

    /// Operand shape used by the assembler, encoder and disassembler.
    pub(crate) fn format(self) -> Format {
        use Opcode::*;
        match self.class() {
            OpClass::IntRegReg | OpClass::Mul | OpClass::Div => Format::R,
            OpClass::IntRegImm => match self {
                Slli | Srli | Srai => Format::Shift(6),
                Slliw | Srliw | Sraiw => Format::Shift(5),
                _ => Format::I,
            },
            OpClass::Load | OpClass::FpLoad => Format::Load,
            OpClass::Store | OpClass::FpStore => Format::Store,
            OpClass::Branch => Format::B,
            OpClass::Jal => Format::J,
            OpClass::Jalr => Format::Load,
            OpClass::Lui | OpClass::Auipc => Format::U,
            OpClass::Other => Format::Opaque,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Format {
    R,
    I,
    Shift(u8),
    Load,
    Store,
    B,
    J,
    U,
    Opaque,
}

/// A decoded instruction.
///
/// `imm` holds the sign-extended immediate as the hardware sees it: byte
/// offsets for branches and jumps, `imm << 12` for `lui`/`auipc`, the shift
/// amount for shift-immediates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Instruction {
    pub op: Opcode,
    pub rd: Option<Reg>,
    pub rs1: Option<Reg>,
    pub rs2: Option<Reg>,
    pub imm: Option<i64>,
    /// Encoded length in bytes: 2 for RVC, 4 otherwise.
    pub len: u8,
    pub raw: u32,
}

impl Instruction {
    pub fn other(raw: u32, len: u8) -> Instruction {
        Instruction { op: Opcode::Other, rd: None, rs1: None, rs2: None, imm: None, len, raw }
    }

    pub fn class(&self) -> OpClass {
        self.op.class()
    }

    pub fn is_compressed(&self) -> bool {
        self.len == 2
    }

    /// Whether opcode, registers and immediate agree; length and raw bits
    /// are ignored.
    pub fn same_semantics(&self, other: &Instruction) -> bool {
        self.op == other.op
            && self.rd == other.rd
            && self.rs1 == other.rs1
            && self.rs2 == other.rs2
            && self.imm == other.imm
    }

    /// Destination in the integer register file (FP loads write the FP file).
    pub fn int_dest(&self) -> Option<Reg> {
        match self.class() {
            OpClass::FpLoad => None,
            _ => self.rd,
        }
    }

    /// Integer registers read by this instruction. `None` for opaque
    /// instructions, whose reads are unknown.
    pub fn int_sources(&self) -> Option<impl Iterator<Item = Reg>> {
        let (a, b) = match self.class() {
            OpClass::Other => return None,
            OpClass::FpStore => (self.rs1, None),
            _ => (self.rs1, self.rs2),
        };
        Some(a.into_iter().chain(b))
    }

    pub fn reads_int(&self, reg: Reg) -> bool {
        match self.int_sources() {
            Some(mut srcs) => srcs.any(|r| r == reg),
            None => true,
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&disassemble(self))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LengthError {
    #[error("encoding {0:#06x} is reserved for instructions longer than 4 bytes")]
    LongEncoding(u16),
}

/// Length in bytes of the instruction whose first halfword is given.
pub fn instr_length(first_halfword: u16) -> Result<u8, LengthError> {
    if first_halfword & 0b11 != 0b11 {
        Ok(2)
    } else if first_halfword & 0b1_1100 == 0b1_1100 {
        Err(LengthError::LongEncoding(first_halfword))
    } else {
        Ok(4)
    }
}

/// Decodes either a 16-bit or a 32-bit encoding based on its low bits.
pub fn decode(raw: u32) -> Result<Instruction, LengthError> {
    match instr_length(raw as u16)? {
        2 => Ok(decode16(raw as u16)),
        _ => Ok(decode32(raw)),
    }
}

fn sext(value: u64, bits: u32) -> i64 {
    let shift = 64 - bits;
    ((value << shift) as i64) >> shift
}

pub(crate) fn sext32(value: u32, bits: u32) -> i64 {
    sext(value as u64, bits)
}

/// Decodes a 4-byte encoding. Unknown encodings map to [`Opcode::Other`].
pub fn decode32(word: u32) -> Instruction {
    use Opcode::*;
    let opcode = word & 0x7f;
    let rd = Reg::from_field(word >> 7);
    let funct3 = (word >> 12) & 0x7;
    let rs1 = Reg::from_field(word >> 15);
    let rs2 = Reg::from_field(word >> 20);
    let funct7 = word >> 25;
    let i_imm = sext32(word >> 20, 12);
    let s_imm = sext32(((word >> 25) << 5) | ((word >> 7) & 0x1f), 12);

    let r = |op| Instruction { op, rd: Some(rd), rs1: Some(rs1), rs2: Some(rs2), imm: None, len: 4, raw: word };
    let i = |op, imm| Instruction { op, rd: Some(rd), rs1: Some(rs1), rs2: None, imm: Some(imm), len: 4, raw: word };
    let other = Instruction::other(word, 4);

    match opcode {
        0x33 => {
            let op = match (funct7, funct3) {
                (0x00, 0) => Add,
                (0x20, 0) => Sub,
                (0x00, 1) => Sll,
                (0x00, 2) => Slt,
                (0x00, 3) => Sltu,
                (0x00, 4) => Xor,
                (0x00, 5) => Srl,
                (0x20, 5) => Sra,
                (0x00, 6) => Or,
                (0x00, 7) => And,
                (0x01, 0) => Mul,
                (0x01, 1) => Mulh,
                (0x01, 2) => Mulhsu,
                (0x01, 3) => Mulhu,
                (0x01, 4) => Div,
                (0x01, 5) => Divu,
                (0x01, 6) => Rem,
                (0x01, 7) => Remu,
                _ => return other,
            };
            r(op)
        }
        0x3b => {
            let op = match (funct7, funct3) {
                (0x00, 0) => Addw,
                (0x20, 0) => Subw,
                (0x00, 1) => Sllw,
                (0x00, 5) => Srlw,
                (0x20, 5) => Sraw,
                (0x01, 0) => Mulw,
                (0x01, 4) => Divw,
                (0x01, 5) => Divuw,
                (0x01, 6) => Remw,
                (0x01, 7) => Remuw,
                _ => return other,
            };
            r(op)
        }
        0x13 => {
            let shamt = ((word >> 20) & 0x3f) as i64;
            let funct6 = word >> 26;
            match funct3 {
                0 => i(Addi, i_imm),
                2 => i(Slti, i_imm),
                3 => i(Sltiu, i_imm),
                4 => i(Xori, i_imm),
                6 => i(Ori, i_imm),
                7 => i(Andi, i_imm),
                1 if funct6 == 0 => i(Slli, shamt),
                5 if funct6 == 0 => i(Srli, shamt),
                5 if funct6 == 0x10 => i(Srai, shamt),
                _ => other,
            }
        }
        0x1b => {
            let shamt = ((word >> 20) & 0x1f) as i64;
            match (funct3, funct7) {
                (0, _) => i(Addiw, i_imm),
                (1, 0x00) => i(Slliw, shamt),
                (5, 0x00) => i(Srliw, shamt),
                (5, 0x20) => i(Sraiw, shamt),
                _ => other,
            }
        }
        0x03 => {
            let op = match funct3 {
                0 => Lb,
                1 => Lh,
                2 => Lw,
                3 => Ld,
                4 => Lbu,
                5 => Lhu,
                6 => Lwu,
                _ => return other,
            };
            i(op, i_imm)
        }
        0x07 => {
            let op = match funct3 {
                2 => Flw,
                3 => Fld,
                _ => return other,
            };
            i(op, i_imm)
        }
        0x23 | 0x27 => {
            let op = match (opcode, funct3) {
                (0x23, 0) => Sb,
                (0x23, 1) => Sh,
                (0x23, 2) => Sw,
                (0x23, 3) => Sd,
                (0x27, 2) => Fsw,
                (0x27, 3) => Fsd,
                _ => return other,
            };
            Instruction { op, rd: None, rs1: Some(rs1), rs2: Some(rs2), imm: Some(s_imm), len: 4, raw: word }
        }
        0x63 => {
            let op = match funct3 {
                0 => Beq,
                1 => Bne,
                4 => Blt,
                5 => Bge,
                6 => Bltu,
                7 => Bgeu,
                _ => return other,
            };
            let imm = ((word >> 31) & 1) << 12
                | ((word >> 7) & 1) << 11
                | ((word >> 25) & 0x3f) << 5
                | ((word >> 8) & 0xf) << 1;
            Instruction { op, rd: None, rs1: Some(rs1), rs2: Some(rs2), imm: Some(sext32(imm, 13)), len: 4, raw: word }
        }
        0x6f => {
            let imm = ((word >> 31) & 1) << 20
                | ((word >> 12) & 0xff) << 12
                | ((word >> 20) & 1) << 11
                | ((word >> 21) & 0x3ff) << 1;
            Instruction { op: Jal, rd: Some(rd), rs1: None, rs2: None, imm: Some(sext32(imm, 21)), len: 4, raw: word }
        }
        0x67 if funct3 == 0 => i(Jalr, i_imm),
        0x37 | 0x17 => {
            let op = if opcode == 0x37 { Lui } else { Auipc };
            let imm = (word & 0xffff_f000) as i32 as i64;
            Instruction { op, rd: Some(rd), rs1: None, rs2: None, imm: Some(imm), len: 4, raw: word }
        }
        _ => other,
    }
}
