//! A small assembler and disassembler for the decoded subset, used to write
//! test corpora and golden listings as text.
//!
//! Branch and jump operands are byte offsets for [`assemble_line`]. With
//! [`assemble_at`] they are absolute targets written the way objdump prints
//! them: bare hexadecimal (`bnez a5, 35b00`), or `0x`-prefixed.

use thiserror::Error;

use super::rvc::{encode16, rvc_form, RvcForm};
use super::{decode16, decode32, encode32, instr_length, Format, Instruction, OpClass, Opcode, Reg};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AsmError {
    #[error("unknown mnemonic `{0}`")]
    UnknownMnemonic(String),
    #[error("`{mnemonic}`: expected {expected}, got `{got}`")]
    Operands { mnemonic: String, expected: &'static str, got: String },
    #[error("bad register `{0}`")]
    BadRegister(String),
    #[error("bad immediate `{0}`")]
    BadImmediate(String),
    #[error("`{0}` has operands that cannot be encoded")]
    NotEncodable(String),
}

#[derive(Clone, Copy)]
enum Targets {
    Offset,
    Absolute(u64),
}

/// Assembles one statement; branch and jump operands are offsets.
pub fn assemble_line(text: &str) -> Result<Instruction, AsmError> {
    assemble(text, Targets::Offset)
}

/// Assembles one statement located at `pc`; branch and jump operands are
/// absolute targets.
pub fn assemble_at(text: &str, pc: u64) -> Result<Instruction, AsmError> {
    assemble(text, Targets::Absolute(pc))
}

struct Stmt<'a> {
    text: &'a str,
    mnemonic: &'a str,
    operands: Vec<&'a str>,
    targets: Targets,
}

impl<'a> Stmt<'a> {
    fn err(&self, expected: &'static str) -> AsmError {
        AsmError::Operands { mnemonic: self.mnemonic.to_string(), expected, got: self.operands.join(", ") }
    }

    fn expect(&self, n: usize, expected: &'static str) -> Result<(), AsmError> {
        if self.operands.len() == n {
            Ok(())
        } else {
            Err(self.err(expected))
        }
    }

    fn x(&self, k: usize) -> Result<Reg, AsmError> {
        let s = self.operands[k];
        Reg::parse_int(s).ok_or_else(|| AsmError::BadRegister(s.to_string()))
    }

    fn f(&self, k: usize) -> Result<Reg, AsmError> {
        let s = self.operands[k];
        Reg::parse_fp(s).ok_or_else(|| AsmError::BadRegister(s.to_string()))
    }

    fn imm(&self, k: usize) -> Result<i64, AsmError> {
        parse_imm(self.operands[k])
    }

    fn mem(&self, k: usize) -> Result<(i64, Reg), AsmError> {
        let s = self.operands[k];
        let open = s.find('(').ok_or_else(|| self.err("offset(register)"))?;
        let inner = s[open + 1..].strip_suffix(')').ok_or_else(|| self.err("offset(register)"))?;
        let off = s[..open].trim();
        let off = if off.is_empty() { 0 } else { parse_imm(off)? };
        let base = Reg::parse_int(inner.trim()).ok_or_else(|| AsmError::BadRegister(inner.to_string()))?;
        Ok((off, base))
    }

    fn target(&self, k: usize) -> Result<i64, AsmError> {
        let s = self.operands[k];
        match self.targets {
            Targets::Offset => parse_imm(s),
            Targets::Absolute(pc) => {
                let digits = s.strip_prefix("0x").unwrap_or(s);
                let target = u64::from_str_radix(digits, 16).map_err(|_| AsmError::BadImmediate(s.to_string()))?;
                Ok(target.wrapping_sub(pc) as i64)
            }
        }
    }

    fn upper(&self, k: usize) -> Result<i64, AsmError> {
        let v = self.imm(k)?;
        let field = match v {
            0..=0xfffff => v,
            -0x80000..=-1 => v & 0xfffff,
            _ => return Err(AsmError::BadImmediate(self.operands[k].to_string())),
        };
        Ok(((field << 44) >> 44) << 12)
    }
}

fn parse_imm(s: &str) -> Result<i64, AsmError> {
    let bad = || AsmError::BadImmediate(s.to_string());
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let v = if let Some(hex) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        i64::from_str_radix(hex, 16).map_err(|_| bad())?
    } else {
        body.parse::<i64>().map_err(|_| bad())?
    };
    Ok(if neg { -v } else { v })
}

fn split(text: &str) -> (&str, Vec<&str>) {
    let text = text.trim();
    let (mnemonic, rest) = match text.find(char::is_whitespace) {
        Some(pos) => (&text[..pos], text[pos..].trim()),
        None => (text, ""),
    };
    let operands = if rest.is_empty() { Vec::new() } else { rest.split(',').map(str::trim).collect() };
    (mnemonic, operands)
}

fn assemble(text: &str, targets: Targets) -> Result<Instruction, AsmError> {
    let (mnemonic, operands) = split(text);
    let st = Stmt { text, mnemonic, operands, targets };
    let mnemonic = mnemonic.to_ascii_lowercase();
    if let Some(form) = RvcForm::from_mnemonic(&mnemonic) {
        return assemble_rvc(&st, form);
    }
    match mnemonic.as_str() {
        ".word" | ".half" => return raw_directive(&st, mnemonic == ".half"),
        "c.jal" => return Err(AsmError::UnknownMnemonic("c.jal (RV32 only)".into())),
        _ => {}
    }
    let instr = match Opcode::from_mnemonic(&mnemonic).filter(|op| *op != Opcode::Other) {
        Some(op) => base(&st, op)?,
        None => pseudo(&st, &mnemonic)?,
    };
    finish32(&st, instr)
}

fn finish32(st: &Stmt, mut instr: Instruction) -> Result<Instruction, AsmError> {
    instr.len = 4;
    instr.raw = encode32(&instr).ok_or_else(|| AsmError::NotEncodable(st.text.trim().to_string()))?;
    Ok(instr)
}

fn blank(op: Opcode) -> Instruction {
    Instruction { op, rd: None, rs1: None, rs2: None, imm: None, len: 4, raw: 0 }
}

fn base(st: &Stmt, op: Opcode) -> Result<Instruction, AsmError> {
    let mut i = blank(op);
    let fp = matches!(op.class(), OpClass::FpLoad | OpClass::FpStore);
    match op.format() {
        Format::R => {
            st.expect(3, "rd, rs1, rs2")?;
            (i.rd, i.rs1, i.rs2) = (Some(st.x(0)?), Some(st.x(1)?), Some(st.x(2)?));
        }
        Format::I | Format::Shift(_) => {
            st.expect(3, "rd, rs1, imm")?;
            (i.rd, i.rs1, i.imm) = (Some(st.x(0)?), Some(st.x(1)?), Some(st.imm(2)?));
        }
        Format::Load if op == Opcode::Jalr => match st.operands.len() {
            1 => (i.rd, i.rs1, i.imm) = (Some(Reg::RA), Some(st.x(0)?), Some(0)),
            2 => {
                let (off, base) = st.mem(1)?;
                (i.rd, i.rs1, i.imm) = (Some(st.x(0)?), Some(base), Some(off));
            }
            3 => (i.rd, i.rs1, i.imm) = (Some(st.x(0)?), Some(st.x(1)?), Some(st.imm(2)?)),
            _ => return Err(st.err("rd, offset(rs1)")),
        },
        Format::Load => {
            st.expect(2, "rd, offset(rs1)")?;
            let (off, base) = st.mem(1)?;
            i.rd = Some(if fp { st.f(0)? } else { st.x(0)? });
            (i.rs1, i.imm) = (Some(base), Some(off));
        }
        Format::Store => {
            st.expect(2, "rs2, offset(rs1)")?;
            let (off, base) = st.mem(1)?;
            i.rs2 = Some(if fp { st.f(0)? } else { st.x(0)? });
            (i.rs1, i.imm) = (Some(base), Some(off));
        }
        Format::B => {
            st.expect(3, "rs1, rs2, target")?;
            (i.rs1, i.rs2, i.imm) = (Some(st.x(0)?), Some(st.x(1)?), Some(st.target(2)?));
        }
        Format::J => match st.operands.len() {
            1 => (i.rd, i.imm) = (Some(Reg::RA), Some(st.target(0)?)),
            2 => (i.rd, i.imm) = (Some(st.x(0)?), Some(st.target(1)?)),
            _ => return Err(st.err("[rd,] target")),
        },
        Format::U => {
            st.expect(2, "rd, imm20")?;
            (i.rd, i.imm) = (Some(st.x(0)?), Some(st.upper(1)?));
        }
        Format::Opaque => return Err(AsmError::UnknownMnemonic(st.mnemonic.to_string())),
    }
    Ok(i)
}

fn pseudo(st: &Stmt, mnemonic: &str) -> Result<Instruction, AsmError> {
    use Opcode::*;
    let zero = Some(Reg::ZERO);
    let mut i;
    match mnemonic {
        "nop" => {
            st.expect(0, "no operands")?;
            i = blank(Addi);
            (i.rd, i.rs1, i.imm) = (zero, zero, Some(0));
        }
        "li" => {
            st.expect(2, "rd, imm12")?;
            i = blank(Addi);
            (i.rd, i.rs1, i.imm) = (Some(st.x(0)?), zero, Some(st.imm(1)?));
        }
        "mv" | "sext.w" => {
            st.expect(2, "rd, rs")?;
            i = blank(if mnemonic == "mv" { Addi } else { Addiw });
            (i.rd, i.rs1, i.imm) = (Some(st.x(0)?), Some(st.x(1)?), Some(0));
        }
        "neg" | "negw" => {
            st.expect(2, "rd, rs")?;
            i = blank(if mnemonic == "neg" { Sub } else { Subw });
            (i.rd, i.rs1, i.rs2) = (Some(st.x(0)?), zero, Some(st.x(1)?));
        }
        "not" => {
            st.expect(2, "rd, rs")?;
            i = blank(Xori);
            (i.rd, i.rs1, i.imm) = (Some(st.x(0)?), Some(st.x(1)?), Some(-1));
        }
        "j" => {
            st.expect(1, "target")?;
            i = blank(Jal);
            (i.rd, i.imm) = (zero, Some(st.target(0)?));
        }
        "jr" => {
            st.expect(1, "rs")?;
            i = blank(Jalr);
            (i.rd, i.rs1, i.imm) = (zero, Some(st.x(0)?), Some(0));
        }
        "ret" => {
            st.expect(0, "no operands")?;
            i = blank(Jalr);
            (i.rd, i.rs1, i.imm) = (zero, Some(Reg::RA), Some(0));
        }
        "beqz" | "bnez" | "blez" | "bgez" | "bltz" | "bgtz" => {
            st.expect(2, "rs, target")?;
            let rs = Some(st.x(0)?);
            let (op, rs1, rs2) = match mnemonic {
                "beqz" => (Beq, rs, zero),
                "bnez" => (Bne, rs, zero),
                "blez" => (Bge, zero, rs),
                "bgez" => (Bge, rs, zero),
                "bltz" => (Blt, rs, zero),
                _ => (Blt, zero, rs),
            };
            i = blank(op);
            (i.rs1, i.rs2, i.imm) = (rs1, rs2, Some(st.target(1)?));
        }
        "bgt" | "ble" | "bgtu" | "bleu" => {
            st.expect(3, "rs, rt, target")?;
            let op = match mnemonic {
                "bgt" => Blt,
                "ble" => Bge,
                "bgtu" => Bltu,
                _ => Bgeu,
            };
            i = blank(op);
            (i.rs1, i.rs2, i.imm) = (Some(st.x(1)?), Some(st.x(0)?), Some(st.target(2)?));
        }
        _ => return Err(AsmError::UnknownMnemonic(st.mnemonic.to_string())),
    }
    Ok(i)
}

fn raw_directive(st: &Stmt, half: bool) -> Result<Instruction, AsmError> {
    st.expect(1, "one value")?;
    let v = st.imm(0)?;
    let not_encodable = || AsmError::NotEncodable(st.text.trim().to_string());
    if half {
        let h = u16::try_from(v).map_err(|_| AsmError::BadImmediate(st.operands[0].to_string()))?;
        match instr_length(h) {
            Ok(2) => Ok(decode16(h)),
            _ => Err(not_encodable()),
        }
    } else {
        let w = u32::try_from(v).map_err(|_| AsmError::BadImmediate(st.operands[0].to_string()))?;
        match instr_length(w as u16) {
            Ok(4) => Ok(decode32(w)),
            _ => Err(not_encodable()),
        }
    }
}

fn assemble_rvc(st: &Stmt, form: RvcForm) -> Result<Instruction, AsmError> {
    use RvcForm as F;
    let zero = Some(Reg::ZERO);
    let sp = Some(Reg::SP);
    let mut i;
    match form {
        F::Nop => {
            st.expect(0, "no operands")?;
            i = blank(Opcode::Addi);
            (i.rd, i.rs1, i.imm) = (zero, zero, Some(0));
        }
        F::Addi4spn => {
            st.expect(3, "rd', sp, uimm")?;
            if st.x(1)? != Reg::SP {
                return Err(st.err("rd', sp, uimm"));
            }
            i = blank(Opcode::Addi);
            (i.rd, i.rs1, i.imm) = (Some(st.x(0)?), sp, Some(st.imm(2)?));
        }
        F::Fld | F::Lw | F::Ld | F::Fldsp | F::Lwsp | F::Ldsp => {
            st.expect(2, "rd, offset(rs1)")?;
            let (off, base) = st.mem(1)?;
            let (op, fp) = match form {
                F::Fld | F::Fldsp => (Opcode::Fld, true),
                F::Lw | F::Lwsp => (Opcode::Lw, false),
                _ => (Opcode::Ld, false),
            };
            i = blank(op);
            i.rd = Some(if fp { st.f(0)? } else { st.x(0)? });
            (i.rs1, i.imm) = (Some(base), Some(off));
        }
        F::Fsd | F::Sw | F::Sd | F::Fsdsp | F::Swsp | F::Sdsp => {
            st.expect(2, "rs2, offset(rs1)")?;
            let (off, base) = st.mem(1)?;
            let (op, fp) = match form {
                F::Fsd | F::Fsdsp => (Opcode::Fsd, true),
                F::Sw | F::Swsp => (Opcode::Sw, false),
                _ => (Opcode::Sd, false),
            };
            i = blank(op);
            i.rs2 = Some(if fp { st.f(0)? } else { st.x(0)? });
            (i.rs1, i.imm) = (Some(base), Some(off));
        }
        F::Addi | F::Addiw | F::Li | F::Addi16sp | F::Srli | F::Srai | F::Andi | F::Slli => {
            st.expect(2, "rd, imm")?;
            let rd = Some(st.x(0)?);
            let op = match form {
                F::Addi | F::Li | F::Addi16sp => Opcode::Addi,
                F::Addiw => Opcode::Addiw,
                F::Srli => Opcode::Srli,
                F::Srai => Opcode::Srai,
                F::Andi => Opcode::Andi,
                _ => Opcode::Slli,
            };
            i = blank(op);
            (i.rd, i.rs1, i.imm) = (rd, if form == F::Li { zero } else { rd }, Some(st.imm(1)?));
        }
        F::Lui => {
            st.expect(2, "rd, imm20")?;
            i = blank(Opcode::Lui);
            (i.rd, i.imm) = (Some(st.x(0)?), Some(st.upper(1)?));
        }
        F::Sub | F::Xor | F::Or | F::And | F::Subw | F::Addw | F::Add | F::Mv => {
            st.expect(2, "rd, rs2")?;
            let op = match form {
                F::Sub => Opcode::Sub,
                F::Xor => Opcode::Xor,
                F::Or => Opcode::Or,
                F::And => Opcode::And,
                F::Subw => Opcode::Subw,
                F::Addw => Opcode::Addw,
                _ => Opcode::Add,
            };
            let rd = Some(st.x(0)?);
            i = blank(op);
            (i.rd, i.rs1, i.rs2) = (rd, if form == F::Mv { zero } else { rd }, Some(st.x(1)?));
        }
        F::J => {
            st.expect(1, "target")?;
            i = blank(Opcode::Jal);
            (i.rd, i.imm) = (zero, Some(st.target(0)?));
        }
        F::Beqz | F::Bnez => {
            st.expect(2, "rs1', target")?;
            i = blank(if form == F::Beqz { Opcode::Beq } else { Opcode::Bne });
            (i.rs1, i.rs2, i.imm) = (Some(st.x(0)?), zero, Some(st.target(1)?));
        }
        F::Jr | F::Jalr => {
            st.expect(1, "rs1")?;
            i = blank(Opcode::Jalr);
            i.rd = if form == F::Jr { zero } else { Some(Reg::RA) };
            (i.rs1, i.imm) = (Some(st.x(0)?), Some(0));
        }
    }
    i.len = 2;
    i.raw = encode16(form, &i).ok_or_else(|| AsmError::NotEncodable(st.text.trim().to_string()))? as u32;
    Ok(i)
}

/// Canonical text for an instruction.
///
/// Compressed instructions render in their `c.` form; opaque encodings
/// render as `.word`/`.half` directives.
pub fn disassemble(instr: &Instruction) -> String {
    if instr.op == Opcode::Other {
        return if instr.len == 2 {
            format!(".half {:#06x}", instr.raw as u16)
        } else {
            format!(".word {:#010x}", instr.raw)
        };
    }
    if instr.len == 2 {
        if let Some(form) = compressed_form(instr) {
            return render_rvc(form, instr);
        }
    }
    render_base(instr)
}

fn compressed_form(instr: &Instruction) -> Option<RvcForm> {
    if let Some(form) = rvc_form(instr.raw as u16) {
        if decode16(instr.raw as u16).same_semantics(instr) {
            return Some(form);
        }
    }
    RvcForm::ALL.iter().copied().find(|f| encode16(*f, instr).is_some())
}

fn name(r: Option<Reg>) -> &'static str {
    r.map_or("?", Reg::abi_name)
}

fn fname(r: Option<Reg>) -> &'static str {
    r.map_or("?", Reg::fp_abi_name)
}

fn imm(i: &Instruction) -> i64 {
    i.imm.unwrap_or(0)
}

fn upper_field(i: &Instruction) -> i64 {
    (imm(i) >> 12) & 0xfffff
}

fn render_base(i: &Instruction) -> String {
    let m = i.op.mnemonic();
    let fp = matches!(i.class(), OpClass::FpLoad | OpClass::FpStore);
    match i.op.format() {
        Format::R => format!("{m} {}, {}, {}", name(i.rd), name(i.rs1), name(i.rs2)),
        Format::I | Format::Shift(_) => format!("{m} {}, {}, {}", name(i.rd), name(i.rs1), imm(i)),
        Format::Load => {
            let rd = if fp { fname(i.rd) } else { name(i.rd) };
            format!("{m} {rd}, {}({})", imm(i), name(i.rs1))
        }
        Format::Store => {
            let rs2 = if fp { fname(i.rs2) } else { name(i.rs2) };
            format!("{m} {rs2}, {}({})", imm(i), name(i.rs1))
        }
        Format::B => format!("{m} {}, {}, {}", name(i.rs1), name(i.rs2), imm(i)),
        Format::J => format!("{m} {}, {}", name(i.rd), imm(i)),
        Format::U => format!("{m} {}, {:#x}", name(i.rd), upper_field(i)),
        Format::Opaque => format!(".word {:#010x}", i.raw),
    }
}

fn render_rvc(form: RvcForm, i: &Instruction) -> String {
    use RvcForm as F;
    let m = form.mnemonic();
    match form {
        F::Nop => m.to_string(),
        F::Addi4spn => format!("{m} {}, sp, {}", name(i.rd), imm(i)),
        F::Fld | F::Fldsp => format!("{m} {}, {}({})", fname(i.rd), imm(i), name(i.rs1)),
        F::Lw | F::Ld | F::Lwsp | F::Ldsp => format!("{m} {}, {}({})", name(i.rd), imm(i), name(i.rs1)),
        F::Fsd | F::Fsdsp => format!("{m} {}, {}({})", fname(i.rs2), imm(i), name(i.rs1)),
        F::Sw | F::Sd | F::Swsp | F::Sdsp => format!("{m} {}, {}({})", name(i.rs2), imm(i), name(i.rs1)),
        F::Addi | F::Addiw | F::Li | F::Addi16sp | F::Srli | F::Srai | F::Andi | F::Slli => {
            format!("{m} {}, {}", name(i.rd), imm(i))
        }
        F::Lui => format!("{m} {}, {:#x}", name(i.rd), upper_field(i)),
        F::Sub | F::Xor | F::Or | F::And | F::Subw | F::Addw | F::Add | F::Mv => {
            format!("{m} {}, {}", name(i.rd), name(i.rs2))
        }
        F::J => format!("{m} {}", imm(i)),
        F::Beqz | F::Bnez => format!("{m} {}, {}", name(i.rs1), imm(i)),
        F::Jr | F::Jalr => format!("{m} {}", name(i.rs1)),
    }
}
