//! Compressed (RVC) encodings and their expansion to base instructions.

use super::{sext32, Instruction, Opcode, Reg};

/// The compressed forms the decoder expands. Hints and reserved encodings
/// in the same opcode space decode to [`Opcode::Other`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RvcForm {
    Addi4spn,
    Fld,
    Lw,
    Ld,
    Fsd,
    Sw,
    Sd,
    Nop,
    Addi,
    Addiw,
    Li,
    Addi16sp,
    Lui,
    Srli,
    Srai,
    Andi,
    Sub,
    Xor,
    Or,
    And,
    Subw,
    Addw,
    J,
    Beqz,
    Bnez,
    Slli,
    Fldsp,
    Lwsp,
    Ldsp,
    Jr,
    Mv,
    Jalr,
    Add,
    Fsdsp,
    Swsp,
    Sdsp,
}

impl RvcForm {
    pub const ALL: &'static [RvcForm] = &[
        RvcForm::Addi4spn,
        RvcForm::Fld,
        RvcForm::Lw,
        RvcForm::Ld,
        RvcForm::Fsd,
        RvcForm::Sw,
        RvcForm::Sd,
        RvcForm::Nop,
        RvcForm::Addi,
        RvcForm::Addiw,
        RvcForm::Li,
        RvcForm::Addi16sp,
        RvcForm::Lui,
        RvcForm::Srli,
        RvcForm::Srai,
        RvcForm::Andi,
        RvcForm::Sub,
        RvcForm::Xor,
        RvcForm::Or,
        RvcForm::And,
        RvcForm::Subw,
        RvcForm::Addw,
        RvcForm::J,
        RvcForm::Beqz,
        RvcForm::Bnez,
        RvcForm::Slli,
        RvcForm::Fldsp,
        RvcForm::Lwsp,
        RvcForm::Ldsp,
        RvcForm::Jr,
        RvcForm::Mv,
        RvcForm::Jalr,
        RvcForm::Add,
        RvcForm::Fsdsp,
        RvcForm::Swsp,
        RvcForm::Sdsp,
    ];

    pub fn mnemonic(self) -> &'static str {
        use RvcForm::*;
        match self {
            Addi4spn => "c.addi4spn",
            Fld => "c.fld",
            Lw => "c.lw",
            Ld => "c.ld",
            Fsd => "c.fsd",
            Sw => "c.sw",
            Sd => "c.sd",
            Nop => "c.nop",
            Addi => "c.addi",
            Addiw => "c.addiw",
            Li => "c.li",
            Addi16sp => "c.addi16sp",
            Lui => "c.lui",
            Srli => "c.srli",
            Srai => "c.srai",
            Andi => "c.andi",
            Sub => "c.sub",
            Xor => "c.xor",
            Or => "c.or",
            And => "c.and",
            Subw => "c.subw",
            Addw => "c.addw",
            J => "c.j",
            Beqz => "c.beqz",
            Bnez => "c.bnez",
            Slli => "c.slli",
            Fldsp => "c.fldsp",
            Lwsp => "c.lwsp",
            Ldsp => "c.ldsp",
            Jr => "c.jr",
            Mv => "c.mv",
            Jalr => "c.jalr",
            Add => "c.add",
            Fsdsp => "c.fsdsp",
            Swsp => "c.swsp",
            Sdsp => "c.sdsp",
        }
    }

    pub fn from_mnemonic(name: &str) -> Option<RvcForm> {
        RvcForm::ALL.iter().copied().find(|f| f.mnemonic() == name)
    }
}

/// Immediate layout: each segment is (highest instruction bit, immediate bit
/// carried by each instruction bit going downwards).
type Layout = &'static [(u32, &'static [u32])];

const CI_IMM: Layout = &[(12, &[5]), (6, &[4, 3, 2, 1, 0])];
const CI_LUI: Layout = &[(12, &[17]), (6, &[16, 15, 14, 13, 12])];
const CI_ADDI16SP: Layout = &[(12, &[9]), (6, &[4, 6, 8, 7, 5])];
const CIW_ADDI4SPN: Layout = &[(12, &[5, 4, 9, 8, 7, 6, 2, 3])];
const CL_WORD: Layout = &[(12, &[5, 4, 3]), (6, &[2, 6])];
const CL_DOUBLE: Layout = &[(12, &[5, 4, 3]), (6, &[7, 6])];
const CJ: Layout = &[(12, &[11, 4, 9, 8, 10, 6, 7, 3, 2, 1, 5])];
const CB: Layout = &[(12, &[8, 4, 3]), (6, &[7, 6, 2, 1, 5])];
const CI_LWSP: Layout = &[(12, &[5]), (6, &[4, 3, 2, 7, 6])];
const CI_LDSP: Layout = &[(12, &[5]), (6, &[4, 3, 8, 7, 6])];
const CSS_SWSP: Layout = &[(12, &[5, 4, 3, 2, 7, 6])];
const CSS_SDSP: Layout = &[(12, &[5, 4, 3, 8, 7, 6])];

fn gather(h: u16, layout: Layout) -> u32 {
    let mut imm = 0u32;
    for &(hi, bits) in layout {
        for (k, &ib) in bits.iter().enumerate() {
            let bit = (h as u32 >> (hi - k as u32)) & 1;
            imm |= bit << ib;
        }
    }
    imm
}

fn scatter(imm: u32, layout: Layout) -> u16 {
    let mut h = 0u32;
    for &(hi, bits) in layout {
        for (k, &ib) in bits.iter().enumerate() {
            h |= ((imm >> ib) & 1) << (hi - k as u32);
        }
    }
    h as u16
}

fn width(layout: Layout) -> u32 {
    layout.iter().flat_map(|(_, b)| b.iter()).max().map_or(0, |m| m + 1)
}

fn inst(op: Opcode, rd: Option<Reg>, rs1: Option<Reg>, rs2: Option<Reg>, imm: Option<i64>, raw: u16) -> Instruction {
    Instruction { op, rd, rs1, rs2, imm, len: 2, raw: raw as u32 }
}

fn decode_form(h: u16) -> Option<(RvcForm, Instruction)> {
    use RvcForm as F;
    let w = h as u32;
    let quadrant = w & 0b11;
    let funct3 = (w >> 13) & 0b111;
    let r_full = Reg::from_field(w >> 7);
    let r_rs2 = Reg::from_field(w >> 2);
    let r_hi = Reg::from_compact(w >> 7);
    let r_lo = Reg::from_compact(w >> 2);
    let ci = sext32(gather(h, CI_IMM), 6);
    let bit12 = (w >> 12) & 1;
    let sp = Some(Reg::SP);
    let zero = Some(Reg::ZERO);

    let decoded = match (quadrant, funct3) {
        (0, 0) => {
            let imm = gather(h, CIW_ADDI4SPN);
            if imm == 0 {
                return None;
            }
            (F::Addi4spn, inst(Opcode::Addi, Some(r_lo), sp, None, Some(imm as i64), h))
        }
        (0, 1) => (F::Fld, inst(Opcode::Fld, Some(r_lo), Some(r_hi), None, Some(gather(h, CL_DOUBLE) as i64), h)),
        (0, 2) => (F::Lw, inst(Opcode::Lw, Some(r_lo), Some(r_hi), None, Some(gather(h, CL_WORD) as i64), h)),
        (0, 3) => (F::Ld, inst(Opcode::Ld, Some(r_lo), Some(r_hi), None, Some(gather(h, CL_DOUBLE) as i64), h)),
        (0, 5) => (F::Fsd, inst(Opcode::Fsd, None, Some(r_hi), Some(r_lo), Some(gather(h, CL_DOUBLE) as i64), h)),
        (0, 6) => (F::Sw, inst(Opcode::Sw, None, Some(r_hi), Some(r_lo), Some(gather(h, CL_WORD) as i64), h)),
        (0, 7) => (F::Sd, inst(Opcode::Sd, None, Some(r_hi), Some(r_lo), Some(gather(h, CL_DOUBLE) as i64), h)),
        (1, 0) => match (r_full.is_zero(), ci) {
            (true, 0) => (F::Nop, inst(Opcode::Addi, zero, zero, None, Some(0), h)),
            (false, imm) if imm != 0 => (F::Addi, inst(Opcode::Addi, Some(r_full), Some(r_full), None, Some(imm), h)),
            _ => return None,
        },
        (1, 1) if !r_full.is_zero() => (F::Addiw, inst(Opcode::Addiw, Some(r_full), Some(r_full), None, Some(ci), h)),
        (1, 2) if !r_full.is_zero() => (F::Li, inst(Opcode::Addi, Some(r_full), zero, None, Some(ci), h)),
        (1, 3) if r_full == Reg::SP => {
            let imm = sext32(gather(h, CI_ADDI16SP), 10);
            if imm == 0 {
                return None;
            }
            (F::Addi16sp, inst(Opcode::Addi, sp, sp, None, Some(imm), h))
        }
        (1, 3) if !r_full.is_zero() => {
            let imm = sext32(gather(h, CI_LUI), 18);
            if imm == 0 {
                return None;
            }
            (F::Lui, inst(Opcode::Lui, Some(r_full), None, None, Some(imm), h))
        }
        (1, 4) => {
            let shamt = gather(h, CI_IMM) as i64;
            match (w >> 10) & 0b11 {
                0 if shamt != 0 => (F::Srli, inst(Opcode::Srli, Some(r_hi), Some(r_hi), None, Some(shamt), h)),
                1 if shamt != 0 => (F::Srai, inst(Opcode::Srai, Some(r_hi), Some(r_hi), None, Some(shamt), h)),
                2 => (F::Andi, inst(Opcode::Andi, Some(r_hi), Some(r_hi), None, Some(ci), h)),
                3 => {
                    let (form, op) = match (bit12, (w >> 5) & 0b11) {
                        (0, 0) => (F::Sub, Opcode::Sub),
                        (0, 1) => (F::Xor, Opcode::Xor),
                        (0, 2) => (F::Or, Opcode::Or),
                        (0, 3) => (F::And, Opcode::And),
                        (1, 0) => (F::Subw, Opcode::Subw),
                        (1, 1) => (F::Addw, Opcode::Addw),
                        _ => return None,
                    };
                    (form, inst(op, Some(r_hi), Some(r_hi), Some(r_lo), None, h))
                }
                _ => return None,
            }
        }
        (1, 5) => (F::J, inst(Opcode::Jal, zero, None, None, Some(sext32(gather(h, CJ), 12)), h)),
        (1, 6) | (1, 7) => {
            let (form, op) = if funct3 == 6 { (F::Beqz, Opcode::Beq) } else { (F::Bnez, Opcode::Bne) };
            (form, inst(op, None, Some(r_hi), zero, Some(sext32(gather(h, CB), 9)), h))
        }
        (2, 0) => {
            let shamt = gather(h, CI_IMM) as i64;
            if r_full.is_zero() || shamt == 0 {
                return None;
            }
            (F::Slli, inst(Opcode::Slli, Some(r_full), Some(r_full), None, Some(shamt), h))
        }
        (2, 1) => (F::Fldsp, inst(Opcode::Fld, Some(r_full), sp, None, Some(gather(h, CI_LDSP) as i64), h)),
        (2, 2) if !r_full.is_zero() => {
            (F::Lwsp, inst(Opcode::Lw, Some(r_full), sp, None, Some(gather(h, CI_LWSP) as i64), h))
        }
        (2, 3) if !r_full.is_zero() => {
            (F::Ldsp, inst(Opcode::Ld, Some(r_full), sp, None, Some(gather(h, CI_LDSP) as i64), h))
        }
        (2, 4) => match (bit12, r_full.is_zero(), r_rs2.is_zero()) {
            (0, false, true) => (F::Jr, inst(Opcode::Jalr, zero, Some(r_full), None, Some(0), h)),
            (0, false, false) => (F::Mv, inst(Opcode::Add, Some(r_full), zero, Some(r_rs2), None, h)),
            (1, false, true) => (F::Jalr, inst(Opcode::Jalr, Some(Reg::RA), Some(r_full), None, Some(0), h)),
            (1, false, false) => (F::Add, inst(Opcode::Add, Some(r_full), Some(r_full), Some(r_rs2), None, h)),
            _ => return None,
        },
        (2, 5) => (F::Fsdsp, inst(Opcode::Fsd, None, sp, Some(r_rs2), Some(gather(h, CSS_SDSP) as i64), h)),
        (2, 6) => (F::Swsp, inst(Opcode::Sw, None, sp, Some(r_rs2), Some(gather(h, CSS_SWSP) as i64), h)),
        (2, 7) => (F::Sdsp, inst(Opcode::Sd, None, sp, Some(r_rs2), Some(gather(h, CSS_SDSP) as i64), h)),
        _ => return None,
    };
    Some(decoded)
}

/// Expands a 2-byte encoding. Encodings outside the supported subset, hints
/// and reserved encodings decode to [`Opcode::Other`].
pub fn decode16(halfword: u16) -> Instruction {
    decode_form(halfword).map_or_else(|| Instruction::other(halfword as u32, 2), |(_, i)| i)
}

/// The compressed form a 2-byte encoding expands from, if supported.
pub fn rvc_form(halfword: u16) -> Option<RvcForm> {
    decode_form(halfword).map(|(f, _)| f)
}

fn fits_unsigned(imm: i64, layout: Layout) -> Option<u32> {
    let v = u32::try_from(imm).ok()?;
    let mask = (1u64 << width(layout)) - 1;
    let covered: u32 = layout.iter().flat_map(|(_, b)| b.iter()).fold(0, |m, b| m | (1 << b));
    (v as u64 <= mask && v & !covered == 0).then_some(v)
}

fn fits_signed(imm: i64, layout: Layout) -> Option<u32> {
    let bits = width(layout);
    let lo = -(1i64 << (bits - 1));
    let hi = (1i64 << (bits - 1)) - 1;
    if imm < lo || imm > hi {
        return None;
    }
    let v = (imm as u32) & ((1u32 << bits) - 1);
    let covered: u32 = layout.iter().flat_map(|(_, b)| b.iter()).fold(0, |m, b| m | (1 << b));
    (v & !covered == 0).then_some(v)
}

fn compact(r: Option<Reg>) -> Option<u16> {
    let r = r?;
    r.is_compact().then(|| (r.index() - 8) as u16)
}

fn full(r: Option<Reg>) -> Option<u16> {
    r.map(|r| r.index() as u16)
}

/// Encodes `instr` in the given compressed form, or `None` when the
/// instruction's fields cannot be expressed by that form.
pub fn encode16(form: RvcForm, instr: &Instruction) -> Option<u16> {
    use RvcForm as F;
    let i = instr;
    let q = |quadrant: u16, funct3: u16| quadrant | funct3 << 13;
    let imm = i.imm;
    let h: u16 = match form {
        F::Addi4spn => q(0, 0) | compact(i.rd)? << 2 | scatter(fits_unsigned(imm?, CIW_ADDI4SPN)?, CIW_ADDI4SPN),
        F::Fld | F::Ld => {
            q(0, if form == F::Fld { 1 } else { 3 })
                | compact(i.rs1)? << 7
                | compact(i.rd)? << 2
                | scatter(fits_unsigned(imm?, CL_DOUBLE)?, CL_DOUBLE)
        }
        F::Lw => q(0, 2) | compact(i.rs1)? << 7 | compact(i.rd)? << 2 | scatter(fits_unsigned(imm?, CL_WORD)?, CL_WORD),
        F::Fsd | F::Sd => {
            q(0, if form == F::Fsd { 5 } else { 7 })
                | compact(i.rs1)? << 7
                | compact(i.rs2)? << 2
                | scatter(fits_unsigned(imm?, CL_DOUBLE)?, CL_DOUBLE)
        }
        F::Sw => {
            q(0, 6) | compact(i.rs1)? << 7 | compact(i.rs2)? << 2 | scatter(fits_unsigned(imm?, CL_WORD)?, CL_WORD)
        }
        F::Nop => q(1, 0),
        F::Addi | F::Addiw | F::Li => {
            let f3 = match form {
                F::Addi => 0,
                F::Addiw => 1,
                _ => 2,
            };
            q(1, f3) | full(i.rd)? << 7 | scatter(fits_signed(imm?, CI_IMM)?, CI_IMM)
        }
        F::Addi16sp => q(1, 3) | 2 << 7 | scatter(fits_signed(imm?, CI_ADDI16SP)?, CI_ADDI16SP),
        F::Lui => {
            let v = imm?;
            if v & 0xfff != 0 {
                return None;
            }
            q(1, 3) | full(i.rd)? << 7 | scatter(fits_signed(v, CI_LUI)?, CI_LUI)
        }
        F::Srli | F::Srai | F::Andi => {
            let (sel, v) = match form {
                F::Srli => (0, fits_unsigned(imm?, CI_IMM)?),
                F::Srai => (1, fits_unsigned(imm?, CI_IMM)?),
                _ => (2, fits_signed(imm?, CI_IMM)?),
            };
            q(1, 4) | sel << 10 | compact(i.rd)? << 7 | scatter(v, CI_IMM)
        }
        F::Sub | F::Xor | F::Or | F::And | F::Subw | F::Addw => {
            let (b12, sel) = match form {
                F::Sub => (0, 0),
                F::Xor => (0, 1),
                F::Or => (0, 2),
                F::And => (0, 3),
                F::Subw => (1, 0),
                _ => (1, 1),
            };
            q(1, 4) | b12 << 12 | 3 << 10 | compact(i.rd)? << 7 | sel << 5 | compact(i.rs2)? << 2
        }
        F::J => q(1, 5) | scatter(fits_signed(imm?, CJ)?, CJ),
        F::Beqz | F::Bnez => {
            q(1, if form == F::Beqz { 6 } else { 7 }) | compact(i.rs1)? << 7 | scatter(fits_signed(imm?, CB)?, CB)
        }
        F::Slli => q(2, 0) | full(i.rd)? << 7 | scatter(fits_unsigned(imm?, CI_IMM)?, CI_IMM),
        F::Fldsp | F::Ldsp => {
            q(2, if form == F::Fldsp { 1 } else { 3 })
                | full(i.rd)? << 7
                | scatter(fits_unsigned(imm?, CI_LDSP)?, CI_LDSP)
        }
        F::Lwsp => q(2, 2) | full(i.rd)? << 7 | scatter(fits_unsigned(imm?, CI_LWSP)?, CI_LWSP),
        F::Jr => q(2, 4) | full(i.rs1)? << 7,
        F::Jalr => q(2, 4) | 1 << 12 | full(i.rs1)? << 7,
        F::Mv => q(2, 4) | full(i.rd)? << 7 | full(i.rs2)? << 2,
        F::Add => q(2, 4) | 1 << 12 | full(i.rd)? << 7 | full(i.rs2)? << 2,
        F::Fsdsp | F::Sdsp => {
            q(2, if form == F::Fsdsp { 5 } else { 7 })
                | full(i.rs2)? << 2
                | scatter(fits_unsigned(imm?, CSS_SDSP)?, CSS_SDSP)
        }
        F::Swsp => q(2, 6) | full(i.rs2)? << 2 | scatter(fits_unsigned(imm?, CSS_SWSP)?, CSS_SWSP),
    };
    // Field placement above is necessary but not sufficient (e.g. rd must
    // equal rs1, reserved values); the decoder is the arbiter.
    match decode_form(h) {
        Some((f, back)) if f == form && back.same_semantics(instr) => Some(h),
        _ => None,
    }
}
