use super::{decode32, Format, Instruction, Opcode};

fn reg(r: Option<super::Reg>) -> Option<u32> {
    r.map(|r| r.index() as u32)
}

fn signed(imm: i64, bits: u32) -> Option<u32> {
    let lo = -(1i64 << (bits - 1));
    let hi = (1i64 << (bits - 1)) - 1;
    (lo..=hi).contains(&imm).then(|| (imm as u32) & ((1u32 << bits) - 1))
}

/// `(opcode, funct3, funct7)` for every encodable operation.
fn fields(op: Opcode) -> Option<(u32, u32, u32)> {
    use Opcode::*;
    Some(match op {
        Add => (0x33, 0, 0x00),
        Sub => (0x33, 0, 0x20),
        Sll => (0x33, 1, 0x00),
        Slt => (0x33, 2, 0x00),
        Sltu => (0x33, 3, 0x00),
        Xor => (0x33, 4, 0x00),
        Srl => (0x33, 5, 0x00),
        Sra => (0x33, 5, 0x20),
        Or => (0x33, 6, 0x00),
        And => (0x33, 7, 0x00),
        Mul => (0x33, 0, 0x01),
        Mulh => (0x33, 1, 0x01),
        Mulhsu => (0x33, 2, 0x01),
        Mulhu => (0x33, 3, 0x01),
        Div => (0x33, 4, 0x01),
        Divu => (0x33, 5, 0x01),
        Rem => (0x33, 6, 0x01),
        Remu => (0x33, 7, 0x01),
        Addw => (0x3b, 0, 0x00),
        Subw => (0x3b, 0, 0x20),
        Sllw => (0x3b, 1, 0x00),
        Srlw => (0x3b, 5, 0x00),
        Sraw => (0x3b, 5, 0x20),
        Mulw => (0x3b, 0, 0x01),
        Divw => (0x3b, 4, 0x01),
        Divuw => (0x3b, 5, 0x01),
        Remw => (0x3b, 6, 0x01),
        Remuw => (0x3b, 7, 0x01),
        Addi => (0x13, 0, 0),
        Slti => (0x13, 2, 0),
        Sltiu => (0x13, 3, 0),
        Xori => (0x13, 4, 0),
        Ori => (0x13, 6, 0),
        Andi => (0x13, 7, 0),
        Slli => (0x13, 1, 0x00),
        Srli => (0x13, 5, 0x00),
        Srai => (0x13, 5, 0x20),
        Addiw => (0x1b, 0, 0),
        Slliw => (0x1b, 1, 0x00),
        Srliw => (0x1b, 5, 0x00),
        Sraiw => (0x1b, 5, 0x20),
        Lb => (0x03, 0, 0),
        Lh => (0x03, 1, 0),
        Lw => (0x03, 2, 0),
        Ld => (0x03, 3, 0),
        Lbu => (0x03, 4, 0),
        Lhu => (0x03, 5, 0),
        Lwu => (0x03, 6, 0),
        Flw => (0x07, 2, 0),
        Fld => (0x07, 3, 0),
        Sb => (0x23, 0, 0),
        Sh => (0x23, 1, 0),
        Sw => (0x23, 2, 0),
        Sd => (0x23, 3, 0),
        Fsw => (0x27, 2, 0),
        Fsd => (0x27, 3, 0),
        Beq => (0x63, 0, 0),
        Bne => (0x63, 1, 0),
        Blt => (0x63, 4, 0),
        Bge => (0x63, 5, 0),
        Bltu => (0x63, 6, 0),
        Bgeu => (0x63, 7, 0),
        Jal => (0x6f, 0, 0),
        Jalr => (0x67, 0, 0),
        Lui => (0x37, 0, 0),
        Auipc => (0x17, 0, 0),
        Other => return None,
    })
}

/// Encodes `instr` as a 4-byte instruction, or `None` when an operand is
/// out of range for the format.
pub fn encode32(instr: &Instruction) -> Option<u32> {
    let (opcode, funct3, funct7) = fields(instr.op)?;
    let base = opcode | funct3 << 12;
    let word = match instr.op.format() {
        Format::R => base | reg(instr.rd)? << 7 | reg(instr.rs1)? << 15 | reg(instr.rs2)? << 20 | funct7 << 25,
        Format::I | Format::Load => base | reg(instr.rd)? << 7 | reg(instr.rs1)? << 15 | signed(instr.imm?, 12)? << 20,
        Format::Shift(bits) => {
            let shamt = u32::try_from(instr.imm?).ok().filter(|s| *s < 1 << bits)?;
            base | reg(instr.rd)? << 7 | reg(instr.rs1)? << 15 | shamt << 20 | funct7 << 25
        }
        Format::Store => {
            let imm = signed(instr.imm?, 12)?;
            base | (imm & 0x1f) << 7 | reg(instr.rs1)? << 15 | reg(instr.rs2)? << 20 | (imm >> 5) << 25
        }
        Format::B => {
            let off = instr.imm?;
            if off & 1 != 0 {
                return None;
            }
            let imm = signed(off, 13)?;
            base | ((imm >> 11) & 1) << 7
                | ((imm >> 1) & 0xf) << 8
                | reg(instr.rs1)? << 15
                | reg(instr.rs2)? << 20
                | ((imm >> 5) & 0x3f) << 25
                | ((imm >> 12) & 1) << 31
        }
        Format::J => {
            let off = instr.imm?;
            if off & 1 != 0 {
                return None;
            }
            let imm = signed(off, 21)?;
            base | reg(instr.rd)? << 7
                | ((imm >> 12) & 0xff) << 12
                | ((imm >> 11) & 1) << 20
                | ((imm >> 1) & 0x3ff) << 21
                | ((imm >> 20) & 1) << 31
        }
        Format::U => {
            let imm = instr.imm?;
            if imm & 0xfff != 0 || imm < i32::MIN as i64 || imm > i32::MAX as i64 {
                return None;
            }
            base | reg(instr.rd)? << 7 | (imm as u32 & 0xffff_f000)
        }
        Format::Opaque => return None,
    };
    decode32(word).same_semantics(instr).then_some(word)
}
