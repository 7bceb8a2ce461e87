//! The fabric instruction set: in-memory instruction definitions, the fixed
//! 32-bit binary encoding and the verbose text listing.
//!
//! Every instruction is fetched and issued by a cell's sequencer and
//! configures a level-2 unit (an address generator, the datapath, the
//! switchbox, a loop controller, ...). Instructions whose fields do not fit
//! the 24 kind-specific bits of the head word carry a fixed number of
//! extension words.
//!
//! Word layout: `[31:28]` opcode, `[27:24]` slot/port, `[23:0]`
//! kind-specific. Extension words use opcode `0xF` with the payload in
//! `[23:0]` (two's complement where the field is signed). Streams are
//! stored per cell: a header word (opcode 0, `[27:20]` row, `[19:12]` col,
//! `[11:0]` word count) followed by that many instruction words. File byte
//! order is little-endian.

use std::fmt;

use thiserror::Error;

use crate::fabric::{CellCoord, OpClass};

/// Datapath arithmetic function. All modes stream one element per cycle;
/// `Mac` accumulates internally and emits once at the end; `Cmp` consumes a
/// single element pair and sets the cell's comparison flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpuMode {
    Add,
    Sub,
    Mul,
    Mac,
    CmpEq,
    CmpLt,
    CmpGt,
}

impl DpuMode {
    fn code(self) -> u32 {
        match self {
            DpuMode::Add => 0,
            DpuMode::Sub => 1,
            DpuMode::Mul => 2,
            DpuMode::Mac => 3,
            DpuMode::CmpEq => 4,
            DpuMode::CmpLt => 5,
            DpuMode::CmpGt => 6,
        }
    }

    fn from_code(c: u32) -> Option<Self> {
        Some(match c {
            0 => DpuMode::Add,
            1 => DpuMode::Sub,
            2 => DpuMode::Mul,
            3 => DpuMode::Mac,
            4 => DpuMode::CmpEq,
            5 => DpuMode::CmpLt,
            6 => DpuMode::CmpGt,
            _ => return None,
        })
    }

    pub fn is_cmp(self) -> bool {
        matches!(self, DpuMode::CmpEq | DpuMode::CmpLt | DpuMode::CmpGt)
    }

    pub fn name(self) -> &'static str {
        match self {
            DpuMode::Add => "ADD",
            DpuMode::Sub => "SUB",
            DpuMode::Mul => "MUL",
            DpuMode::Mac => "MAC",
            DpuMode::CmpEq => "CMPEQ",
            DpuMode::CmpLt => "CMPLT",
            DpuMode::CmpGt => "CMPGT",
        }
    }
}

/// Register-file port reference. Read and write ports are separate pools.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RfPort {
    Rd(u8),
    Wr(u8),
}

impl RfPort {
    pub fn is_write(self) -> bool {
        matches!(self, RfPort::Wr(_))
    }

    fn code(self) -> u32 {
        match self {
            RfPort::Rd(i) => i as u32,
            RfPort::Wr(i) => 8 + i as u32,
        }
    }

    fn from_code(c: u32) -> Option<Self> {
        match c {
            0..=7 => Some(RfPort::Rd(c as u8)),
            8..=15 => Some(RfPort::Wr((c - 8) as u8)),
            _ => None,
        }
    }
}

impl fmt::Display for RfPort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RfPort::Rd(i) => write!(f, "r{i}"),
            RfPort::Wr(i) => write!(f, "w{i}"),
        }
    }
}

/// A base-address field: immediate or read from a RACCU register at
/// activation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldVal {
    Imm(i32),
    Reg(u8),
}

impl fmt::Display for FieldVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldVal::Imm(v) => write!(f, "{v}"),
            FieldVal::Reg(r) => write!(f, "R{r}"),
        }
    }
}

/// Address generator program as encoded into a REFI or SRAM instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AguProgram {
    pub base: FieldVal,
    pub s1: i32,
    pub n1: u32,
    /// Outer level (step, count); absent for one-level streams.
    pub level2: Option<(i32, u32)>,
}

impl AguProgram {
    pub fn total(&self) -> u32 {
        self.n1 * self.level2.map(|(_, n2)| n2).unwrap_or(1)
    }
}

impl fmt::Display for AguProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.level2 {
            None => write!(f, "base={}, s1={}, n1={}", self.base, self.s1, self.n1),
            Some((s2, n2)) => write!(
                f,
                "base={}, s1={}, n1={}, s2={}, n2={}",
                self.base, self.s1, self.n1, s2, n2
            ),
        }
    }
}

/// RACCU scalar operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RaccuOp {
    Add,
    Sub,
    Mul,
    Shl,
    Shr,
    /// Copy operand A into the destination; operand B is ignored.
    Mov,
}

impl RaccuOp {
    fn code(self) -> u32 {
        match self {
            RaccuOp::Add => 0,
            RaccuOp::Sub => 1,
            RaccuOp::Mul => 2,
            RaccuOp::Shl => 3,
            RaccuOp::Shr => 4,
            RaccuOp::Mov => 5,
        }
    }

    fn from_code(c: u32) -> Option<Self> {
        Some(match c {
            0 => RaccuOp::Add,
            1 => RaccuOp::Sub,
            2 => RaccuOp::Mul,
            3 => RaccuOp::Shl,
            4 => RaccuOp::Shr,
            5 => RaccuOp::Mov,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            RaccuOp::Add => "ADD",
            RaccuOp::Sub => "SUB",
            RaccuOp::Mul => "MUL",
            RaccuOp::Shl => "SHL",
            RaccuOp::Shr => "SHR",
            RaccuOp::Mov => "MOV",
        }
    }
}

/// RACCU operand: immediate or register.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RaccuOperand {
    Imm(i32),
    Reg(u8),
}

impl fmt::Display for RaccuOperand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RaccuOperand::Imm(v) => write!(f, "{v}"),
            RaccuOperand::Reg(r) => write!(f, "R{r}"),
        }
    }
}

/// Interconnect endpoint inside the compute array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Endpoint {
    pub cell: CellCoord,
    pub unit: EndpointUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndpointUnit {
    RfOut(u8),
    RfIn(u8),
    DpuIn(u8),
    DpuOut,
}

impl Endpoint {
    fn pack(self) -> u32 {
        let (kind, idx) = match self.unit {
            EndpointUnit::RfOut(i) => (0u32, i as u32),
            EndpointUnit::RfIn(i) => (1, i as u32),
            EndpointUnit::DpuIn(i) => (2, i as u32),
            EndpointUnit::DpuOut => (3, 0),
        };
        ((self.cell.row as u32) << 16) | ((self.cell.col as u32) << 8) | (kind << 4) | idx
    }

    fn unpack(v: u32) -> Option<Self> {
        let cell = CellCoord::new(((v >> 16) & 0xFF) as u8, ((v >> 8) & 0xFF) as u8);
        let idx = (v & 0xF) as u8;
        let unit = match (v >> 4) & 0xF {
            0 => EndpointUnit::RfOut(idx),
            1 => EndpointUnit::RfIn(idx),
            2 => EndpointUnit::DpuIn(idx),
            3 => EndpointUnit::DpuOut,
            _ => return None,
        };
        Some(Endpoint { cell, unit })
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.unit {
            EndpointUnit::RfOut(i) => write!(f, "rfout{}{}", self.cell, i),
            EndpointUnit::RfIn(i) => write!(f, "rfin{}{}", self.cell, i),
            EndpointUnit::DpuIn(i) => write!(f, "dpuin{}{}", self.cell, i),
            EndpointUnit::DpuOut => write!(f, "dpuout{}", self.cell),
        }
    }
}

/// Direction of a memory-array route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteDir {
    MemToCell,
    CellToMem,
}

/// One fabric instruction. `delay` fields defer activation: a micro-thread
/// configured at issue cycle `t` activates at `t + 1 + delay`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstrDef {
    Dpu {
        mode: DpuMode,
        count: u32,
        delay: u32,
    },
    Refi {
        port: RfPort,
        agu: AguProgram,
        delay: u32,
    },
    Sram {
        dim_cell: CellCoord,
        write: bool,
        agu: AguProgram,
        delay: u32,
    },
    Raccu {
        op: RaccuOp,
        dst: u8,
        a: RaccuOperand,
        b: RaccuOperand,
    },
    Swb {
        channel: u8,
        src: Endpoint,
        dst: Endpoint,
    },
    Route {
        channel: u8,
        dir: RouteDir,
        dim_cell: CellCoord,
        drra: Endpoint,
    },
    Loop {
        slot: u8,
        iter_reg: Option<u8>,
        body_len: u32,
        count: u32,
    },
    Branch {
        /// Jump by `off` when the comparison flag equals this value,
        /// otherwise fall through.
        jump_if: bool,
        off: i32,
    },
    Jump {
        off: i32,
    },
    Wait {
        cycles: u32,
    },
}

impl InstrDef {
    pub fn op_class(&self) -> OpClass {
        match self {
            InstrDef::Dpu { .. } => OpClass::Dpu,
            InstrDef::Refi { .. } => OpClass::Refi,
            InstrDef::Sram { .. } => OpClass::Sram,
            InstrDef::Raccu { .. } => OpClass::Raccu,
            InstrDef::Swb { .. } => OpClass::Swb,
            InstrDef::Route { .. } => OpClass::Route,
            InstrDef::Loop { .. } => OpClass::Loop,
            InstrDef::Branch { .. } => OpClass::Branch,
            InstrDef::Jump { .. } => OpClass::Jump,
            InstrDef::Wait { .. } => OpClass::Wait,
        }
    }
}

impl fmt::Display for InstrDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstrDef::Dpu { mode, count, delay } => {
                write!(f, "DPU {} count={count} delay={delay}", mode.name())
            }
            InstrDef::Refi { port, agu, delay } => {
                let m = if port.is_write() { "W" } else { "R" };
                write!(f, "REFI {port} mode={m} {agu} delay={delay}")
            }
            InstrDef::Sram {
                dim_cell,
                write,
                agu,
                delay,
            } => {
                let m = if *write { "W" } else { "R" };
                write!(f, "SRAM mem{dim_cell} mode={m} {agu} delay={delay}")
            }
            InstrDef::Raccu { op, dst, a, b } => {
                write!(f, "RACCU {} R{dst} <- {a}, {b}", op.name())
            }
            InstrDef::Swb { channel, src, dst } => {
                write!(f, "SWB ch{channel} {src} -> {dst}")
            }
            InstrDef::Route {
                channel,
                dir,
                dim_cell,
                drra,
            } => match dir {
                RouteDir::MemToCell => write!(f, "ROUTE ch{channel} mem{dim_cell} -> {drra}"),
                RouteDir::CellToMem => write!(f, "ROUTE ch{channel} {drra} -> mem{dim_cell}"),
            },
            InstrDef::Loop {
                slot,
                iter_reg,
                body_len,
                count,
            } => {
                write!(f, "LOOP slot={slot} body_len={body_len} count={count}")?;
                if let Some(r) = iter_reg {
                    write!(f, " iter=R{r}")?;
                }
                Ok(())
            }
            InstrDef::Branch { jump_if, off } => {
                write!(f, "BRANCH if_flag={} off={off}", *jump_if as u8)
            }
            InstrDef::Jump { off } => write!(f, "JUMP off={off}"),
            InstrDef::Wait { cycles } => write!(f, "WAIT {cycles}"),
        }
    }
}

const OP_CELL: u32 = 0;
const OP_DPU: u32 = 1;
const OP_REFI: u32 = 2;
const OP_SRAM: u32 = 3;
const OP_RACCU: u32 = 4;
const OP_SWB: u32 = 5;
const OP_ROUTE: u32 = 6;
const OP_LOOP: u32 = 7;
const OP_BRANCH: u32 = 8;
const OP_JUMP: u32 = 9;
const OP_WAIT: u32 = 10;
const OP_EXT: u32 = 15;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("word {0}: unknown opcode {1}")]
    BadOpcode(usize, u32),
    #[error("word {0}: expected extension word")]
    MissingExt(usize),
    #[error("word {0}: bad field value")]
    BadField(usize),
    #[error("truncated stream (cell header at word {0} claims {1} words)")]
    Truncated(usize, usize),
    #[error("stream does not start with a cell header")]
    NoHeader,
    #[error("file length {0} is not a multiple of 4")]
    BadLength(usize),
}

fn word(op: u32, slot: u32, rest: u32) -> u32 {
    (op << 28) | ((slot & 0xF) << 24) | (rest & 0xFF_FFFF)
}

fn ext(idx: u32, payload: i64) -> u32 {
    word(OP_EXT, idx, (payload as u32) & 0xFF_FFFF)
}

fn sext24(v: u32) -> i32 {
    ((v << 8) as i32) >> 8
}

fn encode_instr(instr: &InstrDef, out: &mut Vec<u32>) {
    match instr {
        InstrDef::Dpu { mode, count, delay } => {
            out.push(word(OP_DPU, 0, mode.code() << 20));
            out.push(ext(0, *count as i64));
            out.push(ext(1, *delay as i64));
        }
        InstrDef::Refi { port, agu, delay } => {
            encode_agu(OP_REFI, port.code(), 0, agu, *delay, out);
        }
        InstrDef::Sram {
            dim_cell,
            write,
            agu,
            delay,
        } => {
            let rest = ((dim_cell.row as u32) << 16) | ((dim_cell.col as u32) << 8);
            encode_agu(OP_SRAM, *write as u32, rest, agu, *delay, out);
        }
        InstrDef::Raccu { op, dst, a, b } => {
            let mut rest = op.code() << 20;
            let enc = |o: &RaccuOperand| match o {
                RaccuOperand::Imm(v) => (true, *v as i64),
                RaccuOperand::Reg(r) => (false, *r as i64),
            };
            let (ai, av) = enc(a);
            let (bi, bv) = enc(b);
            if ai {
                rest |= 2;
            }
            if bi {
                rest |= 1;
            }
            out.push(word(OP_RACCU, *dst as u32, rest));
            out.push(ext(0, av));
            out.push(ext(1, bv));
        }
        InstrDef::Swb { channel, src, dst } => {
            out.push(word(OP_SWB, *channel as u32, 0));
            out.push(ext(0, src.pack() as i64));
            out.push(ext(1, dst.pack() as i64));
        }
        InstrDef::Route {
            channel,
            dir,
            dim_cell,
            drra,
        } => {
            let rest = matches!(dir, RouteDir::CellToMem) as u32;
            out.push(word(OP_ROUTE, *channel as u32, rest));
            out.push(ext(
                0,
                (((dim_cell.row as u32) << 16) | ((dim_cell.col as u32) << 8)) as i64,
            ));
            out.push(ext(1, drra.pack() as i64));
        }
        InstrDef::Loop {
            slot,
            iter_reg,
            body_len,
            count,
        } => {
            let mut rest = 0;
            if let Some(r) = iter_reg {
                rest |= 1 | ((*r as u32) << 4);
            }
            out.push(word(OP_LOOP, *slot as u32, rest));
            out.push(ext(0, *body_len as i64));
            out.push(ext(1, *count as i64));
        }
        InstrDef::Branch { jump_if, off } => {
            out.push(word(OP_BRANCH, *jump_if as u32, *off as u32));
        }
        InstrDef::Jump { off } => out.push(word(OP_JUMP, 0, *off as u32)),
        InstrDef::Wait { cycles } => out.push(word(OP_WAIT, 0, *cycles)),
    }
}

fn encode_agu(op: u32, slot: u32, extra_rest: u32, agu: &AguProgram, delay: u32, out: &mut Vec<u32>) {
    let mut rest = extra_rest;
    if agu.level2.is_some() {
        rest |= 1;
    }
    let base = match agu.base {
        FieldVal::Imm(v) => {
            out.push(word(op, slot, rest));
            v as i64
        }
        FieldVal::Reg(r) => {
            rest |= 2 | ((r as u32) << 4);
            out.push(word(op, slot, rest));
            0
        }
    };
    let (s2, n2) = agu.level2.unwrap_or((0, 1));
    out.push(ext(0, base));
    out.push(ext(1, agu.s1 as i64));
    out.push(ext(2, agu.n1 as i64));
    out.push(ext(3, s2 as i64));
    out.push(ext(4, n2 as i64));
    out.push(ext(5, delay as i64));
}

/// Encode per-cell instruction streams into the binary word sequence.
/// Streams are emitted sorted by cell coordinate.
pub fn encode_streams(streams: &[(CellCoord, Vec<InstrDef>)]) -> Vec<u8> {
    let mut cells: Vec<_> = streams.iter().collect();
    cells.sort_by_key(|(c, _)| *c);
    let mut words = Vec::new();
    for (cell, instrs) in cells {
        let mut body = Vec::new();
        for i in instrs {
            encode_instr(i, &mut body);
        }
        assert!(body.len() < (1 << 12), "stream too long to encode");
        words.push(
            (OP_CELL << 28)
                | ((cell.row as u32) << 20)
                | ((cell.col as u32) << 12)
                | body.len() as u32,
        );
        words.extend(body);
    }
    let mut bytes = Vec::with_capacity(words.len() * 4);
    for w in words {
        bytes.extend_from_slice(&w.to_le_bytes());
    }
    bytes
}

struct Cursor<'a> {
    words: &'a [u32],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take_ext(&mut self) -> Result<i32, DecodeError> {
        let w = *self
            .words
            .get(self.pos)
            .ok_or(DecodeError::MissingExt(self.pos))?;
        if w >> 28 != OP_EXT {
            return Err(DecodeError::MissingExt(self.pos));
        }
        self.pos += 1;
        Ok(sext24(w & 0xFF_FFFF))
    }
}

fn decode_instr(cur: &mut Cursor) -> Result<InstrDef, DecodeError> {
    let at = cur.pos;
    let w = cur.words[cur.pos];
    cur.pos += 1;
    let op = w >> 28;
    let slot = (w >> 24) & 0xF;
    let rest = w & 0xFF_FFFF;
    let instr = match op {
        OP_DPU => {
            let mode = DpuMode::from_code(rest >> 20).ok_or(DecodeError::BadField(at))?;
            let count = cur.take_ext()? as u32;
            let delay = cur.take_ext()? as u32;
            InstrDef::Dpu { mode, count, delay }
        }
        OP_REFI | OP_SRAM => {
            let has_l2 = rest & 1 != 0;
            let base_is_reg = rest & 2 != 0;
            let base_reg = ((rest >> 4) & 0xF) as u8;
            let base_imm = cur.take_ext()?;
            let s1 = cur.take_ext()?;
            let n1 = cur.take_ext()? as u32;
            let s2 = cur.take_ext()?;
            let n2 = cur.take_ext()? as u32;
            let delay = cur.take_ext()? as u32;
            if n1 == 0 || (has_l2 && n2 == 0) {
                return Err(DecodeError::BadField(at));
            }
            let agu = AguProgram {
                base: if base_is_reg {
                    FieldVal::Reg(base_reg)
                } else {
                    FieldVal::Imm(base_imm)
                },
                s1,
                n1,
                level2: has_l2.then_some((s2, n2)),
            };
            if op == OP_REFI {
                let port = RfPort::from_code(slot).ok_or(DecodeError::BadField(at))?;
                InstrDef::Refi { port, agu, delay }
            } else {
                let dim_cell =
                    CellCoord::new(((rest >> 16) & 0xFF) as u8, ((rest >> 8) & 0xFF) as u8);
                InstrDef::Sram {
                    dim_cell,
                    write: slot == 1,
                    agu,
                    delay,
                }
            }
        }
        OP_RACCU => {
            let opc = RaccuOp::from_code(rest >> 20).ok_or(DecodeError::BadField(at))?;
            let a_imm = rest & 2 != 0;
            let b_imm = rest & 1 != 0;
            let av = cur.take_ext()?;
            let bv = cur.take_ext()?;
            let dec = |imm: bool, v: i32| -> Result<RaccuOperand, DecodeError> {
                if imm {
                    Ok(RaccuOperand::Imm(v))
                } else if (0..16).contains(&v) {
                    Ok(RaccuOperand::Reg(v as u8))
                } else {
                    Err(DecodeError::BadField(at))
                }
            };
            InstrDef::Raccu {
                op: opc,
                dst: slot as u8,
                a: dec(a_imm, av)?,
                b: dec(b_imm, bv)?,
            }
        }
        OP_SWB => {
            let src = Endpoint::unpack(cur.take_ext()? as u32).ok_or(DecodeError::BadField(at))?;
            let dst = Endpoint::unpack(cur.take_ext()? as u32).ok_or(DecodeError::BadField(at))?;
            InstrDef::Swb {
                channel: slot as u8,
                src,
                dst,
            }
        }
        OP_ROUTE => {
            let dimw = cur.take_ext()? as u32;
            let dim_cell = CellCoord::new(((dimw >> 16) & 0xFF) as u8, ((dimw >> 8) & 0xFF) as u8);
            let drra =
                Endpoint::unpack(cur.take_ext()? as u32).ok_or(DecodeError::BadField(at))?;
            InstrDef::Route {
                channel: slot as u8,
                dir: if rest & 1 != 0 {
                    RouteDir::CellToMem
                } else {
                    RouteDir::MemToCell
                },
                dim_cell,
                drra,
            }
        }
        OP_LOOP => {
            let iter_reg = (rest & 1 != 0).then(|| ((rest >> 4) & 0xF) as u8);
            let body_len = cur.take_ext()? as u32;
            let count = cur.take_ext()? as u32;
            if count == 0 {
                return Err(DecodeError::BadField(at));
            }
            InstrDef::Loop {
                slot: slot as u8,
                iter_reg,
                body_len,
                count,
            }
        }
        OP_BRANCH => InstrDef::Branch {
            jump_if: slot & 1 != 0,
            off: sext24(rest),
        },
        OP_JUMP => InstrDef::Jump { off: sext24(rest) },
        OP_WAIT => InstrDef::Wait { cycles: rest },
        other => return Err(DecodeError::BadOpcode(at, other)),
    };
    Ok(instr)
}

/// Decode a binary file back into per-cell streams.
pub fn decode_streams(bytes: &[u8]) -> Result<Vec<(CellCoord, Vec<InstrDef>)>, DecodeError> {
    if bytes.len() % 4 != 0 {
        return Err(DecodeError::BadLength(bytes.len()));
    }
    let words: Vec<u32> = bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < words.len() {
        let w = words[pos];
        if w >> 28 != OP_CELL {
            return Err(if pos == 0 {
                DecodeError::NoHeader
            } else {
                DecodeError::BadOpcode(pos, w >> 28)
            });
        }
        let cell = CellCoord::new(((w >> 20) & 0xFF) as u8, ((w >> 12) & 0xFF) as u8);
        let n = (w & 0xFFF) as usize;
        pos += 1;
        if pos + n > words.len() {
            return Err(DecodeError::Truncated(pos - 1, n));
        }
        let mut cur = Cursor {
            words: &words[..pos + n],
            pos,
        };
        let mut instrs = Vec::new();
        while cur.pos < pos + n {
            instrs.push(decode_instr(&mut cur)?);
        }
        pos += n;
        out.push((cell, instrs));
    }
    Ok(out)
}

/// Verbose text listing of the per-cell streams.
pub fn render_streams(streams: &[(CellCoord, Vec<InstrDef>)]) -> String {
    let mut cells: Vec<_> = streams.iter().collect();
    cells.sort_by_key(|(c, _)| *c);
    let mut out = String::new();
    for (cell, instrs) in cells {
        out.push_str(&format!("cell{} [{} instructions]\n", cell, instrs.len()));
        for (i, instr) in instrs.iter().enumerate() {
            out.push_str(&format!("  {i:3}: {instr}\n"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_stream() -> Vec<(CellCoord, Vec<InstrDef>)> {
        vec![
            (
                CellCoord::new(0, 0),
                vec![
                    InstrDef::Swb {
                        channel: 0,
                        src: Endpoint {
                            cell: CellCoord::new(0, 0),
                            unit: EndpointUnit::RfOut(0),
                        },
                        dst: Endpoint {
                            cell: CellCoord::new(0, 0),
                            unit: EndpointUnit::DpuIn(0),
                        },
                    },
                    InstrDef::Refi {
                        port: RfPort::Rd(0),
                        agu: AguProgram {
                            base: FieldVal::Imm(0),
                            s1: 1,
                            n1: 8,
                            level2: None,
                        },
                        delay: 2,
                    },
                    InstrDef::Refi {
                        port: RfPort::Wr(1),
                        agu: AguProgram {
                            base: FieldVal::Reg(3),
                            s1: -2,
                            n1: 4,
                            level2: Some((8, 3)),
                        },
                        delay: 0,
                    },
                    InstrDef::Dpu {
                        mode: DpuMode::Mac,
                        count: 8,
                        delay: 1,
                    },
                    InstrDef::Raccu {
                        op: RaccuOp::Add,
                        dst: 2,
                        a: RaccuOperand::Reg(2),
                        b: RaccuOperand::Imm(-1),
                    },
                    InstrDef::Loop {
                        slot: 0,
                        iter_reg: Some(1),
                        body_len: 5,
                        count: 16,
                    },
                    InstrDef::Branch {
                        jump_if: false,
                        off: 3,
                    },
                    InstrDef::Jump { off: -2 },
                    InstrDef::Wait { cycles: 7 },
                ],
            ),
            (
                CellCoord::new(1, 1),
                vec![
                    InstrDef::Route {
                        channel: 1,
                        dir: RouteDir::MemToCell,
                        dim_cell: CellCoord::new(0, 1),
                        drra: Endpoint {
                            cell: CellCoord::new(1, 1),
                            unit: EndpointUnit::RfIn(0),
                        },
                    },
                    InstrDef::Sram {
                        dim_cell: CellCoord::new(0, 1),
                        write: false,
                        agu: AguProgram {
                            base: FieldVal::Imm(16),
                            s1: 1,
                            n1: 8,
                            level2: None,
                        },
                        delay: 0,
                    },
                ],
            ),
        ]
    }

    #[test]
    fn roundtrip() {
        let streams = sample_stream();
        let bytes = encode_streams(&streams);
        let back = decode_streams(&bytes).unwrap();
        assert_eq!(back, streams);
    }

    #[test]
    fn corrupted_stream_is_rejected() {
        let streams = sample_stream();
        let mut bytes = encode_streams(&streams);
        // truncate the final word
        bytes.truncate(bytes.len() - 4);
        assert!(decode_streams(&bytes).is_err());
        // garbage at the front
        let mut garbage = vec![0xFFu8; 4];
        garbage.extend(encode_streams(&streams));
        assert!(decode_streams(&garbage).is_err());
        // odd length
        assert_eq!(
            decode_streams(&[1, 2, 3]).unwrap_err(),
            DecodeError::BadLength(3)
        );
    }

    #[test]
    fn empty_file_decodes_to_no_streams() {
        assert_eq!(decode_streams(&[]).unwrap(), vec![]);
    }
}
