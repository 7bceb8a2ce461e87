//! Machine description of the compute/memory fabric: grid dimensions,
//! per-cell resource counts, the table-driven cost model and the text
//! layout emitter.
//!
//! The compute array is a grid of cells each holding a register file (RF),
//! a datapath unit (DPU), a switchbox (SWB), a scalar address-constraint
//! unit (RACCU) and a sequencer (SEQ). The memory array is a grid of SRAM
//! scratchpad cells reached over a circuit-switched NoC.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use thiserror::Error;

/// Row/column position of a cell inside one of the two grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellCoord {
    pub row: u8,
    pub col: u8,
}

impl CellCoord {
    pub fn new(row: u8, col: u8) -> Self {
        CellCoord { row, col }
    }
}

impl fmt::Display for CellCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// Storage class a variable can be bound to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Storage {
    Rf,
    Sram,
}

impl fmt::Display for Storage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Storage::Rf => write!(f, "rf"),
            Storage::Sram => write!(f, "sram"),
        }
    }
}

/// Instruction classes as priced by the cost tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OpClass {
    Dpu,
    Refi,
    Sram,
    Raccu,
    Swb,
    Route,
    Loop,
    Branch,
    Jump,
    Wait,
}

impl OpClass {
    pub const ALL: [OpClass; 10] = [
        OpClass::Dpu,
        OpClass::Refi,
        OpClass::Sram,
        OpClass::Raccu,
        OpClass::Swb,
        OpClass::Route,
        OpClass::Loop,
        OpClass::Branch,
        OpClass::Jump,
        OpClass::Wait,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            OpClass::Dpu => "dpu",
            OpClass::Refi => "refi",
            OpClass::Sram => "sram",
            OpClass::Raccu => "raccu",
            OpClass::Swb => "swb",
            OpClass::Route => "route",
            OpClass::Loop => "loop",
            OpClass::Branch => "branch",
            OpClass::Jump => "jump",
            OpClass::Wait => "wait",
        }
    }
}

/// Fabric description: grid sizes plus per-cell resource counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FabricSpec {
    pub drra_rows: u8,
    pub drra_cols: u8,
    pub dimarch_rows: u8,
    pub dimarch_cols: u8,
    pub rf_words: u32,
    pub rf_read_ports: u8,
    pub rf_write_ports: u8,
    pub swb_channels: u8,
    pub raccu_regs: u8,
    pub seq_mem_slots: u32,
    /// Maximum number of columns an interconnect channel may span,
    /// endpoints inclusive.
    pub sharing_span: u8,
    pub sram_words: u32,
    pub tables: CostTables,
}

impl Default for FabricSpec {
    fn default() -> Self {
        FabricSpec {
            drra_rows: 2,
            drra_cols: 2,
            dimarch_rows: 2,
            dimarch_cols: 2,
            rf_words: 64,
            rf_read_ports: 2,
            rf_write_ports: 2,
            swb_channels: 4,
            raccu_regs: 8,
            seq_mem_slots: 64,
            sharing_span: 5,
            sram_words: 256,
            tables: CostTables::default(),
        }
    }
}

impl FabricSpec {
    pub fn drra_in_bounds(&self, c: CellCoord) -> bool {
        c.row < self.drra_rows && c.col < self.drra_cols
    }

    pub fn dimarch_in_bounds(&self, c: CellCoord) -> bool {
        c.row < self.dimarch_rows && c.col < self.dimarch_cols
    }

    /// True when a channel between the two compute-cell columns fits in the
    /// resource sharing window.
    pub fn within_sharing_span(&self, a: CellCoord, b: CellCoord) -> bool {
        let spanned = (a.col as i32 - b.col as i32).unsigned_abs() + 1;
        spanned <= self.sharing_span as u32
    }

    /// Cycles a value spends on the NoC between an SRAM cell and a compute
    /// cell: one boundary crossing plus the Manhattan distance, with memory
    /// row 0 adjacent to compute row 0.
    pub fn route_hops(&self, sram: CellCoord, drra: CellCoord) -> u32 {
        1 + sram.row as u32 + drra.row as u32 + (sram.col as i32 - drra.col as i32).unsigned_abs()
    }
}

/// Synthetic per-activation energy, per-cell area and static power tables.
/// All units are abstract; the shipped defaults are round placeholder
/// numbers meant to be overridden from the fabric file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostTables {
    pub energy: [(OpClass, u64); 10],
    pub area_drra_cell: u64,
    pub area_dimarch_cell: u64,
    pub static_power_per_cell_cycle: u64,
}

impl Default for CostTables {
    fn default() -> Self {
        CostTables {
            energy: [
                (OpClass::Dpu, 4),
                (OpClass::Refi, 2),
                (OpClass::Sram, 3),
                (OpClass::Raccu, 1),
                (OpClass::Swb, 1),
                (OpClass::Route, 2),
                (OpClass::Loop, 1),
                (OpClass::Branch, 1),
                (OpClass::Jump, 1),
                (OpClass::Wait, 0),
            ],
            area_drra_cell: 100,
            area_dimarch_cell: 80,
            static_power_per_cell_cycle: 1,
        }
    }
}

impl CostTables {
    pub fn energy_of(&self, class: OpClass) -> u64 {
        self.energy
            .iter()
            .find(|(c, _)| *c == class)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    fn set_energy(&mut self, class: OpClass, value: u64) {
        for slot in self.energy.iter_mut() {
            if slot.0 == class {
                slot.1 = value;
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum FabricError {
    #[error("{0}: parse error: {1}")]
    Parse(String, String),
    #[error("{0}: invalid count: {1}")]
    InvalidCount(String, String),
    #[error("cannot read fabric file: {0}")]
    Io(#[from] std::io::Error),
}

/// Load a fabric description from a line-oriented `key=value` file.
/// Absent keys keep their defaults; an empty file is the default fabric.
pub fn load_fabric(path: &Path) -> Result<FabricSpec, FabricError> {
    let text = std::fs::read_to_string(path)?;
    parse_fabric(&text)
}

/// Parse fabric text (see [`load_fabric`]).
pub fn parse_fabric(text: &str) -> Result<FabricSpec, FabricError> {
    let mut spec = FabricSpec::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = format!("line {}", lineno + 1);
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| FabricError::Parse(at.clone(), format!("expected key=value: {line}")))?;
        let (key, value) = (key.trim(), value.trim());
        let grid = |v: &str| -> Result<(u8, u8), FabricError> {
            let (r, c) = v
                .split_once('x')
                .ok_or_else(|| FabricError::Parse(at.clone(), format!("expected RxC: {v}")))?;
            let r: u8 = r
                .trim()
                .parse()
                .map_err(|_| FabricError::Parse(at.clone(), format!("bad rows: {v}")))?;
            let c: u8 = c
                .trim()
                .parse()
                .map_err(|_| FabricError::Parse(at.clone(), format!("bad cols: {v}")))?;
            if r == 0 || c == 0 {
                return Err(FabricError::InvalidCount(at.clone(), v.to_string()));
            }
            Ok((r, c))
        };
        let num = |v: &str| -> Result<u64, FabricError> {
            v.parse()
                .map_err(|_| FabricError::Parse(at.clone(), format!("bad number: {v}")))
        };
        let pos = |v: &str| -> Result<u64, FabricError> {
            let n = num(v)?;
            if n == 0 {
                return Err(FabricError::InvalidCount(at.clone(), v.to_string()));
            }
            Ok(n)
        };
        match key {
            "drra" => {
                let (r, c) = grid(value)?;
                spec.drra_rows = r;
                spec.drra_cols = c;
            }
            "dimarch" => {
                let (r, c) = grid(value)?;
                spec.dimarch_rows = r;
                spec.dimarch_cols = c;
            }
            "rf_words" => spec.rf_words = pos(value)? as u32,
            "rf_read_ports" => spec.rf_read_ports = pos(value)? as u8,
            "rf_write_ports" => spec.rf_write_ports = pos(value)? as u8,
            "swb_channels" => spec.swb_channels = pos(value)? as u8,
            "raccu_regs" => spec.raccu_regs = pos(value)? as u8,
            "seq_mem_slots" => spec.seq_mem_slots = pos(value)? as u32,
            "sharing_span" => spec.sharing_span = pos(value)? as u8,
            "sram_words" => spec.sram_words = pos(value)? as u32,
            "area.drra" => spec.tables.area_drra_cell = num(value)?,
            "area.dimarch" => spec.tables.area_dimarch_cell = num(value)?,
            "static_power" => spec.tables.static_power_per_cell_cycle = num(value)?,
            _ => {
                if let Some(op) = key.strip_prefix("energy.") {
                    let class = OpClass::ALL
                        .iter()
                        .find(|c| c.name() == op)
                        .copied()
                        .ok_or_else(|| {
                            FabricError::Parse(at.clone(), format!("unknown op class: {op}"))
                        })?;
                    spec.tables.set_energy(class, num(value)?);
                } else {
                    return Err(FabricError::Parse(at, format!("unknown key: {key}")));
                }
            }
        }
    }
    Ok(spec)
}

/// One activation to be priced: an instruction issue on a cell.
#[derive(Debug, Clone, Copy)]
pub struct Activation {
    pub cell: CellCoord,
    pub class: OpClass,
}

/// Cost summary for one compiled kernel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostReport {
    pub latency_cycles: u64,
    pub energy: u64,
    pub area: u64,
    /// Issue-slot occupancy per compute cell, in 1/10000 units.
    pub utilization: Vec<(CellCoord, u64)>,
}

/// Price a schedule. `latency` is the scheduler span and is taken as-is,
/// never re-estimated. Dynamic energy is linear in activations; static
/// energy accrues per used cell per cycle.
pub fn estimate_cost(
    latency: u64,
    activations: &[Activation],
    used_drra: &BTreeSet<CellCoord>,
    used_dimarch: &BTreeSet<CellCoord>,
    tables: &CostTables,
) -> CostReport {
    let dynamic: u64 = activations.iter().map(|a| tables.energy_of(a.class)).sum();
    let cells = (used_drra.len() + used_dimarch.len()) as u64;
    let energy = dynamic + latency * tables.static_power_per_cell_cycle * cells;
    let area = used_drra.len() as u64 * tables.area_drra_cell
        + used_dimarch.len() as u64 * tables.area_dimarch_cell;
    let mut utilization = Vec::new();
    for cell in used_drra {
        let issues = activations.iter().filter(|a| a.cell == *cell).count() as u64;
        let frac = if latency == 0 {
            0
        } else {
            issues * 10_000 / latency
        };
        utilization.push((*cell, frac));
    }
    CostReport {
        latency_cycles: latency,
        energy,
        area,
        utilization,
    }
}

impl CostReport {
    /// Human-readable report followed by a machine-readable section.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("latency_cycles: {}\n", self.latency_cycles));
        out.push_str(&format!("energy: {}\n", self.energy));
        out.push_str(&format!("area: {}\n", self.area));
        for (cell, frac) in &self.utilization {
            out.push_str(&format!("utilization{}: 0.{:04}\n", cell, (*frac).min(9999)));
        }
        out.push_str("--\n");
        out.push_str(&format!("latency_cycles={}\n", self.latency_cycles));
        out.push_str(&format!("energy={}\n", self.energy));
        out.push_str(&format!("area={}\n", self.area));
        out
    }
}

/// Entry of the binding legend printed under the layout grid.
#[derive(Debug, Clone)]
pub struct LegendEntry {
    pub var: String,
    pub storage: Storage,
    pub cell: CellCoord,
    pub offset: u32,
    pub len: u32,
}

/// Render the fabric as a character grid: memory rows first (`M` used /
/// `m` unused), then compute rows (`D`/`d`), then the binding legend.
pub fn emit_layout(
    fabric: &FabricSpec,
    used_drra: &BTreeSet<CellCoord>,
    used_dimarch: &BTreeSet<CellCoord>,
    legend: &[LegendEntry],
) -> String {
    let mut out = String::new();
    for r in 0..fabric.dimarch_rows {
        for c in 0..fabric.dimarch_cols {
            out.push(if used_dimarch.contains(&CellCoord::new(r, c)) {
                'M'
            } else {
                'm'
            });
        }
        out.push('\n');
    }
    for r in 0..fabric.drra_rows {
        for c in 0..fabric.drra_cols {
            out.push(if used_drra.contains(&CellCoord::new(r, c)) {
                'D'
            } else {
                'd'
            });
        }
        out.push('\n');
    }
    if !legend.is_empty() {
        out.push('\n');
        for e in legend {
            out.push_str(&format!(
                "{} {}{}@{} len={}\n",
                e.var, e.storage, e.cell, e.offset, e.len
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_fabric_text_gives_defaults() {
        let spec = parse_fabric("").unwrap();
        assert_eq!(spec, FabricSpec::default());
    }

    #[test]
    fn grid_override() {
        let spec = parse_fabric("drra=4x4\n").unwrap();
        assert_eq!((spec.drra_rows, spec.drra_cols), (4, 4));
        assert_eq!((spec.dimarch_rows, spec.dimarch_cols), (2, 2));
    }

    #[test]
    fn zero_sharing_span_rejected() {
        assert!(matches!(
            parse_fabric("sharing_span=0\n"),
            Err(FabricError::InvalidCount(..))
        ));
    }

    #[test]
    fn energy_override() {
        let spec = parse_fabric("energy.dpu=9\n").unwrap();
        assert_eq!(spec.tables.energy_of(OpClass::Dpu), 9);
    }

    #[test]
    fn sharing_span_counts_inclusive_columns() {
        let f = FabricSpec::default();
        // span 5 allows endpoints up to 4 columns apart
        assert!(f.within_sharing_span(CellCoord::new(0, 0), CellCoord::new(0, 4)));
        assert!(!f.within_sharing_span(CellCoord::new(0, 0), CellCoord::new(0, 5)));
    }

    #[test]
    fn layout_grid_shapes() {
        let f = FabricSpec::default();
        let mut used = BTreeSet::new();
        used.insert(CellCoord::new(0, 0));
        used.insert(CellCoord::new(0, 1));
        used.insert(CellCoord::new(1, 0));
        used.insert(CellCoord::new(1, 1));
        let text = emit_layout(&f, &used, &BTreeSet::new(), &[]);
        assert_eq!(text, "mm\nmm\nDD\nDD\n");
        let none = emit_layout(&f, &BTreeSet::new(), &BTreeSet::new(), &[]);
        assert_eq!(none, "mm\nmm\ndd\ndd\n");
    }

    #[test]
    fn cost_linearity_in_activations() {
        let t = CostTables::default();
        let cell = CellCoord::new(0, 0);
        let acts = vec![
            Activation {
                cell,
                class: OpClass::Dpu
            };
            3
        ];
        let double: Vec<Activation> = acts.iter().chain(acts.iter()).copied().collect();
        let used: BTreeSet<CellCoord> = [cell].into_iter().collect();
        let a = estimate_cost(0, &acts, &used, &BTreeSet::new(), &t);
        let b = estimate_cost(0, &double, &used, &BTreeSet::new(), &t);
        assert_eq!(b.energy, 2 * a.energy);
    }

    #[test]
    fn empty_program_cost() {
        let t = CostTables::default();
        let r = estimate_cost(0, &[], &BTreeSet::new(), &BTreeSet::new(), &t);
        assert_eq!(r.latency_cycles, 0);
        assert_eq!(r.energy, 0);
        assert_eq!(r.area, 0);
    }
}
