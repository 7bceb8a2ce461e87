//! IR1: the control address dataflow graph. Vector accesses are explicit
//! `ADDRESS -> READ/WRITE` pairs driven by affine address functions;
//! run-time-computed address fields hang off `CONSTRAINT` vertices; loops
//! and branches are single `LOOP`/`BRANCH` vertices owning nested regions;
//! data hazards are recorded as dependency edges and classified as
//! strong/weak/fake.

mod build;
mod classify;
mod passes;

pub use build::build_cadfg;
pub use classify::{classify_dependency, AccessPattern, DepClass};
pub use passes::{
    analyze_dependencies, eliminate_dead_code, fold_constants, loop_to_vector,
    propagate_constants,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::affine::AffineAddressFn;
use crate::expr::Expr;
use crate::frontend::CmpOp;

pub type VertexId = usize;
pub type EdgeId = usize;
pub type RegionId = usize;

/// Address function with a possibly symbolic base. Steps and counts are
/// compile-time constants by construction; only the base may reference
/// loop iterators.
#[derive(Debug, Clone, PartialEq)]
pub struct SymAgu {
    pub base: Expr,
    pub s1: i64,
    pub n1: u32,
    pub level2: Option<(i64, u32)>,
}

impl SymAgu {
    pub fn resolved(&self) -> Option<AffineAddressFn> {
        let base = self.base.as_const()?;
        Some(match self.level2 {
            None => AffineAddressFn::one_level(base, self.s1, self.n1),
            Some((s2, n2)) => AffineAddressFn::two_level(base, self.s1, self.n1, s2, n2),
        })
    }

    pub fn total(&self) -> u64 {
        self.n1 as u64 * self.level2.map(|(_, n2)| n2 as u64).unwrap_or(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComputeOp {
    Add,
    Sub,
    Mul,
    /// Multiply-accumulate reduction: consumes a stream, emits one value.
    Mac,
    Cmp(CmpOp),
}

impl ComputeOp {
    pub fn name(&self) -> &'static str {
        match self {
            ComputeOp::Add => "ADD",
            ComputeOp::Sub => "SUB",
            ComputeOp::Mul => "MUL",
            ComputeOp::Mac => "MAC",
            ComputeOp::Cmp(CmpOp::Eq) => "CMPEQ",
            ComputeOp::Cmp(CmpOp::Lt) => "CMPLT",
            ComputeOp::Cmp(CmpOp::Gt) => "CMPGT",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VertexKind {
    Compute {
        op: ComputeOp,
        /// Elements consumed per activation.
        count: u32,
    },
    Read {
        var: String,
    },
    Write {
        var: String,
    },
    Address {
        agu: SymAgu,
    },
    /// Computes the (possibly run-time) value of the target address
    /// vertex's base field.
    Constraint {
        expr: Expr,
        target: VertexId,
    },
    Loop {
        iter: String,
        lo: i64,
        step: i64,
        count: u32,
    },
    Branch,
    Const {
        val: i64,
    },
}

impl VertexKind {
    pub fn name(&self) -> &'static str {
        match self {
            VertexKind::Compute { .. } => "COMPUTE",
            VertexKind::Read { .. } => "READ",
            VertexKind::Write { .. } => "WRITE",
            VertexKind::Address { .. } => "ADDRESS",
            VertexKind::Constraint { .. } => "CONSTRAINT",
            VertexKind::Loop { .. } => "LOOP",
            VertexKind::Branch => "BRANCH",
            VertexKind::Const { .. } => "CONST",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Vertex {
    pub id: VertexId,
    pub kind: VertexKind,
    pub region: RegionId,
    /// Serial number of the originating statement; intra-statement access
    /// pairs never get dependency edges (fused streams preserve element
    /// order by construction).
    pub stmt: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Hazard {
    Raw,
    War,
    Waw,
}

impl Hazard {
    pub fn name(&self) -> &'static str {
        match self {
            Hazard::Raw => "RAW",
            Hazard::War => "WAR",
            Hazard::Waw => "WAW",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strength {
    Unanalyzed,
    Strong,
    Weak,
}

impl Strength {
    pub fn name(&self) -> &'static str {
        match self {
            Strength::Unanalyzed => "UNANALYZED",
            Strength::Strong => "STRONG",
            Strength::Weak => "WEAK",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EdgeKind {
    Data { operand: u8 },
    AddressStream,
    Dependency { hazard: Hazard, strength: Strength },
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub id: EdgeId,
    pub src: VertexId,
    pub dst: VertexId,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    Top,
    LoopBody(VertexId),
    Then(VertexId),
    Else(VertexId),
}

#[derive(Debug, Clone)]
pub struct RegionInfo {
    pub id: RegionId,
    pub kind: RegionKind,
    pub parent: RegionId,
    pub alive: bool,
}

/// The IR1 graph. Vertex and edge ids are stable across passes (deleted
/// slots become tombstones) so text dumps stay comparable.
#[derive(Debug, Clone, Default)]
pub struct Cadfg {
    verts: Vec<Option<Vertex>>,
    edges: Vec<Option<Edge>>,
    pub regions: Vec<RegionInfo>,
    /// Output-variable set used by dead code elimination.
    pub outputs: BTreeSet<String>,
    /// Compile-time constant scalar declarations (enables propagation into
    /// reads of never-written constants).
    pub const_inits: BTreeMap<String, i16>,
}

impl Cadfg {
    pub fn new() -> Self {
        let mut g = Cadfg::default();
        g.regions.push(RegionInfo {
            id: 0,
            kind: RegionKind::Top,
            parent: 0,
            alive: true,
        });
        g
    }

    pub fn add_vertex(&mut self, kind: VertexKind, region: RegionId, stmt: usize) -> VertexId {
        let id = self.verts.len();
        self.verts.push(Some(Vertex {
            id,
            kind,
            region,
            stmt,
        }));
        id
    }

    pub fn add_region(&mut self, kind: RegionKind, parent: RegionId) -> RegionId {
        let id = self.regions.len();
        self.regions.push(RegionInfo {
            id,
            kind,
            parent,
            alive: true,
        });
        id
    }

    pub fn add_edge(&mut self, src: VertexId, dst: VertexId, kind: EdgeKind) -> EdgeId {
        let id = self.edges.len();
        self.edges.push(Some(Edge { id, src, dst, kind }));
        id
    }

    pub fn vertex(&self, id: VertexId) -> &Vertex {
        self.verts[id].as_ref().expect("vertex deleted")
    }

    pub fn vertex_mut(&mut self, id: VertexId) -> &mut Vertex {
        self.verts[id].as_mut().expect("vertex deleted")
    }

    pub fn try_vertex(&self, id: VertexId) -> Option<&Vertex> {
        self.verts.get(id).and_then(|v| v.as_ref())
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        self.edges[id].as_ref().expect("edge deleted")
    }

    pub fn vertices(&self) -> impl Iterator<Item = &Vertex> {
        self.verts.iter().flatten()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().flatten()
    }

    pub fn edge_ids(&self) -> Vec<EdgeId> {
        self.edges.iter().flatten().map(|e| e.id).collect()
    }

    pub fn in_edges(&self, v: VertexId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().flatten().filter(move |e| e.dst == v)
    }

    pub fn out_edges(&self, v: VertexId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().flatten().filter(move |e| e.src == v)
    }

    pub fn remove_edge(&mut self, id: EdgeId) {
        self.edges[id] = None;
    }

    pub fn remove_vertex(&mut self, id: VertexId) {
        for e in self.edges.iter_mut() {
            if let Some(edge) = e {
                if edge.src == id || edge.dst == id {
                    *e = None;
                }
            }
        }
        self.verts[id] = None;
    }

    /// The address vertex feeding a READ/WRITE vertex.
    pub fn address_of(&self, access: VertexId) -> Option<VertexId> {
        self.in_edges(access)
            .find(|e| e.kind == EdgeKind::AddressStream)
            .map(|e| e.src)
    }

    /// Resolved pattern of a READ/WRITE vertex, when constant.
    pub fn pattern_of(&self, access: VertexId) -> Option<AffineAddressFn> {
        let addr = self.address_of(access)?;
        match &self.vertex(addr).kind {
            VertexKind::Address { agu } => agu.resolved(),
            _ => None,
        }
    }

    /// True when `anc` is `region` or one of its ancestors.
    pub fn region_contains(&self, anc: RegionId, region: RegionId) -> bool {
        let mut r = region;
        loop {
            if r == anc {
                return true;
            }
            if r == 0 {
                return false;
            }
            r = self.regions[r].parent;
        }
    }

    /// Region ancestry path from top (exclusive) down to `region`.
    pub fn region_path(&self, region: RegionId) -> Vec<RegionId> {
        let mut path = Vec::new();
        let mut r = region;
        while r != 0 {
            path.push(r);
            r = self.regions[r].parent;
        }
        path.reverse();
        path
    }

    /// Two regions are exclusive when they sit in opposite arms of the same
    /// branch (accesses there can never both execute).
    pub fn regions_exclusive(&self, a: RegionId, b: RegionId) -> bool {
        let (pa, pb) = (self.region_path(a), self.region_path(b));
        for ra in &pa {
            for rb in &pb {
                let (ka, kb) = (self.regions[*ra].kind, self.regions[*rb].kind);
                match (ka, kb) {
                    (RegionKind::Then(x), RegionKind::Else(y))
                    | (RegionKind::Else(x), RegionKind::Then(y))
                        if x == y =>
                    {
                        return true;
                    }
                    _ => {}
                }
            }
        }
        false
    }

    pub fn child_regions(&self, parent: RegionId) -> Vec<RegionId> {
        self.regions
            .iter()
            .filter(|r| r.alive && r.id != parent && r.parent == parent)
            .map(|r| r.id)
            .collect()
    }

    pub fn region_verts(&self, region: RegionId) -> Vec<VertexId> {
        self.vertices()
            .filter(|v| v.region == region)
            .map(|v| v.id)
            .collect()
    }

    /// Structural invariants: every access has exactly one address stream,
    /// regions form a tree, dependency edges connect same-variable accesses.
    pub fn check_well_formed(&self) -> Result<(), String> {
        for v in self.vertices() {
            if matches!(v.kind, VertexKind::Read { .. } | VertexKind::Write { .. }) {
                let n = self
                    .in_edges(v.id)
                    .filter(|e| e.kind == EdgeKind::AddressStream)
                    .count();
                if n != 1 {
                    return Err(format!("vertex {} has {} address streams", v.id, n));
                }
            }
            if !self.regions[v.region].alive {
                return Err(format!("vertex {} in dead region {}", v.id, v.region));
            }
        }
        for e in self.edges() {
            if self.try_vertex(e.src).is_none() || self.try_vertex(e.dst).is_none() {
                return Err(format!("edge {} touches deleted vertex", e.id));
            }
            if let EdgeKind::Dependency { .. } = e.kind {
                let var_of = |id| match &self.vertex(id).kind {
                    VertexKind::Read { var } | VertexKind::Write { var } => Some(var.clone()),
                    _ => None,
                };
                match (var_of(e.src), var_of(e.dst)) {
                    (Some(a), Some(b)) if a == b => {}
                    _ => {
                        return Err(format!(
                            "dependency edge {} does not connect same-variable accesses",
                            e.id
                        ))
                    }
                }
            }
        }
        for r in &self.regions {
            if r.id != 0 && !self.regions[r.parent].alive && r.alive {
                return Err(format!("region {} has dead parent", r.id));
            }
        }
        Ok(())
    }

    /// Line-oriented text dump, stable-sorted by id.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for v in self.vertices() {
            let _ = write!(out, "v{} {} {{", v.id, v.kind.name());
            match &v.kind {
                VertexKind::Compute { op, count } => {
                    let _ = write!(out, "op={}, count={}", op.name(), count);
                }
                VertexKind::Read { var } | VertexKind::Write { var } => {
                    let _ = write!(out, "var={var}");
                }
                VertexKind::Address { agu } => {
                    let _ = write!(out, "base={}, s1={}, n1={}", agu.base, agu.s1, agu.n1);
                    if let Some((s2, n2)) = agu.level2 {
                        let _ = write!(out, ", s2={s2}, n2={n2}");
                    }
                }
                VertexKind::Constraint { expr, target } => {
                    let _ = write!(out, "expr={expr}, target=v{target}");
                }
                VertexKind::Loop {
                    iter,
                    lo,
                    step,
                    count,
                } => {
                    let _ = write!(out, "iter={iter}, lo={lo}, step={step}, count={count}");
                }
                VertexKind::Branch => {}
                VertexKind::Const { val } => {
                    let _ = write!(out, "val={val}");
                }
            }
            if v.region != 0 {
                let _ = write!(out, ", region={}", v.region);
            }
            out.push_str("}\n");
        }
        for e in self.edges() {
            match &e.kind {
                EdgeKind::Data { operand } => {
                    let _ = writeln!(out, "e {} {} DATA op{}", e.src, e.dst, operand);
                }
                EdgeKind::AddressStream => {
                    let _ = writeln!(out, "e {} {} ADDRESS_STREAM", e.src, e.dst);
                }
                EdgeKind::Dependency { hazard, strength } => {
                    let _ = writeln!(
                        out,
                        "e {} {} DEPENDENCY {} {}",
                        e.src,
                        e.dst,
                        hazard.name(),
                        strength.name()
                    );
                }
            }
        }
        out
    }
}
