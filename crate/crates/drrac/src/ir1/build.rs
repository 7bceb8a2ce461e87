//! Construction of the IR1 graph from the validated AST. Slice accesses
//! become READ/WRITE + ADDRESS vertex pairs with bank-absolute base
//! addresses; non-constant base fields get CONSTRAINT vertices; loops and
//! branches become LOOP/BRANCH vertices owning body regions. All data
//! hazards between statements are recorded unanalyzed.

use std::collections::BTreeMap;

use crate::expr::Expr;
use crate::frontend::{
    output_vars, Ast, BinOp, DeclInit, IxExpr, LValue, Pragmas, SliceRef, Stmt, VExpr, VarKind,
};

use super::{
    Cadfg, ComputeOp, EdgeKind, Hazard, RegionId, RegionKind, Strength, SymAgu, VertexId,
    VertexKind,
};

struct Builder<'a> {
    g: Cadfg,
    ast: &'a Ast,
    pragmas: &'a Pragmas,
    /// iterator name -> (loop vertex, lo, step)
    loops: Vec<(String, VertexId, i64, i64)>,
    stmt: usize,
}

/// Build the CADFG. Assumes `validate` passed; structural violations are
/// programming errors and panic.
pub fn build_cadfg(ast: &Ast, pragmas: &Pragmas) -> Cadfg {
    let mut b = Builder {
        g: Cadfg::new(),
        ast,
        pragmas,
        loops: Vec::new(),
        stmt: 0,
    };
    b.g.outputs = output_vars(ast, pragmas);
    for d in &ast.decls {
        if let DeclInit::Const(v) = d.init {
            b.g.const_inits.insert(d.name.clone(), v);
        }
    }
    b.stmts(&ast.stmts, 0);
    record_dependencies(&mut b.g);
    debug_assert_eq!(b.g.check_well_formed(), Ok(()));
    b.g
}

impl Builder<'_> {
    fn offset_of(&self, var: &str) -> i64 {
        self.pragmas
            .binding(var)
            .map(|b| b.offset as i64)
            .unwrap_or(0)
    }

    /// Convert a surface index expression (iterator names) to an IR
    /// expression over normalized iteration indices.
    fn ix_to_expr(&self, e: &IxExpr) -> Expr {
        match e {
            IxExpr::Const(c) => Expr::Const(*c),
            IxExpr::Var(name) => {
                let (_, vid, lo, step) = self
                    .loops
                    .iter()
                    .rev()
                    .find(|(n, ..)| n == name)
                    .unwrap_or_else(|| panic!("unvalidated iterator `{name}`"));
                // surface value = lo + step * idx
                Expr::add(
                    Expr::Const(*lo),
                    Expr::mul(Expr::Const(*step), Expr::Iter(*vid)),
                )
                .fold()
            }
            IxExpr::Add(a, b) => Expr::add(self.ix_to_expr(a), self.ix_to_expr(b)).fold(),
            IxExpr::Sub(a, b) => Expr::sub(self.ix_to_expr(a), self.ix_to_expr(b)).fold(),
            IxExpr::Mul(a, b) => Expr::mul(self.ix_to_expr(a), self.ix_to_expr(b)).fold(),
        }
    }

    /// ADDRESS vertex for a slice; adds a CONSTRAINT vertex when the base
    /// is not compile-time constant.
    fn address_for_slice(&mut self, s: &SliceRef, region: RegionId) -> VertexId {
        let base = Expr::add(Expr::Const(self.offset_of(&s.var)), self.ix_to_expr(&s.start)).fold();
        let symbolic = !base.is_const();
        let addr = self.g.add_vertex(
            VertexKind::Address {
                agu: SymAgu {
                    base: base.clone(),
                    s1: s.step,
                    n1: s.count,
                    level2: None,
                },
            },
            region,
            self.stmt,
        );
        if symbolic {
            let c = self.g.add_vertex(
                VertexKind::Constraint {
                    expr: base,
                    target: addr,
                },
                region,
                self.stmt,
            );
            self.g.add_edge(c, addr, EdgeKind::Data { operand: 0 });
        }
        addr
    }

    /// Broadcast ADDRESS vertex for a scalar variable read in a context of
    /// `n` elements.
    fn address_for_scalar(&mut self, var: &str, n: u32, region: RegionId) -> VertexId {
        self.g.add_vertex(
            VertexKind::Address {
                agu: SymAgu {
                    base: Expr::Const(self.offset_of(var)),
                    s1: 0,
                    n1: n,
                    level2: None,
                },
            },
            region,
            self.stmt,
        )
    }

    fn shape(&self, e: &VExpr) -> u32 {
        match e {
            VExpr::Const(..) => 1,
            VExpr::Var(name, _) => match self.ast.decl(name) {
                Some(d) if d.kind == VarKind::Vector => d.len,
                _ => 1,
            },
            VExpr::Slice(s) => s.count,
            VExpr::Bin(_, a, b, _) => self.shape(a).max(self.shape(b)),
            VExpr::Sum(..) => 1,
        }
    }

    /// Lower an expression in a context expecting `n` elements; returns the
    /// producing vertex (READ, COMPUTE or CONST).
    fn lower_expr(&mut self, e: &VExpr, n: u32, region: RegionId) -> VertexId {
        match e {
            VExpr::Const(c, _) => self
                .g
                .add_vertex(VertexKind::Const { val: *c }, region, self.stmt),
            VExpr::Var(name, _) => {
                let addr = self.address_for_scalar(name, n, region);
                let read = self.g.add_vertex(
                    VertexKind::Read { var: name.clone() },
                    region,
                    self.stmt,
                );
                self.g.add_edge(addr, read, EdgeKind::AddressStream);
                read
            }
            VExpr::Slice(s) => {
                let addr = self.address_for_slice(s, region);
                let read = self.g.add_vertex(
                    VertexKind::Read { var: s.var.clone() },
                    region,
                    self.stmt,
                );
                self.g.add_edge(addr, read, EdgeKind::AddressStream);
                read
            }
            VExpr::Bin(op, a, b, _) => {
                let ca = self.lower_expr(a, n, region);
                let cb = self.lower_expr(b, n, region);
                let op = match op {
                    BinOp::Add => ComputeOp::Add,
                    BinOp::Sub => ComputeOp::Sub,
                    BinOp::Mul => ComputeOp::Mul,
                };
                let v = self
                    .g
                    .add_vertex(VertexKind::Compute { op, count: n }, region, self.stmt);
                self.g.add_edge(ca, v, EdgeKind::Data { operand: 0 });
                self.g.add_edge(cb, v, EdgeKind::Data { operand: 1 });
                v
            }
            VExpr::Sum(arg, _) => {
                let m = self.shape(arg);
                // sum(a .* b) fuses into a single MAC; sum(x) multiplies by one
                let (ca, cb) = match arg.as_ref() {
                    VExpr::Bin(BinOp::Mul, a, b, _) => {
                        (self.lower_expr(a, m, region), self.lower_expr(b, m, region))
                    }
                    other => {
                        let ca = self.lower_expr(other, m, region);
                        let cb = self
                            .g
                            .add_vertex(VertexKind::Const { val: 1 }, region, self.stmt);
                        (ca, cb)
                    }
                };
                let v = self.g.add_vertex(
                    VertexKind::Compute {
                        op: ComputeOp::Mac,
                        count: m,
                    },
                    region,
                    self.stmt,
                );
                self.g.add_edge(ca, v, EdgeKind::Data { operand: 0 });
                self.g.add_edge(cb, v, EdgeKind::Data { operand: 1 });
                v
            }
        }
    }

    fn stmts(&mut self, stmts: &[Stmt], region: RegionId) {
        for s in stmts {
            self.stmt += 1;
            match s {
                Stmt::Assign { lhs, rhs, .. } => {
                    let (var, addr, n) = match lhs {
                        LValue::Var(name, _) => {
                            let addr = self.address_for_scalar(name, 1, region);
                            (name.clone(), addr, 1)
                        }
                        LValue::Slice(sl) => {
                            let addr = self.address_for_slice(sl, region);
                            (sl.var.clone(), addr, sl.count)
                        }
                    };
                    let producer = self.lower_expr(rhs, n, region);
                    let w = self
                        .g
                        .add_vertex(VertexKind::Write { var }, region, self.stmt);
                    self.g.add_edge(addr, w, EdgeKind::AddressStream);
                    self.g.add_edge(producer, w, EdgeKind::Data { operand: 0 });
                }
                Stmt::For {
                    var,
                    lo,
                    step,
                    hi,
                    body,
                    ..
                } => {
                    let lo = lo.as_const().expect("validated constant bound");
                    let step = step.as_const().expect("validated constant bound");
                    let hi = hi.as_const().expect("validated constant bound");
                    let count = crate::frontend::trip_count(lo, step, hi)
                        .expect("validated positive trip count");
                    let lv = self.g.add_vertex(
                        VertexKind::Loop {
                            iter: var.clone(),
                            lo,
                            step,
                            count,
                        },
                        region,
                        self.stmt,
                    );
                    let body_region = self.g.add_region(RegionKind::LoopBody(lv), region);
                    self.loops.push((var.clone(), lv, lo, step));
                    self.stmts(body, body_region);
                    self.loops.pop();
                }
                Stmt::If {
                    lhs,
                    op,
                    rhs,
                    then_body,
                    else_body,
                    ..
                } => {
                    let ca = self.lower_expr(lhs, 1, region);
                    let cb = self.lower_expr(rhs, 1, region);
                    let cmp = self.g.add_vertex(
                        VertexKind::Compute {
                            op: ComputeOp::Cmp(*op),
                            count: 1,
                        },
                        region,
                        self.stmt,
                    );
                    self.g.add_edge(ca, cmp, EdgeKind::Data { operand: 0 });
                    self.g.add_edge(cb, cmp, EdgeKind::Data { operand: 1 });
                    let bv = self.g.add_vertex(VertexKind::Branch, region, self.stmt);
                    self.g.add_edge(cmp, bv, EdgeKind::Data { operand: 0 });
                    let then_region = self.g.add_region(RegionKind::Then(bv), region);
                    self.stmts(then_body, then_region);
                    let else_region = self.g.add_region(RegionKind::Else(bv), region);
                    self.stmts(else_body, else_region);
                }
            }
        }
    }
}

/// Record every data hazard between distinct statements as an unanalyzed
/// dependency edge. Pairs in mutually exclusive branch arms are skipped;
/// intra-statement pairs are skipped (fused streams preserve element
/// order).
fn record_dependencies(g: &mut Cadfg) {
    struct Access {
        vert: VertexId,
        write: bool,
        stmt: usize,
        region: RegionId,
    }
    let mut by_var: BTreeMap<String, Vec<Access>> = BTreeMap::new();
    for v in g.vertices() {
        let (var, write) = match &v.kind {
            VertexKind::Read { var } => (var.clone(), false),
            VertexKind::Write { var } => (var.clone(), true),
            _ => continue,
        };
        by_var.entry(var).or_default().push(Access {
            vert: v.id,
            write,
            stmt: v.stmt,
            region: v.region,
        });
    }
    let mut new_edges = Vec::new();
    for accesses in by_var.values() {
        for (i, a) in accesses.iter().enumerate() {
            for b in &accesses[i + 1..] {
                if a.stmt == b.stmt {
                    continue;
                }
                let hazard = match (a.write, b.write) {
                    (true, false) => Hazard::Raw,
                    (false, true) => Hazard::War,
                    (true, true) => Hazard::Waw,
                    (false, false) => continue,
                };
                if g.regions_exclusive(a.region, b.region) {
                    continue;
                }
                new_edges.push((a.vert, b.vert, hazard));
            }
        }
    }
    for (src, dst, hazard) in new_edges {
        g.add_edge(
            src,
            dst,
            EdgeKind::Dependency {
                hazard,
                strength: Strength::Unanalyzed,
            },
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_pragmas, parse_program};

    fn build(src: &str) -> Cadfg {
        let ast = parse_program(src).unwrap();
        let pragmas = parse_pragmas(src).unwrap();
        build_cadfg(&ast, &pragmas)
    }

    #[test]
    fn vector_add_lowering() {
        let g = build(
            "%!bind B rf(0,0)@0\n%!bind C rf(0,0)@8\n%!bind A rf(0,1)@0\n\
             B = input(8);\nC = input(8);\nA = zeros(8);\nA(1:8) = B(1:8) + C(1:8);\n",
        );
        let count = |pred: &dyn Fn(&VertexKind) -> bool| g.vertices().filter(|v| pred(&v.kind)).count();
        assert_eq!(count(&|k| matches!(k, VertexKind::Address { .. })), 3);
        assert_eq!(count(&|k| matches!(k, VertexKind::Read { .. })), 2);
        assert_eq!(count(&|k| matches!(k, VertexKind::Write { .. })), 1);
        assert_eq!(count(&|k| matches!(k, VertexKind::Compute { .. })), 1);
        // bases come from the bindings
        let bases: Vec<i64> = g
            .vertices()
            .filter_map(|v| match &v.kind {
                VertexKind::Address { agu } => agu.base.as_const(),
                _ => None,
            })
            .collect();
        assert_eq!(bases, vec![0, 0, 8]);
    }

    #[test]
    fn symbolic_base_gets_constraint() {
        let g = build(
            "%!bind X rf(0,0)@0\n%!bind Y rf(0,0)@16\n\
             X = input(11);\nY = zeros(8);\nfor k = 1:8\n  Y(k) = sum(X(k:k+3) * 1);\nend\n",
        );
        let constraints = g
            .vertices()
            .filter(|v| matches!(v.kind, VertexKind::Constraint { .. }))
            .count();
        assert_eq!(constraints, 2); // X base and Y base both move with k
    }

    #[test]
    fn write_then_read_records_raw() {
        let g = build(
            "%!bind A rf(0,0)@0\n%!bind B rf(0,0)@8\n%!bind C rf(0,0)@16\n\
             B = input(8);\nA = zeros(8);\nC = zeros(8);\n\
             A(1:8) = B(1:8) + 0;\nC(1:8) = A(1:8) + 0;\n",
        );
        let deps: Vec<_> = g
            .edges()
            .filter_map(|e| match &e.kind {
                EdgeKind::Dependency { hazard, .. } => Some(*hazard),
                _ => None,
            })
            .collect();
        assert_eq!(deps, vec![Hazard::Raw]);
    }

    #[test]
    fn branch_arms_are_exclusive() {
        let g = build(
            "%!bind A rf(0,0)@0\n%!bind t rf(0,0)@8\n\
             t = input();\nA = zeros(4);\n\
             if t == 0\n  A(1:4) = 1;\nelse\n  A(1:4) = 2;\nend\n",
        );
        let deps = g
            .edges()
            .filter(|e| matches!(e.kind, EdgeKind::Dependency { .. }))
            .count();
        assert_eq!(deps, 0); // the two writes of A can never both run
    }
}
