//! Frontend: template-parameter expansion, the MATLAB-like surface parser,
//! pragma parsing and static validation.
//!
//! Surface syntax is 1-based (slices `A(1:8)`, loops `for i = 1:8`);
//! everything is normalized to 0-based indices here. Declarations come
//! first: `X = input(8);` declares an input vector, `X = input();` an input
//! scalar, `X = zeros(8);` a zero-initialized vector, and a plain constant
//! assignment to a fresh name declares a scalar. Pragma lines start with
//! `%!`; other `%` lines are comments.

mod parse;

pub use parse::{parse_pragmas, parse_program};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::diag::{DiagCode, Diagnostic, Loc};
use crate::fabric::{CellCoord, FabricSpec, Storage};

/// Raw source text plus symbolic template-parameter bindings.
#[derive(Debug, Clone)]
pub struct SourceUnit {
    pub text: String,
    pub params: BTreeMap<String, i64>,
}

/// Replace each `{{name}}` placeholder with the decimal rendering of its
/// bound integer. Idempotent on its own output.
pub fn expand_templates(unit: &SourceUnit) -> Result<String, Diagnostic> {
    let mut out = String::with_capacity(unit.text.len());
    let mut line = 1u32;
    let mut col = 1u32;
    let bytes = unit.text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' && i + 1 < bytes.len() && bytes[i + 1] == b'{' {
            if let Some(end) = unit.text[i + 2..].find("}}") {
                let name = unit.text[i + 2..i + 2 + end].trim().to_string();
                let loc = Loc::new(line, col);
                let value = unit.params.get(&name).ok_or_else(|| {
                    Diagnostic::new(
                        loc,
                        DiagCode::UnboundParameter,
                        format!("template parameter `{name}` has no binding"),
                    )
                })?;
                out.push_str(&value.to_string());
                // advance past the placeholder, tracking columns
                let consumed = end + 4;
                col += consumed as u32;
                i += consumed;
                continue;
            }
        }
        let ch = unit.text[i..].chars().next().unwrap();
        if ch == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
        out.push(ch);
        i += ch.len_utf8();
    }
    Ok(out)
}

/// Index expression over integer literals and loop iterator names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IxExpr {
    Const(i64),
    Var(String),
    Add(Box<IxExpr>, Box<IxExpr>),
    Sub(Box<IxExpr>, Box<IxExpr>),
    Mul(Box<IxExpr>, Box<IxExpr>),
}

impl IxExpr {
    pub fn add(a: IxExpr, b: IxExpr) -> IxExpr {
        IxExpr::Add(Box::new(a), Box::new(b))
    }
    pub fn sub(a: IxExpr, b: IxExpr) -> IxExpr {
        IxExpr::Sub(Box::new(a), Box::new(b))
    }
    pub fn mul(a: IxExpr, b: IxExpr) -> IxExpr {
        IxExpr::Mul(Box::new(a), Box::new(b))
    }

    pub fn as_const(&self) -> Option<i64> {
        match self {
            IxExpr::Const(c) => Some(*c),
            IxExpr::Add(a, b) => Some(a.as_const()?.wrapping_add(b.as_const()?)),
            IxExpr::Sub(a, b) => Some(a.as_const()?.wrapping_sub(b.as_const()?)),
            IxExpr::Mul(a, b) => Some(a.as_const()?.wrapping_mul(b.as_const()?)),
            IxExpr::Var(_) => None,
        }
    }

    /// Affine decomposition over iterator names; `None` for products of
    /// iterators.
    pub fn affine(&self) -> Option<(i64, BTreeMap<String, i64>)> {
        match self {
            IxExpr::Const(c) => Some((*c, BTreeMap::new())),
            IxExpr::Var(v) => {
                let mut m = BTreeMap::new();
                m.insert(v.clone(), 1);
                Some((0, m))
            }
            IxExpr::Add(a, b) | IxExpr::Sub(a, b) => {
                let (cb, mb) = b.affine()?;
                let (ca, mut ma) = a.affine()?;
                let sign = if matches!(self, IxExpr::Sub(..)) { -1 } else { 1 };
                for (k, v) in mb {
                    *ma.entry(k).or_insert(0) += sign * v;
                }
                ma.retain(|_, v| *v != 0);
                Some((ca + sign * cb, ma))
            }
            IxExpr::Mul(a, b) => {
                let (ca, ma) = a.affine()?;
                let (cb, mb) = b.affine()?;
                if ma.is_empty() {
                    Some((ca * cb, mb.into_iter().map(|(k, v)| (k, v * ca)).collect()))
                } else if mb.is_empty() {
                    Some((ca * cb, ma.into_iter().map(|(k, v)| (k, v * cb)).collect()))
                } else {
                    None
                }
            }
        }
    }

    fn render(&self, out: &mut String, parent_prec: u8) {
        let prec = match self {
            IxExpr::Const(_) | IxExpr::Var(_) => 3,
            IxExpr::Mul(..) => 2,
            IxExpr::Add(..) | IxExpr::Sub(..) => 1,
        };
        if prec < parent_prec {
            out.push('(');
        }
        match self {
            IxExpr::Const(c) => {
                let _ = write!(out, "{c}");
            }
            IxExpr::Var(v) => out.push_str(v),
            IxExpr::Add(a, b) => {
                a.render(out, 1);
                out.push('+');
                b.render(out, 2);
            }
            IxExpr::Sub(a, b) => {
                a.render(out, 1);
                out.push('-');
                b.render(out, 2);
            }
            IxExpr::Mul(a, b) => {
                a.render(out, 2);
                out.push('*');
                b.render(out, 3);
            }
        }
        if prec < parent_prec {
            out.push(')');
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        self.render(&mut s, 0);
        s
    }
}

/// Scalar or vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Scalar,
    Vector,
}

/// How a declared variable gets its initial contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeclInit {
    /// Supplied by the memory image / input generator.
    Input,
    /// All words zero.
    Zeros,
    /// Compile-time constant (scalars only).
    Const(i16),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub kind: VarKind,
    pub len: u32,
    pub init: DeclInit,
    pub loc: Loc,
}

/// Reference to a contiguous strided slice, 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceRef {
    pub var: String,
    /// 0-based start index; may reference loop iterators.
    pub start: IxExpr,
    pub step: i64,
    pub count: u32,
    pub loc: Loc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

impl BinOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Lt,
    Gt,
}

impl CmpOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
        }
    }
}

/// Right-hand-side expression; scalar or elementwise vector valued.
#[derive(Debug, Clone, PartialEq)]
pub enum VExpr {
    Const(i64, Loc),
    /// Scalar variable reference (whole-vector references are desugared to
    /// slices at parse time).
    Var(String, Loc),
    Slice(SliceRef),
    Bin(BinOp, Box<VExpr>, Box<VExpr>, Loc),
    /// Reduction of a vector argument to a scalar.
    Sum(Box<VExpr>, Loc),
}

impl VExpr {
    pub fn loc(&self) -> Loc {
        match self {
            VExpr::Const(_, l) | VExpr::Var(_, l) | VExpr::Bin(.., l) | VExpr::Sum(_, l) => *l,
            VExpr::Slice(s) => s.loc,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LValue {
    /// Whole scalar variable.
    Var(String, Loc),
    Slice(SliceRef),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Assign {
        lhs: LValue,
        rhs: VExpr,
        loc: Loc,
    },
    For {
        var: String,
        lo: IxExpr,
        step: IxExpr,
        hi: IxExpr,
        body: Vec<Stmt>,
        loc: Loc,
    },
    If {
        lhs: VExpr,
        op: CmpOp,
        rhs: VExpr,
        then_body: Vec<Stmt>,
        else_body: Vec<Stmt>,
        loc: Loc,
    },
}

/// Parsed program: declarations in order, then statements.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ast {
    pub decls: Vec<VarDecl>,
    pub stmts: Vec<Stmt>,
}

impl Ast {
    pub fn decl(&self, name: &str) -> Option<&VarDecl> {
        self.decls.iter().find(|d| d.name == name)
    }
}

/// Binding of one variable to a storage bank location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BindingDirective {
    pub var: String,
    pub cell: CellCoord,
    pub storage: Storage,
    pub offset: u32,
    pub loc: Loc,
}

/// Fabric dimensions requested by the allocation pragma.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AllocationSpec {
    pub drra_rows: u8,
    pub drra_cols: u8,
    pub dimarch_rows: u8,
    pub dimarch_cols: u8,
}

impl Default for AllocationSpec {
    fn default() -> Self {
        AllocationSpec {
            drra_rows: 2,
            drra_cols: 2,
            dimarch_rows: 2,
            dimarch_cols: 2,
        }
    }
}

/// All pragma-sourced directives of one compilation unit.
#[derive(Debug, Clone, Default)]
pub struct Pragmas {
    pub bindings: Vec<BindingDirective>,
    pub alloc: Option<AllocationSpec>,
    /// Variables whose final values are program outputs. Empty means every
    /// written variable is treated as an output.
    pub outputs: Vec<String>,
}

impl Pragmas {
    pub fn binding(&self, var: &str) -> Option<&BindingDirective> {
        self.bindings.iter().find(|b| b.var == var)
    }

    pub fn alloc_or_default(&self) -> AllocationSpec {
        self.alloc.unwrap_or_default()
    }
}

/// Resolve the effective output-variable set (see [`Pragmas::outputs`]).
pub fn output_vars(ast: &Ast, pragmas: &Pragmas) -> BTreeSet<String> {
    if !pragmas.outputs.is_empty() {
        return pragmas.outputs.iter().cloned().collect();
    }
    let mut out = BTreeSet::new();
    fn walk(stmts: &[Stmt], out: &mut BTreeSet<String>) {
        for s in stmts {
            match s {
                Stmt::Assign { lhs, .. } => {
                    out.insert(
                        match lhs {
                            LValue::Var(n, _) => n,
                            LValue::Slice(s) => &s.var,
                        }
                        .clone(),
                    );
                }
                Stmt::For { body, .. } => walk(body, out),
                Stmt::If {
                    then_body,
                    else_body,
                    ..
                } => {
                    walk(then_body, out);
                    walk(else_body, out);
                }
            }
        }
    }
    walk(&ast.stmts, &mut out);
    // a declared non-input variable that is never assigned still holds its
    // initial value; keep it observable
    for d in &ast.decls {
        if !matches!(d.init, DeclInit::Input) {
            out.insert(d.name.clone());
        }
    }
    out
}

struct Shape;

impl Shape {
    /// None = scalar, Some(n) = vector of n, Err = undeclared/invalid.
    fn of(expr: &VExpr, ast: &Ast, diags: &mut Vec<Diagnostic>) -> Option<Option<u32>> {
        match expr {
            VExpr::Const(..) => Some(None),
            VExpr::Var(name, loc) => match ast.decl(name) {
                Some(d) if d.kind == VarKind::Scalar => Some(None),
                Some(d) => Some(Some(d.len)),
                None => {
                    diags.push(Diagnostic::new(
                        *loc,
                        DiagCode::UndeclaredVariable,
                        format!("use of undeclared variable `{name}`"),
                    ));
                    None
                }
            },
            VExpr::Slice(s) => {
                if ast.decl(&s.var).is_none() {
                    diags.push(Diagnostic::new(
                        s.loc,
                        DiagCode::UndeclaredVariable,
                        format!("use of undeclared variable `{}`", s.var),
                    ));
                    return None;
                }
                Some(if s.count == 1 { None } else { Some(s.count) })
            }
            VExpr::Bin(_, a, b, loc) => {
                let sa = Shape::of(a, ast, diags)?;
                let sb = Shape::of(b, ast, diags)?;
                match (sa, sb) {
                    (None, None) => Some(None),
                    (Some(n), None) | (None, Some(n)) => Some(Some(n)),
                    (Some(n), Some(m)) if n == m => Some(Some(n)),
                    (Some(n), Some(m)) => {
                        diags.push(Diagnostic::new(
                            *loc,
                            DiagCode::ShapeMismatch,
                            format!("elementwise operands have lengths {n} and {m}"),
                        ));
                        None
                    }
                }
            }
            VExpr::Sum(a, loc) => {
                let sa = Shape::of(a, ast, diags)?;
                if sa.is_none() {
                    diags.push(Diagnostic::new(
                        *loc,
                        DiagCode::ShapeMismatch,
                        "sum() needs a vector argument",
                    ));
                    return None;
                }
                Some(None)
            }
        }
    }
}

struct IterScope {
    /// name -> (count, loc); normalized range 0..count
    stack: Vec<(String, u32)>,
}

/// Trip count, stepping from `lo` to `hi` inclusive by `step`.
pub fn trip_count(lo: i64, step: i64, hi: i64) -> Option<u32> {
    if step == 0 {
        return None;
    }
    let span = hi - lo;
    if (step > 0 && span < 0) || (step < 0 && span > 0) {
        return None;
    }
    Some((span / step + 1) as u32)
}

/// Static validation: declarations, shapes, binding targets, offset-range
/// disjointness, in-bounds slices over constant iterator ranges, and
/// parametrically static loop bounds. Returns all diagnostics found; an
/// empty list means the program is accepted.
pub fn validate(ast: &Ast, pragmas: &Pragmas, fabric: &FabricSpec) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut scope = IterScope { stack: Vec::new() };

    // binding targets and offset disjointness
    let mut by_bank: BTreeMap<(Storage, CellCoord), Vec<&BindingDirective>> = BTreeMap::new();
    for b in &pragmas.bindings {
        if ast.decl(&b.var).is_none() {
            diags.push(Diagnostic::new(
                b.loc,
                DiagCode::UndeclaredVariable,
                format!("binding for undeclared variable `{}`", b.var),
            ));
            continue;
        }
        let ok = match b.storage {
            Storage::Rf => fabric.drra_in_bounds(b.cell),
            Storage::Sram => fabric.dimarch_in_bounds(b.cell),
        };
        if !ok {
            diags.push(Diagnostic::new(
                b.loc,
                DiagCode::TargetOutOfFabric,
                format!("cell {} is outside the allocated fabric", b.cell),
            ));
            continue;
        }
        let words = match b.storage {
            Storage::Rf => fabric.rf_words,
            Storage::Sram => fabric.sram_words,
        };
        let len = ast.decl(&b.var).map(|d| d.len).unwrap_or(1);
        if b.offset + len > words {
            diags.push(Diagnostic::new(
                b.loc,
                DiagCode::StorageOverflow,
                format!(
                    "`{}` needs words {}..{} but the bank holds {}",
                    b.var,
                    b.offset,
                    b.offset + len,
                    words
                ),
            ));
        }
        by_bank.entry((b.storage, b.cell)).or_default().push(b);
    }
    for ((_, _), bs) in &by_bank {
        for (i, a) in bs.iter().enumerate() {
            for b in &bs[i + 1..] {
                let (la, lb) = (
                    ast.decl(&a.var).map(|d| d.len).unwrap_or(1),
                    ast.decl(&b.var).map(|d| d.len).unwrap_or(1),
                );
                if a.offset < b.offset + lb && b.offset < a.offset + la {
                    diags.push(Diagnostic::new(
                        b.loc,
                        DiagCode::OffsetOverlap,
                        format!("`{}` and `{}` overlap in the same bank", a.var, b.var),
                    ));
                }
            }
        }
    }

    // every declared variable needs a binding
    for d in &ast.decls {
        if pragmas.binding(&d.name).is_none() {
            diags.push(Diagnostic::new(
                d.loc,
                DiagCode::UnboundVariable,
                format!("variable `{}` has no binding pragma", d.name),
            ));
        }
    }
    for out in &pragmas.outputs {
        if ast.decl(out).is_none() {
            diags.push(Diagnostic::new(
                Loc::new(1, 1),
                DiagCode::NotAnOutput,
                format!("output pragma names undeclared variable `{out}`"),
            ));
        }
    }

    validate_stmts(&ast.stmts, ast, pragmas, &mut scope, &mut diags);
    diags
}

fn validate_stmts(
    stmts: &[Stmt],
    ast: &Ast,
    pragmas: &Pragmas,
    scope: &mut IterScope,
    diags: &mut Vec<Diagnostic>,
) {
    for stmt in stmts {
        match stmt {
            Stmt::Assign { lhs, rhs, loc } => {
                let rhs_shape = Shape::of(rhs, ast, diags);
                validate_vexpr(rhs, ast, pragmas, scope, diags);
                match lhs {
                    LValue::Var(name, l) => match ast.decl(name) {
                        None => diags.push(Diagnostic::new(
                            *l,
                            DiagCode::UndeclaredVariable,
                            format!("assignment to undeclared variable `{name}`"),
                        )),
                        Some(d) if d.kind == VarKind::Vector => diags.push(Diagnostic::new(
                            *l,
                            DiagCode::ShapeMismatch,
                            format!("whole-vector writes must use a slice: `{name}(1:{})`", d.len),
                        )),
                        Some(_) => {
                            if let Some(Some(n)) = rhs_shape {
                                diags.push(Diagnostic::new(
                                    *loc,
                                    DiagCode::ShapeMismatch,
                                    format!("cannot assign a length-{n} vector to a scalar"),
                                ));
                            }
                        }
                    },
                    LValue::Slice(s) => {
                        validate_slice(s, ast, pragmas, scope, diags);
                        if let Some(Some(n)) = rhs_shape {
                            if n != s.count {
                                diags.push(Diagnostic::new(
                                    *loc,
                                    DiagCode::ShapeMismatch,
                                    format!(
                                        "assigning a length-{n} vector to a length-{} slice",
                                        s.count
                                    ),
                                ));
                            }
                        }
                    }
                }
            }
            Stmt::For {
                var,
                lo,
                step,
                hi,
                body,
                loc,
            } => {
                let (clo, cstep, chi) = (lo.as_const(), step.as_const(), hi.as_const());
                let mut count = 1;
                match (clo, cstep, chi) {
                    (Some(l), Some(s), Some(h)) => match trip_count(l, s, h) {
                        Some(c) if c >= 1 => count = c,
                        _ => diags.push(Diagnostic::new(
                            *loc,
                            DiagCode::LoopCountNonPositive,
                            format!("loop `{var}` executes no iterations"),
                        )),
                    },
                    _ => diags.push(Diagnostic::new(
                        *loc,
                        DiagCode::NonConstantBound,
                        format!("bounds of loop `{var}` must be compile-time constants"),
                    )),
                }
                scope.stack.push((var.clone(), count));
                validate_stmts(body, ast, pragmas, scope, diags);
                scope.stack.pop();
            }
            Stmt::If {
                lhs,
                op: _,
                rhs,
                then_body,
                else_body,
                loc,
            } => {
                for side in [lhs, rhs] {
                    if let Some(Some(_)) = Shape::of(side, ast, diags) {
                        diags.push(Diagnostic::new(
                            *loc,
                            DiagCode::ShapeMismatch,
                            "branch conditions compare scalars",
                        ));
                    }
                    validate_vexpr(side, ast, pragmas, scope, diags);
                }
                validate_stmts(then_body, ast, pragmas, scope, diags);
                validate_stmts(else_body, ast, pragmas, scope, diags);
            }
        }
    }
}

fn validate_vexpr(
    expr: &VExpr,
    ast: &Ast,
    pragmas: &Pragmas,
    scope: &IterScope,
    diags: &mut Vec<Diagnostic>,
) {
    match expr {
        VExpr::Const(..) | VExpr::Var(..) => {}
        VExpr::Slice(s) => validate_slice(s, ast, pragmas, scope, diags),
        VExpr::Bin(_, a, b, _) => {
            validate_vexpr(a, ast, pragmas, scope, diags);
            validate_vexpr(b, ast, pragmas, scope, diags);
        }
        VExpr::Sum(a, _) => validate_vexpr(a, ast, pragmas, scope, diags),
    }
}

fn validate_slice(
    s: &SliceRef,
    ast: &Ast,
    pragmas: &Pragmas,
    scope: &IterScope,
    diags: &mut Vec<Diagnostic>,
) {
    let Some(decl) = ast.decl(&s.var) else {
        diags.push(Diagnostic::new(
            s.loc,
            DiagCode::UndeclaredVariable,
            format!("use of undeclared variable `{}`", s.var),
        ));
        return;
    };
    if decl.kind == VarKind::Scalar && !(s.count == 1) {
        diags.push(Diagnostic::new(
            s.loc,
            DiagCode::ShapeMismatch,
            format!("`{}` is a scalar and cannot be sliced", s.var),
        ));
        return;
    }
    let Some((base, coeffs)) = s.start.affine() else {
        diags.push(Diagnostic::new(
            s.loc,
            DiagCode::SliceOutOfBounds,
            "slice start must be affine in loop iterators",
        ));
        return;
    };
    // all referenced names must be in-scope iterators
    let mut min = base;
    let mut max = base;
    for (name, coeff) in &coeffs {
        match scope.stack.iter().rev().find(|(n, _)| n == name) {
            None => {
                diags.push(Diagnostic::new(
                    s.loc,
                    DiagCode::UndeclaredVariable,
                    format!("`{name}` is not a loop iterator in scope"),
                ));
                return;
            }
            Some((_, count)) => {
                let extent = *coeff * (*count as i64 - 1);
                min += extent.min(0);
                max += extent.max(0);
            }
        }
    }
    let span = s.step * (s.count as i64 - 1);
    min += span.min(0);
    max += span.max(0);
    if min < 0 || max >= decl.len as i64 {
        diags.push(Diagnostic::new(
            s.loc,
            DiagCode::SliceOutOfBounds,
            format!(
                "slice of `{}` reaches indices {}..={} but length is {}",
                s.var,
                min + 1,
                max + 1,
                decl.len
            ),
        ));
    }
    // SRAM address generators take immediate bases only
    if !coeffs.is_empty() {
        if let Some(b) = pragmas.binding(&s.var) {
            if b.storage == Storage::Sram {
                diags.push(Diagnostic::new(
                    s.loc,
                    DiagCode::SramSymbolicAccess,
                    format!(
                        "`{}` is SRAM-bound and cannot use iterator-dependent slices",
                        s.var
                    ),
                ));
            }
        }
    }
}

/// Canonical pretty-printer. Re-parsing the output yields a structurally
/// equal program (declarations desugared the same way).
pub fn pretty(ast: &Ast) -> String {
    let mut out = String::new();
    for d in &ast.decls {
        match (&d.kind, &d.init) {
            (VarKind::Vector, DeclInit::Input) => {
                let _ = writeln!(out, "{} = input({});", d.name, d.len);
            }
            (VarKind::Vector, _) => {
                let _ = writeln!(out, "{} = zeros({});", d.name, d.len);
            }
            (VarKind::Scalar, DeclInit::Input) => {
                let _ = writeln!(out, "{} = input();", d.name);
            }
            (VarKind::Scalar, DeclInit::Const(v)) => {
                let _ = writeln!(out, "{} = {};", d.name, v);
            }
            (VarKind::Scalar, DeclInit::Zeros) => {
                let _ = writeln!(out, "{} = 0;", d.name);
            }
        }
    }
    pretty_stmts(&ast.stmts, 0, &mut out);
    out
}

fn indent(depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn pretty_stmts(stmts: &[Stmt], depth: usize, out: &mut String) {
    for s in stmts {
        indent(depth, out);
        match s {
            Stmt::Assign { lhs, rhs, .. } => {
                match lhs {
                    LValue::Var(n, _) => out.push_str(n),
                    LValue::Slice(sl) => pretty_slice(sl, out),
                }
                out.push_str(" = ");
                pretty_vexpr(rhs, 0, out);
                out.push_str(";\n");
            }
            Stmt::For {
                var,
                lo,
                step,
                hi,
                body,
                ..
            } => {
                let _ = write!(out, "for {var} = {}", lo.to_text());
                if step.as_const() != Some(1) {
                    let _ = write!(out, ":{}", step.to_text());
                }
                let _ = writeln!(out, ":{}", hi.to_text());
                pretty_stmts(body, depth + 1, out);
                indent(depth, out);
                out.push_str("end\n");
            }
            Stmt::If {
                lhs,
                op,
                rhs,
                then_body,
                else_body,
                ..
            } => {
                out.push_str("if ");
                pretty_vexpr(lhs, 0, out);
                let _ = write!(out, " {} ", op.symbol());
                pretty_vexpr(rhs, 0, out);
                out.push('\n');
                pretty_stmts(then_body, depth + 1, out);
                if !else_body.is_empty() {
                    indent(depth, out);
                    out.push_str("else\n");
                    pretty_stmts(else_body, depth + 1, out);
                }
                indent(depth, out);
                out.push_str("end\n");
            }
        }
    }
}

fn pretty_slice(s: &SliceRef, out: &mut String) {
    // back to 1-based surface form
    let lo = IxExpr::add(s.start.clone(), IxExpr::Const(1));
    let lo = simplify_ix(&lo);
    out.push_str(&s.var);
    out.push('(');
    if s.count == 1 {
        out.push_str(&lo.to_text());
    } else {
        let hi = IxExpr::add(
            s.start.clone(),
            IxExpr::Const(s.step * (s.count as i64 - 1) + 1),
        );
        let hi = simplify_ix(&hi);
        out.push_str(&lo.to_text());
        if s.step != 1 {
            let _ = write!(out, ":{}", s.step);
        }
        out.push(':');
        out.push_str(&hi.to_text());
    }
    out.push(')');
}

/// Light constant folding so the printed surface form stays readable.
fn simplify_ix(e: &IxExpr) -> IxExpr {
    match e {
        IxExpr::Add(a, b) => match (simplify_ix(a), simplify_ix(b)) {
            (IxExpr::Const(x), IxExpr::Const(y)) => IxExpr::Const(x + y),
            (x, IxExpr::Const(0)) | (IxExpr::Const(0), x) => x,
            // (a + c1) + c2
            (IxExpr::Add(i, c), IxExpr::Const(y)) => match *c {
                IxExpr::Const(x) => simplify_ix(&IxExpr::add(*i, IxExpr::Const(x + y))),
                c0 => IxExpr::add(IxExpr::Add(i, Box::new(c0)), IxExpr::Const(y)),
            },
            (x, y) => IxExpr::add(x, y),
        },
        IxExpr::Sub(a, b) => match (simplify_ix(a), simplify_ix(b)) {
            (IxExpr::Const(x), IxExpr::Const(y)) => IxExpr::Const(x - y),
            (x, IxExpr::Const(0)) => x,
            (x, y) => IxExpr::sub(x, y),
        },
        IxExpr::Mul(a, b) => match (simplify_ix(a), simplify_ix(b)) {
            (IxExpr::Const(x), IxExpr::Const(y)) => IxExpr::Const(x * y),
            (x, y) => IxExpr::mul(x, y),
        },
        other => other.clone(),
    }
}

fn pretty_vexpr(e: &VExpr, parent_prec: u8, out: &mut String) {
    let prec = match e {
        VExpr::Const(..) | VExpr::Var(..) | VExpr::Slice(_) | VExpr::Sum(..) => 3,
        VExpr::Bin(BinOp::Mul, ..) => 2,
        VExpr::Bin(..) => 1,
    };
    if prec < parent_prec {
        out.push('(');
    }
    match e {
        VExpr::Const(c, _) => {
            let _ = write!(out, "{c}");
        }
        VExpr::Var(n, _) => out.push_str(n),
        VExpr::Slice(s) => pretty_slice(s, out),
        VExpr::Bin(op, a, b, _) => {
            pretty_vexpr(a, prec, out);
            let _ = write!(out, " {} ", op.symbol());
            pretty_vexpr(b, prec + 1, out);
        }
        VExpr::Sum(a, _) => {
            out.push_str("sum(");
            pretty_vexpr(a, 0, out);
            out.push(')');
        }
    }
    if prec < parent_prec {
        out.push(')');
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(text: &str, params: &[(&str, i64)]) -> SourceUnit {
        SourceUnit {
            text: text.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    #[test]
    fn expand_substitutes() {
        assert_eq!(expand_templates(&unit("N={{n}}", &[("n", 8)])).unwrap(), "N=8");
        assert_eq!(
            expand_templates(&unit("{{a}}+{{b}}", &[("a", 2), ("b", 3)])).unwrap(),
            "2+3"
        );
    }

    #[test]
    fn expand_identity_without_placeholders() {
        let text = "A = B + C;\n% note {single} braces\n";
        assert_eq!(expand_templates(&unit(text, &[])).unwrap(), text);
    }

    #[test]
    fn expand_unbound_parameter() {
        let err = expand_templates(&unit("N={{n}}", &[])).unwrap_err();
        assert_eq!(err.code, DiagCode::UnboundParameter);
    }

    #[test]
    fn expand_idempotent() {
        let u = unit("x={{p}}; % {{p}} twice {{q}}", &[("p", 4), ("q", -7)]);
        let once = expand_templates(&u).unwrap();
        let twice = expand_templates(&unit(&once, &[])).unwrap();
        assert_eq!(once, twice);
    }
}
