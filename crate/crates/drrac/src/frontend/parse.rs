//! Lexer and recursive-descent parser for the surface language, plus the
//! pragma-line parser. Pragma lines start `%!` and are invisible to the
//! program grammar; any other `%` line is a comment.

use crate::diag::{DiagCode, Diagnostic, Loc};
use crate::fabric::{CellCoord, Storage};

use super::{
    trip_count, AllocationSpec, Ast, BinOp, BindingDirective, CmpOp, DeclInit, IxExpr, LValue,
    Pragmas, SliceRef, Stmt, VExpr, VarDecl, VarKind,
};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Assign,
    Plus,
    Minus,
    Star,
    LParen,
    RParen,
    Colon,
    Sep,
    EqEq,
    Lt,
    Gt,
    Kw(Kw),
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kw {
    For,
    End,
    If,
    Else,
    While,
    Input,
    Zeros,
    Sum,
}

fn keyword(s: &str) -> Option<Kw> {
    Some(match s {
        "for" => Kw::For,
        "end" => Kw::End,
        "if" => Kw::If,
        "else" => Kw::Else,
        "while" => Kw::While,
        "input" => Kw::Input,
        "zeros" => Kw::Zeros,
        "sum" => Kw::Sum,
        _ => return None,
    })
}

fn lex(text: &str) -> Result<Vec<(Tok, Loc)>, Diagnostic> {
    let mut toks = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = match line.find('%') {
            Some(i) => &line[..i],
            None => line,
        };
        let bytes = line.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let loc = Loc::new(lineno as u32 + 1, i as u32 + 1);
            let c = bytes[i];
            match c {
                b' ' | b'\t' | b'\r' => i += 1,
                b'0'..=b'9' => {
                    let start = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    let v: i64 = line[start..i].parse().map_err(|_| {
                        Diagnostic::new(loc, DiagCode::SyntaxError, "integer literal too large")
                    })?;
                    toks.push((Tok::Int(v), loc));
                }
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                    let start = i;
                    while i < bytes.len()
                        && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                    {
                        i += 1;
                    }
                    let word = &line[start..i];
                    match keyword(word) {
                        Some(k) => toks.push((Tok::Kw(k), loc)),
                        None => toks.push((Tok::Ident(word.to_string()), loc)),
                    }
                }
                b'=' => {
                    if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                        toks.push((Tok::EqEq, loc));
                        i += 2;
                    } else {
                        toks.push((Tok::Assign, loc));
                        i += 1;
                    }
                }
                b'+' => {
                    toks.push((Tok::Plus, loc));
                    i += 1;
                }
                b'-' => {
                    toks.push((Tok::Minus, loc));
                    i += 1;
                }
                b'*' => {
                    toks.push((Tok::Star, loc));
                    i += 1;
                }
                b'.' => {
                    if i + 1 < bytes.len() && bytes[i + 1] == b'*' {
                        toks.push((Tok::Star, loc));
                        i += 2;
                    } else {
                        return Err(Diagnostic::new(
                            loc,
                            DiagCode::SyntaxError,
                            "unexpected `.`",
                        ));
                    }
                }
                b'(' => {
                    toks.push((Tok::LParen, loc));
                    i += 1;
                }
                b')' => {
                    toks.push((Tok::RParen, loc));
                    i += 1;
                }
                b':' => {
                    toks.push((Tok::Colon, loc));
                    i += 1;
                }
                b';' | b',' => {
                    toks.push((Tok::Sep, loc));
                    i += 1;
                }
                b'<' => {
                    toks.push((Tok::Lt, loc));
                    i += 1;
                }
                b'>' => {
                    toks.push((Tok::Gt, loc));
                    i += 1;
                }
                other => {
                    return Err(Diagnostic::new(
                        loc,
                        DiagCode::SyntaxError,
                        format!("unexpected character `{}`", other as char),
                    ));
                }
            }
        }
        toks.push((Tok::Sep, Loc::new(lineno as u32 + 1, line.len() as u32 + 1)));
    }
    toks.push((Tok::Eof, Loc::new(text.lines().count() as u32 + 1, 1)));
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, Loc)>,
    pos: usize,
    ast: Ast,
    saw_stmt: bool,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn loc(&self) -> Loc {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if t != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::new(self.loc(), DiagCode::SyntaxError, msg)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Loc, Diagnostic> {
        let loc = self.loc();
        if *self.peek() == tok {
            self.bump();
            Ok(loc)
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn skip_seps(&mut self) {
        while *self.peek() == Tok::Sep {
            self.bump();
        }
    }

    fn expect_sep(&mut self) -> Result<(), Diagnostic> {
        match self.peek() {
            Tok::Sep => {
                self.skip_seps();
                Ok(())
            }
            Tok::Eof => Ok(()),
            _ => Err(self.err("expected `;` or end of line")),
        }
    }

    fn ident(&mut self) -> Result<(String, Loc), Diagnostic> {
        let loc = self.loc();
        match self.bump() {
            Tok::Ident(s) => Ok((s, loc)),
            _ => Err(Diagnostic::new(
                loc,
                DiagCode::SyntaxError,
                "expected identifier",
            )),
        }
    }

    fn program(&mut self) -> Result<(), Diagnostic> {
        self.skip_seps();
        while *self.peek() != Tok::Eof {
            let stmt = self.stmt(true)?;
            if let Some(s) = stmt {
                self.ast.stmts.push(s);
                self.saw_stmt = true;
            }
            self.skip_seps();
        }
        Ok(())
    }

    fn block(&mut self, terminators: &[Kw]) -> Result<(Vec<Stmt>, Kw), Diagnostic> {
        let mut body = Vec::new();
        loop {
            self.skip_seps();
            if let Tok::Kw(k) = self.peek() {
                if terminators.contains(k) {
                    let k = *k;
                    self.bump();
                    return Ok((body, k));
                }
            }
            if *self.peek() == Tok::Eof {
                return Err(self.err("unterminated block (missing `end`)"));
            }
            match self.stmt(false)? {
                Some(s) => body.push(s),
                None => unreachable!("declarations are rejected inside blocks"),
            }
        }
    }

    /// Parse one statement. At top level a declaration form yields `None`
    /// (it is appended to `ast.decls` instead).
    fn stmt(&mut self, top: bool) -> Result<Option<Stmt>, Diagnostic> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Kw(Kw::While) => Err(Diagnostic::new(
                loc,
                DiagCode::UnsupportedConstruct,
                "while-loops are not supported; loop bounds must be static",
            )),
            Tok::Kw(Kw::For) => {
                self.bump();
                let (var, _) = self.ident()?;
                self.expect(Tok::Assign, "`=`")?;
                let first = self.ix_expr()?;
                self.expect(Tok::Colon, "`:`")?;
                let second = self.ix_expr()?;
                let (lo, step, hi) = if *self.peek() == Tok::Colon {
                    self.bump();
                    let third = self.ix_expr()?;
                    (first, second, third)
                } else {
                    (first, IxExpr::Const(1), second)
                };
                self.expect_sep()?;
                let (body, _) = self.block(&[Kw::End])?;
                Ok(Some(Stmt::For {
                    var,
                    lo,
                    step,
                    hi,
                    body,
                    loc,
                }))
            }
            Tok::Kw(Kw::If) => {
                self.bump();
                let lhs = self.vexpr()?;
                let op = match self.bump() {
                    Tok::EqEq => CmpOp::Eq,
                    Tok::Lt => CmpOp::Lt,
                    Tok::Gt => CmpOp::Gt,
                    _ => {
                        return Err(Diagnostic::new(
                            loc,
                            DiagCode::SyntaxError,
                            "expected `==`, `<` or `>` in condition",
                        ))
                    }
                };
                let rhs = self.vexpr()?;
                self.expect_sep()?;
                let (then_body, term) = self.block(&[Kw::Else, Kw::End])?;
                let else_body = if term == Kw::Else {
                    self.expect_sep()?;
                    let (e, _) = self.block(&[Kw::End])?;
                    e
                } else {
                    Vec::new()
                };
                Ok(Some(Stmt::If {
                    lhs,
                    op,
                    rhs,
                    then_body,
                    else_body,
                    loc,
                }))
            }
            Tok::Ident(name) => {
                self.bump();
                let lhs = if *self.peek() == Tok::LParen {
                    LValue::Slice(self.slice_suffix(name.clone(), loc)?)
                } else {
                    LValue::Var(name.clone(), loc)
                };
                self.expect(Tok::Assign, "`=`")?;
                // declaration forms
                if let Tok::Kw(k @ (Kw::Input | Kw::Zeros)) = *self.peek() {
                    if !matches!(lhs, LValue::Var(..)) {
                        return Err(self.err("declarations bind a whole variable name"));
                    }
                    self.bump();
                    self.expect(Tok::LParen, "`(`")?;
                    let len = if *self.peek() == Tok::RParen {
                        None
                    } else {
                        let e = self.ix_expr()?;
                        Some(e.as_const().ok_or_else(|| {
                            Diagnostic::new(
                                loc,
                                DiagCode::NonConstantBound,
                                "declared length must be a constant",
                            )
                        })?)
                    };
                    self.expect(Tok::RParen, "`)`")?;
                    self.expect_sep()?;
                    if !top || self.saw_stmt {
                        return Err(Diagnostic::new(
                            loc,
                            DiagCode::DeclarationAfterStatement,
                            "declarations must precede all statements",
                        ));
                    }
                    let decl = match (k, len) {
                        (Kw::Input, None) => VarDecl {
                            name: name.clone(),
                            kind: VarKind::Scalar,
                            len: 1,
                            init: DeclInit::Input,
                            loc,
                        },
                        (Kw::Input, Some(n)) | (Kw::Zeros, Some(n)) => {
                            if n < 1 {
                                return Err(Diagnostic::new(
                                    loc,
                                    DiagCode::BadCount,
                                    "vector length must be at least 1",
                                ));
                            }
                            VarDecl {
                                name: name.clone(),
                                kind: VarKind::Vector,
                                len: n as u32,
                                init: if k == Kw::Input {
                                    DeclInit::Input
                                } else {
                                    DeclInit::Zeros
                                },
                                loc,
                            }
                        }
                        (Kw::Zeros, None) => {
                            return Err(self.err("zeros() needs a length"));
                        }
                        _ => unreachable!(),
                    };
                    self.declare(decl, loc)?;
                    return Ok(None);
                }
                let rhs = self.vexpr()?;
                self.expect_sep()?;
                // a constant assignment to a fresh top-level name declares a scalar
                if top && !self.saw_stmt && matches!(lhs, LValue::Var(..)) {
                    if self.ast.decl(&name).is_none() {
                        if let Some(v) = const_eval(&rhs) {
                            self.declare(
                                VarDecl {
                                    name,
                                    kind: VarKind::Scalar,
                                    len: 1,
                                    init: DeclInit::Const(v as i16),
                                    loc,
                                },
                                loc,
                            )?;
                            return Ok(None);
                        }
                    }
                }
                Ok(Some(Stmt::Assign { lhs, rhs, loc }))
            }
            _ => Err(self.err("expected statement")),
        }
    }

    fn declare(&mut self, decl: VarDecl, loc: Loc) -> Result<(), Diagnostic> {
        if self.ast.decl(&decl.name).is_some() {
            return Err(Diagnostic::new(
                loc,
                DiagCode::DuplicateDeclaration,
                format!("`{}` is already declared", decl.name),
            ));
        }
        self.ast.decls.push(decl);
        Ok(())
    }

    /// Parse `(index)` or `(lo:hi)` or `(lo:step:hi)` after a variable name.
    fn slice_suffix(&mut self, var: String, loc: Loc) -> Result<SliceRef, Diagnostic> {
        self.expect(Tok::LParen, "`(`")?;
        let first = self.ix_expr()?;
        let slice = if *self.peek() == Tok::Colon {
            self.bump();
            let second = self.ix_expr()?;
            let (lo, step, hi) = if *self.peek() == Tok::Colon {
                self.bump();
                let third = self.ix_expr()?;
                (first, second, third)
            } else {
                (first, IxExpr::Const(1), second)
            };
            let step = step.as_const().ok_or_else(|| {
                Diagnostic::new(loc, DiagCode::BadCount, "slice step must be constant")
            })?;
            // the extent hi - lo must be constant even when both ends move
            let extent = match (lo.affine(), hi.affine()) {
                (Some((cl, ml)), Some((ch, mh))) if ml == mh => ch - cl,
                _ => {
                    return Err(Diagnostic::new(
                        loc,
                        DiagCode::BadCount,
                        "slice extent must be a compile-time constant",
                    ))
                }
            };
            let count = trip_count(0, step, extent).ok_or_else(|| {
                Diagnostic::new(loc, DiagCode::BadCount, "slice selects no elements")
            })?;
            SliceRef {
                var,
                start: IxExpr::sub(lo, IxExpr::Const(1)),
                step,
                count,
                loc,
            }
        } else {
            SliceRef {
                var,
                start: IxExpr::sub(first, IxExpr::Const(1)),
                step: 1,
                count: 1,
                loc,
            }
        };
        self.expect(Tok::RParen, "`)`")?;
        Ok(SliceRef {
            start: normalize_start(&slice.start),
            ..slice
        })
    }

    fn ix_expr(&mut self) -> Result<IxExpr, Diagnostic> {
        let mut lhs = self.ix_term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = IxExpr::add(lhs, self.ix_term()?);
                }
                Tok::Minus => {
                    self.bump();
                    lhs = IxExpr::sub(lhs, self.ix_term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn ix_term(&mut self) -> Result<IxExpr, Diagnostic> {
        let mut lhs = self.ix_atom()?;
        while *self.peek() == Tok::Star {
            self.bump();
            lhs = IxExpr::mul(lhs, self.ix_atom()?);
        }
        Ok(lhs)
    }

    fn ix_atom(&mut self) -> Result<IxExpr, Diagnostic> {
        match self.bump() {
            Tok::Int(v) => Ok(IxExpr::Const(v)),
            Tok::Ident(name) => Ok(IxExpr::Var(name)),
            Tok::Minus => Ok(IxExpr::sub(IxExpr::Const(0), self.ix_atom()?)),
            Tok::LParen => {
                let e = self.ix_expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => Err(Diagnostic::new(
                self.toks[self.pos.saturating_sub(1)].1,
                DiagCode::SyntaxError,
                "expected index expression",
            )),
        }
    }

    fn vexpr(&mut self) -> Result<VExpr, Diagnostic> {
        let mut lhs = self.vterm()?;
        loop {
            let loc = self.loc();
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = VExpr::Bin(BinOp::Add, Box::new(lhs), Box::new(self.vterm()?), loc);
                }
                Tok::Minus => {
                    self.bump();
                    lhs = VExpr::Bin(BinOp::Sub, Box::new(lhs), Box::new(self.vterm()?), loc);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn vterm(&mut self) -> Result<VExpr, Diagnostic> {
        let mut lhs = self.vatom()?;
        loop {
            let loc = self.loc();
            if *self.peek() == Tok::Star {
                self.bump();
                lhs = VExpr::Bin(BinOp::Mul, Box::new(lhs), Box::new(self.vatom()?), loc);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn vatom(&mut self) -> Result<VExpr, Diagnostic> {
        let loc = self.loc();
        match self.bump() {
            Tok::Int(v) => Ok(VExpr::Const(v, loc)),
            Tok::Minus => {
                let inner = self.vatom()?;
                Ok(match inner {
                    VExpr::Const(v, l) => VExpr::Const(-v, l),
                    other => VExpr::Bin(
                        BinOp::Sub,
                        Box::new(VExpr::Const(0, loc)),
                        Box::new(other),
                        loc,
                    ),
                })
            }
            Tok::Kw(Kw::Sum) => {
                self.expect(Tok::LParen, "`(`")?;
                let arg = self.vexpr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(VExpr::Sum(Box::new(arg), loc))
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    Ok(VExpr::Slice(self.slice_suffix(name, loc)?))
                } else if let Some(d) = self.ast.decl(&name) {
                    if d.kind == VarKind::Vector {
                        // whole-vector reference desugars to the full slice
                        Ok(VExpr::Slice(SliceRef {
                            var: name,
                            start: IxExpr::Const(0),
                            step: 1,
                            count: d.len,
                            loc,
                        }))
                    } else {
                        Ok(VExpr::Var(name, loc))
                    }
                } else {
                    Ok(VExpr::Var(name, loc))
                }
            }
            Tok::LParen => {
                let e = self.vexpr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => Err(Diagnostic::new(loc, DiagCode::SyntaxError, "expected expression")),
        }
    }
}

/// Fold a surface start-index expression so `i+1-1` prints and compares as
/// `i`.
fn normalize_start(e: &IxExpr) -> IxExpr {
    match e.affine() {
        Some((c, m)) if m.is_empty() => IxExpr::Const(c),
        Some((c, m)) => {
            let mut terms: Vec<IxExpr> = m
                .into_iter()
                .map(|(name, coeff)| {
                    if coeff == 1 {
                        IxExpr::Var(name)
                    } else {
                        IxExpr::mul(IxExpr::Const(coeff), IxExpr::Var(name))
                    }
                })
                .collect();
            let mut acc = terms.remove(0);
            for t in terms {
                acc = IxExpr::add(acc, t);
            }
            if c > 0 {
                IxExpr::add(acc, IxExpr::Const(c))
            } else if c < 0 {
                IxExpr::sub(acc, IxExpr::Const(-c))
            } else {
                acc
            }
        }
        None => e.clone(),
    }
}

fn const_eval(e: &VExpr) -> Option<i64> {
    match e {
        VExpr::Const(v, _) => Some(*v),
        VExpr::Bin(op, a, b, _) => {
            let (a, b) = (const_eval(a)?, const_eval(b)?);
            Some(match op {
                BinOp::Add => a.wrapping_add(b),
                BinOp::Sub => a.wrapping_sub(b),
                BinOp::Mul => a.wrapping_mul(b),
            })
        }
        _ => None,
    }
}

/// Parse the (already expanded) program text into an AST.
pub fn parse_program(text: &str) -> Result<Ast, Diagnostic> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        ast: Ast::default(),
        saw_stmt: false,
    };
    p.program()?;
    Ok(p.ast)
}

/// Parse pragma lines (`%!bind`, `%!alloc`, `%!out`) from the expanded text.
pub fn parse_pragmas(text: &str) -> Result<Pragmas, Diagnostic> {
    let mut pragmas = Pragmas::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let Some(rest) = line.strip_prefix("%!") else {
            continue;
        };
        let loc = Loc::new(lineno as u32 + 1, (raw.find("%!").unwrap_or(0) + 1) as u32);
        let malformed = |msg: &str| Diagnostic::new(loc, DiagCode::MalformedPragma, msg);
        let words: Vec<&str> = rest.split_whitespace().collect();
        match words.first().copied() {
            Some("bind") => {
                if words.len() != 3 {
                    return Err(malformed("expected `%!bind <var> (rf|sram)(<r>,<c>)@<off>`"));
                }
                let var = words[1].to_string();
                let target = words[2];
                let (storage, rest) = if let Some(r) = target.strip_prefix("rf(") {
                    (Storage::Rf, r)
                } else if let Some(r) = target.strip_prefix("sram(") {
                    (Storage::Sram, r)
                } else {
                    return Err(malformed("binding target must be rf(...) or sram(...)"));
                };
                let (coords, off) = rest
                    .split_once(")@")
                    .ok_or_else(|| malformed("missing `)@<offset>`"))?;
                let (r, c) = coords
                    .split_once(',')
                    .ok_or_else(|| malformed("expected `<row>,<col>`"))?;
                let cell = CellCoord::new(
                    r.trim().parse().map_err(|_| malformed("bad row"))?,
                    c.trim().parse().map_err(|_| malformed("bad col"))?,
                );
                let offset: u32 = off.trim().parse().map_err(|_| malformed("bad offset"))?;
                if pragmas.binding(&var).is_some() {
                    return Err(Diagnostic::new(
                        loc,
                        DiagCode::DuplicateBinding,
                        format!("`{var}` is bound twice"),
                    ));
                }
                pragmas.bindings.push(BindingDirective {
                    var,
                    cell,
                    storage,
                    offset,
                    loc,
                });
            }
            Some("alloc") => {
                if words.len() != 5 || words[1] != "drra" || words[3] != "dimarch" {
                    return Err(malformed("expected `%!alloc drra <r>x<c> dimarch <r>x<c>`"));
                }
                if pragmas.alloc.is_some() {
                    return Err(malformed("duplicate allocation pragma"));
                }
                let grid = |s: &str| -> Result<(u8, u8), Diagnostic> {
                    let (r, c) = s.split_once('x').ok_or_else(|| malformed("expected RxC"))?;
                    let r: u8 = r.parse().map_err(|_| malformed("bad rows"))?;
                    let c: u8 = c.parse().map_err(|_| malformed("bad cols"))?;
                    if r == 0 || c == 0 {
                        return Err(Diagnostic::new(
                            loc,
                            DiagCode::InvalidCount,
                            "grid dimensions must be at least 1",
                        ));
                    }
                    Ok((r, c))
                };
                let (dr, dc) = grid(words[2])?;
                let (mr, mc) = grid(words[4])?;
                pragmas.alloc = Some(AllocationSpec {
                    drra_rows: dr,
                    drra_cols: dc,
                    dimarch_rows: mr,
                    dimarch_cols: mc,
                });
            }
            Some("out") => {
                if words.len() != 2 {
                    return Err(malformed("expected `%!out <var>`"));
                }
                let var = words[1].to_string();
                if !pragmas.outputs.contains(&var) {
                    pragmas.outputs.push(var);
                }
            }
            _ => return Err(malformed("unknown pragma")),
        }
    }
    Ok(pragmas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::pretty;

    #[test]
    fn whole_vector_assignment_desugars() {
        let ast = parse_program("A = zeros(8);\nB = input(8);\nC = input(8);\nA(1:8) = B + C;\n")
            .unwrap();
        assert_eq!(ast.decls.len(), 3);
        let Stmt::Assign { rhs, .. } = &ast.stmts[0] else {
            panic!("expected assignment");
        };
        let VExpr::Bin(BinOp::Add, lhs, _, _) = rhs else {
            panic!("expected add");
        };
        let VExpr::Slice(s) = lhs.as_ref() else {
            panic!("whole-vector read should desugar to a slice");
        };
        assert_eq!((s.start.as_const(), s.step, s.count), (Some(0), 1, 8));
    }

    #[test]
    fn while_is_rejected() {
        let err = parse_program("while 1 > 0\nend\n").unwrap_err();
        assert_eq!(err.code, DiagCode::UnsupportedConstruct);
    }

    #[test]
    fn empty_program_parses() {
        let ast = parse_program("").unwrap();
        assert!(ast.decls.is_empty() && ast.stmts.is_empty());
    }

    #[test]
    fn strided_slice_counts() {
        let ast = parse_program("A = zeros(16);\nB = input(8);\nA(1:2:15) = B;\n").unwrap();
        let Stmt::Assign { lhs: LValue::Slice(s), .. } = &ast.stmts[0] else {
            panic!();
        };
        assert_eq!((s.start.as_const(), s.step, s.count), (Some(0), 2, 8));
    }

    #[test]
    fn iterator_slice_keeps_symbolic_start() {
        let ast = parse_program("X = input(11);\nY = zeros(8);\nfor k = 1:8\n  Y(k) = sum(X(k:k+3));\nend\n");
        let ast = ast.unwrap();
        let Stmt::For { body, .. } = &ast.stmts[0] else {
            panic!();
        };
        let Stmt::Assign { rhs: VExpr::Sum(arg, _), .. } = &body[0] else {
            panic!();
        };
        let VExpr::Slice(s) = arg.as_ref() else { panic!() };
        assert_eq!(s.count, 4);
        assert_eq!(s.start, IxExpr::sub(IxExpr::Var("k".into()), IxExpr::Const(1)));
    }

    #[test]
    fn pragma_bind_parses() {
        let p = parse_pragmas("%!bind A rf(0,0)@0\n%!bind B sram(1,1)@16\n").unwrap();
        assert_eq!(p.bindings.len(), 2);
        assert_eq!(p.bindings[0].cell, CellCoord::new(0, 0));
        assert_eq!(p.bindings[1].storage, Storage::Sram);
        assert_eq!(p.bindings[1].offset, 16);
    }

    #[test]
    fn duplicate_binding_rejected() {
        let err = parse_pragmas("%!bind A rf(0,0)@0\n%!bind A rf(0,1)@0\n").unwrap_err();
        assert_eq!(err.code, DiagCode::DuplicateBinding);
    }

    #[test]
    fn default_alloc_when_absent() {
        let p = parse_pragmas("% plain comment\n").unwrap();
        let a = p.alloc_or_default();
        assert_eq!(
            (a.drra_rows, a.drra_cols, a.dimarch_rows, a.dimarch_cols),
            (2, 2, 2, 2)
        );
    }

    #[test]
    fn alloc_pragma_parses() {
        let p = parse_pragmas("%!alloc drra 4x2 dimarch 1x3\n").unwrap();
        let a = p.alloc.unwrap();
        assert_eq!(
            (a.drra_rows, a.drra_cols, a.dimarch_rows, a.dimarch_cols),
            (4, 2, 1, 3)
        );
    }

    #[test]
    fn pretty_roundtrip_fixture() {
        let src = "\
X = input(11);
H = input(4);
Y = zeros(8);
s = 0;
for k = 1:8
  Y(k) = sum(X(k:k+3) * H(1:4));
end
if s == 0
  Y(1) = Y(1) + 1;
end
";
        let ast = parse_program(src).unwrap();
        let printed = pretty(&ast);
        let reparsed = parse_program(&printed).unwrap();
        assert_eq!(pretty(&reparsed), printed);
    }
}
