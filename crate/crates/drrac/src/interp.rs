//! Big-step sequential reference interpreter for the surface language, used
//! as the end-to-end correctness oracle. Runs directly on the post-frontend
//! AST with wrapping 16-bit arithmetic; slices are evaluated element by
//! element in index order.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::frontend::{Ast, BinOp, CmpOp, DeclInit, IxExpr, LValue, SliceRef, Stmt, VExpr, VarKind};

/// Variable environment: scalars are single-element vectors.
pub type Env = BTreeMap<String, Vec<i16>>;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum InterpError {
    #[error("missing input for `{0}`")]
    MissingInput(String),
    #[error("`{0}` index {1} out of bounds")]
    OutOfBounds(String, i64),
    #[error("use of `{0}` before any value was assigned")]
    Unbound(String),
}

struct Interp<'a> {
    ast: &'a Ast,
    env: Env,
    iters: BTreeMap<String, i64>,
}

/// Evaluate the program. `inputs` must cover every `input()` declaration;
/// all declared variables appear in the result.
pub fn interpret(ast: &Ast, inputs: &Env) -> Result<Env, InterpError> {
    let mut it = Interp {
        ast,
        env: Env::new(),
        iters: BTreeMap::new(),
    };
    for d in &ast.decls {
        let vals = match &d.init {
            DeclInit::Input => inputs
                .get(&d.name)
                .cloned()
                .ok_or_else(|| InterpError::MissingInput(d.name.clone()))?,
            DeclInit::Zeros => vec![0; d.len as usize],
            DeclInit::Const(v) => vec![*v],
        };
        it.env.insert(d.name.clone(), vals);
    }
    it.stmts(&ast.stmts)?;
    Ok(it.env)
}

impl Interp<'_> {
    fn stmts(&mut self, stmts: &[Stmt]) -> Result<(), InterpError> {
        for s in stmts {
            match s {
                Stmt::Assign { lhs, rhs, .. } => {
                    let vals = self.eval(rhs)?;
                    match lhs {
                        LValue::Var(name, _) => {
                            let v = scalar_of(&vals);
                            let slot = self
                                .env
                                .get_mut(name)
                                .ok_or_else(|| InterpError::Unbound(name.clone()))?;
                            slot[0] = v;
                        }
                        LValue::Slice(sl) => {
                            let idxs = self.slice_indices(sl)?;
                            let vals = broadcast(vals, idxs.len());
                            for (k, idx) in idxs.iter().enumerate() {
                                let slot = self
                                    .env
                                    .get_mut(&sl.var)
                                    .ok_or_else(|| InterpError::Unbound(sl.var.clone()))?;
                                slot[*idx as usize] = vals[k];
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
                    ..
                } => {
                    let (lo, step, hi) = (
                        self.eval_ix(lo)?,
                        self.eval_ix(step)?,
                        self.eval_ix(hi)?,
                    );
                    let mut v = lo;
                    while (step > 0 && v <= hi) || (step < 0 && v >= hi) {
                        self.iters.insert(var.clone(), v);
                        self.stmts(body)?;
                        v += step;
                    }
                    self.iters.remove(var);
                }
                Stmt::If {
                    lhs,
                    op,
                    rhs,
                    then_body,
                    else_body,
                    ..
                } => {
                    let a = scalar_of(&self.eval(lhs)?);
                    let b = scalar_of(&self.eval(rhs)?);
                    let taken = match op {
                        CmpOp::Eq => a == b,
                        CmpOp::Lt => a < b,
                        CmpOp::Gt => a > b,
                    };
                    self.stmts(if taken { then_body } else { else_body })?;
                }
            }
        }
        Ok(())
    }

    fn eval_ix(&self, e: &IxExpr) -> Result<i64, InterpError> {
        Ok(match e {
            IxExpr::Const(c) => *c,
            IxExpr::Var(name) => *self
                .iters
                .get(name)
                .ok_or_else(|| InterpError::Unbound(name.clone()))?,
            IxExpr::Add(a, b) => self.eval_ix(a)? + self.eval_ix(b)?,
            IxExpr::Sub(a, b) => self.eval_ix(a)? - self.eval_ix(b)?,
            IxExpr::Mul(a, b) => self.eval_ix(a)? * self.eval_ix(b)?,
        })
    }

    fn slice_indices(&self, s: &SliceRef) -> Result<Vec<i64>, InterpError> {
        let start = self.eval_ix(&s.start)?;
        let len = self
            .ast
            .decl(&s.var)
            .map(|d| d.len as i64)
            .ok_or_else(|| InterpError::Unbound(s.var.clone()))?;
        let mut out = Vec::with_capacity(s.count as usize);
        for k in 0..s.count as i64 {
            let idx = start + s.step * k;
            if idx < 0 || idx >= len {
                return Err(InterpError::OutOfBounds(s.var.clone(), idx));
            }
            out.push(idx);
        }
        Ok(out)
    }

    fn eval(&self, e: &VExpr) -> Result<Vec<i16>, InterpError> {
        Ok(match e {
            VExpr::Const(c, _) => vec![*c as i16],
            VExpr::Var(name, _) => {
                let v = self
                    .env
                    .get(name)
                    .ok_or_else(|| InterpError::Unbound(name.clone()))?;
                vec![v[0]]
            }
            VExpr::Slice(s) => {
                let idxs = self.slice_indices(s)?;
                let v = self
                    .env
                    .get(&s.var)
                    .ok_or_else(|| InterpError::Unbound(s.var.clone()))?;
                idxs.iter().map(|i| v[*i as usize]).collect()
            }
            VExpr::Bin(op, a, b, _) => {
                let (va, vb) = (self.eval(a)?, self.eval(b)?);
                let n = va.len().max(vb.len());
                let va = broadcast(va, n);
                let vb = broadcast(vb, n);
                va.iter()
                    .zip(vb.iter())
                    .map(|(x, y)| match op {
                        BinOp::Add => x.wrapping_add(*y),
                        BinOp::Sub => x.wrapping_sub(*y),
                        BinOp::Mul => x.wrapping_mul(*y),
                    })
                    .collect()
            }
            VExpr::Sum(a, _) => {
                let va = self.eval(a)?;
                let mut acc: i16 = 0;
                for x in va {
                    acc = acc.wrapping_add(x);
                }
                vec![acc]
            }
        })
    }
}

fn scalar_of(v: &[i16]) -> i16 {
    v[0]
}

fn broadcast(v: Vec<i16>, n: usize) -> Vec<i16> {
    if v.len() == n {
        v
    } else {
        debug_assert_eq!(v.len(), 1);
        vec![v[0]; n]
    }
}

/// Deterministic pseudo-random inputs for every `input()` declaration,
/// reproducible by seed.
pub fn gen_inputs(ast: &Ast, seed: u64) -> Env {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut env = Env::new();
    for d in &ast.decls {
        if matches!(d.init, DeclInit::Input) {
            let n = if d.kind == VarKind::Scalar { 1 } else { d.len };
            let vals: Vec<i16> = (0..n).map(|_| rng.gen::<i16>()).collect();
            env.insert(d.name.clone(), vals);
        }
    }
    env
}

/// Render an environment in the memory-image text format `var: v0 v1 ...`.
pub fn render_env(env: &Env) -> String {
    let mut out = String::new();
    for (name, vals) in env {
        out.push_str(name);
        out.push(':');
        for v in vals {
            out.push(' ');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

/// Parse the memory-image text format.
pub fn parse_env(text: &str) -> Result<Env, String> {
    let mut env = Env::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, rest) = line
            .split_once(':')
            .ok_or_else(|| format!("line {}: expected `var: values`", lineno + 1))?;
        let vals: Result<Vec<i16>, _> = rest.split_whitespace().map(|w| w.parse()).collect();
        env.insert(
            name.trim().to_string(),
            vals.map_err(|e| format!("line {}: {e}", lineno + 1))?,
        );
    }
    Ok(env)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_program;

    fn env(pairs: &[(&str, &[i16])]) -> Env {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_vec()))
            .collect()
    }

    #[test]
    fn vector_add() {
        let ast = parse_program("B = input(2);\nC = input(2);\nA = zeros(2);\nA(1:2) = B + C;\n")
            .unwrap();
        let out = interpret(&ast, &env(&[("B", &[1, 2]), ("C", &[3, 4])])).unwrap();
        assert_eq!(out["A"], vec![4, 6]);
    }

    #[test]
    fn sixteen_bit_wrap() {
        let ast = parse_program("B = input(1);\nA = zeros(1);\nA(1:1) = B + 1;\n").unwrap();
        let out = interpret(&ast, &env(&[("B", &[32767])])).unwrap();
        assert_eq!(out["A"], vec![-32768]);
    }

    #[test]
    fn loop_accumulation() {
        let ast = parse_program(
            "A = input(4);\nB = input(4);\ns = 0;\nfor i = 1:4\n  s = s + A(i) * B(i);\nend\n",
        )
        .unwrap();
        let out = interpret(
            &ast,
            &env(&[("A", &[1, 2, 3, 4]), ("B", &[10, 20, 30, 40])]),
        )
        .unwrap();
        assert_eq!(out["s"], vec![300]);
    }

    #[test]
    fn out_of_bounds_reported() {
        let ast = parse_program("A = input(4);\nB = zeros(4);\nfor i = 1:5\n  B(i) = A(i);\nend\n")
            .unwrap();
        let err = interpret(&ast, &gen_inputs(&ast, 0)).unwrap_err();
        assert_eq!(err, InterpError::OutOfBounds("A".into(), 4));
    }

    #[test]
    fn gen_inputs_reproducible() {
        let ast = parse_program("A = input(16);\nt = input();\n").unwrap();
        let a = gen_inputs(&ast, 7);
        let b = gen_inputs(&ast, 7);
        let c = gen_inputs(&ast, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn env_text_roundtrip() {
        let e = env(&[("A", &[1, -2, 3]), ("t", &[-32768])]);
        let text = render_env(&e);
        assert_eq!(parse_env(&text).unwrap(), e);
    }
}
