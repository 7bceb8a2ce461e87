//! Scalar expressions over loop iterators, used for address-function fields
//! and address-constraint computation.
//!
//! Iterators are referenced by the owning loop vertex id and range over the
//! normalized index domain `0..count`. An expression that mentions no
//! iterator is constant-resolvable at compile time.

use std::collections::BTreeMap;
use std::fmt;

/// Expression tree over iterator indices and integer constants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Const(i64),
    /// Normalized iteration index of a loop vertex (0-based).
    Iter(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// Left shift by a constant amount; produced by strength reduction.
    Shl(Box<Expr>, u32),
}

impl Expr {
    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }
    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }
    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn as_const(&self) -> Option<i64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Expr::Const(_))
    }

    /// Evaluate under an iterator assignment. Missing iterators are an error
    /// of the caller; we panic since all call sites pass validated bindings.
    pub fn eval(&self, iters: &BTreeMap<usize, i64>) -> i64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Iter(id) => *iters
                .get(id)
                .unwrap_or_else(|| panic!("unbound iterator {id}")),
            Expr::Add(a, b) => a.eval(iters).wrapping_add(b.eval(iters)),
            Expr::Sub(a, b) => a.eval(iters).wrapping_sub(b.eval(iters)),
            Expr::Mul(a, b) => a.eval(iters).wrapping_mul(b.eval(iters)),
            Expr::Shl(a, k) => a.eval(iters).wrapping_shl(*k),
        }
    }

    /// Iterator ids referenced by the expression.
    pub fn iters(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_iters(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_iters(&self, out: &mut Vec<usize>) {
        match self {
            Expr::Const(_) => {}
            Expr::Iter(id) => out.push(*id),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.collect_iters(out);
                b.collect_iters(out);
            }
            Expr::Shl(a, _) => a.collect_iters(out),
        }
    }

    /// Fold constant subtrees bottom-up. Purely structural; does not
    /// reassociate.
    pub fn fold(&self) -> Expr {
        match self {
            Expr::Const(_) | Expr::Iter(_) => self.clone(),
            Expr::Add(a, b) => match (a.fold(), b.fold()) {
                (Expr::Const(x), Expr::Const(y)) => Expr::Const(x.wrapping_add(y)),
                (Expr::Const(0), e) | (e, Expr::Const(0)) => e,
                (fa, fb) => Expr::add(fa, fb),
            },
            Expr::Sub(a, b) => match (a.fold(), b.fold()) {
                (Expr::Const(x), Expr::Const(y)) => Expr::Const(x.wrapping_sub(y)),
                (e, Expr::Const(0)) => e,
                (fa, fb) => Expr::sub(fa, fb),
            },
            Expr::Mul(a, b) => match (a.fold(), b.fold()) {
                (Expr::Const(x), Expr::Const(y)) => Expr::Const(x.wrapping_mul(y)),
                (Expr::Const(1), e) | (e, Expr::Const(1)) => e,
                (Expr::Const(0), _) | (_, Expr::Const(0)) => Expr::Const(0),
                (fa, fb) => Expr::mul(fa, fb),
            },
            Expr::Shl(a, k) => match a.fold() {
                Expr::Const(x) => Expr::Const(x.wrapping_shl(*k)),
                fa => Expr::Shl(Box::new(fa), *k),
            },
        }
    }

    /// Decompose into `const + sum(coeff_i * iter_i)` when the expression is
    /// affine in its iterators; returns `None` for non-affine forms (e.g. a
    /// product of two iterators).
    pub fn affine(&self) -> Option<Affine> {
        match self {
            Expr::Const(c) => Some(Affine::constant(*c)),
            Expr::Iter(id) => {
                let mut a = Affine::constant(0);
                a.coeffs.insert(*id, 1);
                Some(a)
            }
            Expr::Add(x, y) => Some(x.affine()?.add(&y.affine()?)),
            Expr::Sub(x, y) => Some(x.affine()?.sub(&y.affine()?)),
            Expr::Mul(x, y) => {
                let (ax, ay) = (x.affine()?, y.affine()?);
                if ax.coeffs.is_empty() {
                    Some(ay.scale(ax.base))
                } else if ay.coeffs.is_empty() {
                    Some(ax.scale(ay.base))
                } else {
                    None
                }
            }
            Expr::Shl(x, k) => Some(x.affine()?.scale(1i64 << *k)),
        }
    }

    /// Tree depth, counting leaves as depth 1.
    pub fn depth(&self) -> u32 {
        match self {
            Expr::Const(_) | Expr::Iter(_) => 1,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => 1 + a.depth().max(b.depth()),
            Expr::Shl(a, _) => 1 + a.depth(),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Iter(id) => write!(f, "i{id}"),
            Expr::Add(a, b) => write!(f, "({a}+{b})"),
            Expr::Sub(a, b) => write!(f, "({a}-{b})"),
            Expr::Mul(a, b) => write!(f, "({a}*{b})"),
            Expr::Shl(a, k) => write!(f, "({a}<<{k})"),
        }
    }
}

/// Affine normal form: `base + Σ coeffs[i]·iter_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Affine {
    pub base: i64,
    pub coeffs: BTreeMap<usize, i64>,
}

impl Affine {
    pub fn constant(base: i64) -> Self {
        Affine {
            base,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn add(&self, other: &Affine) -> Affine {
        let mut out = self.clone();
        out.base = out.base.wrapping_add(other.base);
        for (k, v) in &other.coeffs {
            *out.coeffs.entry(*k).or_insert(0) += *v;
        }
        out.normalize()
    }

    pub fn sub(&self, other: &Affine) -> Affine {
        let mut out = self.clone();
        out.base = out.base.wrapping_sub(other.base);
        for (k, v) in &other.coeffs {
            *out.coeffs.entry(*k).or_insert(0) -= *v;
        }
        out.normalize()
    }

    pub fn scale(&self, c: i64) -> Affine {
        let mut out = self.clone();
        out.base = out.base.wrapping_mul(c);
        for v in out.coeffs.values_mut() {
            *v = v.wrapping_mul(c);
        }
        out.normalize()
    }

    fn normalize(mut self) -> Affine {
        self.coeffs.retain(|_, v| *v != 0);
        self
    }

    pub fn is_const(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of one iterator (0 when absent).
    pub fn coeff(&self, iter: usize) -> i64 {
        self.coeffs.get(&iter).copied().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn it(id: usize) -> Expr {
        Expr::Iter(id)
    }

    #[test]
    fn fold_constant_subtree() {
        // (2+3)*i folds to 5*i
        let e = Expr::mul(Expr::add(Expr::Const(2), Expr::Const(3)), it(0));
        assert_eq!(e.fold(), Expr::mul(Expr::Const(5), it(0)));
    }

    #[test]
    fn affine_extraction() {
        // (i0-1)*4 + i1  ->  -4 + 4*i0 + 1*i1
        let e = Expr::add(
            Expr::mul(Expr::sub(it(0), Expr::Const(1)), Expr::Const(4)),
            it(1),
        );
        let a = e.affine().unwrap();
        assert_eq!(a.base, -4);
        assert_eq!(a.coeff(0), 4);
        assert_eq!(a.coeff(1), 1);
    }

    #[test]
    fn product_of_iterators_is_not_affine() {
        assert!(Expr::mul(it(0), it(1)).affine().is_none());
    }

    #[test]
    fn eval_matches_affine() {
        let e = Expr::add(Expr::mul(it(0), Expr::Const(3)), Expr::Const(7));
        let a = e.affine().unwrap();
        for v in -5..5 {
            let mut env = BTreeMap::new();
            env.insert(0usize, v);
            assert_eq!(e.eval(&env), a.base + a.coeff(0) * v);
        }
    }
}
