//! Tree view of expressions.
//!
//! The canonical representation is polynomial; printers, evaluators of raw
//! input and property tests work on this sum/product/power tree instead. Child
//! order in a tree produced by [`Tree::from_expr`] follows intrinsic sort keys
//! and never depends on the order in which generators were interned.

use std::cmp::Ordering;
use std::sync::Arc;

use num_traits::{One, Signed, ToPrimitive, Zero};

use super::gen::{GenId, GenKind};
use super::poly::{Mono, Poly};
use super::scalar::{exp_int, q_to_f64, Exp, Q};
use super::{Den, Expr, ExprError};

#[derive(Clone, PartialEq, Debug)]
pub enum Atom {
    X,
    Jet(u32),
    Param(Arc<str>),
    Func { name: Arc<str>, order: u32, arg: Box<Tree> },
}

#[derive(Clone, PartialEq, Debug)]
pub enum Tree {
    Num(Q),
    Atom(Atom),
    Exp(Box<Tree>),
    Sum(Vec<Tree>),
    Product(Vec<Tree>),
    Power(Box<Tree>, Exp),
}

pub(crate) fn gen_sort_key(kind: &GenKind) -> String {
    match kind {
        GenKind::X => "1".into(),
        GenKind::Jet(n) => format!("2{n:03}"),
        GenKind::Param(name) => format!("3{name}"),
        GenKind::Func { name, order, arg } => format!("4{name}\u{1}{order:03}({})", crate::syntax::print_text(arg)),
        GenKind::Exp(arg) => format!("5{}", crate::syntax::print_text(arg)),
        GenKind::Surd(n) => {
            let s = n.to_string();
            format!("6{:04}{s}", s.len())
        }
        GenKind::Factor(p) => format!("7{}", crate::syntax::print_text(&Expr::make(p.clone(), Den::one()))),
    }
}

/// Intrinsic comparison of monomials: generators by sort key, then exponents.
fn mono_key(m: &Mono) -> Vec<(&'static str, Exp)> {
    let mut v: Vec<(&'static str, Exp)> = m.iter().map(|&(g, e)| (g.info().sort_key.as_str(), e)).collect();
    v.sort_by(|a, b| b.0.cmp(a.0));
    v
}

fn cmp_mono_keys(a: &[(&str, Exp)], b: &[(&str, Exp)]) -> Ordering {
    // total degree first keeps printed sums in a natural descending order
    let da: Exp = a.iter().map(|p| p.1).sum();
    let db: Exp = b.iter().map(|p| p.1).sum();
    da.cmp(&db).then_with(|| {
        for (x, y) in a.iter().zip(b.iter()) {
            let c = x.0.cmp(y.0).then(x.1.cmp(&y.1));
            if c != Ordering::Equal {
                return c;
            }
        }
        a.len().cmp(&b.len())
    })
}

/// Terms of a polynomial in intrinsic descending order.
pub(crate) fn sorted_terms(p: &Poly) -> Vec<&(Mono, Q)> {
    let mut keyed: Vec<(Vec<(&str, Exp)>, &(Mono, Q))> = p.terms().iter().map(|t| (mono_key(&t.0), t)).collect();
    keyed.sort_by(|a, b| cmp_mono_keys(&b.0, &a.0));
    keyed.into_iter().map(|p| p.1).collect()
}

/// Whether the intrinsically leading term has a negative coefficient.
pub(crate) fn intrinsic_leading_negative(p: &Poly) -> bool {
    sorted_terms(p).first().is_some_and(|t| t.1.is_negative())
}

fn sorted_gens(m: &Mono) -> Vec<(GenId, Exp)> {
    let mut v: Vec<(GenId, Exp)> = m.iter().copied().collect();
    v.sort_by(|a, b| a.0.info().sort_key.cmp(&b.0.info().sort_key));
    v
}

fn gen_tree(g: GenId) -> Tree {
    match g.kind() {
        GenKind::X => Tree::Atom(Atom::X),
        GenKind::Jet(n) => Tree::Atom(Atom::Jet(*n)),
        GenKind::Param(name) => Tree::Atom(Atom::Param(name.clone())),
        GenKind::Func { name, order, arg } => Tree::Atom(Atom::Func {
            name: name.clone(),
            order: *order,
            arg: Box::new(Tree::from_expr(arg)),
        }),
        GenKind::Exp(arg) => Tree::Exp(Box::new(Tree::from_expr(arg))),
        GenKind::Surd(n) => Tree::Num(Q::from_integer(n.clone())),
        GenKind::Factor(p) => poly_tree(p),
    }
}

fn power(base: Tree, e: Exp) -> Tree {
    if e.is_one() {
        base
    } else {
        Tree::Power(Box::new(base), e)
    }
}

fn term_tree(m: &Mono, c: &Q) -> Tree {
    let mut factors: Vec<Tree> = sorted_gens(m).into_iter().map(|(g, e)| power(gen_tree(g), e)).collect();
    if factors.is_empty() {
        return Tree::Num(c.clone());
    }
    if !c.is_one() {
        factors.insert(0, Tree::Num(c.clone()));
    }
    if factors.len() == 1 {
        factors.pop().unwrap()
    } else {
        Tree::Product(factors)
    }
}

fn poly_tree(p: &Poly) -> Tree {
    let mut terms: Vec<Tree> = sorted_terms(p).into_iter().map(|(m, c)| term_tree(m, c)).collect();
    match terms.len() {
        0 => Tree::Num(Q::zero()),
        1 => terms.pop().unwrap(),
        _ => Tree::Sum(terms),
    }
}

impl Tree {
    /// Tree view of a canonical expression: `numerator * factor^(-k) * ...`.
    pub fn from_expr(e: &Expr) -> Tree {
        let num = poly_tree(e.num());
        if e.den().is_one() {
            return num;
        }
        let mut den: Vec<(GenId, u32)> = e.den().iter().copied().collect();
        den.sort_by(|a, b| a.0.info().sort_key.cmp(&b.0.info().sort_key));
        let mut factors = match num {
            Tree::Product(fs) => fs,
            other => vec![other],
        };
        factors.extend(den.into_iter().map(|(g, k)| power(gen_tree(g), exp_int(-(k as i64)))));
        Tree::Product(factors)
    }

    /// Normalizes the tree into a canonical expression.
    pub fn to_expr(&self) -> Result<Expr, ExprError> {
        Ok(match self {
            Tree::Num(q) => Expr::rational(q.clone()),
            Tree::Atom(Atom::X) => Expr::x(),
            Tree::Atom(Atom::Jet(n)) => {
                if *n > super::gen::JET_HARD_LIMIT {
                    return Err(ExprError::JetOrder { order: *n, bound: super::gen::JET_HARD_LIMIT });
                }
                Expr::jet(*n)
            }
            Tree::Atom(Atom::Param(name)) => Expr::param(name),
            Tree::Atom(Atom::Func { name, order, arg }) => Expr::func(name, *order, arg.to_expr()?)?,
            Tree::Exp(arg) => Expr::exp(&arg.to_expr()?)?,
            Tree::Sum(children) => children.iter().map(|c| c.to_expr()).collect::<Result<Vec<_>, _>>()?.into_iter().sum(),
            Tree::Product(children) => {
                let mut acc = Expr::one();
                for c in children {
                    acc = acc.mul(&c.to_expr()?);
                }
                acc
            }
            Tree::Power(base, e) => base.to_expr()?.pow(*e)?,
        })
    }

    /// Exact value, or `None` when an irrational power or exponential occurs
    /// or the tree is undefined at the point.
    pub fn eval_exact(&self, env: &dyn Fn(&Atom) -> Option<Q>) -> Option<Q> {
        match self {
            Tree::Num(q) => Some(q.clone()),
            Tree::Atom(a) => env(a),
            Tree::Exp(arg) => {
                let v = arg.eval_exact(env)?;
                v.is_zero().then(Q::one)
            }
            Tree::Sum(c) => c.iter().map(|t| t.eval_exact(env)).sum(),
            Tree::Product(c) => c.iter().map(|t| t.eval_exact(env)).product(),
            Tree::Power(base, e) => {
                let b = base.eval_exact(env)?;
                exact_power(&b, *e)
            }
        }
    }

    pub fn eval_f64(&self, env: &dyn Fn(&Atom) -> f64) -> f64 {
        match self {
            Tree::Num(q) => q_to_f64(q),
            Tree::Atom(a) => env(a),
            Tree::Exp(arg) => arg.eval_f64(env).exp(),
            Tree::Sum(c) => c.iter().map(|t| t.eval_f64(env)).sum(),
            Tree::Product(c) => c.iter().map(|t| t.eval_f64(env)).product(),
            Tree::Power(base, e) => real_power(base.eval_f64(env), *e),
        }
    }
}

/// Real power under the odd-root convention.
pub(crate) fn real_power(b: f64, e: Exp) -> f64 {
    let ef = *e.numer() as f64 / *e.denom() as f64;
    if b < 0.0 && e.denom() % 2 == 1 {
        let mag = (-b).powf(ef);
        if e.numer() % 2 == 0 {
            mag
        } else {
            -mag
        }
    } else {
        b.powf(ef)
    }
}

pub(crate) fn exact_power(b: &Q, e: Exp) -> Option<Q> {
    if e.is_integer() {
        if b.is_zero() && e.is_negative() {
            return None;
        }
        return Some(super::scalar::q_powi(b, e.to_integer()));
    }
    let q = e.denom().to_u32()?;
    if b.is_negative() && q % 2 == 0 {
        return None;
    }
    let sign = if b.is_negative() { -Q::one() } else { Q::one() };
    let n = super::scalar::int_root(&b.numer().abs(), q)?;
    let d = super::scalar::int_root(b.denom(), q)?;
    let root = sign * Q::new(n, d);
    if root.is_zero() && e.is_negative() {
        return None;
    }
    Some(super::scalar::q_powi(&root, *e.numer()))
}
