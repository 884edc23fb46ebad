//! Exact symbolic expressions over jet variables, `x`, named parameters and
//! formal functions.
//!
//! An [`Expr`] is stored in a canonical rational form: an expanded numerator
//! polynomial over a denominator that is a product of powers of registered
//! factor polynomials. Positive integer powers of sums are expanded, negative
//! and fractional powers of sums are kept as factor generators, and the
//! numerator is never divisible by a denominator factor. Two expressions built
//! from the same registered factors are therefore structurally equal exactly
//! when they are equal as functions (radicands are formally positive).

mod calculus;
mod equiv;
pub mod gen;
pub mod poly;
pub mod scalar;
pub mod tree;
pub mod upoly;

use std::cell::RefCell;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rustc_hash::{FxHashMap, FxHasher};
use smallvec::SmallVec;
use thiserror::Error;

pub use calculus::{FuncDef, Substitution};
pub(crate) use calculus::Derivation;
pub use equiv::{equivalent, Equivalence, Sampler};
pub use gen::{GenId, GenKind, GenTag};
pub use poly::{Mono, Poly};
pub use scalar::{Exp, Q};
pub use tree::{Atom, Tree};

use scalar::{exp_floor, exp_int, extract_power, q_powi};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("jet order {order} exceeds the configured bound {bound}")]
    JetOrder { order: u32, bound: u32 },
    #[error("zero raised to a negative power")]
    ZeroNegativePower,
    #[error("division by zero")]
    DivisionByZero,
    #[error("even root of a negative quantity")]
    NegativeEvenRoot,
    #[error("formal functions may not be nested: {0}")]
    NestedFunction(String),
    #[error("unsupported expression: {0}")]
    Unsupported(String),
}

/// Product of positive integer powers of factor generators.
#[derive(Clone, PartialEq, Eq, Hash, Default, Debug)]
pub struct Den(SmallVec<[(GenId, u32); 2]>);

impl Den {
    pub fn one() -> Self {
        Den(SmallVec::new())
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(GenId, u32)> + '_ {
        self.0.iter()
    }

    fn inverse_mono(&self) -> Mono {
        Mono::from_pairs(self.0.iter().map(|&(g, k)| (g, -exp_int(k as i64))).collect())
    }
}

struct Inner {
    num: Poly,
    den: Den,
    hash: u64,
}

/// Immutable, cheaply clonable symbolic expression in canonical form.
#[derive(Clone)]
pub struct Expr(Arc<Inner>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.hash == other.0.hash && self.0.num == other.0.num && self.0.den == other.0.den)
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({})", crate::syntax::print_text(self))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::print_text(self))
    }
}

thread_local! {
    static FACTOR_POWERS: RefCell<FxHashMap<(GenId, u32), Poly>> = RefCell::new(FxHashMap::default());
}

/// The polynomial of a registered factor.
pub(crate) fn factor_poly(g: GenId) -> &'static Poly {
    match g.kind() {
        GenKind::Factor(p) => p,
        _ => panic!("generator {g:?} is not a factor"),
    }
}

fn factor_power(g: GenId, k: u32) -> Poly {
    if k == 1 {
        return factor_poly(g).clone();
    }
    FACTOR_POWERS.with(|cache| {
        if let Some(p) = cache.borrow().get(&(g, k)) {
            return p.clone();
        }
        let p = factor_poly(g).pow(k);
        let mut c = cache.borrow_mut();
        if c.len() > 4096 {
            c.clear();
        }
        c.insert((g, k), p.clone());
        p
    })
}

fn surd_base(g: GenId) -> &'static BigInt {
    match g.kind() {
        GenKind::Surd(n) => n,
        _ => panic!("generator {g:?} is not a surd"),
    }
}

impl Expr {
    fn make(num: Poly, den: Den) -> Expr {
        let mut h = FxHasher::default();
        num.hash(&mut h);
        den.hash(&mut h);
        Expr(Arc::new(Inner { num, den, hash: h.finish() }))
    }

    pub fn zero() -> Expr {
        Expr::make(Poly::zero(), Den::one())
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn int(n: i64) -> Expr {
        Expr::rational(scalar::q_int(n))
    }

    pub fn frac(n: i64, d: i64) -> Expr {
        Expr::rational(scalar::q_frac(n, d))
    }

    pub fn rational(q: Q) -> Expr {
        Expr::make(Poly::constant(q), Den::one())
    }

    pub fn gen(g: GenId) -> Expr {
        Expr::gen_pow(g, exp_int(1))
    }

    pub(crate) fn gen_pow(g: GenId, e: Exp) -> Expr {
        Expr::from_raw(Poly::monomial(Mono::var(g, e), Q::one()), false)
    }

    /// The independent variable `x`.
    pub fn x() -> Expr {
        Expr::gen(GenId::x())
    }

    /// The jet variable `u_n` (`u_0 = u`).
    pub fn jet(n: u32) -> Expr {
        Expr::gen(GenId::jet(n))
    }

    pub fn u() -> Expr {
        Expr::jet(0)
    }

    pub fn param(name: &str) -> Expr {
        Expr::gen(gen::param_id(name))
    }

    /// Formal function application `name^(order)(arg)`. The argument may
    /// contain formal functions only if their own arguments contain none.
    pub fn func(name: &str, order: u32, arg: Expr) -> Result<Expr, ExprError> {
        let nested = |g: &GenId| g.tag() == GenTag::Func && g.info().closure.iter().any(|h| h.tag() == GenTag::Func);
        if arg.all_gens().iter().any(nested) {
            return Err(ExprError::NestedFunction(format!("{name}({arg})")));
        }
        Ok(Expr::gen(gen::intern(GenKind::Func { name: Arc::from(name), order, arg })))
    }

    /// `exp(arg)`, split over the terms of a polynomial argument.
    pub fn exp(arg: &Expr) -> Result<Expr, ExprError> {
        if !arg.den().is_one() {
            return Ok(Expr::gen(gen::intern(GenKind::Exp(arg.clone()))));
        }
        let mut raw = Mono::one();
        for (m, c) in arg.num().terms() {
            let e = scalar::q_to_exp(c).ok_or_else(|| ExprError::Unsupported("exp coefficient too large".into()))?;
            let base = Expr::from_raw(Poly::monomial(m.clone(), Q::one()), false);
            let g = gen::intern(GenKind::Exp(base));
            raw = raw.mul(&Mono::var(g, e));
        }
        Ok(Expr::from_raw(Poly::monomial(raw, Q::one()), false))
    }

    pub fn num(&self) -> &Poly {
        &self.0.num
    }

    pub fn den(&self) -> &Den {
        &self.0.den
    }

    pub fn is_zero(&self) -> bool {
        self.0.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.den.is_one() && self.0.num.as_constant().is_some_and(|c| c.is_one())
    }

    /// Numeric value if the expression is a rational constant.
    pub fn as_rational(&self) -> Option<Q> {
        if self.0.den.is_one() {
            self.0.num.as_constant()
        } else {
            None
        }
    }

    /// Number of numerator terms plus denominator factors; the size measure
    /// used by resource budgets.
    pub fn size(&self) -> usize {
        self.0.num.len() + self.0.den.0.len()
    }

    /// Generators occurring directly in numerator or denominator.
    pub fn gens(&self) -> Vec<GenId> {
        let mut v = self.0.num.gens();
        v.extend(self.0.den.iter().map(|p| p.0));
        v.sort_unstable();
        v.dedup();
        v
    }

    /// All generators reachable, including those inside factors and arguments.
    pub fn all_gens(&self) -> Vec<GenId> {
        let mut v = Vec::new();
        for g in self.gens() {
            v.push(g);
            v.extend_from_slice(&g.info().closure);
        }
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn depends_on(&self, z: GenId) -> bool {
        self.gens().iter().any(|g| g.depends_on(z))
    }

    pub fn has_x(&self) -> bool {
        self.gens().iter().any(|g| g.info().has_x)
    }

    /// Largest jet order occurring anywhere, `None` when no jet variable occurs.
    pub fn jet_order(&self) -> Option<u32> {
        self.gens().iter().filter_map(|g| g.info().jet_order).max()
    }

    /// True when only parameters and numeric surds occur.
    pub fn is_parametric_constant(&self) -> bool {
        self.all_gens().iter().all(|g| matches!(g.tag(), GenTag::Param | GenTag::Surd))
    }

    /// Numerator and denominator folded into one polynomial whose factor
    /// generators may carry arbitrary rational exponents.
    pub(crate) fn to_raw(&self) -> Poly {
        if self.0.den.is_one() {
            self.0.num.clone()
        } else {
            self.0.num.mul_term(&self.0.den.inverse_mono(), &Q::one())
        }
    }

    /// Canonical form of a raw polynomial: integer parts of factor exponents
    /// are expanded or moved to the denominator, surd integer parts are folded
    /// into coefficients, and (optionally) common factors are cancelled.
    pub(crate) fn from_raw(raw: Poly, cancel: bool) -> Expr {
        if raw.is_zero() {
            return Expr::zero();
        }
        let any_folded = raw.terms().iter().any(|(m, _)| m.iter().any(|(g, _)| g.is_folded()));
        if !any_folded {
            return Expr::make(raw, Den::one());
        }
        let mut shift: FxHashMap<GenId, i64> = FxHashMap::default();
        for (m, _) in raw.terms() {
            for &(g, e) in m.iter() {
                if g.is_factor() {
                    let fl = exp_floor(e);
                    if fl < 0 {
                        let s = shift.entry(g).or_insert(0);
                        *s = (*s).max(-fl);
                    }
                }
            }
        }
        let mut shift_list: Vec<(GenId, i64)> = shift.into_iter().collect();
        shift_list.sort_unstable();

        type ExpandKey = SmallVec<[(GenId, u32); 2]>;
        let mut batches: FxHashMap<ExpandKey, Vec<(Mono, Q)>> = FxHashMap::default();
        for (m, c) in raw.into_terms() {
            let mut c = c;
            let mut m = m;
            for &(g, s) in &shift_list {
                let e = m.exp_of(g) + exp_int(s);
                m = m.with_exp(g, e);
            }
            let mut expand: ExpandKey = SmallVec::new();
            let folded: Vec<(GenId, Exp)> = m.iter().filter(|(g, _)| g.is_folded()).copied().collect();
            for (g, e) in folded {
                let fl = exp_floor(e);
                if fl == 0 {
                    continue;
                }
                m = m.with_exp(g, e - exp_int(fl));
                if g.is_factor() {
                    expand.push((g, fl as u32));
                } else {
                    c *= q_powi(&Q::from_integer(surd_base(g).clone()), fl);
                }
            }
            batches.entry(expand).or_default().push((m, c));
        }
        let mut acc: FxHashMap<Mono, Q> = FxHashMap::default();
        for (expand, terms) in batches {
            let mut p = Poly::from_terms(terms);
            for (g, k) in expand {
                p = p.mul(&factor_power(g, k));
            }
            for (m, c) in p.into_terms() {
                match acc.get_mut(&m) {
                    Some(v) => *v += c,
                    None => {
                        acc.insert(m, c);
                    }
                }
            }
        }
        let mut num = Poly::from_map(acc);
        if num.is_zero() {
            return Expr::zero();
        }
        let mut den: SmallVec<[(GenId, u32); 2]> = SmallVec::new();
        for (g, s) in shift_list {
            let mut k = s as u32;
            if cancel {
                let f = factor_poly(g);
                while k > 0 {
                    match num.exact_div(f) {
                        Some(q) => {
                            num = q;
                            k -= 1;
                        }
                        None => break,
                    }
                }
            }
            if k > 0 {
                den.push((g, k));
            }
        }
        Expr::make(num, Den(den))
    }

    pub fn add(&self, other: &Expr) -> Expr {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.0.den.is_one() && other.0.den.is_one() {
            return Expr::make(self.0.num.add(&other.0.num), Den::one());
        }
        if self.0.den == other.0.den {
            let num = self.0.num.add(&other.0.num);
            return Expr::from_raw(num.mul_term(&self.0.den.inverse_mono(), &Q::one()), true);
        }
        Expr::from_raw(self.to_raw().add(&other.to_raw()), true)
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Expr {
        Expr::make(self.0.num.neg(), self.0.den.clone())
    }

    pub fn scale(&self, k: &Q) -> Expr {
        if k.is_zero() {
            return Expr::zero();
        }
        Expr::make(self.0.num.scale(k), self.0.den.clone())
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        if self.is_zero() || other.is_zero() {
            return Expr::zero();
        }
        if let Some(k) = other.as_rational() {
            return self.scale(&k);
        }
        if let Some(k) = self.as_rational() {
            return other.scale(&k);
        }
        if self.0.den.is_one() && other.0.den.is_one() {
            let raw = self.0.num.mul(&other.0.num);
            return Expr::from_raw(raw, false);
        }
        // cancel each numerator against the other denominator first
        let (na, db) = cancel_against(&self.0.num, &other.0.den);
        let (nb, da) = cancel_against(&other.0.num, &self.0.den);
        let inv = db.inverse_mono().mul(&da.inverse_mono());
        let raw = na.mul(&nb).mul_term(&inv, &Q::one());
        let needs_cancel = has_fractional_factor(&na) && has_fractional_factor(&nb);
        Expr::from_raw(raw, needs_cancel)
    }

    /// Quotient; fails on a zero divisor or a divisor that cannot be inverted.
    pub fn div(&self, other: &Expr) -> Result<Expr, ExprError> {
        if other.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        Ok(self.mul(&other.inv()?))
    }

    pub fn inv(&self) -> Result<Expr, ExprError> {
        self.pow(exp_int(-1))
    }

    pub fn powi(&self, n: i64) -> Result<Expr, ExprError> {
        self.pow(exp_int(n))
    }

    /// Rational power under the positive-branch convention:
    /// `(b^p)^q = b^(pq)` and `(-z)^(1/odd) = -z^(1/odd)`.
    pub fn pow(&self, e: Exp) -> Result<Expr, ExprError> {
        if e.is_zero() {
            return Ok(Expr::one());
        }
        if e.is_one() {
            return Ok(self.clone());
        }
        if self.is_zero() {
            return if e.is_positive() { Ok(Expr::zero()) } else { Err(ExprError::ZeroNegativePower) };
        }
        if e.is_integer() && e.is_positive() && self.0.num.len() > 1 {
            let n = e.to_integer() as u32;
            let raw = self.0.num.pow(n).mul_term(&self.0.den.inverse_mono().pow(e), &Q::one());
            return Ok(Expr::from_raw(raw, false));
        }
        let even_root = *e.denom() % 2 == 0;
        let (coef, mono) = self.split_product(even_root)?;
        let (c2, surds) = rational_power(&coef, e)?;
        let raw = Poly::monomial(mono.pow(e).mul(&surds), c2);
        Ok(Expr::from_raw(raw, true))
    }

    /// Writes the expression as `coef * mono` where `mono` is a raw monomial
    /// over generators (registering the remaining sum as a factor if needed).
    fn split_product(&self, positive_coef: bool) -> Result<(Q, Mono), ExprError> {
        let den_inv = self.0.den.inverse_mono();
        let num = &self.0.num;
        if num.len() == 1 {
            let (m, c) = &num.terms()[0];
            return Ok((c.clone(), m.mul(&den_inv)));
        }
        let mc = num.monomial_content();
        let mut c = num.content();
        let mut p = num.mul_term(&Mono::one().div(&mc), &c.recip());
        if p.terms().iter().any(|(m, _)| m.iter().any(|(g, _)| g.is_folded())) {
            return Err(ExprError::Unsupported(
                "cannot raise a sum involving radicals to a non-natural power".into(),
            ));
        }
        let mut out = mc.mul(&den_inv);
        let support = p.gens();
        for f in gen::registered_factors() {
            if p.len() < 2 {
                break;
            }
            let fp = factor_poly(f);
            if fp.len() > p.len() || !fp.gens().iter().all(|g| support.binary_search(g).is_ok()) {
                continue;
            }
            let mut k = 0i64;
            while let Some(q) = p.exact_div(fp) {
                p = q;
                k += 1;
            }
            if k > 0 {
                out = out.mul(&Mono::var(f, exp_int(k)));
            }
        }
        if let Some(k) = p.as_constant() {
            c *= k;
        } else {
            let flip = if positive_coef {
                c.is_negative() ^ p.terms().iter().all(|(_, c)| c.is_negative())
            } else {
                tree::intrinsic_leading_negative(&p)
            };
            if flip {
                p = p.neg();
                c = -c;
            }
            if positive_coef && c.is_negative() {
                p = p.neg();
                c = -c;
            }
            let (mut p, k) = perfect_power(p);
            if k > 1 && tree::intrinsic_leading_negative(&p) && (k % 2 == 0 || !positive_coef) {
                p = p.neg();
                if k % 2 == 1 {
                    c = -c;
                }
            }
            let g = gen::intern(GenKind::Factor(p));
            out = out.mul(&Mono::var(g, exp_int(k as i64)));
        }
        Ok((c, out))
    }
}

/// `k`-th power of a rational; irrational roots are returned as surd monomials.
fn rational_power(c: &Q, e: Exp) -> Result<(Q, Mono), ExprError> {
    if e.is_integer() {
        return Ok((q_powi(c, e.to_integer()), Mono::one()));
    }
    let p = *e.numer();
    let q = *e.denom() as u32;
    let negative = c.is_negative();
    if negative && q % 2 == 0 {
        return Err(ExprError::NegativeEvenRoot);
    }
    let sign = if negative && p % 2 != 0 { -Q::one() } else { Q::one() };
    let a = c.numer().abs();
    let b = c.denom().clone();
    let (ao, ar) = extract_power(&a, q);
    let (bo, br) = extract_power(&b, q);
    let mut coef = sign * q_powi(&Q::new(ao, bo), p);
    let mut mono = Mono::one();
    for (r, s) in [(ar, 1i64), (br, -1i64)] {
        if r.is_one() {
            continue;
        }
        let g = gen::intern(GenKind::Surd(r));
        mono = mono.mul(&Mono::var(g, Exp::new(p * s, q as i64)));
    }
    coef *= Q::one();
    Ok((coef, mono))
}

/// Writes a new factor candidate as `r^k` with `k` maximal.
fn perfect_power(p: Poly) -> (Poly, u32) {
    if p.len() < 2 || gen::lookup(&GenKind::Factor(p.clone())).is_some() {
        return (p, 1);
    }
    let Some((lm, _)) = p.leading() else { return (p, 1) };
    let lead_deg = lm.iter().map(|(_, e)| e.to_integer().unsigned_abs()).fold(0u64, num_integer::gcd);
    let mut k = lead_deg.min(12) as u32;
    while k >= 2 {
        if lead_deg % k as u64 == 0 {
            if let Some(r) = p.kth_root(k) {
                let (r2, k2) = perfect_power(r);
                return (r2, k * k2);
            }
        }
        k -= 1;
    }
    (p, 1)
}

fn has_fractional_factor(p: &Poly) -> bool {
    p.terms().iter().any(|(m, _)| m.iter().any(|(g, _)| g.is_factor()))
}

/// Divides `num` by as many denominator factors as possible.
fn cancel_against(num: &Poly, den: &Den) -> (Poly, Den) {
    if den.is_one() || num.len() == 1 && num.terms()[0].0.iter().all(|(g, _)| !g.is_factor()) {
        return (num.clone(), den.clone());
    }
    let mut n = num.clone();
    let mut out: SmallVec<[(GenId, u32); 2]> = SmallVec::new();
    for &(g, k) in den.iter() {
        let f = factor_poly(g);
        let mut k = k;
        while k > 0 {
            match n.exact_div(f) {
                Some(q) => {
                    n = q;
                    k -= 1;
                }
                None => break,
            }
        }
        if k > 0 {
            out.push((g, k));
        }
    }
    (n, Den(out))
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $call:ident) => {
        impl std::ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$call(self, rhs)
            }
        }
        impl std::ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$call(&self, &rhs)
            }
        }
        impl std::ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$call(&self, rhs)
            }
        }
        impl std::ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$call(self, &rhs)
            }
        }
    };
}

impl_binop!(Add, add, add);
impl_binop!(Sub, sub, sub);
impl_binop!(Mul, mul, mul);

impl Expr {
    fn div_or_panic(&self, b: &Expr) -> Expr {
        self.div(b).unwrap_or_else(|e| panic!("cannot divide {self} by {b}: {e}"))
    }
}

impl_binop!(Div, div, div_or_panic);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        let raws: Vec<Poly> = iter.map(|e| e.to_raw()).collect();
        let mut acc: FxHashMap<Mono, Q> = FxHashMap::default();
        for r in raws {
            for (m, c) in r.into_terms() {
                match acc.get_mut(&m) {
                    Some(v) => *v += c,
                    None => {
                        acc.insert(m, c);
                    }
                }
            }
        }
        Expr::from_raw(Poly::from_map(acc), true)
    }
}

impl std::iter::Product for Expr {
    fn product<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        iter.fold(Expr::one(), |a, b| a.mul(&b))
    }
}
