//! Evaluation at sample points and tri-state equivalence.

use std::fmt::Write as _;
use std::sync::Arc;

use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;

use super::gen::{GenId, GenKind, GenTag};
use super::scalar::{q_frac, q_to_f64, Q};
use super::tree::{exact_power, real_power};
use super::Expr;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Equivalence {
    Equal,
    /// Distinct values at the described sample point.
    Different { witness: String },
    Unknown { reason: String },
}

impl Equivalence {
    pub fn is_equal(&self) -> bool {
        matches!(self, Equivalence::Equal)
    }

    pub fn is_different(&self) -> bool {
        matches!(self, Equivalence::Different { .. })
    }
}

/// Random sample points: rational values for `x`, jet variables and
/// parameters (parameters positive), and a random polynomial for every
/// formal function name.
pub struct Sampler {
    rng: ChaCha8Rng,
    pub attempts: usize,
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler::new(0x5eed)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Point {
    pub atoms: FxHashMap<GenId, Q>,
    pub funcs: FxHashMap<Arc<str>, Vec<Q>>,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed), attempts: 12 }
    }

    fn rational(&mut self, positive: bool) -> Q {
        let d: i64 = self.rng.gen_range(1..=7);
        let n: i64 = if positive { self.rng.gen_range(1..=19) } else { self.rng.gen_range(-19..=19) };
        q_frac(n, d)
    }

    /// A fresh point covering every atom and function name reachable from `e`.
    pub fn point(&mut self, e: &Expr) -> Point {
        let mut p = Point::default();
        for g in e.all_gens() {
            match g.kind() {
                GenKind::X | GenKind::Jet(_) => {
                    let v = self.rational(false);
                    p.atoms.insert(g, v);
                }
                GenKind::Param(_) => {
                    let v = self.rational(true);
                    p.atoms.insert(g, v);
                }
                GenKind::Func { name, .. } => {
                    if !p.funcs.contains_key(name) {
                        let coeffs = (0..7).map(|_| self.rational(false)).collect();
                        p.funcs.insert(name.clone(), coeffs);
                    }
                }
                _ => {}
            }
        }
        p
    }
}

/// `d^k/dt^k` of the polynomial with the given coefficients, at `t`.
fn poly_derivative_at(coeffs: &[Q], k: u32, t: &Q) -> Q {
    let mut v = Q::zero();
    for (i, c) in coeffs.iter().enumerate() {
        let i = i as u32;
        if i < k {
            continue;
        }
        let factor: u64 = ((i - k + 1)..=i).map(|j| j as u64).product();
        v += c * Q::from_integer(factor.into()) * super::scalar::q_powi(t, (i - k) as i64);
    }
    v
}

fn poly_derivative_at_f64(coeffs: &[Q], k: u32, t: f64) -> f64 {
    let mut v = 0.0;
    for (i, c) in coeffs.iter().enumerate() {
        let i = i as u32;
        if i < k {
            continue;
        }
        let factor: f64 = ((i - k + 1)..=i).map(|j| j as f64).product();
        v += q_to_f64(c) * factor * t.powi((i - k) as i32);
    }
    v
}

impl Expr {
    /// Exact value at a point; `None` for irrational or undefined values.
    pub fn eval_exact(&self, p: &Point) -> Option<Q> {
        let mut memo: FxHashMap<GenId, Option<Q>> = FxHashMap::default();
        eval_exact_memo(self, p, &mut memo)
    }

    /// Floating value at a point; `None` when a radicand is not positive or
    /// a denominator vanishes.
    pub fn eval_f64(&self, p: &Point) -> Option<f64> {
        let mut memo: FxHashMap<GenId, Option<f64>> = FxHashMap::default();
        eval_f64_memo(self, p, &mut memo).map(|v| v.0)
    }
}

fn gen_value_exact(g: GenId, p: &Point, memo: &mut FxHashMap<GenId, Option<Q>>) -> Option<Q> {
    if let Some(v) = memo.get(&g) {
        return v.clone();
    }
    let v = match g.kind() {
        GenKind::X | GenKind::Jet(_) | GenKind::Param(_) => p.atoms.get(&g).cloned(),
        GenKind::Func { name, order, arg } => {
            let t = eval_exact_memo(arg, p, memo)?;
            p.funcs.get(name).map(|c| poly_derivative_at(c, *order, &t))
        }
        GenKind::Exp(arg) => {
            let t = eval_exact_memo(arg, p, memo)?;
            t.is_zero().then(Q::one)
        }
        GenKind::Surd(n) => Some(Q::from_integer(n.clone())),
        GenKind::Factor(poly) => eval_exact_memo(&Expr::from_raw(poly.clone(), false), p, memo),
    };
    memo.insert(g, v.clone());
    v
}

fn eval_exact_memo(e: &Expr, p: &Point, memo: &mut FxHashMap<GenId, Option<Q>>) -> Option<Q> {
    let mut total = Q::zero();
    for (m, c) in e.num().terms() {
        let mut t = c.clone();
        for &(g, ex) in m.iter() {
            let v = gen_value_exact(g, p, memo)?;
            if g.is_folded() && !v.is_positive() && !ex.is_integer() {
                return None;
            }
            t *= exact_power(&v, ex)?;
        }
        total += t;
    }
    for &(g, k) in e.den().iter() {
        let v = gen_value_exact(g, p, memo)?;
        if v.is_zero() {
            return None;
        }
        total /= super::scalar::q_powi(&v, k as i64);
    }
    Some(total)
}

fn gen_value_f64(g: GenId, p: &Point, memo: &mut FxHashMap<GenId, Option<f64>>) -> Option<f64> {
    if let Some(v) = memo.get(&g) {
        return *v;
    }
    let v = match g.kind() {
        GenKind::X | GenKind::Jet(_) | GenKind::Param(_) => p.atoms.get(&g).map(q_to_f64),
        GenKind::Func { name, order, arg } => {
            let t = eval_f64_memo(arg, p, memo)?.0;
            p.funcs.get(name).map(|c| poly_derivative_at_f64(c, *order, t))
        }
        GenKind::Exp(arg) => Some(eval_f64_memo(arg, p, memo)?.0.exp()),
        GenKind::Surd(n) => n.to_f64(),
        GenKind::Factor(poly) => Some(eval_f64_memo(&Expr::from_raw(poly.clone(), false), p, memo)?.0),
    };
    memo.insert(g, v);
    v
}

/// Value and magnitude scale (sum of absolute term values).
fn eval_f64_memo(e: &Expr, p: &Point, memo: &mut FxHashMap<GenId, Option<f64>>) -> Option<(f64, f64)> {
    let mut total = 0.0;
    let mut scale = 0.0;
    for (m, c) in e.num().terms() {
        let mut t = q_to_f64(c);
        for &(g, ex) in m.iter() {
            let v = gen_value_f64(g, p, memo)?;
            if g.tag() == GenTag::Factor && !ex.is_integer() && v <= 0.0 {
                return None;
            }
            t *= real_power(v, ex);
        }
        total += t;
        scale += t.abs();
    }
    let mut d = 1.0;
    for &(g, k) in e.den().iter() {
        let v = gen_value_f64(g, p, memo)?;
        if v == 0.0 {
            return None;
        }
        d *= v.powi(k as i32);
    }
    if !total.is_finite() || !d.is_finite() {
        return None;
    }
    Some((total / d, scale / d.abs()))
}

fn describe(p: &Point) -> String {
    let mut atoms: Vec<(String, String)> = p
        .atoms
        .iter()
        .map(|(g, v)| (crate::syntax::print_text(&Expr::gen(*g)), v.to_string()))
        .collect();
    atoms.sort();
    let mut s = String::new();
    for (i, (k, v)) in atoms.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let _ = write!(s, "{k} = {v}");
    }
    let mut funcs: Vec<&Arc<str>> = p.funcs.keys().collect();
    funcs.sort();
    for f in funcs {
        let _ = write!(s, "; {f} = random polynomial");
    }
    s
}

/// Tri-state comparison. `Equal` is decided by the canonical form of the
/// difference. Without radicals and exponentials a nonzero difference is
/// confirmed by an exact rational witness; otherwise a floating witness with
/// a wide relative margin is required before answering `Different`.
pub fn equivalent(a: &Expr, b: &Expr) -> Equivalence {
    equivalent_with(a, b, &mut Sampler::default())
}

pub fn equivalent_with(a: &Expr, b: &Expr, sampler: &mut Sampler) -> Equivalence {
    let d = a.sub(b);
    if d.is_zero() {
        return Equivalence::Equal;
    }
    let irrational = d.all_gens().iter().any(|g| {
        matches!(g.tag(), GenTag::Exp | GenTag::Surd)
            || (g.is_factor() && (d.num().terms().iter().any(|(m, _)| !m.exp_of(*g).is_integer())))
    }) || d.num().terms().iter().any(|(m, _)| m.iter().any(|(_, e)| !e.is_integer()));
    let mut zeros = 0;
    for _ in 0..sampler.attempts {
        let p = sampler.point(&d);
        if !irrational {
            match d.eval_exact(&p) {
                Some(v) if !v.is_zero() => return Equivalence::Different { witness: describe(&p) },
                Some(_) => zeros += 1,
                None => {}
            }
        } else if let Some((v, scale)) = eval_f64_memo(&d, &p, &mut FxHashMap::default()) {
            if v.abs() > 1e-6 * scale.max(1e-300) && v.abs() > 1e-9 {
                return Equivalence::Different { witness: format!("{} (floating evaluation)", describe(&p)) };
            }
            zeros += 1;
        }
    }
    Equivalence::Unknown {
        reason: if zeros > 0 {
            format!("difference is not structurally zero but vanished at {zeros} sample points")
        } else {
            "no admissible sample point found".into()
        },
    }
}
