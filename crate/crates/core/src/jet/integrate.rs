//! Antiderivatives with respect to a single generator.

use num_traits::{One, Signed, Zero};
use rustc_hash::FxHashMap;

use crate::expr::gen::{GenId, GenKind, GenTag};
use crate::expr::scalar::{exp_int, exp_to_q, Exp, Q};
use crate::expr::upoly::{integrate_rational, UPoly};
use crate::expr::{Expr, ExprError, Mono, Poly};

use super::JetError;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Group {
    Simple,
    Linear(GenId),
    Rational,
    Exp,
    Func(GenId),
    FuncPower(GenId),
    Chain(GenId),
}

fn unsupported(e: &Expr, z: GenId, why: &str) -> JetError {
    JetError::NotIntegrable { residual: e.clone(), reason: format!("{why} (integrating in {})", Expr::gen(z)) }
}

fn log_error(e: &Expr, z: GenId) -> JetError {
    unsupported(e, z, "antiderivative is not rational (logarithmic term)")
}

/// `∫ e dz` with all other generators held fixed, within the rational class
/// extended by powers of a factor linear in `z`, exponentials of multiples of
/// `z`, and formal functions of `z` itself.
pub fn integrate_plain(e: &Expr, z: GenId) -> Result<Expr, JetError> {
    if e.is_zero() {
        return Ok(Expr::zero());
    }
    let raw = e.to_raw();
    let mut groups: FxHashMap<Group, Vec<(Mono, Q)>> = FxHashMap::default();
    for (m, c) in raw.terms() {
        let deps: Vec<(GenId, Exp)> = m.iter().filter(|(g, _)| *g != z && g.depends_on(z)).copied().collect();
        let group = if deps.is_empty() {
            Group::Simple
        } else if deps.iter().all(|(g, x)| g.tag() == GenTag::Exp || (g.is_factor() && x.is_integer()))
            && deps.iter().any(|(g, _)| g.tag() == GenTag::Exp)
        {
            Group::Exp
        } else if deps.len() == 1 && deps[0].0.tag() == GenTag::Func && deps[0].1.is_one() {
            Group::Func(func_base(deps[0].0))
        } else if let Some(g) = func_power(&deps, m.exp_of(z)) {
            Group::FuncPower(g)
        } else if deps.len() == 1 && deps[0].0.is_factor() && factor_is_linear(deps[0].0, z) {
            Group::Linear(deps[0].0)
        } else if deps.iter().all(|(g, x)| g.is_factor() && x.is_integer()) {
            Group::Rational
        } else if deps.len() == 1 && deps[0].0.is_factor() {
            Group::Chain(deps[0].0)
        } else {
            let term = Expr::from_raw(Poly::monomial(m.clone(), c.clone()), false);
            return Err(unsupported(&term, z, "integrand outside the supported class"));
        };
        groups.entry(group).or_default().push((m.clone(), c.clone()));
    }
    let mut keys: Vec<Group> = groups.keys().copied().collect();
    keys.sort_by_key(|g| format!("{g:?}"));
    let mut parts = Vec::new();
    for key in keys {
        let terms = groups.remove(&key).unwrap();
        parts.push(match key {
            Group::Simple => integrate_simple(&terms, z, e)?,
            Group::Linear(g) => integrate_linear(&terms, g, z)?,
            Group::Rational => integrate_rational_group(terms, z)?,
            Group::Exp => integrate_exp(&terms, z)?,
            Group::Func(g) => integrate_func(&terms, g, z)?,
            Group::FuncPower(g) => integrate_func_power(&terms, g, z),
            Group::Chain(g) => integrate_chain(&terms, g, z)?,
        });
    }
    Ok(parts.into_iter().sum())
}

fn factor_is_linear(g: GenId, z: GenId) -> bool {
    let GenKind::Factor(p) = g.kind() else { return false };
    p.terms().iter().all(|(m, _)| {
        let e = m.exp_of(z);
        (e.is_zero() || e.is_one()) && m.iter().all(|(h, _)| *h == z || !h.depends_on(z))
    })
}

fn integrate_simple(terms: &[(Mono, Q)], z: GenId, whole: &Expr) -> Result<Expr, JetError> {
    let mut out: Vec<(Mono, Q)> = Vec::with_capacity(terms.len());
    for (m, c) in terms {
        let j = m.exp_of(z);
        if j == exp_int(-1) {
            return Err(log_error(whole, z));
        }
        let j1 = j + Exp::one();
        out.push((m.with_exp(z, j1), c / exp_to_q(j1)));
    }
    Ok(Expr::from_raw(Poly::from_terms(out), true))
}

/// Substitution `f = a z + b` for a factor `f` linear in `z`.
fn integrate_linear(terms: &[(Mono, Q)], g: GenId, z: GenId) -> Result<Expr, JetError> {
    let GenKind::Factor(p) = g.kind() else { unreachable!() };
    let f = Expr::from_raw(p.clone(), false);
    let a = f.diff(z)?;
    let b = f.sub(&a.mul(&Expr::gen(z)));
    let mut acc = Vec::new();
    let mut residue = Vec::new();
    for (m, c) in terms {
        let j = m.exp_of(z);
        if !j.is_integer() || j.is_negative() {
            return Err(unsupported(&f, z, "power of the variable times a radical"));
        }
        let j = j.to_integer() as u32;
        let e = m.exp_of(g);
        let rest = Expr::from_raw(Poly::monomial(m.without(z).without(g), c.clone()), false);
        // z^j = ((f - b)/a)^j = a^-j Σ C(j,i) f^i (-b)^(j-i)
        let mut binom = Q::one();
        for i in 0..=j {
            if i > 0 {
                binom = binom * Q::from_integer((j - i + 1).into()) / Q::from_integer(i.into());
            }
            let k = e + exp_int(i as i64) + Exp::one();
            let coeff = b.neg().powi((j - i) as i64)?.mul(&a.powi(-(j as i64) - 1)?).scale(&binom);
            if k.is_zero() {
                residue.push(rest.mul(&coeff));
                continue;
            }
            acc.push(rest.mul(&coeff).scale(&(Q::one() / exp_to_q(k))).mul(&Expr::gen_pow(g, k)));
        }
    }
    if !residue.into_iter().sum::<Expr>().is_zero() {
        return Err(log_error(&f, z));
    }
    Ok(acc.into_iter().sum())
}

fn integrate_rational_group(terms: Vec<(Mono, Q)>, z: GenId) -> Result<Expr, JetError> {
    let e = Expr::from_raw(Poly::from_terms(terms), true);
    let mut factors: Vec<(UPoly, u32)> = Vec::new();
    let mut zden: Vec<(GenId, u32)> = Vec::new();
    for &(g, k) in e.den().iter() {
        if g.depends_on(z) {
            zden.push((g, k));
        }
    }
    let s = e.num().terms().iter().map(|(m, _)| m.exp_of(z)).min().unwrap_or_else(Exp::zero);
    if !s.is_integer() {
        return Err(unsupported(&e, z, "fractional power of the variable over a rational function"));
    }
    let shift = if s.is_negative() { -s.to_integer() } else { 0 };
    let mut num = e.clone();
    for &(g, k) in &zden {
        num = num.mul(&Expr::gen(g).powi(k as i64)?);
        let GenKind::Factor(p) = g.kind() else { unreachable!() };
        let up = UPoly::from_expr(&Expr::from_raw(p.clone(), false), z)
            .ok_or_else(|| unsupported(&e, z, "denominator factor is not polynomial in the variable"))?;
        factors.push((up, k));
    }
    if shift > 0 {
        num = num.mul(&Expr::gen(z).powi(shift)?);
        factors.push((UPoly::from_coeffs(vec![Expr::zero(), Expr::one()]), shift as u32));
    }
    let nup = UPoly::from_expr(&num, z).ok_or_else(|| unsupported(&e, z, "numerator is not polynomial in the variable"))?;
    integrate_rational(&nup, &factors, z).map_err(|err| match err {
        ExprError::Unsupported(msg) => unsupported(&e, z, &msg),
        other => JetError::Expr(other),
    })
}

fn integrate_exp(terms: &[(Mono, Q)], z: GenId) -> Result<Expr, JetError> {
    // group by the exponential part
    let mut by_exp: FxHashMap<Mono, Vec<(Mono, Q)>> = FxHashMap::default();
    for (m, c) in terms {
        let mut ex = Mono::one();
        let mut rest = m.clone();
        for &(g, e) in m.iter() {
            if g.tag() == GenTag::Exp && g.depends_on(z) {
                ex = ex.mul(&Mono::var(g, e));
                rest = rest.without(g);
            }
        }
        by_exp.entry(ex).or_default().push((rest, c.clone()));
    }
    let mut keys: Vec<Mono> = by_exp.keys().cloned().collect();
    keys.sort();
    let mut out = Vec::new();
    for ex in keys {
        let rest = Expr::from_raw(Poly::from_terms(by_exp.remove(&ex).unwrap()), true);
        // d/dz exp-part = lambda * exp-part
        let mut lambda = Expr::zero();
        for &(g, e) in ex.iter() {
            let GenKind::Exp(arg) = g.kind() else { unreachable!() };
            let da = arg.diff(z)?;
            if da.depends_on(z) {
                return Err(unsupported(arg, z, "exponential of a nonlinear argument"));
            }
            lambda = lambda.add(&da.scale(&exp_to_q(e)));
        }
        let ee = Expr::from_raw(Poly::monomial(ex.clone(), Q::one()), false);
        if lambda.is_zero() {
            out.push(ee.mul(&integrate_plain(&rest, z)?));
            continue;
        }
        let Some(a) = UPoly::from_expr(&rest, z) else {
            out.push(ee.mul(&exp_rational(&rest, &lambda, z)?));
            continue;
        };
        // ∫ a e^(λz) = e^(λz) Σ (-1)^k a^(k) / λ^(k+1)
        let inv = lambda.inv()?;
        let mut sum = Expr::zero();
        let mut d = a;
        let mut pw = inv.clone();
        let mut sign = 1i64;
        while !d.is_zero() {
            sum = sum.add(&d.to_expr(z).mul(&pw).scale(&Q::from_integer(sign.into())));
            d = d.derivative();
            pw = pw.mul(&inv);
            sign = -sign;
        }
        out.push(ee.mul(&sum));
    }
    Ok(out.into_iter().sum())
}

/// Rational `S` with `S' + λS = R`, so that `∫ e^(λz) R = e^(λz) S`.
fn exp_rational(r: &Expr, lambda: &Expr, z: GenId) -> Result<Expr, JetError> {
    let fail = || unsupported(r, z, "exponential times a rational function without rational antiderivative");
    let mut num = r.clone();
    let mut fs: Vec<(UPoly, u32)> = Vec::new();
    for &(g, k) in r.den().iter() {
        if !g.depends_on(z) {
            continue;
        }
        let GenKind::Factor(p) = g.kind() else { return Err(fail()) };
        let up = UPoly::from_expr(&Expr::from_raw(p.clone(), false), z).ok_or_else(fail)?;
        num = num.mul(&Expr::gen(g).powi(k as i64)?);
        fs.push((up, k));
    }
    let n = UPoly::from_expr(&num, z).ok_or_else(fail)?;
    let one = UPoly::constant(Expr::one());
    let p = fs.iter().fold(one.clone(), |acc, (f, _)| acc.mul(f));
    let mut t = UPoly::zero();
    for (i, (f, k)) in fs.iter().enumerate() {
        let others = fs.iter().enumerate().filter(|(j, _)| *j != i).fold(one.clone(), |acc, (_, (g, _))| acc.mul(g));
        let kk = Expr::int(*k as i64 - 1);
        t = t.add(&f.derivative().mul(&others).scale(&kk));
    }
    // λPM + PM' − TM = N, solved from the top coefficient down
    let lead = lambda.mul(p.coeffs.last().ok_or_else(fail)?);
    let op = |m: &UPoly| p.mul(m).scale(lambda).add(&p.mul(&m.derivative())).sub(&t.mul(m));
    let dp = p.degree();
    let mut resid = n;
    let mut m = UPoly::zero();
    while resid.degree() >= dp {
        let d = (resid.degree() - dp) as usize;
        let mut cs = vec![Expr::zero(); d + 1];
        cs[d] = resid.coeffs.last().unwrap().div(&lead)?;
        let step = UPoly::from_coeffs(cs);
        resid = resid.sub(&op(&step));
        m = m.add(&step);
    }
    if !resid.is_zero() {
        return Err(fail());
    }
    let mut s = m.to_expr(z);
    for (f, k) in &fs {
        s = s.div(&f.to_expr(z).powi(*k as i64 - 1)?)?;
    }
    Ok(s)
}

fn func_base(g: GenId) -> GenId {
    let GenKind::Func { name, arg, .. } = g.kind() else { unreachable!() };
    crate::expr::gen::intern(GenKind::Func { name: name.clone(), order: 0, arg: arg.clone() })
}

/// `Σ c z^j f^(k)(z)` over all derivatives of one formal function, by parts
/// from the highest derivative down so that the `∫ f` pieces can cancel.
fn integrate_func(terms: &[(Mono, Q)], base: GenId, z: GenId) -> Result<Expr, JetError> {
    let GenKind::Func { name, arg, .. } = base.kind() else { unreachable!() };
    if *arg != Expr::gen(z) {
        return Err(unsupported(&Expr::gen(base), z, "formal function of a composite argument"));
    }
    let mut pending: std::collections::BTreeMap<(u32, u32), Expr> = Default::default();
    for (m, c) in terms {
        let (g, _) = *m.iter().find(|(h, _)| h.tag() == GenTag::Func && h.depends_on(z)).expect("grouped by function");
        let GenKind::Func { order, .. } = g.kind() else { unreachable!() };
        let j = m.exp_of(z);
        if !j.is_integer() || j.is_negative() {
            return Err(unsupported(&Expr::gen(g), z, "formal function times a non-polynomial"));
        }
        let rest = Expr::from_raw(Poly::monomial(m.without(z).without(g), c.clone()), false);
        let slot = pending.entry((*order, j.to_integer() as u32)).or_insert_with(Expr::zero);
        *slot = slot.add(&rest);
    }
    let mut out = Expr::zero();
    while let Some(((k, j), c)) = pending.pop_last() {
        if c.is_zero() {
            continue;
        }
        if k == 0 {
            let f = Expr::func(name, 0, Expr::gen(z))?;
            return Err(unsupported(&f, z, "antiderivative of a formal function"));
        }
        // ∫ z^j f^(k) = z^j f^(k-1) - j ∫ z^(j-1) f^(k-1)
        out = out.add(&c.mul(&Expr::gen(z).powi(j as i64)?).mul(&Expr::func(name, k - 1, Expr::gen(z))?));
        if j > 0 {
            let slot = pending.entry((k - 1, j - 1)).or_insert_with(Expr::zero);
            *slot = slot.sub(&c.scale(&Q::from_integer(j.into())));
        }
    }
    Ok(out)
}

/// Matches `f^(k)^p f^(k+1)` with `p ≠ −1` and no bare power of the variable.
fn func_power(deps: &[(GenId, Exp)], zexp: Exp) -> Option<GenId> {
    if deps.len() != 2 || !zexp.is_zero() {
        return None;
    }
    let order = |g: GenId| match g.kind() {
        GenKind::Func { name, order, arg } => Some((name.clone(), *order, arg.clone())),
        _ => None,
    };
    let (a, b) = (order(deps[0].0)?, order(deps[1].0)?);
    let pick = |lo: usize, hi: usize| {
        let (l, h) = (if lo == 0 { &a } else { &b }, if hi == 0 { &a } else { &b });
        (l.0 == h.0 && l.2 == h.2 && h.1 == l.1 + 1 && deps[hi].1.is_one() && deps[lo].1 != exp_int(-1))
            .then_some(deps[lo].0)
    };
    pick(0, 1).or_else(|| pick(1, 0))
}

fn integrate_func_power(terms: &[(Mono, Q)], g: GenId, z: GenId) -> Expr {
    let mut out = Vec::new();
    for (m, c) in terms {
        let p = m.exp_of(g);
        let hi = m.iter().find(|(h, _)| *h != g && h.depends_on(z)).map(|(h, _)| *h).expect("matched pair");
        let rest = m.without(hi).with_exp(g, p + Exp::one());
        out.push((rest, c / exp_to_q(p + Exp::one())));
    }
    Expr::from_raw(Poly::from_terms(out), true)
}

/// `∫ z^j f^e dz` where `z^j / f'` is a polynomial in `f` with coefficients
/// free of `z`.
fn integrate_chain(terms: &[(Mono, Q)], g: GenId, z: GenId) -> Result<Expr, JetError> {
    let GenKind::Factor(p) = g.kind() else { unreachable!() };
    let f = Expr::from_raw(p.clone(), false);
    let fu = UPoly::from_expr(&f, z).ok_or_else(|| unsupported(&f, z, "radicand is not polynomial in the variable"))?;
    let df = f.diff(z)?;
    let mut out = Vec::new();
    for (m, c) in terms {
        let e = m.exp_of(g);
        let rest = Expr::from_raw(Poly::monomial(m.without(g), c.clone()), false);
        let whole = rest.mul(&Expr::gen_pow(g, e));
        let q = rest.div(&df)?;
        let mut qu = UPoly::from_expr(&q, z)
            .ok_or_else(|| unsupported(&whole, z, "cofactor is not a multiple of the radicand's derivative"))?;
        let mut i = 0i64;
        while !qu.is_zero() {
            let (quo, r) = qu.divrem(&fu)?;
            let a = r.to_expr(z);
            if a.depends_on(z) {
                return Err(unsupported(&whole, z, "cofactor is not a polynomial in the radicand"));
            }
            let k = e + exp_int(i) + Exp::one();
            if k.is_zero() {
                return Err(log_error(&whole, z));
            }
            out.push(a.scale(&(Q::one() / exp_to_q(k))).mul(&Expr::gen_pow(g, k)));
            qu = quo;
            i += 1;
        }
    }
    Ok(out.into_iter().sum())
}
