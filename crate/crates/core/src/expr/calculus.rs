//! Derivations and substitution.

use std::sync::Arc;

use num_traits::{One, Zero};
use rustc_hash::FxHashMap;

use super::gen::{self, GenId, GenKind, GenTag};
use super::poly::{Mono, Poly};
use super::scalar::{exp_to_q, Exp, Q};
use super::{Expr, ExprError};

/// Applies the derivation whose value on each generator is given by `dg`
/// (`None` meaning zero). Values on functions, exponentials and factors are
/// derived from their contents by the chain rule when `dg` returns `None`
/// for them and they depend on something with a nonzero derivative.
pub(crate) struct Derivation<'a> {
    base: &'a dyn Fn(GenId) -> Result<Option<Expr>, ExprError>,
    memo: FxHashMap<GenId, Option<Poly>>,
}

impl<'a> Derivation<'a> {
    pub(crate) fn new(base: &'a dyn Fn(GenId) -> Result<Option<Expr>, ExprError>) -> Self {
        Derivation { base, memo: FxHashMap::default() }
    }

    fn gen_derivative(&mut self, g: GenId) -> Result<Option<Poly>, ExprError> {
        if let Some(v) = self.memo.get(&g) {
            return Ok(v.clone());
        }
        let v = match g.tag() {
            GenTag::X | GenTag::Jet | GenTag::Param => (self.base)(g)?,
            GenTag::Surd => None,
            GenTag::Func => {
                let GenKind::Func { name, order, arg } = g.kind() else { unreachable!() };
                let da = self.apply(arg)?;
                if da.is_zero() {
                    None
                } else {
                    let next = Expr::gen(gen::intern(GenKind::Func { name: name.clone(), order: order + 1, arg: arg.clone() }));
                    Some(next.mul(&da))
                }
            }
            GenTag::Exp => {
                let GenKind::Exp(arg) = g.kind() else { unreachable!() };
                let da = self.apply(arg)?;
                if da.is_zero() {
                    None
                } else {
                    Some(Expr::gen(g).mul(&da))
                }
            }
            GenTag::Factor => {
                let p = super::factor_poly(g);
                let d = self.apply_raw(p)?;
                (!d.is_zero()).then(|| Expr::from_raw(d, false))
            }
        };
        let raw = v.map(|e| e.to_raw());
        self.memo.insert(g, raw.clone());
        Ok(raw)
    }

    fn apply_raw(&mut self, p: &Poly) -> Result<Poly, ExprError> {
        let mut acc: FxHashMap<Mono, Q> = FxHashMap::default();
        for (m, c) in p.terms() {
            for &(g, e) in m.iter() {
                let Some(dg) = self.gen_derivative(g)? else { continue };
                let rest = m.with_exp(g, e - Exp::one());
                let k = c * exp_to_q(e);
                for (dm, dc) in dg.terms() {
                    let mm = rest.mul(dm);
                    let v = &k * dc;
                    match acc.get_mut(&mm) {
                        Some(x) => *x += v,
                        None => {
                            acc.insert(mm, v);
                        }
                    }
                }
            }
        }
        Ok(Poly::from_map(acc))
    }

    pub(crate) fn apply(&mut self, e: &Expr) -> Result<Expr, ExprError> {
        let raw = self.apply_raw(&e.to_raw())?;
        Ok(Expr::from_raw(raw, true))
    }
}

/// A formal function given by a body in a placeholder variable.
#[derive(Clone, Debug)]
pub struct FuncDef {
    pub var: GenId,
    pub body: Expr,
}

/// Simultaneous substitution of generators and formal functions.
#[derive(Clone, Default, Debug)]
pub struct Substitution {
    pub gens: FxHashMap<GenId, Expr>,
    pub funcs: FxHashMap<Arc<str>, FuncDef>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(mut self, g: GenId, value: Expr) -> Self {
        self.gens.insert(g, value);
        self
    }

    pub fn bind_jet(self, n: u32, value: Expr) -> Self {
        self.bind(GenId::jet(n), value)
    }

    pub fn bind_param(self, name: &str, value: Expr) -> Self {
        self.bind(gen::param_id(name), value)
    }

    pub fn bind_func(mut self, name: &str, def: FuncDef) -> Self {
        self.funcs.insert(Arc::from(name), def);
        self
    }

    /// Warnings for jet bindings that are not closed under `D_x`: binding
    /// `u_n` while leaving `u_m` (m > n) untouched, or the reverse.
    pub fn jet_warnings(&self) -> Vec<String> {
        let bound: Vec<u32> = self.gens.keys().filter_map(|g| g.jet_index()).collect();
        if bound.is_empty() {
            return vec![];
        }
        let max = *bound.iter().max().unwrap();
        (0..max)
            .filter(|n| !bound.contains(n))
            .map(|n| format!("u{max} is bound but u{n} is not"))
            .collect()
    }

    fn touches(&self, g: GenId) -> bool {
        if self.gens.contains_key(&g) {
            return true;
        }
        let info = g.info();
        if let GenKind::Func { name, .. } = &info.kind {
            if self.funcs.contains_key(name) {
                return true;
            }
        }
        info.closure.iter().any(|h| {
            self.gens.contains_key(h)
                || matches!(h.kind(), GenKind::Func { name, .. } if self.funcs.contains_key(name))
        })
    }

    fn gen_value(&self, g: GenId, memo: &mut FxHashMap<GenId, Option<Expr>>) -> Result<Option<Expr>, ExprError> {
        if let Some(v) = memo.get(&g) {
            return Ok(v.clone());
        }
        let v = if let Some(v) = self.gens.get(&g) {
            Some(v.clone())
        } else if !self.touches(g) {
            None
        } else {
            Some(match g.kind() {
                GenKind::Func { name, order, arg } => {
                    let arg2 = self.apply_memo(arg, memo)?;
                    match self.funcs.get(name) {
                        Some(def) => {
                            let mut body = def.body.clone();
                            for _ in 0..*order {
                                body = body.diff(def.var)?;
                            }
                            Substitution::new().bind(def.var, arg2).apply(&body)?
                        }
                        None => Expr::func(name, *order, arg2)?,
                    }
                }
                GenKind::Exp(arg) => Expr::exp(&self.apply_memo(arg, memo)?)?,
                GenKind::Factor(p) => {
                    let e = Expr::from_raw(p.clone(), false);
                    self.apply_memo(&e, memo)?
                }
                _ => unreachable!("atoms are either bound or untouched"),
            })
        };
        memo.insert(g, v.clone());
        Ok(v)
    }

    fn apply_memo(&self, e: &Expr, memo: &mut FxHashMap<GenId, Option<Expr>>) -> Result<Expr, ExprError> {
        let raw = e.to_raw();
        let mut changed = false;
        for g in raw.gens() {
            if self.gen_value(g, memo)?.is_some() {
                changed = true;
            }
        }
        if !changed {
            return Ok(e.clone());
        }
        let mut keep: FxHashMap<Mono, Q> = FxHashMap::default();
        let mut pieces: Vec<Expr> = Vec::new();
        let mut pow_memo: FxHashMap<(GenId, Exp), Expr> = FxHashMap::default();
        for (m, c) in raw.terms() {
            let mut rest = Mono::one();
            let mut factor = Expr::one();
            let mut touched = false;
            for &(g, ex) in m.iter() {
                match memo.get(&g).cloned().flatten() {
                    Some(v) => {
                        touched = true;
                        let p = match pow_memo.get(&(g, ex)) {
                            Some(p) => p.clone(),
                            None => {
                                let p = v.pow(ex)?;
                                pow_memo.insert((g, ex), p.clone());
                                p
                            }
                        };
                        factor = factor.mul(&p);
                    }
                    None => rest = rest.mul(&Mono::var(g, ex)),
                }
            }
            if touched {
                let r = Expr::from_raw(Poly::monomial(rest, c.clone()), false);
                pieces.push(factor.mul(&r));
            } else {
                *keep.entry(m.clone()).or_insert_with(Q::zero) += c;
            }
        }
        pieces.push(Expr::from_raw(Poly::from_map(keep), false));
        Ok(pieces.into_iter().sum())
    }

    /// Simultaneous substitution followed by normalization.
    pub fn apply(&self, e: &Expr) -> Result<Expr, ExprError> {
        let mut memo = FxHashMap::default();
        self.apply_memo(e, &mut memo)
    }
}

impl Expr {
    /// Partial derivative with respect to a generator, all others held fixed.
    pub fn diff(&self, z: GenId) -> Result<Expr, ExprError> {
        if !self.depends_on(z) {
            return Ok(Expr::zero());
        }
        let base = move |g: GenId| Ok((g == z).then(Expr::one));
        let mut d = Derivation::new(&base);
        d.apply(self)
    }

    pub fn diff_jet(&self, n: u32) -> Result<Expr, ExprError> {
        self.diff(GenId::jet(n))
    }

    pub fn diff_x(&self) -> Result<Expr, ExprError> {
        self.diff(GenId::x())
    }

    pub fn substitute(&self, s: &Substitution) -> Result<Expr, ExprError> {
        s.apply(self)
    }

    /// Replaces the jet variable `u_n` by `value` everywhere.
    pub fn subs_jet(&self, n: u32, value: &Expr) -> Result<Expr, ExprError> {
        Substitution::new().bind_jet(n, value.clone()).apply(self)
    }

    pub fn subs_param(&self, name: &str, value: &Expr) -> Result<Expr, ExprError> {
        match gen::lookup(&GenKind::Param(Arc::from(name))) {
            Some(g) => Substitution::new().bind(g, value.clone()).apply(self),
            None => Ok(self.clone()),
        }
    }

    /// Coefficients of a polynomial dependence on `z`: `self = Σ c_k z^k`.
    /// Fails when `z` occurs with a non-natural exponent or inside a factor,
    /// function or exponential.
    pub fn coefficients_in(&self, z: GenId) -> Option<Vec<(Exp, Expr)>> {
        if self.den().iter().any(|(g, _)| g.depends_on(z)) {
            return None;
        }
        let mut by_exp: std::collections::BTreeMap<Exp, Vec<(Mono, Q)>> = Default::default();
        for (m, c) in self.num().terms() {
            for (g, _) in m.iter() {
                if *g != z && g.depends_on(z) {
                    return None;
                }
            }
            by_exp.entry(m.exp_of(z)).or_default().push((m.without(z), c.clone()));
        }
        let inv = self.den().inverse_mono();
        Some(
            by_exp
                .into_iter()
                .map(|(e, terms)| (e, Expr::from_raw(Poly::from_terms(terms).mul_term(&inv, &Q::one()), true)))
                .collect(),
        )
    }
}
