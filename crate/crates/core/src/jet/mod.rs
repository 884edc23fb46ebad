//! Jet-space calculus: total derivatives, the Euler operator, exactness and
//! inversion of `D_x`.

mod integrate;

use std::sync::Arc;
use std::time::Instant;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::expr::gen::{GenId, GenKind, GenTag};
use crate::expr::scalar::q_int;
use crate::expr::{equivalent, Derivation, Equivalence, Expr, ExprError, Substitution};

pub use integrate::integrate_plain;

/// Default bound on jet orders produced by total derivatives.
pub const DEFAULT_MAX_ORDER: u32 = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("not a total derivative; Euler residual {residual}")]
    NotExact { residual: Expr },
    #[error("integrand is nonlinear in the top jet variable u{order}")]
    NonlinearTop { order: u32 },
    #[error("cannot integrate {residual}: {reason}")]
    NotIntegrable { residual: Expr, reason: String },
    #[error("exactness undecided: {0}")]
    Undecided(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
}

/// Polynomial rewrite rules for a formal function `phi(x)` defined by
/// `phi'^2 = 4 phi^3 - g2 phi - g3`, hence `phi'' = 6 phi^2 - g2/2`.
#[derive(Clone, Debug)]
pub struct Weierstrass {
    pub name: Arc<str>,
    pub g2: Expr,
    pub g3: Expr,
}

impl Weierstrass {
    fn phi(&self, k: u32) -> Result<Expr, ExprError> {
        Expr::func(&self.name, k, Expr::x())
    }

    /// Cubic `4 phi^3 - g2 phi - g3`.
    fn cubic(&self) -> Result<Expr, ExprError> {
        let p = self.phi(0)?;
        Ok(p.powi(3)?.scale(&q_int(4)).sub(&self.g2.mul(&p)).sub(&self.g3))
    }

    /// Rewrites into the form polynomial in `phi` plus `phi'` times a
    /// polynomial in `phi`.
    pub fn reduce(&self, e: &Expr) -> Result<Expr, ExprError> {
        let highest = e
            .all_gens()
            .into_iter()
            .filter_map(|g| match g.kind() {
                GenKind::Func { name, order, arg } if *name == self.name && *arg == Expr::x() => Some(*order),
                _ => None,
            })
            .max();
        let Some(highest) = highest else { return Ok(e.clone()) };
        let mut out = e.clone();
        if highest >= 2 {
            // phi^(k) for k >= 2 as polynomials in phi, phi'
            let mut vals = vec![self.phi(0)?, self.phi(1)?];
            let p2 = self.phi(0)?.powi(2)?.scale(&q_int(6)).sub(&self.g2.scale(&crate::expr::scalar::q_frac(1, 2)));
            vals.push(p2);
            for k in 3..=highest as usize {
                // d/dx of a polynomial in phi, phi' with phi'' replaced
                let prev = &vals[k - 1];
                let d = prev.diff(GenId::x())?;
                let d = d.add(&prev.diff(func_gen(&self.name, 0))?.mul(&vals[1]));
                let d = d.add(&prev.diff(func_gen(&self.name, 1))?.mul(&vals[2]));
                vals.push(self.reduce_squares(&d)?);
            }
            let mut s = Substitution::new();
            for (k, v) in vals.iter().enumerate().skip(2) {
                s = s.bind(func_gen(&self.name, k as u32), v.clone());
            }
            out = s.apply(&out)?;
        }
        self.reduce_squares(&out)
    }

    fn reduce_squares(&self, e: &Expr) -> Result<Expr, ExprError> {
        let g1 = func_gen(&self.name, 1);
        if !e.depends_on(g1) {
            return Ok(e.clone());
        }
        let Some(parts) = e.coefficients_in(g1) else { return Ok(e.clone()) };
        let cubic = self.cubic()?;
        let phi1 = Expr::gen(g1);
        let mut acc = Expr::zero();
        for (k, c) in parts {
            if !k.is_integer() || k.to_integer() < 0 {
                acc = acc.add(&c.mul(&phi1.pow(k)?));
                continue;
            }
            let k = k.to_integer();
            acc = acc.add(&c.mul(&cubic.powi(k / 2)?).mul(&phi1.powi(k % 2)?));
        }
        Ok(acc)
    }
}

fn func_gen(name: &str, order: u32) -> GenId {
    crate::expr::gen::intern(GenKind::Func { name: Arc::from(name), order, arg: Expr::x() })
}

/// Default bound on expression size (numerator terms plus denominator factors).
pub const DEFAULT_NODE_BUDGET: usize = 2_000_000;

#[derive(Clone, Debug)]
pub struct Limits {
    pub node_budget: usize,
    pub deadline: Option<Instant>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { node_budget: DEFAULT_NODE_BUDGET, deadline: None }
    }
}

/// Settings shared by the jet calculus.
#[derive(Clone, Debug)]
pub struct JetContext {
    pub max_order: u32,
    pub reduction: Option<Weierstrass>,
    pub limits: Limits,
}

impl Default for JetContext {
    fn default() -> Self {
        JetContext { max_order: DEFAULT_MAX_ORDER, reduction: None, limits: Limits::default() }
    }
}

impl JetContext {
    /// Fails when `e` exceeds the node budget or the deadline has passed.
    pub fn check(&self, e: &Expr) -> Result<(), JetError> {
        if e.size() > self.limits.node_budget {
            return Err(JetError::Resource(format!(
                "expression with {} nodes exceeds the budget of {}",
                e.size(),
                self.limits.node_budget
            )));
        }
        if self.limits.deadline.is_some_and(|d| Instant::now() > d) {
            return Err(JetError::Resource("wall-clock budget exhausted".into()));
        }
        Ok(())
    }

    pub fn normalize(&self, e: Expr) -> Result<Expr, ExprError> {
        match &self.reduction {
            Some(r) => r.reduce(&e),
            None => Ok(e),
        }
    }

    /// Total derivative `D_x`.
    pub fn total_x(&self, e: &Expr) -> Result<Expr, ExprError> {
        let bound = self.max_order;
        let base = move |g: GenId| -> Result<Option<Expr>, ExprError> {
            Ok(match g.tag() {
                GenTag::X => Some(Expr::one()),
                GenTag::Jet => {
                    let n = g.jet_index().unwrap() + 1;
                    if n > bound {
                        return Err(ExprError::JetOrder { order: n, bound });
                    }
                    Some(Expr::jet(n))
                }
                _ => None,
            })
        };
        let mut d = Derivation::new(&base);
        let r = d.apply(e)?;
        self.normalize(r)
    }

    pub fn total_x_n(&self, e: &Expr, n: u32) -> Result<Expr, ExprError> {
        let mut r = e.clone();
        for _ in 0..n {
            r = self.total_x(&r)?;
        }
        Ok(r)
    }

    /// `D_t rho = Σ ∂rho/∂u_i · D_x^i F`, with `flow_derivs[i] = D_x^i F`
    /// extended on demand.
    pub fn total_t(&self, rho: &Expr, flow_derivs: &mut Vec<Expr>) -> Result<Expr, ExprError> {
        let Some(m) = rho.jet_order() else { return Ok(Expr::zero()) };
        while flow_derivs.len() <= m as usize {
            let next = self.total_x(flow_derivs.last().expect("flow_derivs must start with F"))?;
            flow_derivs.push(next);
        }
        let mut terms = Vec::new();
        for i in 0..=m {
            let d = rho.diff_jet(i)?;
            if !d.is_zero() {
                terms.push(d.mul(&flow_derivs[i as usize]));
            }
        }
        self.normalize(terms.into_iter().sum())
    }

    /// Euler operator `Σ (-D_x)^k ∂/∂u_k`, evaluated in Horner form.
    pub fn variational_derivative(&self, h: &Expr) -> Result<Expr, ExprError> {
        let Some(m) = h.jet_order() else { return Ok(Expr::zero()) };
        let mut acc = h.diff_jet(m)?;
        for k in (0..m).rev() {
            acc = h.diff_jet(k)?.sub(&self.total_x(&acc)?);
        }
        self.normalize(acc)
    }

    /// `θ` with `D_x θ = t`, without additive constant.
    pub fn integrate_total(&self, t: &Expr) -> Result<Expr, JetError> {
        let mut theta = Expr::zero();
        let mut rest = self.normalize(t.clone())?;
        loop {
            self.check(&rest)?;
            if rest.is_zero() {
                return Ok(strip_constants(&theta));
            }
            match rest.jet_order() {
                None => {
                    theta = theta.add(&self.integrate_x(&rest)?);
                    return Ok(strip_constants(&theta));
                }
                Some(0) => return Err(JetError::NotExact { residual: self.variational_derivative(&rest)? }),
                Some(m) => {
                    let top = GenId::jet(m);
                    let a = rest.diff(top)?;
                    if a.depends_on(top) {
                        return Err(JetError::NonlinearTop { order: m });
                    }
                    let phi = integrate_plain(&a, GenId::jet(m - 1))?;
                    let next = rest.sub(&self.total_x(&phi)?);
                    if next.jet_order().is_some_and(|k| k >= m) {
                        return Err(JetError::NotExact { residual: self.variational_derivative(&next)? });
                    }
                    theta = theta.add(&phi);
                    rest = next;
                }
            }
        }
    }

    /// Antiderivative in `x` of a jet-free expression.
    fn integrate_x(&self, t: &Expr) -> Result<Expr, JetError> {
        if let Some(w) = &self.reduction {
            if t.all_gens().iter().any(|g| matches!(g.kind(), GenKind::Func { name, .. } if *name == w.name)) {
                return self.integrate_weierstrass(w, t);
            }
        }
        integrate_plain(t, GenId::x())
    }

    /// `∫ (a(phi) + b(phi) phi') dx` for polynomials `a`, `b` in `phi` whose
    /// coefficients are free of `x`: `b` integrates directly, and `a` must be
    /// `D_x(c(phi) phi')` for a polynomial `c`.
    fn integrate_weierstrass(&self, w: &Weierstrass, t: &Expr) -> Result<Expr, JetError> {
        let g0 = func_gen(&w.name, 0);
        let g1 = func_gen(&w.name, 1);
        let fail = |why: &str| JetError::NotIntegrable { residual: t.clone(), reason: why.to_string() };
        let parts = t.coefficients_in(g1).ok_or_else(|| fail("not polynomial in phi'"))?;
        let mut a = Expr::zero();
        let mut result = Expr::zero();
        for (k, c) in parts {
            if c.gens().contains(&GenId::x()) {
                return Err(fail("explicit x alongside the Weierstrass function"));
            }
            if k.is_zero() {
                a = c;
            } else if k.is_one() {
                result = result.add(&integrate_plain(&c, g0)?);
            } else {
                return Err(fail("phi' occurs with an unreduced power"));
            }
        }
        if !a.is_zero() {
            let au = crate::expr::upoly::UPoly::from_expr(&a, g0).ok_or_else(|| fail("not polynomial in phi"))?;
            let deg = au.degree();
            if deg < 2 {
                return Err(fail("no polynomial antiderivative"));
            }
            // D_x(c phi') = c'(phi) (4 phi^3 - g2 phi - g3) + c(phi) (6 phi^2 - g2/2)
            let mut rem = a.clone();
            let mut c_total = Expr::zero();
            let phi = Expr::gen(g0);
            for j in (0..=(deg - 2) as i64).rev() {
                let ru = crate::expr::upoly::UPoly::from_expr(&rem, g0).ok_or_else(|| fail("not polynomial in phi"))?;
                let lead = ru.coeffs.get((j + 2) as usize).cloned().unwrap_or_else(Expr::zero);
                if lead.is_zero() {
                    continue;
                }
                // D_x(phi^j phi') has leading term (4j + 6) phi^(j+2)
                let k = lead.scale(&crate::expr::scalar::q_frac(1, 4 * j + 6));
                let piece = phi.powi(j)?.mul(&k);
                let dpiece = self.total_x(&piece.mul(&Expr::gen(g1)))?;
                rem = rem.sub(&dpiece);
                c_total = c_total.add(&piece);
            }
            if !rem.is_zero() {
                return Err(fail("pure-x residual is not a total derivative in the Weierstrass class"));
            }
            result = result.add(&c_total.mul(&Expr::gen(g1)));
        }
        Ok(result)
    }

    /// Exactness test with witness.
    pub fn is_exact(&self, t: &Expr) -> Result<ExactnessReport, JetError> {
        match self.integrate_total(t) {
            Ok(theta) => {
                let check = self.total_x(&theta)?.sub(&self.normalize(t.clone())?);
                if !check.is_zero() {
                    return Err(JetError::Undecided(format!("integration round trip left {check}")));
                }
                Ok(ExactnessReport { exact: true, residual: Expr::zero(), witness: Some(theta) })
            }
            Err(e @ (JetError::Expr(_) | JetError::Resource(_))) => Err(e),
            Err(other) => {
                let residual = self.variational_derivative(t)?;
                if residual.is_zero() {
                    return match other {
                        JetError::NotIntegrable { .. } => {
                            Ok(ExactnessReport { exact: true, residual, witness: None })
                        }
                        e => Err(JetError::Undecided(format!("Euler residual vanishes but integration failed: {e}"))),
                    };
                }
                match equivalent(&residual, &Expr::zero()) {
                    Equivalence::Different { .. } => Ok(ExactnessReport { exact: false, residual, witness: None }),
                    Equivalence::Equal => Ok(ExactnessReport { exact: true, residual: Expr::zero(), witness: None }),
                    Equivalence::Unknown { reason } => Err(JetError::Undecided(reason)),
                }
            }
        }
    }
}

/// Outcome of an exactness test.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactnessReport {
    pub exact: bool,
    /// Euler-operator image; zero when exact.
    pub residual: Expr,
    /// `θ` with `D_x θ` equal to the input, when found.
    pub witness: Option<Expr>,
}

/// Drops terms free of `x` and jet variables.
pub fn strip_constants(e: &Expr) -> Expr {
    if !e.den().is_one() {
        // a constant part cannot be separated from a shared denominator
        return e.clone();
    }
    let keep: Vec<_> = e
        .num()
        .terms()
        .iter()
        .filter(|(m, _)| m.iter().any(|(g, _)| g.info().has_x || g.info().jet_order.is_some()))
        .cloned()
        .collect();
    Expr::from_raw(crate::expr::Poly::from_terms(keep), false)
}

/// Largest jet order, `None` standing for the "no jet variable" sentinel.
pub fn order(e: &Expr) -> Option<u32> {
    e.jet_order()
}

pub fn total_x(e: &Expr) -> Result<Expr, ExprError> {
    JetContext::default().total_x(e)
}

pub fn total_t(rho: &Expr, flow: &Expr) -> Result<Expr, ExprError> {
    JetContext::default().total_t(rho, &mut vec![flow.clone()])
}

pub fn variational_derivative(h: &Expr) -> Result<Expr, ExprError> {
    JetContext::default().variational_derivative(h)
}

pub fn integrate_total(t: &Expr) -> Result<Expr, JetError> {
    JetContext::default().integrate_total(t)
}

pub fn is_exact(t: &Expr) -> Result<ExactnessReport, JetError> {
    JetContext::default().is_exact(t)
}

#[cfg(test)]
mod tests;
