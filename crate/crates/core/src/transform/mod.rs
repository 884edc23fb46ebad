//! Canonical point transformations, the admissible special transformations,
//! and the reciprocal, potential and hodograph changes of variables.
//!
//! New variables `(y, v)` reuse the generators of `(x, u)`: after a
//! transformation `x` stands for `y` and `u_k` for `v_k`.

mod trail;

use thiserror::Error;

use crate::densities::{DensityError, FlowEquation};
use crate::expr::scalar::q_frac;
use crate::expr::{equivalent, Equivalence, Expr, ExprError, GenId, GenTag, Substitution};
use crate::hamiltonian::{Hamiltonian, HamiltonianError};
use crate::jet::{JetContext, JetError};

pub use trail::{TrailStep, TransformTrail};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error("transformation is not canonical: Delta = {0}")]
    NotCanonical(Expr),
    #[error("D_y(phi) vanishes identically")]
    DegenerateFrame,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("({rho}, {theta}) is not a conservation law of the flow")]
    NotConserved { rho: Expr, theta: Expr },
    #[error("trail parse error: {0}")]
    Trail(String),
}

/// `x = φ(y, v)`, `u = ψ(y, v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointTransform {
    pub phi: Expr,
    pub psi: Expr,
    /// `ψ_v φ_y − φ_v ψ_y`.
    pub delta: Expr,
}

impl PointTransform {
    pub fn new(phi: Expr, psi: Expr) -> Result<Self, TransformError> {
        for e in [&phi, &psi] {
            if e.jet_order().is_some_and(|k| k > 0) {
                return Err(TransformError::Precondition(format!("{e} depends on derivatives of v")));
            }
        }
        let x = GenId::x();
        let v = GenId::jet(0);
        let delta = psi.diff(v)?.mul(&phi.diff(x)?).sub(&phi.diff(v)?.mul(&psi.diff(x)?));
        Ok(PointTransform { phi, psi, delta })
    }

    pub fn identity() -> Self {
        PointTransform::new(Expr::x(), Expr::u()).expect("identity is a point transform")
    }

    pub fn is_canonical(&self) -> Equivalence {
        equivalent(&self.delta, &Expr::one())
    }

    fn require_canonical(&self) -> Result<(), TransformError> {
        if self.is_canonical().is_equal() {
            Ok(())
        } else {
            Err(TransformError::NotCanonical(self.delta.clone()))
        }
    }

    /// Applies `self` first, then `next` in the new variables.
    pub fn then(&self, next: &PointTransform) -> Result<PointTransform, TransformError> {
        let s = Substitution::new().bind(GenId::x(), next.phi.clone()).bind(GenId::jet(0), next.psi.clone());
        PointTransform::new(s.apply(&self.phi)?, s.apply(&self.psi)?)
    }

    /// `x = f(y)`, `u = v/f'(y) + g(y)`.
    pub fn linear(f: &Expr, g: &Expr) -> Result<Self, TransformError> {
        let fp = f.diff(GenId::x())?;
        PointTransform::new(f.clone(), Expr::u().div(&fp)?.add(g))
    }

    /// `x = f(v) + y`, `u = v`.
    pub fn remark1_shift(f: &Expr) -> Result<Self, TransformError> {
        PointTransform::new(f.add(&Expr::x()), Expr::u())
    }

    /// `x = β y`, `u = v/β`.
    pub fn scaling(beta: &Expr) -> Result<Self, TransformError> {
        PointTransform::new(Expr::x().mul(beta), Expr::u().div(beta)?)
    }

    /// `u = v + c`.
    pub fn translation(c: &Expr) -> Result<Self, TransformError> {
        PointTransform::new(Expr::x(), Expr::u().add(c))
    }

    fn dy_phi(&self, ctx: &JetContext) -> Result<Expr, TransformError> {
        let d = ctx.total_x(&self.phi)?;
        if d.is_zero() {
            return Err(TransformError::DegenerateFrame);
        }
        Ok(d)
    }
}

/// `H̃ = H(φ, ψ, D_yψ/D_yφ)·D_yφ`.
pub fn transform_hamiltonian(h: &Hamiltonian, t: &PointTransform) -> Result<Hamiltonian, TransformError> {
    t.require_canonical()?;
    let ctx = JetContext::default();
    let dphi = t.dy_phi(&ctx)?;
    let slope = ctx.total_x(&t.psi)?.div(&dphi)?;
    let s = Substitution::new().bind(GenId::x(), t.phi.clone()).bind_jet(0, t.psi.clone()).bind_jet(1, slope);
    let ht = s.apply(&h.h)?.mul(&dphi);
    Ok(Hamiltonian::labelled(ht, &h.label)?)
}

/// Jet substitution `u_k ↦ (D_y/D_yφ)^k ψ` and `x ↦ φ`, up to order `n`.
fn frame_substitution(t: &PointTransform, ctx: &JetContext, n: u32) -> Result<Substitution, TransformError> {
    let dphi = t.dy_phi(ctx)?;
    let inv = dphi.inv()?;
    let mut s = Substitution::new().bind(GenId::x(), t.phi.clone()).bind_jet(0, t.psi.clone());
    let mut prev = t.psi.clone();
    for k in 1..=n {
        prev = inv.mul(&ctx.total_x(&prev)?);
        s = s.bind_jet(k, prev.clone());
    }
    Ok(s)
}

/// Direct chain-rule pushforward: `v_t = F̃·D_yφ/Δ`.
pub fn push_flow(f: &FlowEquation, t: &PointTransform) -> Result<FlowEquation, TransformError> {
    t.require_canonical()?;
    let ctx = f.ctx.clone();
    let s = frame_substitution(t, &ctx, 3)?;
    let g = s.apply(f.rhs())?.mul(&t.dy_phi(&ctx)?).div(&t.delta)?;
    Ok(FlowEquation::with_context(g, ctx)?)
}

/// The admissible transformations that are not point transformations.
#[derive(Clone, Debug, PartialEq)]
pub enum Special {
    /// `t = α t̃`, `x = β y`, `u = γ v`.
    Dilatation { alpha: Expr, beta: Expr, gamma: Expr },
    /// `y = x + ct`.
    Galilean { c: Expr },
    /// `u → u + ct` for `H = cxu + h(u1)`.
    ShiftCt { c: Expr },
}

fn is_x_free(e: &Expr) -> bool {
    !e.all_gens().iter().any(|g| g.tag() == GenTag::X)
}

pub fn special(kind: &Special, h: &Hamiltonian) -> Result<Hamiltonian, TransformError> {
    let u = Expr::u();
    let ht = match kind {
        Special::Dilatation { alpha, beta, gamma } => {
            let s = Substitution::new()
                .bind(GenId::x(), Expr::x().mul(beta))
                .bind_jet(0, u.mul(gamma))
                .bind_jet(1, Expr::jet(1).mul(gamma).div(beta)?);
            let k = alpha.div(&beta.mul(&gamma.powi(2)?))?;
            s.apply(&h.h)?.mul(&k)
        }
        Special::Galilean { c } => {
            // up to D_x f(x, u) + λu, i.e. the flow has no explicit x
            if !is_x_free(&crate::jet::variational_derivative(&h.h)?) {
                return Err(TransformError::Precondition("Galilean transformation needs an x-free Hamiltonian".into()));
            }
            h.h.sub(&c.mul(&u.powi(2)?).scale(&q_frac(1, 2)))
        }
        Special::ShiftCt { c } => {
            let rest = h.h.sub(&c.mul(&Expr::x()).mul(&u));
            let e = crate::jet::variational_derivative(&rest)?;
            if !is_x_free(&e) || e.depends_on(GenId::jet(0)) {
                return Err(TransformError::Precondition(format!("H is not of the form {c}*x*u + h(u1)")));
            }
            rest
        }
    };
    Ok(Hamiltonian::labelled(ht, &h.label)?)
}

/// Flow-level counterpart of [`special`].
pub fn special_flow(kind: &Special, f: &FlowEquation) -> Result<FlowEquation, TransformError> {
    let ctx = f.ctx.clone();
    let g = match kind {
        Special::Dilatation { alpha, beta, gamma } => {
            let mut s = Substitution::new().bind(GenId::x(), Expr::x().mul(beta)).bind_jet(0, Expr::u().mul(gamma));
            for k in 1..=3 {
                s = s.bind_jet(k, Expr::jet(k).mul(gamma).div(&beta.powi(k as i64)?)?);
            }
            s.apply(f.rhs())?.mul(&alpha.div(gamma)?)
        }
        Special::Galilean { c } => galilean_flow(f.rhs(), c),
        Special::ShiftCt { c } => f.rhs().sub(c),
    };
    Ok(FlowEquation::with_context(g, ctx)?)
}

/// `y = x + ct`: `F ↦ F − c·u1`.
pub fn galilean_flow(f: &Expr, c: &Expr) -> Expr {
    f.sub(&c.mul(&Expr::jet(1)))
}

/// The `c` with `galilean_flow(f, c) = target`, if one exists.
pub fn galilean_search(f: &Expr, target: &Expr) -> Option<Expr> {
    let d = f.sub(target);
    let c = d.div(&Expr::jet(1)).ok()?;
    c.is_parametric_constant().then_some(c)
}

/// Reciprocal transformation `dy = ρ dx + θ dt`, `v(t, y) = u(t, x)`.
pub fn reciprocal(f: &FlowEquation, rho: &Expr, theta: &Expr) -> Result<FlowEquation, TransformError> {
    if rho.jet_order().is_some_and(|k| k > 0) || !is_x_free(rho) {
        return Err(TransformError::Precondition("the density must depend on u only".into()));
    }
    if !is_x_free(f.rhs()) {
        return Err(TransformError::Precondition("the flow depends on x explicitly".into()));
    }
    let ctx = f.ctx.clone();
    let dt = ctx.total_t(rho, &mut vec![f.rhs().clone()])?;
    if !ctx.total_x(theta)?.sub(&dt).is_zero() && !equivalent(&ctx.total_x(theta)?, &dt).is_equal() {
        return Err(TransformError::NotConserved { rho: rho.clone(), theta: theta.clone() });
    }
    let order = theta.jet_order().unwrap_or(0).max(3);
    let mut s = Substitution::new();
    let mut prev = Expr::u();
    for k in 1..=order {
        prev = rho.mul(&ctx.total_x(&prev)?);
        s = s.bind_jet(k, prev.clone());
    }
    let g = s.apply(f.rhs())?.sub(&s.apply(theta)?.mul(&Expr::jet(1)));
    Ok(FlowEquation::with_context(g, ctx)?)
}

/// The flux `θ` with `D_t ρ = D_x θ`, free of additive constants.
pub fn conserved_flux(f: &FlowEquation, rho: &Expr) -> Result<Expr, TransformError> {
    let ctx = &f.ctx;
    let dt = ctx.total_t(rho, &mut vec![f.rhs().clone()])?;
    Ok(crate::jet::strip_constants(&ctx.integrate_total(&dt)?))
}

/// `v = f(w)`: `w_t = F(f, D f, D²f, D³f)/f'(w)`.
pub fn point_substitute(flow: &FlowEquation, f: &Expr) -> Result<FlowEquation, TransformError> {
    if f.jet_order().is_some_and(|k| k > 0) {
        return Err(TransformError::Precondition("v = f(w) must not involve derivatives".into()));
    }
    let ctx = flow.ctx.clone();
    let fp = f.diff_jet(0)?;
    if fp.is_zero() {
        return Err(TransformError::Precondition("f'(w) vanishes".into()));
    }
    let mut s = Substitution::new().bind_jet(0, f.clone());
    let mut prev = f.clone();
    for k in 1..=3 {
        prev = ctx.total_x(&prev)?;
        s = s.bind_jet(k, prev.clone());
    }
    let g = s.apply(flow.rhs())?.div(&fp)?;
    Ok(FlowEquation::with_context(g, ctx)?)
}

/// `u → u_x`: `u_t = Φ(x, u_1, u_2, …)` where `F = D_x Φ`.
pub fn potential_form(flow: &FlowEquation) -> Result<FlowEquation, TransformError> {
    let ctx = flow.ctx.clone();
    let phi = ctx.integrate_total(flow.rhs())?;
    let top = phi.jet_order().unwrap_or(0);
    let mut s = Substitution::new();
    for k in 0..=top {
        s = s.bind_jet(k, Expr::jet(k + 1));
    }
    Ok(FlowEquation::with_context(s.apply(&phi)?, ctx)?)
}

/// `y = u(t, x)`, `v(t, y) = x`: `v_t = −v_y·F̃` with `u_x = 1/v_y`.
pub fn hodograph(flow: &FlowEquation) -> Result<FlowEquation, TransformError> {
    let ctx = flow.ctx.clone();
    let inv = Expr::jet(1).inv()?;
    let mut s = Substitution::new().bind(GenId::x(), Expr::u()).bind_jet(0, Expr::x());
    let mut prev = inv.clone();
    s = s.bind_jet(1, prev.clone());
    for k in 2..=3 {
        prev = inv.mul(&ctx.total_x(&prev)?);
        s = s.bind_jet(k, prev.clone());
    }
    let g = s.apply(flow.rhs())?.mul(&Expr::jet(1)).neg();
    Ok(FlowEquation::with_context(g, ctx)?)
}

#[cfg(test)]
mod tests;
