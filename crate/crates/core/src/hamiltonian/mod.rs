//! Hamiltonians `H(x, u, u1)`, their flows `u_t = D_x(δH/δu)`, and the
//! catalog of integrable canonical forms.

mod catalog;

use thiserror::Error;

use crate::densities::{DensityError, FlowEquation};
use crate::expr::scalar::q_frac;
use crate::expr::{equivalent, Equivalence, Expr, ExprError, GenKind};
use crate::jet::JetContext;

pub use catalog::{catalog_get, catalog_ids, catalog_verify, CatalogEntry, CatalogReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error("Hamiltonian must depend on x, u, u1 only; found order {0}")]
    Order(u32),
    #[error("degenerate Hamiltonian: second u1-derivative vanishes")]
    Degenerate,
    #[error("unknown catalog id `{0}`")]
    UnknownId(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    pub h: Expr,
    pub params: Vec<String>,
    pub label: String,
}

impl Hamiltonian {
    pub fn new(h: Expr) -> Result<Self, HamiltonianError> {
        Self::labelled(h, "")
    }

    pub fn labelled(h: Expr, label: &str) -> Result<Self, HamiltonianError> {
        if let Some(k) = h.jet_order() {
            if k > 1 {
                return Err(HamiltonianError::Order(k));
            }
        }
        if h.diff_jet(1)?.diff_jet(1)?.is_zero() {
            return Err(HamiltonianError::Degenerate);
        }
        Ok(Hamiltonian { params: params_of(&h), h, label: label.to_string() })
    }
}

pub(crate) fn params_of(e: &Expr) -> Vec<String> {
    let mut v: Vec<String> = e
        .all_gens()
        .iter()
        .filter_map(|g| match g.kind() {
            GenKind::Param(n) => Some(n.to_string()),
            _ => None,
        })
        .collect();
    v.sort();
    v.dedup();
    v
}

/// `F = D_x(δH/δu)`.
pub fn flow(h: &Hamiltonian) -> Result<FlowEquation, HamiltonianError> {
    flow_in(h, JetContext::default())
}

pub fn flow_in(h: &Hamiltonian, ctx: JetContext) -> Result<FlowEquation, HamiltonianError> {
    let e = ctx.variational_derivative(&h.h)?;
    let f = ctx.total_x(&e)?;
    Ok(FlowEquation::with_context(f, ctx)?)
}

/// `a = (−∂²H/∂u1²)^(−1/3)`.
pub fn separant_from_h(h: &Hamiltonian) -> Result<Expr, HamiltonianError> {
    let h11 = h.h.diff_jet(1)?.diff_jet(1)?;
    if h11.is_zero() {
        return Err(HamiltonianError::Degenerate);
    }
    Ok(h11.neg().pow(crate::expr::scalar::exp_int(-1) / crate::expr::scalar::exp_int(3))?)
}

/// Checks `∂²H/∂u1² = −a⁻³`.
pub fn separant_relation_holds(h: &Hamiltonian, a: &Expr) -> Result<Equivalence, HamiltonianError> {
    let h11 = h.h.diff_jet(1)?.diff_jet(1)?;
    Ok(equivalent(&h11, &a.powi(-3)?.neg()))
}

/// Equal when `δ(H1 − H2)/δu` is a parameter-only constant.
pub fn hamiltonians_equivalent(h1: &Expr, h2: &Expr) -> Result<Equivalence, HamiltonianError> {
    let ctx = JetContext::default();
    let e = ctx.variational_derivative(&h1.sub(h2))?;
    if e.is_parametric_constant() {
        return Ok(Equivalence::Equal);
    }
    // E is constant iff its x-derivative and all jet partials vanish
    let mut probes = vec![ctx.total_x(&e)?];
    for i in 0..=e.jet_order().unwrap_or(0) {
        probes.push(e.diff_jet(i)?);
    }
    let mut unknown = None;
    for p in &probes {
        if p.is_zero() {
            continue;
        }
        match equivalent(p, &Expr::zero()) {
            Equivalence::Equal => {}
            d @ Equivalence::Different { .. } => return Ok(d),
            Equivalence::Unknown { reason } => unknown = Some(reason),
        }
    }
    Ok(match unknown {
        Some(reason) => Equivalence::Unknown { reason },
        None => Equivalence::Equal,
    })
}

/// The linear Hamiltonian `−u1²/2 + f(x)u²/2 + g(x)u` of `u_t = D_x(u2 + fu + g)`.
pub fn linear_hamiltonian(f: &Expr, g: &Expr) -> Expr {
    let u = Expr::u();
    let u1 = Expr::jet(1);
    u1.mul(&u1).scale(&q_frac(-1, 2)).add(&f.mul(&u.mul(&u)).scale(&q_frac(1, 2))).add(&g.mul(&u))
}

#[cfg(test)]
mod tests;
