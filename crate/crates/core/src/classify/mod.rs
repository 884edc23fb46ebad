//! Separant-class detection, ansatz extraction, the subcase condition
//! systems, and algebraic normalization to a canonical form.

mod conditions;
mod normalize;

use std::cell::RefCell;
use std::collections::BTreeMap;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::expr::scalar::{exp_int, q_frac};
use crate::expr::upoly::UPoly;
use crate::expr::gen::param_id;
use crate::expr::{equivalent, Equivalence, Expr, ExprError, GenId, GenTag};
use crate::hamiltonian::{catalog_get, hamiltonians_equivalent, linear_hamiltonian, Hamiltonian, HamiltonianError};
use crate::jet::{integrate_plain, JetError};
use crate::transform::{TransformError, TransformTrail};

pub use conditions::{check_conditions, condition_system, ConditionReport, ConditionSystem, Relation, RelationResult, RelationStatus};
pub use normalize::{identify, normalize_algebraic};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum SeparantClass {
    /// `a = a(x, u)`.
    A { a: Expr },
    /// `a = √(u1 + q(x, u))`, up to a dilatation.
    B { q: Expr },
    OutOfClass { reason: String },
}

impl SeparantClass {
    pub fn tag(&self) -> &'static str {
        match self {
            SeparantClass::A { .. } => "A",
            SeparantClass::B { .. } => "B",
            SeparantClass::OutOfClass { .. } => "out-of-class",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Subcase {
    /// `a = 1`.
    A1,
    /// `a = u`.
    A2,
    /// `a = c1 u² + c2 u + c3`, `c1 ≠ 0`.
    A3,
    B,
}

impl Subcase {
    pub fn label(self) -> &'static str {
        match self {
            Subcase::A1 => "A.1",
            Subcase::A2 => "A.2",
            Subcase::A3 => "A.3",
            Subcase::B => "B",
        }
    }
}

/// Named coefficient functions of a normalized Hamiltonian.
///
/// * A.1: `−u1²/2 + q1 u⁴/4 + q2 u³/3 + q3 u²/2 + q4 u`
/// * A.2: `−u1²/(2u³) + q1 u³/3 + q2 u²/2 − q3/u + q4 u`
/// * A.3: `(r1 u⁴ + r2 u³ + r3 u² + r4 u + r5)/a − u1²/(2a³)`, `a = c1 u² + c2 u + c3`
/// * B: `h1 u²/2 + h2 u + h3 + 4√(u1 + q)`, `q = q1 u⁴ + q2 u³ + q3 u² + q4 u + q5`
#[derive(Clone, Debug, PartialEq)]
pub struct Ansatz {
    pub subcase: Subcase,
    pub coeffs: BTreeMap<String, Expr>,
    /// Terms outside the shape, keyed by the degree bound they break.
    pub excess: Vec<Relation>,
}

impl Ansatz {
    pub fn get(&self, name: &str) -> Expr {
        self.coeffs.get(name).cloned().unwrap_or_else(Expr::zero)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Obstruction {
    pub description: String,
    /// Equation left unsolved, with unknown functions written as `f(x)` etc.
    pub equation: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationResult {
    /// Catalog id, `linear-2.13`, or `unclassified`.
    pub canonical_id: String,
    pub class: SeparantClass,
    pub subcase: Option<Subcase>,
    pub trail: TransformTrail,
    pub obstructions: Vec<Obstruction>,
    pub bindings: BTreeMap<String, Expr>,
    pub conditions: Vec<RelationResult>,
    pub diagnostics: Vec<String>,
}

pub const UNCLASSIFIED: &str = "unclassified";
pub const LINEAR_ID: &str = "linear-2.13";

impl ClassificationResult {
    pub fn is_classified(&self) -> bool {
        self.canonical_id != UNCLASSIFIED
    }

    /// The catalog entry the result refers to; the linear family maps to `2.13`.
    pub fn catalog_id(&self) -> Option<&str> {
        match self.canonical_id.as_str() {
            UNCLASSIFIED => None,
            LINEAR_ID => Some("2.13"),
            id => Some(id),
        }
    }

    /// The canonical Hamiltonian with the bindings substituted.
    pub fn canonical_hamiltonian(&self) -> Result<Option<Hamiltonian>, ClassifyError> {
        match self.canonical_id.as_str() {
            UNCLASSIFIED => Ok(None),
            LINEAR_ID => {
                let f = self.bindings.get("f").cloned().unwrap_or_else(Expr::zero);
                let g = self.bindings.get("g").cloned().unwrap_or_else(Expr::zero);
                Ok(Some(Hamiltonian::labelled(linear_hamiltonian(&f, &g), LINEAR_ID)?))
            }
            id => {
                let entry = catalog_get(id)?;
                let Some(h) = entry.hamiltonian else { return Ok(None) };
                let mut s = crate::expr::Substitution::new();
                for (name, value) in &self.bindings {
                    s = s.bind_param(name, value.clone());
                }
                Ok(Some(Hamiltonian::labelled(s.apply(&h.h)?, id)?))
            }
        }
    }

    /// Replays the trail on `input` and compares with the canonical form.
    pub fn verify(&self, input: &Hamiltonian) -> Result<Equivalence, ClassifyError> {
        let Some(target) = self.canonical_hamiltonian()? else {
            return Ok(Equivalence::Unknown { reason: "no canonical form".into() });
        };
        let replayed = self.trail.replay_hamiltonian(input)?;
        Ok(hamiltonians_equivalent(&replayed.h, &target.h)?)
    }

    pub fn to_json(&self) -> Value {
        let mut b = Map::new();
        for (k, v) in &self.bindings {
            b.insert(k.clone(), json!(v.to_string()));
        }
        json!({
            "id": self.canonical_id,
            "class": self.class.tag(),
            "subcase": self.subcase.map(Subcase::label),
            "bindings": Value::Object(b),
            "trail": self.trail.to_json(),
            "obstructions": self.obstructions.iter().map(|o| json!({
                "description": o.description,
                "equation": o.equation.to_string(),
            })).collect::<Vec<_>>(),
            "conditions": self.conditions.iter().map(RelationResult::to_json).collect::<Vec<_>>(),
            "diagnostics": self.diagnostics,
        })
    }
}

pub(crate) fn u_gen() -> GenId {
    GenId::jet(0)
}

/// Free of `x` and of every jet variable.
pub(crate) fn is_const(e: &Expr) -> bool {
    !e.has_x() && e.jet_order().is_none()
}

fn has_params(e: &Expr) -> bool {
    e.all_gens().iter().any(|g| g.tag() == GenTag::Param)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Zero {
    Yes,
    No,
    /// Vanishing depends on parameter values.
    Unknown,
}

thread_local! {
    static POSITIVE: RefCell<Vec<GenId>> = const { RefCell::new(Vec::new()) };
}

/// Runs `f` with the named parameters assumed positive; monomials in them
/// then count as nonzero when branching.
pub fn with_positive<T>(names: &[String], f: impl FnOnce() -> T) -> T {
    let ids: Vec<GenId> = names.iter().map(|n| param_id(n)).collect();
    let saved = POSITIVE.with(|p| std::mem::replace(&mut *p.borrow_mut(), ids));
    let r = f();
    POSITIVE.with(|p| *p.borrow_mut() = saved);
    r
}

fn assumed_nonzero(e: &Expr) -> bool {
    e.num().len() == 1
        && POSITIVE.with(|p| {
            let p = p.borrow();
            e.all_gens().iter().all(|g| match g.tag() {
                GenTag::Param => p.contains(g),
                GenTag::Surd => g.info().closure.iter().all(|h| h.tag() != GenTag::Param || p.contains(h)),
                _ => false,
            })
        })
}

pub(crate) fn zero_test(e: &Expr) -> Zero {
    if e.is_zero() {
        Zero::Yes
    } else if has_params(e) && !assumed_nonzero(e) {
        Zero::Unknown
    } else {
        Zero::No
    }
}

/// Coefficients `c0, c1, …` of `e` as a polynomial in `u`.
pub(crate) fn poly_u(e: &Expr) -> Option<Vec<Expr>> {
    UPoly::from_expr(e, u_gen()).map(|p| p.coeffs)
}

pub(crate) fn coeff(v: &[Expr], k: usize) -> Expr {
    v.get(k).cloned().unwrap_or_else(Expr::zero)
}

/// `Σ_{k ≥ from} c_k u^k`.
pub(crate) fn tail(v: &[Expr], from: usize) -> Expr {
    let u = Expr::u();
    let mut acc = Expr::zero();
    for (k, c) in v.iter().enumerate().skip(from) {
        acc = acc.add(&c.mul(&u.powi(k as i64).expect("nonnegative power")));
    }
    acc
}

/// Case A data: `H ≅ h(x, u) − u1²/(2a³)` after discarding `b(x,u)·u1 ≅ −∂_x ∫b du`.
pub(crate) struct SplitA {
    pub a: Expr,
    pub h: Expr,
}

/// `a = (−∂²H/∂u1²)^(−1/3)` when `H` is quadratic in `u1`.
pub(crate) fn separant_a(h: &Expr) -> Result<Option<Expr>, ClassifyError> {
    let h11 = h.diff_jet(1)?.diff_jet(1)?;
    if h11.is_zero() || h11.depends_on(GenId::jet(1)) {
        return Ok(None);
    }
    Ok(Some(h11.neg().inv()?.pow(exp_int(1) / exp_int(3))?))
}

pub(crate) fn split_a(h: &Expr) -> Result<Option<SplitA>, ClassifyError> {
    let Some(a) = separant_a(h)? else { return Ok(None) };
    let zero = Expr::zero();
    let b = h.diff_jet(1)?.subs_jet(1, &zero)?;
    let h0 = h.subs_jet(1, &zero)?;
    let bb = integrate_plain(&b, u_gen())?;
    Ok(Some(SplitA { a, h: h0.sub(&bb.diff_x()?) }))
}

/// `(w1, q)` with `(∂H/∂u1)⁻² = w1 (u1 + q)`, `w1` constant.
pub(crate) fn split_b(h: &Expr) -> Result<Option<(Expr, Expr)>, ClassifyError> {
    let h1 = h.diff_jet(1)?;
    if h1.is_zero() {
        return Ok(None);
    }
    let w = h1.powi(-2)?;
    let Some(p) = UPoly::from_expr(&w, GenId::jet(1)) else { return Ok(None) };
    if p.degree() != 1 {
        return Ok(None);
    }
    let w1 = p.coeffs[1].clone();
    let w0 = p.coeffs[0].clone();
    if !is_const(&w1) {
        return Ok(None);
    }
    Ok(Some((w1.clone(), w0.div(&w1)?)))
}

pub fn detect_class(h: &Hamiltonian) -> Result<SeparantClass, ClassifyError> {
    if let Some(a) = separant_a(&h.h)? {
        return Ok(SeparantClass::A { a });
    }
    if let Some((_, q)) = split_b(&h.h)? {
        return Ok(SeparantClass::B { q });
    }
    let h11 = h.h.diff_jet(1)?.diff_jet(1)?;
    let a2 = h11.neg().pow(exp_int(-2) / exp_int(3))?;
    let reason = match UPoly::from_expr(&a2, GenId::jet(1)) {
        Some(p) if p.degree() == 2 => format!(
            "a^2 = {a2} is quadratic in u1 with nonzero leading coefficient; \
             removing it needs a canonical transformation that is not constructed"
        ),
        _ => format!("a^2 = {a2} is not a quadratic polynomial in u1"),
    };
    Ok(SeparantClass::OutOfClass { reason })
}

fn normalized_b_part(q: &Expr) -> Result<Expr, ClassifyError> {
    Ok(Expr::jet(1).add(q).pow(exp_int(1) / exp_int(2))?.scale(&q_frac(4, 1)))
}

/// Coefficient functions of a Hamiltonian whose separant is already in
/// normalized position (`a = 1`, `a = u`, `a` a constant quadratic, or
/// `H = h + 4√(u1 + q)`).
pub fn extract_ansatz(h: &Hamiltonian, class: &SeparantClass) -> Result<Ansatz, ClassifyError> {
    let mut coeffs = BTreeMap::new();
    let mut excess = Vec::new();
    let mut put = |name: &str, e: Expr| {
        coeffs.insert(name.to_string(), e);
    };
    let subcase = match class {
        SeparantClass::A { a } => {
            let s = split_a(&h.h)?.ok_or_else(|| ClassifyError::Shape("H is not quadratic in u1".into()))?;
            let u = Expr::u();
            if a.is_one() {
                let r = poly_u(&s.h).ok_or_else(|| ClassifyError::Shape(format!("h = {} is not polynomial in u", s.h)))?;
                put("q1", coeff(&r, 4).scale(&q_frac(4, 1)));
                put("q2", coeff(&r, 3).scale(&q_frac(3, 1)));
                put("q3", coeff(&r, 2).scale(&q_frac(2, 1)));
                put("q4", coeff(&r, 1));
                excess.push(Relation::new("d^5 h/du^5 = 0", tail(&r, 5)));
                Subcase::A1
            } else if *a == u {
                let hu = s.h.mul(&u);
                let r = poly_u(&hu).ok_or_else(|| ClassifyError::Shape(format!("u*h = {hu} is not polynomial in u")))?;
                put("q1", coeff(&r, 4).scale(&q_frac(3, 1)));
                put("q2", coeff(&r, 3).scale(&q_frac(2, 1)));
                put("q3", coeff(&r, 0).neg());
                put("q4", coeff(&r, 2));
                excess.push(Relation::new("d^5 (u h)/du^5 = 0", tail(&r, 5)));
                Subcase::A2
            } else {
                let sv = poly_u(a)
                    .filter(|v| v.len() == 3 && v.iter().all(is_const) && zero_test(&v[2]) != Zero::Yes)
                    .ok_or_else(|| ClassifyError::Shape(format!("separant a = {a} is not in normalized position")))?;
                put("c1", sv[2].clone());
                put("c2", sv[1].clone());
                put("c3", sv[0].clone());
                let ha = s.h.mul(a);
                let r = poly_u(&ha).ok_or_else(|| ClassifyError::Shape(format!("a*h = {ha} is not polynomial in u")))?;
                for k in 0..5 {
                    put(&format!("r{}", 5 - k), coeff(&r, k));
                }
                excess.push(Relation::new("d^5 (a h)/du^5 = 0", tail(&r, 5)));
                Subcase::A3
            }
        }
        SeparantClass::B { q } => {
            let rest = h.h.sub(&normalized_b_part(q)?);
            if rest.depends_on(GenId::jet(1)) {
                return Err(ClassifyError::Shape(format!("H - 4*(u1 + q)^(1/2) = {rest} depends on u1")));
            }
            let hv = poly_u(&rest).ok_or_else(|| ClassifyError::Shape(format!("h = {rest} is not polynomial in u")))?;
            let qv = poly_u(q).ok_or_else(|| ClassifyError::Shape(format!("q = {q} is not polynomial in u")))?;
            put("h1", coeff(&hv, 2).scale(&q_frac(2, 1)));
            put("h2", coeff(&hv, 1));
            put("h3", coeff(&hv, 0));
            for k in 0..5 {
                put(&format!("q{}", 5 - k), coeff(&qv, k));
            }
            excess.push(Relation::new("d^3 h/du^3 = 0", tail(&hv, 3)));
            excess.push(Relation::new("d^5 q/du^5 = 0", tail(&qv, 5)));
            Subcase::B
        }
        SeparantClass::OutOfClass { reason } => return Err(ClassifyError::Shape(reason.clone())),
    };
    Ok(Ansatz { subcase, coeffs, excess })
}

pub(crate) fn relation_status(residual: &Expr) -> RelationStatus {
    if residual.is_zero() {
        return RelationStatus::Holds;
    }
    match equivalent(residual, &Expr::zero()) {
        Equivalence::Equal => RelationStatus::Holds,
        Equivalence::Different { .. } => RelationStatus::Violated,
        Equivalence::Unknown { .. } => RelationStatus::Undecided,
    }
}
