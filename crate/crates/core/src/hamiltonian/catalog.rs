use crate::densities::{
    check_integrability_with, even_triviality_of, separant_density, CheckOptions, DensitySequence, FlowEquation,
    TrivialityEntry,
};
use crate::expr::{equivalent, Equivalence, Expr};
use crate::jet::{JetContext, Weierstrass};
use crate::syntax::parse_expr;

use super::{flow_in, separant_relation_holds, Hamiltonian, HamiltonianError};

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub hamiltonian: Option<Hamiltonian>,
    pub flow: FlowEquation,
    pub expected_separant: Expr,
    /// Right-hand side as printed, before expansion.
    pub printed_flow: Expr,
    pub constraints: Vec<String>,
    pub notes: &'static str,
    /// One of the eight canonical forms rather than a derived target.
    pub primary: bool,
    pub has_radicals: bool,
}

const IDS: &[&str] = &[
    "2.1", "2.1a", "2.1b", "2.1c", "2.1d", "2.2", "2.3", "2.13", "remark3", "remark4", "cd-exp", "cd-tanh", "mkdv-w",
    "kn", "cd-B",
];

pub fn catalog_ids() -> &'static [&'static str] {
    IDS
}

const P_U: &str = "(p0 + p1*u + p2*u^2 + p3*u^3 + p4*u^4)";
const DP_U: &str = "(p1 + 2*p2*u + 3*p3*u^2 + 4*p4*u^3)";
const D2P_U: &str = "(2*p2 + 6*p3*u + 12*p4*u^2)";
const P_X: &str = "(p0 + p1*x + p2*x^2 + p3*x^3 + p4*x^4)";

fn ex(src: &str) -> Expr {
    parse_expr(src).unwrap_or_else(|e| panic!("catalog source `{src}`: {e}"))
}

fn dx(ctx: &JetContext, src: &str) -> Expr {
    ctx.total_x(&ex(src)).expect("catalog flow within jet bound")
}

struct Spec {
    h: Option<String>,
    printed: Expr,
    separant: String,
    notes: &'static str,
    constraints: Vec<String>,
    primary: bool,
}

fn spec(id: &str, ctx: &JetContext) -> Option<Spec> {
    let a21 = "(c1*u^2 + c2*u + c3)";
    let a21d = "(u^2 + c)";
    let q2 = "(s0 + s1*x + s2*x^2)";
    let ham = |h: String, printed: Expr, sep: &str, notes: &'static str| Spec {
        h: Some(h),
        printed,
        separant: sep.to_string(),
        notes,
        constraints: vec![],
        primary: true,
    };
    let target = |printed: &str, notes: &'static str| Spec {
        h: None,
        printed: ex(printed),
        separant: "1".into(),
        notes,
        constraints: vec![],
        primary: false,
    };
    Some(match id {
        "2.1" => ham(
            format!("-u1^2/(2*{a21}^3) + {P_U}/{a21}"),
            dx(
                ctx,
                &format!(
                    "u2/{a21}^3 - 3*(2*c1*u + c2)*u1^2/(2*{a21}^4) + {DP_U}/{a21} - {P_U}*(2*c1*u + c2)/{a21}^2"
                ),
            ),
            a21,
            "general form, a = c1 u^2 + c2 u + c3, P of degree 4",
        ),
        "2.1a" => ham("-(1/2)*u1^2 + (1/4)*u^4".into(), dx(ctx, "u2 + u^3"), "1", "modified KdV"),
        "2.1b" => ham("-(1/2)*u1^2 + (1/3)*u^3".into(), dx(ctx, "u2 + u^2"), "1", "KdV"),
        "2.1c" => ham(
            "-u1^2/(2*u^3) + (1/3)*c1*u^3 - c2/u".into(),
            dx(ctx, "u2/u^3 - 3*u1^2/(2*u^4) + c1*u^2 + c2/u^2"),
            "u",
            "",
        ),
        "2.1d" => ham(
            format!("-u1^2/(2*{a21d}^3) + (c1*u + c2)/{a21d}"),
            dx(ctx, &format!("u2/{a21d}^3 - 3*u*u1^2/{a21d}^4 + c1*(c - u^2)/{a21d}^2 - 2*c2*u/{a21d}^2")),
            a21d,
            "a = u^2 + c",
        ),
        "2.2" => ham(
            format!("-u1^2/(2*u^3) + (1/3)*{P_X}*u^3"),
            dx(ctx, &format!("u2/u^3 - 3*u1^2/(2*u^4) + {P_X}*u^2")),
            "u",
            "P(x) of degree 4",
        ),
        "2.3" => ham(
            format!("4*(u1 + {P_U})^(1/2)"),
            dx(
                ctx,
                &format!(
                    "u2/(u1 + {P_U})^(3/2) + 3*{DP_U}/(u1 + {P_U})^(1/2) - {P_U}*{DP_U}/(u1 + {P_U})^(3/2)"
                ),
            ),
            &format!("(u1 + {P_U})^(1/2)"),
            "case B, P(u) of degree 4",
        ),
        "2.13" => ham("-(1/2)*u1^2 + (1/2)*x*u^2".into(), dx(ctx, "u2 + x*u"), "1", "linear, f = x, g = 0"),
        "remark3" => Spec {
            constraints: vec!["q2''' = 0 (q2 = s0 + s1 x + s2 x^2)".into()],
            primary: false,
            ..ham(
                format!("-u1^2/(2*u^3) + (1/3)*c*{q2}^2*u^3 + (1/2)*{q2}*u^2"),
                dx(ctx, &format!("u2/u^3 - 3*u1^2/(2*u^4) + c*{q2}^2*u^2 + {q2}*u")),
                "u",
                "normalization q3 = 0 in subcase A.2(a)",
            )
        },
        "remark4" => Spec {
            constraints: vec!["phi'^2 = 4 phi^3 - g2 phi - g3".into(), "phi'' = 6 phi^2 - g2/2".into()],
            primary: false,
            ..ham(
                "-u1^2/(2*u^3) + (1/3)*u^3 - 3*phi(x)/(2*u)".into(),
                dx(ctx, "u2/u^3 - 3*u1^2/(2*u^4) + u^2 + 3*phi(x)/(2*u^2)"),
                "u",
                "Weierstrass form of 2.2",
            )
        },
        "cd-exp" => target("u3 - (1/2)*u1^3 + u1*(c1*exp(2*u) - 3*c2*exp(-2*u))", "Calogero-Degasperis, from 2.1c"),
        "cd-tanh" => target(
            "u3 - (1/2)*u1^3 + u1*((3/2)*k^(-2)*(2*c2 + k*c1)*exp(2*u) + (3/2)*k^(-2)*(2*c2 - k*c1)*exp(-2*u)) - 6*c2*k^(-2)*u1",
            "Calogero-Degasperis with tanh parameters, from 2.1d with c = -k^2/4",
        ),
        "mkdv-w" => target("u3 + 12*c2*u^2*u1 + 6*c1*u*u1", "mKdV, from 2.1d with c = 0"),
        "kn" => target(&format!("u3 - 3*u2^2/(2*u1) - {P_U}/u1"), "Krichever-Novikov, from 2.2"),
        "cd-B" => target(
            &format!(
                "u3 - (3/8)*(4*{DP_U}*u1 + 2*u1*u2)^2/(u1*(u1^2 + 4*{P_U})) + (1/2)*4*{D2P_U}*u1"
            ),
            "Calogero-Degasperis, related to 2.3, Q = 4P",
        ),
        _ => return None,
    })
}

fn context_for(id: &str) -> JetContext {
    let mut ctx = JetContext::default();
    if id == "remark4" {
        ctx.reduction = Some(Weierstrass { name: "phi".into(), g2: ex("g2"), g3: ex("g3") });
    }
    ctx
}

pub fn catalog_get(id: &str) -> Result<CatalogEntry, HamiltonianError> {
    let id_static = IDS.iter().find(|k| **k == id).ok_or_else(|| HamiltonianError::UnknownId(id.to_string()))?;
    let ctx = context_for(id);
    let s = spec(id, &ctx).expect("every listed id has a spec");
    let hamiltonian = s.h.as_ref().map(|h| Hamiltonian::labelled(ex(h), id)).transpose()?;
    let flow = match &hamiltonian {
        Some(h) => flow_in(h, ctx)?,
        None => FlowEquation::with_context(s.printed.clone(), ctx)?,
    };
    // integer powers of factors live in the denominator; numerator factors carry fractional exponents
    let rhs = flow.rhs();
    let has_radicals = rhs.all_gens().iter().any(|g| matches!(g.kind(), crate::expr::GenKind::Surd(_)))
        || rhs.num().terms().iter().any(|(m, _)| m.iter().any(|(g, _)| g.is_factor()));
    let mut constraints = s.constraints;
    if id == "cd-tanh" {
        constraints.push("c = -k^2/4".into());
    }
    Ok(CatalogEntry {
        id: id_static,
        hamiltonian,
        flow,
        expected_separant: ex(&s.separant),
        printed_flow: s.printed,
        constraints,
        notes: s.notes,
        primary: s.primary,
        has_radicals,
    })
}

#[derive(Clone, Debug)]
pub struct CatalogReport {
    pub id: String,
    pub sequence: DensitySequence,
    pub even_triviality: Vec<TrivialityEntry>,
    pub separant_matches: Equivalence,
    /// `∂²H/∂u1² = −a⁻³` with `a` the expected separant.
    pub separant_relation: Option<Equivalence>,
    pub printed_flow_matches: Equivalence,
}

impl CatalogReport {
    pub fn passed(&self) -> bool {
        self.sequence.status == crate::densities::Status::Ok
            && self.even_triviality.iter().all(|t| t.exact)
            && self.separant_matches.is_equal()
            && self.separant_relation.as_ref().is_none_or(|r| r.is_equal())
            && self.printed_flow_matches.is_equal()
    }
}

pub fn catalog_verify(id: &str, max_n: i64, opts: &CheckOptions) -> Result<CatalogReport, HamiltonianError> {
    let entry = catalog_get(id)?;
    let sequence = check_integrability_with(&entry.flow, max_n, opts)?;
    let even_triviality = if entry.hamiltonian.is_some() { even_triviality_of(&sequence)? } else { Vec::new() };
    let separant_matches = equivalent(&separant_density(&entry.flow)?, &entry.expected_separant);
    let separant_relation =
        entry.hamiltonian.as_ref().map(|h| separant_relation_holds(h, &entry.expected_separant)).transpose()?;
    let printed = entry.flow.ctx.normalize(entry.printed_flow.clone())?;
    let printed_flow_matches = equivalent(entry.flow.rhs(), &printed);
    Ok(CatalogReport {
        id: id.to_string(),
        sequence,
        even_triviality,
        separant_matches,
        separant_relation,
        printed_flow_matches,
    })
}
