use serde_json::{json, Value};

use crate::expr::scalar::q_int;
use crate::expr::Expr;
use crate::hamiltonian::Hamiltonian;
use crate::transform::TransformTrail;

use super::normalize::{prepare, Prepared};
use super::{extract_ansatz, relation_status, Ansatz, ClassifyError, SeparantClass, Subcase};

/// A relation `residual = 0` between coefficient functions.
#[derive(Clone, Debug, PartialEq)]
pub struct Relation {
    pub label: String,
    pub residual: Expr,
}

impl Relation {
    pub fn new(label: &str, residual: Expr) -> Self {
        Relation { label: label.to_string(), residual }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelationStatus {
    Holds,
    Violated,
    Undecided,
}

impl RelationStatus {
    pub fn label(self) -> &'static str {
        match self {
            RelationStatus::Holds => "holds",
            RelationStatus::Violated => "violated",
            RelationStatus::Undecided => "undecided",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelationResult {
    pub relation: Relation,
    pub status: RelationStatus,
}

impl RelationResult {
    pub fn evaluate(relation: Relation) -> Self {
        let status = relation_status(&relation.residual);
        RelationResult { relation, status }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "relation": self.relation.label,
            "residual": self.relation.residual.to_string(),
            "status": self.status.label(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionSystem {
    pub subcase: Subcase,
    pub relations: Vec<Relation>,
}

fn d(e: &Expr, k: u32) -> Result<Expr, ClassifyError> {
    let mut r = e.clone();
    for _ in 0..k {
        r = r.diff_x()?;
    }
    Ok(r)
}

fn k(n: i64) -> crate::expr::Q {
    q_int(n)
}

/// The relations the coefficient functions of `ansatz` must satisfy,
/// preceded by its degree bounds.
pub fn condition_system(ansatz: &Ansatz) -> Result<ConditionSystem, ClassifyError> {
    let g = |n: &str| ansatz.get(n);
    let mut relations = ansatz.excess.clone();
    match ansatz.subcase {
        Subcase::A1 => {
            let (q1, q2, q3, q4) = (g("q1"), g("q2"), g("q3"), g("q4"));
            relations.push(Relation::new("q1' = 0", d(&q1, 1)?));
            relations.push(Relation::new(
                "2 q2 q2' - 3 q1 q3' = 0",
                q2.mul(&d(&q2, 1)?).scale(&k(2)).sub(&q1.mul(&d(&q3, 1)?).scale(&k(3))),
            ));
            relations.push(Relation::new(
                "2 q2''' + 2 q2' q3 - 6 q1 q4' = 0",
                d(&q2, 3)?.scale(&k(2)).add(&d(&q2, 1)?.mul(&q3).scale(&k(2))).sub(&q1.mul(&d(&q4, 1)?).scale(&k(6))),
            ));
        }
        Subcase::A2 => {
            let (q1, q2, q3, q4) = (g("q1"), g("q2"), g("q3"), g("q4"));
            relations.push(Relation::new(
                "q1' q2 - 2 q1 q2' = 0",
                d(&q1, 1)?.mul(&q2).sub(&q1.mul(&d(&q2, 1)?).scale(&k(2))),
            ));
            relations.push(Relation::new(
                "q2''' - q2 q3' - 2 q2' q3 = 0",
                d(&q2, 3)?.sub(&q2.mul(&d(&q3, 1)?)).sub(&d(&q2, 1)?.mul(&q3).scale(&k(2))),
            ));
            relations.push(Relation::new("q4' = 0", d(&q4, 1)?));
        }
        Subcase::A3 => {
            // ∂H/∂x = 0 modulo functions of x alone
            let u = Expr::u();
            let a = g("c1").mul(&u.powi(2)?).add(&g("c2").mul(&u)).add(&g("c3"));
            let mut r = Expr::zero();
            for i in 1..=5 {
                r = r.add(&g(&format!("r{i}")).mul(&u.powi(5 - i)?));
            }
            let h = r.div(&a)?;
            relations.push(Relation::new("d^2 h/dx du = 0", h.diff_x()?.diff_jet(0)?));
        }
        Subcase::B => {
            let (q1, q2, q3, q4, q5) = (g("q1"), g("q2"), g("q3"), g("q4"), g("q5"));
            let (h1, h2) = (g("h1"), g("h2"));
            let (h1p, h2p) = (d(&h1, 1)?, d(&h2, 1)?);
            relations.push(Relation::new(
                "2 q1 h1' - q1' h1 = 0",
                q1.mul(&h1p).scale(&k(2)).sub(&d(&q1, 1)?.mul(&h1)),
            ));
            relations.push(Relation::new(
                "q2 h1' - q2' h1 + 4 q1 h2' = 0",
                q2.mul(&h1p).sub(&d(&q2, 1)?.mul(&h1)).add(&q1.mul(&h2p).scale(&k(4))),
            ));
            relations.push(Relation::new("q3' h1 - 3 q2 h2' = 0", d(&q3, 1)?.mul(&h1).sub(&q2.mul(&h2p).scale(&k(3)))));
            relations.push(Relation::new(
                "h1'' + 2 q3 h2' - q4 h1' - q4' h1 = 0",
                d(&h1, 2)?.add(&q3.mul(&h2p).scale(&k(2))).sub(&q4.mul(&h1p)).sub(&d(&q4, 1)?.mul(&h1)),
            ));
            relations.push(Relation::new(
                "h2'' - 2 q5 h1' + q4 h2' - q5' h1 = 0",
                d(&h2, 2)?.sub(&q5.mul(&h1p).scale(&k(2))).add(&q4.mul(&h2p)).sub(&d(&q5, 1)?.mul(&h1)),
            ));
        }
    }
    Ok(ConditionSystem { subcase: ansatz.subcase, relations })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub class: SeparantClass,
    /// Algebraic steps used to bring the separant into normalized position.
    pub trail: TransformTrail,
    pub ansatz: Option<Ansatz>,
    pub results: Vec<RelationResult>,
    pub diagnostics: Vec<String>,
}

impl ConditionReport {
    pub fn all_hold(&self) -> bool {
        self.ansatz.is_some() && self.results.iter().all(|r| r.status == RelationStatus::Holds)
    }

    pub fn violated(&self) -> impl Iterator<Item = &RelationResult> {
        self.results.iter().filter(|r| r.status == RelationStatus::Violated)
    }
}

/// Normalizes the separant, extracts the ansatz and evaluates its condition system.
pub fn check_conditions(h: &Hamiltonian) -> Result<ConditionReport, ClassifyError> {
    let prep = prepare(h)?;
    let mut results = prep.work.conditions.clone();
    let mut ansatz = None;
    if let Prepared::Ready(_) = prep.stage {
        let class = super::detect_class(&prep.work.h)?;
        let a = extract_ansatz(&prep.work.h, &class)?;
        results.extend(condition_system(&a)?.relations.into_iter().map(RelationResult::evaluate));
        ansatz = Some(a);
    }
    Ok(ConditionReport {
        class: prep.class,
        trail: prep.work.trail,
        ansatz,
        results,
        diagnostics: prep.work.diagnostics,
    })
}
