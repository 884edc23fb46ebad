use std::collections::BTreeMap;

use crate::expr::scalar::{exp_int, q_frac, q_int};
use crate::expr::upoly::UPoly;
use crate::expr::{Equivalence, Expr, GenId, Substitution};
use crate::hamiltonian::{flow, Hamiltonian};
use crate::jet::integrate_plain;
use crate::transform::{PointTransform, Special, TrailStep, TransformTrail};

use super::conditions::{condition_system, Relation, RelationResult, RelationStatus};
use super::{
    coeff, detect_class, extract_ansatz, is_const, normalized_b_part, poly_u, separant_a, split_a, split_b, zero_test, Ansatz,
    ClassificationResult, ClassifyError, Obstruction, SeparantClass, Subcase, Zero, LINEAR_ID, UNCLASSIFIED,
};

pub(crate) struct Work {
    pub h: Hamiltonian,
    pub trail: TransformTrail,
    pub obstructions: Vec<Obstruction>,
    pub diagnostics: Vec<String>,
    pub conditions: Vec<RelationResult>,
    pub bindings: BTreeMap<String, Expr>,
}

fn is_trivial(step: &TrailStep) -> bool {
    match step {
        TrailStep::Special(Special::Dilatation { alpha, beta, gamma }) => {
            alpha.is_one() && beta.is_one() && gamma.is_one()
        }
        TrailStep::Special(Special::Galilean { c }) | TrailStep::Special(Special::ShiftCt { c }) => c.is_zero(),
        TrailStep::Point(t) => t.phi == Expr::x() && t.psi == Expr::u(),
        _ => false,
    }
}

impl Work {
    fn new(h: &Hamiltonian) -> Self {
        Work {
            h: h.clone(),
            trail: TransformTrail::new(),
            obstructions: Vec::new(),
            diagnostics: Vec::new(),
            conditions: Vec::new(),
            bindings: BTreeMap::new(),
        }
    }

    fn apply(&mut self, step: TrailStep) -> Result<(), ClassifyError> {
        if is_trivial(&step) {
            return Ok(());
        }
        self.h = step.apply_hamiltonian(&self.h)?;
        self.trail.push(step);
        Ok(())
    }

    fn dilate(&mut self, alpha: Expr, beta: Expr, gamma: Expr) -> Result<(), ClassifyError> {
        self.apply(TrailStep::Special(Special::Dilatation { alpha, beta, gamma }))
    }

    fn dilate_t(&mut self, alpha: Expr) -> Result<(), ClassifyError> {
        self.dilate(alpha, Expr::one(), Expr::one())
    }

    fn point(&mut self, phi: Expr, psi: Expr) -> Result<(), ClassifyError> {
        self.apply(TrailStep::Point(PointTransform::new(phi, psi)?))
    }

    fn translate(&mut self, g: &Expr) -> Result<(), ClassifyError> {
        self.point(Expr::x(), Expr::u().add(g))
    }

    fn galilean(&mut self, c: Expr) -> Result<(), ClassifyError> {
        self.apply(TrailStep::Special(Special::Galilean { c }))
    }

    /// Records the relation; false when it is violated.
    fn check(&mut self, label: &str, residual: Expr) -> bool {
        let r = RelationResult::evaluate(Relation::new(label, residual));
        let ok = r.status != RelationStatus::Violated;
        if r.status == RelationStatus::Undecided {
            self.diagnostics.push(format!("could not decide `{label}`"));
        }
        self.conditions.push(r);
        ok
    }

    fn obstruct(&mut self, description: &str, equation: Expr) {
        self.obstructions.push(Obstruction { description: description.to_string(), equation });
    }

    fn bind(&mut self, name: &str, value: Expr) {
        self.bindings.insert(name.to_string(), value);
    }

    fn bind_poly(&mut self, prefix: &str, coeffs: &[Expr]) {
        for k in 0..5 {
            self.bind(&format!("{prefix}{k}"), coeff(coeffs, k));
        }
    }

    /// Ansatz of the current Hamiltonian; with `record`, evaluates its
    /// condition system and returns `None` on a violation.
    fn extract(&mut self, record: bool) -> Result<Option<Ansatz>, ClassifyError> {
        let class = detect_class(&self.h)?;
        let an = extract_ansatz(&self.h, &class)?;
        if record {
            let mut ok = true;
            for r in condition_system(&an)?.relations {
                ok &= self.check(&r.label, r.residual);
            }
            if !ok {
                return Ok(None);
            }
        }
        Ok(Some(an))
    }

    /// `t → −t` when the surd enters with the wrong sign.
    fn fix_b_sign(&mut self) -> Result<bool, ClassifyError> {
        let Some((_, q)) = split_b(&self.h.h)? else { return Ok(false) };
        let part = normalized_b_part(&q)?;
        if !self.h.h.sub(&part).depends_on(GenId::jet(1)) {
            return Ok(true);
        }
        if !self.h.h.add(&part).depends_on(GenId::jet(1)) {
            self.dilate_t(Expr::int(-1))?;
            return Ok(true);
        }
        Ok(false)
    }
}

fn func(name: &str, order: u32) -> Expr {
    Expr::func(name, order, Expr::x()).expect("formal function of x")
}

fn at_x(e: &Expr, value: &Expr) -> Result<Expr, ClassifyError> {
    Ok(Substitution::new().bind(GenId::x(), value.clone()).apply(e)?)
}

fn dx(e: &Expr, k: u32) -> Result<Expr, ClassifyError> {
    let mut r = e.clone();
    for _ in 0..k {
        r = r.diff_x()?;
    }
    Ok(r)
}

pub(crate) enum Prepared {
    Ready(Subcase),
    /// Constant separant whose branching coefficients depend on parameters.
    General,
    Stop(&'static str),
}

pub(crate) struct Prep {
    pub class: SeparantClass,
    pub stage: Prepared,
    pub work: Work,
}

/// Brings the separant into normalized position with algebraic steps.
pub(crate) fn prepare(h: &Hamiltonian) -> Result<Prep, ClassifyError> {
    let class = detect_class(h)?;
    let mut w = Work::new(h);
    let stage = match &class {
        SeparantClass::A { .. } => prepare_a(&mut w)?,
        SeparantClass::B { .. } => prepare_b(&mut w)?,
        SeparantClass::OutOfClass { reason } => {
            w.diagnostics.push(reason.clone());
            Prepared::Stop(UNCLASSIFIED)
        }
    };
    Ok(Prep { class, stage, work: w })
}

fn separant_coeffs(w: &Work) -> Result<Option<(Expr, Expr, Expr)>, ClassifyError> {
    let a = separant_a(&w.h.h)?.ok_or_else(|| ClassifyError::Shape("case A form lost".into()))?;
    Ok(poly_u(&a).filter(|v| v.len() <= 3).map(|v| (coeff(&v, 2), coeff(&v, 1), coeff(&v, 0))))
}

fn prepare_a(w: &mut Work) -> Result<Prepared, ClassifyError> {
    let a = separant_a(&w.h.h)?.ok_or_else(|| ClassifyError::Shape("case A form lost".into()))?;
    let Some((s1, s2, s3)) = separant_coeffs(w)? else {
        let a3 = a.diff_jet(0)?.diff_jet(0)?.diff_jet(0)?;
        w.check("d^3 a/du^3 = 0", a3);
        return Ok(Prepared::Stop(UNCLASSIFIED));
    };
    let disc = s2.mul(&s2).sub(&s1.mul(&s3).scale(&q_frac(4, 1)));
    if !w.check("d/dx (s2^2 - 4 s1 s3) = 0", disc.diff_x()?) {
        return Ok(Prepared::Stop(UNCLASSIFIED));
    }
    match (zero_test(&s1), zero_test(&s2)) {
        (Zero::Yes, Zero::Yes) => {
            if !is_const(&s3) {
                let eq = func("f", 1).mul(&at_x(&s3, &func("f", 0))?).sub(&Expr::one());
                w.obstruct("x = f(y) with f'(y) a(f(y)) = 1 needs the inverse of an antiderivative", eq);
                return Ok(Prepared::Stop(UNCLASSIFIED));
            }
            w.dilate_t(s3.powi(3)?)?;
            Ok(Prepared::Ready(Subcase::A1))
        }
        (Zero::Yes, Zero::No) => {
            // s2 is constant by the discriminant relation
            w.translate(&s3.div(&s2)?.neg())?;
            w.dilate_t(s2.powi(3)?)?;
            Ok(Prepared::Ready(Subcase::A2))
        }
        (Zero::No, _) => {
            w.translate(&s2.div(&s1.scale(&q_frac(2, 1)))?.neg())?;
            if !is_const(&s1) {
                let eq = func("f", 1).sub(&at_x(&s1, &func("f", 0))?);
                w.obstruct("x = f(y) with f'(y) = s1(f(y)) needs the inverse of an antiderivative", eq);
                return Ok(Prepared::Stop("2.1d"));
            }
            w.dilate_t(s1.powi(3)?)?;
            Ok(Prepared::Ready(Subcase::A3))
        }
        _ => {
            if !(is_const(&s1) && is_const(&s2) && is_const(&s3)) {
                let zero = Expr::zero();
                if zero_test(&s1) != Zero::Yes && is_const(&s1) {
                    let g = s2.sub(&at_x(&s2, &zero)?).div(&s1.scale(&q_frac(2, 1)))?;
                    w.translate(&g.neg())?;
                } else if zero_test(&s2) != Zero::Yes && is_const(&s2) {
                    let g = s3.sub(&at_x(&s3, &zero)?).div(&s2)?;
                    w.translate(&g.neg())?;
                }
            }
            match separant_coeffs(w)? {
                Some((s1, s2, s3)) if is_const(&s1) && is_const(&s2) && is_const(&s3) => Ok(Prepared::General),
                _ => {
                    w.diagnostics
                        .push("separant coefficients depend on x and parameters; no algebraic normalization".into());
                    Ok(Prepared::Stop(UNCLASSIFIED))
                }
            }
        }
    }
}

fn prepare_b(w: &mut Work) -> Result<Prepared, ClassifyError> {
    let (w1, _) = split_b(&w.h.h)?.ok_or_else(|| ClassifyError::Shape("case B form lost".into()))?;
    let k = w1.scale(&q_frac(4, 1));
    w.dilate(k.powi(2)?, Expr::one(), k)?;
    if !w.fix_b_sign()? {
        w.diagnostics.push("H is not of the form h(x, u) + 4 (u1 + q(x, u))^(1/2)".into());
        return Ok(Prepared::Stop(UNCLASSIFIED));
    }
    Ok(Prepared::Ready(Subcase::B))
}

/// Applies the algebraic normalization moves, recording obstructions where
/// a step would need an ODE solve or a functional inverse.
pub fn normalize_algebraic(h: &Hamiltonian) -> Result<ClassificationResult, ClassifyError> {
    let prep = prepare(h)?;
    let mut w = prep.work;
    let (id, subcase) = match prep.stage {
        Prepared::Stop(id) => (id, None),
        Prepared::General => (finish_general(&mut w)?, None),
        Prepared::Ready(sc) => {
            let ansatz = match w.extract(true) {
                Err(ClassifyError::Jet(e)) => {
                    w.diagnostics.push(format!("no algebraic normal form for the coefficients: {e}"));
                    None
                }
                other => other?,
            };
            let id = match ansatz {
                None => UNCLASSIFIED,
                Some(an) => match sc {
                    Subcase::A1 => finish_a1(&mut w, an)?,
                    Subcase::A2 => finish_a2(&mut w, an)?,
                    Subcase::A3 => finish_a3(&mut w, an)?,
                    Subcase::B => finish_b(&mut w, an)?,
                },
            };
            (id, Some(sc))
        }
    };
    if id == UNCLASSIFIED {
        w.bindings.clear();
    }
    Ok(ClassificationResult {
        canonical_id: id.to_string(),
        class: prep.class,
        subcase,
        trail: w.trail,
        obstructions: w.obstructions,
        bindings: w.bindings,
        conditions: w.conditions,
        diagnostics: w.diagnostics,
    })
}

fn finish_a1(w: &mut Work, an: Ansatz) -> Result<&'static str, ClassifyError> {
    let q1 = an.get("q1");
    match zero_test(&q1) {
        Zero::No => {
            w.dilate(Expr::one(), Expr::one(), q1.pow(exp_int(-1) / exp_int(2))?)?;
            let an = w.extract(false)?.expect("unrecorded extraction");
            w.translate(&an.get("q2").scale(&q_frac(-1, 3)))?;
            let an = w.extract(false)?.expect("unrecorded extraction");
            let (q3, q4) = (an.get("q3"), an.get("q4"));
            if !(w.check("q3' = 0", q3.diff_x()?) & w.check("q4' = 0", q4.diff_x()?)) {
                return Ok(UNCLASSIFIED);
            }
            w.galilean(q3)?;
            Ok("2.1a")
        }
        Zero::Yes => {
            let q2 = an.get("q2");
            match zero_test(&q2) {
                Zero::No => {
                    w.dilate(Expr::one(), Expr::one(), q2.inv()?)?;
                    let an = w.extract(false)?.expect("unrecorded extraction");
                    w.translate(&an.get("q3").scale(&q_frac(-1, 2)))?;
                    let an = w.extract(false)?.expect("unrecorded extraction");
                    if !w.check("q4' = 0", an.get("q4").diff_x()?) {
                        return Ok(UNCLASSIFIED);
                    }
                    Ok("2.1b")
                }
                Zero::Yes => {
                    w.bind("f", an.get("q3"));
                    w.bind("g", an.get("q4"));
                    Ok(LINEAR_ID)
                }
                Zero::Unknown => finish_general(w),
            }
        }
        Zero::Unknown => finish_general(w),
    }
}

fn finish_a2(w: &mut Work, an: Ansatz) -> Result<&'static str, ClassifyError> {
    let (q1, q2, q3) = (an.get("q1"), an.get("q2"), an.get("q3"));
    if is_const(&q1) && is_const(&q2) && is_const(&q3) {
        w.galilean(q2)?;
        w.bind("c1", q1);
        w.bind("c2", q3);
        return Ok("2.1c");
    }
    if zero_test(&q2) != Zero::Yes {
        let eq = func("f", 1).mul(&q2).sub(&Expr::one());
        w.obstruct("y = f(x) with f' = 1/q2 brings q2 to 1; expressing x through y needs the inverse of f", eq);
        return Ok("2.1c");
    }
    if zero_test(&q3) != Zero::Yes {
        let (f1, f2, f3) = (func("f", 1), func("f", 2), func("f", 3));
        let eq = f1.mul(&f3).sub(&f2.mul(&f2).scale(&q_frac(3, 2))).add(&q3.mul(&f1).mul(&f1));
        w.obstruct("f is any nonconstant solution of f' f''' - (3/2) f''^2 + q3 f'^2 = 0", eq);
        return Ok("2.2");
    }
    match UPoly::from_expr(&q1, GenId::x()) {
        Some(p) if p.degree() <= 4 && p.coeffs.iter().all(is_const) => {
            w.bind_poly("p", &p.coeffs);
            Ok("2.2")
        }
        _ => {
            w.check("q1^(5) = 0", dx(&q1, 5)?);
            w.diagnostics.push(format!("q1 = {q1} is not a polynomial of degree at most 4 in x"));
            Ok(UNCLASSIFIED)
        }
    }
}

fn finish_a3(w: &mut Work, an: Ansatz) -> Result<&'static str, ClassifyError> {
    let c = an.get("c3");
    let mut r = Vec::new();
    for i in (1..=5).rev() {
        r.push(an.get(&format!("r{i}")));
    }
    let a = UPoly::from_coeffs(vec![c.clone(), Expr::zero(), Expr::one()]);
    let (quo, rem) = UPoly::from_coeffs(r).divrem(&a)?;
    let lead = coeff(&quo.coeffs, 2);
    let (c2, c1) = (coeff(&rem.coeffs, 0), coeff(&rem.coeffs, 1));
    if !(is_const(&lead) && is_const(&c1) && is_const(&c2)) {
        w.diagnostics.push("coefficients of h depend on x".into());
        return Ok(UNCLASSIFIED);
    }
    w.galilean(lead.scale(&q_frac(2, 1)))?;
    w.bind("c", c);
    w.bind("c1", c1);
    w.bind("c2", c2);
    Ok("2.1d")
}

fn finish_general(w: &mut Work) -> Result<&'static str, ClassifyError> {
    let s = match split_a(&w.h.h) {
        Err(ClassifyError::Jet(e)) => {
            w.diagnostics.push(format!("no algebraic normal form for the coefficients: {e}"));
            return Ok(UNCLASSIFIED);
        }
        other => other?.ok_or_else(|| ClassifyError::Shape("case A form lost".into()))?,
    };
    let Some((s1, s2, s3)) = separant_coeffs(w)? else { return Ok(UNCLASSIFIED) };
    let ha = s.h.mul(&s.a);
    let Some(mut r) = poly_u(&ha) else {
        w.diagnostics.push(format!("a*h = {ha} is not polynomial in u"));
        return Ok(UNCLASSIFIED);
    };
    if !w.check("d^5 (a h)/du^5 = 0", super::tail(&r, 5)) {
        return Ok(UNCLASSIFIED);
    }
    r.truncate(5);
    // a function of x alone in h shows up as k(x)·a
    let sv = [s3.clone(), s2.clone(), s1.clone()];
    if let Some(j) = (0..3).rev().find(|&j| zero_test(&sv[j]) != Zero::Yes) {
        let rj = coeff(&r, j);
        if rj.has_x() {
            let kx = rj.sub(&at_x(&rj, &Expr::zero())?).div(&sv[j])?;
            for (i, si) in sv.iter().enumerate() {
                if i < r.len() {
                    r[i] = r[i].sub(&kx.mul(si));
                } else {
                    r.push(kx.mul(si).neg());
                }
            }
        }
    }
    if !r.iter().all(is_const) {
        w.check("d^2 h/dx du = 0", s.h.diff_x()?.diff_jet(0)?);
        w.diagnostics.push("coefficients of a*h depend on x".into());
        return Ok(UNCLASSIFIED);
    }
    w.bind("c1", s1);
    w.bind("c2", s2);
    w.bind("c3", s3);
    w.bind_poly("p", &r);
    Ok("2.1")
}

fn finish_b(w: &mut Work, an: Ansatz) -> Result<&'static str, ClassifyError> {
    let h1 = an.get("h1");
    let h2 = an.get("h2");
    let qs: Vec<Expr> = (1..=5).map(|i| an.get(&format!("q{i}"))).collect();
    let q_low_first: Vec<Expr> = qs.iter().rev().cloned().collect();
    match zero_test(&h1) {
        Zero::Yes => {
            let h2p = h2.diff_x()?;
            if zero_test(&h2p) == Zero::Yes {
                if qs.iter().all(is_const) {
                    w.bind_poly("p", &q_low_first);
                } else if b_translate(w)? {
                    let an = w.extract(false)?.expect("unrecorded extraction");
                    let q: Vec<Expr> = (1..=5).rev().map(|i| an.get(&format!("q{i}"))).collect();
                    w.bind_poly("p", &q);
                } else {
                    w.obstruct(
                        "the coefficients of q depend on x; normalizing them needs y = phi(x), v = u/phi' + psi(x) \
                         with phi, psi solving differential equations",
                        an.get("q1").diff_x()?,
                    );
                }
                return Ok("2.3");
            }
            if qs.iter().all(Expr::is_zero) && dx(&h2, 2)?.is_zero() {
                w.apply(TrailStep::Special(Special::ShiftCt { c: h2p }))?;
                w.bind_poly("p", &[]);
                return Ok("2.3");
            }
            let (p1, p2) = (func("phi", 1), func("phi", 2));
            w.obstruct("phi with phi'' + q4 phi' = 0", p2.add(&an.get("q4").mul(&p1)));
            let psi_phi = func("psi", 0).mul(&p1);
            let eq = psi_phi.diff_x()?.sub(&an.get("q5"));
            w.obstruct("psi with (psi phi')' = q5", eq);
            Ok("2.3")
        }
        z => {
            if z == Zero::Unknown {
                w.diagnostics.push(format!("assuming h1 = {h1} is nonzero"));
            }
            if !is_const(&h1) {
                let eq = func("phi", 1).mul(&h1).sub(&Expr::one());
                w.obstruct("y = phi(x) with phi' = 1/h1; expressing x through y needs the inverse of phi", eq);
                return Ok("2.3");
            }
            // y = x/h1, v = h1 u + h2(x)
            let h2s = at_x(&h2, &Expr::x().mul(&h1))?;
            w.point(Expr::x().mul(&h1), Expr::u().sub(&h2s).div(&h1)?)?;
            if !w.fix_b_sign()? {
                w.diagnostics.push("lost the normalized surd after the point transformation".into());
                return Ok(UNCLASSIFIED);
            }
            let an = w.extract(false)?.expect("unrecorded extraction");
            w.galilean(an.get("h1"))?;
            let an = w.extract(false)?.expect("unrecorded extraction");
            let mut ok = true;
            for i in 1..=5 {
                let qi = an.get(&format!("q{i}"));
                ok &= w.check(&format!("q{i}' = 0"), qi.diff_x()?);
            }
            if !ok {
                return Ok(UNCLASSIFIED);
            }
            let q: Vec<Expr> = (1..=5).rev().map(|i| an.get(&format!("q{i}"))).collect();
            w.bind_poly("p", &q);
            Ok("2.3")
        }
    }
}

/// Undoes `u → u + g(x)` when the coefficients of `q` determine `g`
/// algebraically; false when x-dependence remains.
fn b_translate(w: &mut Work) -> Result<bool, ClassifyError> {
    let zero = Expr::zero();
    for _ in 0..5 {
        let an = w.extract(false)?.expect("unrecorded extraction");
        // c[k] multiplies u^k
        let c: Vec<Expr> = (1..=5).rev().map(|i| an.get(&format!("q{i}"))).collect();
        let Some(m) = (0..5).rev().find(|&k| !is_const(&c[k])) else { return Ok(true) };
        let g = if m < 4 && is_const(&c[m + 1]) && zero_test(&c[m + 1]) != Zero::Yes {
            if zero_test(&c[m + 1]) == Zero::Unknown {
                w.diagnostics.push(format!("assuming {} is nonzero", c[m + 1]));
            }
            c[m].sub(&at_x(&c[m], &zero)?).div(&c[m + 1].scale(&q_int(m as i64 + 1)))?.neg()
        } else if m == 0 && c[1..].iter().all(|e| zero_test(e) == Zero::Yes) {
            integrate_plain(&c[0].sub(&at_x(&c[0], &zero)?), GenId::x())?.neg()
        } else {
            return Ok(false);
        };
        w.translate(&g)?;
    }
    Ok(false)
}

fn is_linear_flow(h: &Hamiltonian) -> Result<bool, ClassifyError> {
    let f = flow(h)?;
    let top = f.rhs().jet_order().unwrap_or(0);
    for i in 0..=top {
        let d = f.rhs().diff_jet(i)?;
        for j in 0..=top {
            if !d.diff_jet(j)?.is_zero() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Full pipeline: class detection, ansatz, conditions, normalization, and
/// a replay check of the emitted trail.
pub fn identify(h: &Hamiltonian) -> Result<ClassificationResult, ClassifyError> {
    let mut r = normalize_algebraic(h)?;
    if is_linear_flow(h)? && r.canonical_id != LINEAR_ID {
        r.diagnostics.push("the flow is affine in the jet variables".into());
        if !r.is_classified() {
            r.canonical_id = LINEAR_ID.to_string();
        }
    }
    if r.is_classified() && r.obstructions.is_empty() {
        match r.verify(h)? {
            Equivalence::Equal => {}
            other => r.diagnostics.push(format!("trail replay does not reproduce the canonical form: {other:?}")),
        }
    }
    Ok(r)
}
