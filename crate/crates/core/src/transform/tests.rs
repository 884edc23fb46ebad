use super::*;
use crate::hamiltonian::{catalog_get, flow, hamiltonians_equivalent};
use crate::syntax::parse_expr;

fn p(s: &str) -> Expr {
    parse_expr(s).unwrap()
}

fn ham(s: &str) -> Hamiltonian {
    Hamiltonian::new(p(s)).unwrap()
}

fn same(a: &Expr, b: &Expr) -> bool {
    equivalent(a, b).is_equal()
}

fn target(id: &str) -> Expr {
    let e = catalog_get(id).unwrap();
    e.flow.ctx.normalize(e.printed_flow).unwrap()
}

fn catalog_flow(id: &str, param: Option<(&str, &str)>) -> FlowEquation {
    let mut f = catalog_get(id).unwrap().flow;
    if let Some((name, value)) = param {
        let g = f.rhs().subs_param(name, &p(value)).unwrap();
        f = FlowEquation::with_context(g, f.ctx.clone()).unwrap();
    }
    f
}

#[test]
fn delta_of_generators() {
    assert!(PointTransform::identity().is_canonical().is_equal());
    assert!(PointTransform::linear(&p("x^3 + 2*x"), &p("x^2")).unwrap().is_canonical().is_equal());
    assert!(PointTransform::remark1_shift(&p("u^2")).unwrap().is_canonical().is_equal());
    assert!(PointTransform::scaling(&p("3")).unwrap().is_canonical().is_equal());
    let t = PointTransform::new(p("2*x"), p("u")).unwrap();
    assert_eq!(t.delta, p("2"));
}

#[test]
fn non_canonical_is_refused() {
    let t = PointTransform::new(p("2*x"), p("u")).unwrap();
    let h = ham("-(1/2)*u1^2 + (1/3)*u^3");
    assert!(matches!(transform_hamiltonian(&h, &t), Err(TransformError::NotCanonical(_))));
    assert!(matches!(push_flow(&flow(&h).unwrap(), &t), Err(TransformError::NotCanonical(_))));
}

#[test]
fn identity_is_identity() {
    let h = ham("-(1/2)*u1^2 + (1/3)*u^3");
    assert_eq!(transform_hamiltonian(&h, &PointTransform::identity()).unwrap().h, h.h);
    let f = flow(&h).unwrap();
    assert_eq!(push_flow(&f, &PointTransform::identity()).unwrap().rhs(), f.rhs());
}

#[test]
fn linear_example_multiplies_by_f_prime() {
    let h = ham("-(1/2)*u1^2 + x*u^3");
    let f = p("x^2 + x");
    let t = PointTransform::linear(&f, &Expr::zero()).unwrap();
    let ht = transform_hamiltonian(&h, &t).unwrap();
    // H evaluated in the new variables, times f'
    let fp = p("2*x + 1");
    let u1 = p("u1/(2*x + 1)^2 - 2*u/(2*x + 1)^3");
    let expect = p("-(1/2)").mul(&u1.powi(2).unwrap()).add(&f.mul(&p("u").div(&fp).unwrap().powi(3).unwrap())).mul(&fp);
    assert!(same(&ht.h, &expect));
}

#[test]
fn remark1_form() {
    let h = ham("-(1/2)*u1^2 + (1/3)*u^3");
    let t = PointTransform::remark1_shift(&p("u^2")).unwrap();
    let ht = transform_hamiltonian(&h, &t).unwrap();
    let d = p("2*u*u1 + 1");
    let expect = d.mul(&p("-(1/2)").mul(&p("u1").div(&d).unwrap().powi(2).unwrap()).add(&p("(1/3)*u^3")));
    assert!(same(&ht.h, &expect));
}

#[test]
fn composition_multiplies_deltas() {
    let a = PointTransform::new(p("2*x"), p("u + x")).unwrap();
    let b = PointTransform::new(p("x + u"), p("3*u")).unwrap();
    let ab = a.then(&b).unwrap();
    let sub = Substitution::new().bind(GenId::x(), b.phi.clone()).bind_jet(0, b.psi.clone());
    assert!(same(&ab.delta, &sub.apply(&a.delta).unwrap().mul(&b.delta)));
}

#[test]
fn special_examples() {
    let kdv = ham("-(1/2)*u1^2 + (1/3)*u^3");
    let g = special(&Special::Galilean { c: p("c") }, &kdv).unwrap();
    assert_eq!(g.h, p("-(1/2)*u1^2 + (1/3)*u^3 - (1/2)*c*u^2"));
    let one = Expr::one();
    let d = special(&Special::Dilatation { alpha: one.clone(), beta: one.clone(), gamma: one }, &kdv).unwrap();
    assert_eq!(d.h, kdv.h);
    let b = ham("c*x*u + 4*u1^(1/2)");
    assert_eq!(special(&Special::ShiftCt { c: p("c") }, &b).unwrap().h, p("4*u1^(1/2)"));
    assert!(special(&Special::ShiftCt { c: p("c") }, &kdv).is_err());
    assert!(special(&Special::Galilean { c: p("c") }, &ham("-(1/2)*u1^2 + x*u^3")).is_err());
}

#[test]
fn special_flow_matches_hamiltonian_side() {
    let kdv = ham("-(1/2)*u1^2 + (1/3)*u^3 + u^4");
    let kinds = [
        Special::Dilatation { alpha: p("2"), beta: p("3"), gamma: p("5") },
        Special::Dilatation { alpha: p("a"), beta: p("b"), gamma: p("g") },
        Special::Galilean { c: p("c") },
    ];
    for k in &kinds {
        let lhs = flow(&special(k, &kdv).unwrap()).unwrap();
        let rhs = special_flow(k, &flow(&kdv).unwrap()).unwrap();
        assert!(same(lhs.rhs(), rhs.rhs()), "{k:?}");
    }
    let b = ham("c*x*u + 4*(u1 + u^2)^(1/2)");
    let b = Hamiltonian::new(b.h.sub(&p("4*(u1 + u^2)^(1/2)")).add(&p("4*u1^(1/2)"))).unwrap();
    let k = Special::ShiftCt { c: p("c") };
    let lhs = flow(&special(&k, &b).unwrap()).unwrap();
    let rhs = special_flow(&k, &flow(&b).unwrap()).unwrap();
    assert!(same(lhs.rhs(), rhs.rhs()));
}

#[test]
fn dilatation_on_kdv_flow() {
    let kdv = ham("-(1/2)*u1^2 + (1/3)*u^3");
    let t = PointTransform::scaling(&p("2")).unwrap();
    let lhs = flow(&transform_hamiltonian(&kdv, &t).unwrap()).unwrap();
    let rhs = push_flow(&flow(&kdv).unwrap(), &t).unwrap();
    assert!(same(lhs.rhs(), rhs.rhs()));
    assert!(same(rhs.rhs(), &p("(1/8)*u3 + (1/2)*u*u1")));
}

#[test]
fn commuting_square_generators() {
    let hs = [ham("-(1/2)*u1^2 + (1/3)*u^3"), catalog_get("2.1c").unwrap().hamiltonian.unwrap()];
    let ts = [
        PointTransform::linear(&p("x^2 + 3*x"), &p("x - 1")).unwrap(),
        PointTransform::remark1_shift(&p("2*u^2 + u")).unwrap(),
        PointTransform::scaling(&p("-3/2")).unwrap(),
        PointTransform::linear(&p("x^3 + x"), &Expr::zero())
            .unwrap()
            .then(&PointTransform::remark1_shift(&p("u")).unwrap())
            .unwrap(),
    ];
    for h in &hs {
        for t in &ts {
            let lhs = flow(&transform_hamiltonian(h, t).unwrap()).unwrap();
            let rhs = push_flow(&flow(h).unwrap(), t).unwrap();
            assert!(same(lhs.rhs(), rhs.rhs()), "{} under {:?}", h.h, t);
        }
    }
}

#[test]
fn reciprocal_rejects_bad_input() {
    let f = catalog_flow("2.13", None);
    assert!(reciprocal(&f, &p("1"), &p("u2")).is_err());
    let f = catalog_flow("2.1c", None);
    assert!(reciprocal(&f, &p("u1"), &p("0")).is_err());
    assert!(matches!(reciprocal(&f, &p("u"), &p("u")), Err(TransformError::NotConserved { .. })));
}

#[test]
fn reciprocal_with_unit_density_is_a_shift() {
    let f = FlowEquation::new(p("u3 + u*u1")).unwrap();
    let theta = conserved_flux(&f, &p("1")).unwrap();
    assert!(theta.is_zero());
    let g = reciprocal(&f, &p("1"), &theta).unwrap();
    assert_eq!(g.rhs(), f.rhs());
}

#[test]
fn chain_21c_to_exp_form() {
    let f = catalog_flow("2.1c", None);
    let rho = p("u");
    let theta = conserved_flux(&f, &rho).unwrap();
    let v = reciprocal(&f, &rho, &theta).unwrap();
    let w = point_substitute(&v, &p("exp(u)")).unwrap();
    assert!(same(w.rhs(), &target("cd-exp")), "{}", w.rhs());
}

#[test]
fn chain_21d_to_mkdv() {
    let f = catalog_flow("2.1d", Some(("c", "0")));
    let rho = p("u^2");
    let theta = conserved_flux(&f, &rho).unwrap();
    let v = reciprocal(&f, &rho, &theta).unwrap();
    let w = point_substitute(&v, &p("1/u")).unwrap();
    assert!(same(w.rhs(), &target("mkdv-w")), "{}", w.rhs());
}

#[test]
fn chain_21d_to_tanh_form() {
    let f = catalog_flow("2.1d", Some(("c", "-(1/4)*k^2")));
    let rho = p("u^2 - (1/4)*k^2");
    let theta = conserved_flux(&f, &rho).unwrap();
    let v = reciprocal(&f, &rho, &theta).unwrap();
    let w = point_substitute(&v, &p("(k/2)*(exp(u) - 1)/(exp(u) + 1)")).unwrap();
    let c = galilean_search(w.rhs(), &target("cd-tanh")).expect("a Galilean shift relates the two forms");
    assert!(c.is_parametric_constant());
    assert!(same(&galilean_flow(w.rhs(), &c), &target("cd-tanh")));
}

#[test]
fn chain_22_to_krichever_novikov() {
    let f = catalog_flow("2.2", None);
    let pot = potential_form(&f).unwrap();
    let printed = p("u3/u1^3 - 3*u2^2/(2*u1^4) + (p0 + p1*x + p2*x^2 + p3*x^3 + p4*x^4)*u1^2");
    assert!(same(pot.rhs(), &printed));
    let kn = hodograph(&pot).unwrap();
    assert!(same(kn.rhs(), &target("kn")), "{}", kn.rhs());
}

#[test]
fn hodograph_is_an_involution() {
    let f = FlowEquation::new(p("u3 - (1/2)*u1^3")).unwrap();
    let back = hodograph(&hodograph(&f).unwrap()).unwrap();
    assert!(same(back.rhs(), f.rhs()));
}

#[test]
fn potential_form_needs_exact_flow() {
    let f = FlowEquation::new(p("u3 + u^2")).unwrap();
    assert!(potential_form(&f).is_err());
}

#[test]
fn point_substitute_identity() {
    let f = FlowEquation::new(p("u3 + u*u1")).unwrap();
    assert_eq!(point_substitute(&f, &p("u")).unwrap().rhs(), f.rhs());
    assert!(point_substitute(&f, &p("3")).is_err());
}

#[test]
fn trail_json_round_trip_and_replay() {
    let mut trail = TransformTrail::new();
    trail.push(TrailStep::Point(PointTransform::scaling(&p("2")).unwrap()));
    trail.push(TrailStep::Special(Special::Galilean { c: p("c") }));
    trail.push(TrailStep::Special(Special::Dilatation { alpha: p("1"), beta: p("1/2"), gamma: p("3") }));
    let js = trail.to_json();
    let back = TransformTrail::from_json(&js).unwrap();
    assert_eq!(back, trail);
    let kdv = ham("-(1/2)*u1^2 + (1/3)*u^3");
    let h2 = trail.replay_hamiltonian(&kdv).unwrap();
    let f2 = trail.replay_flow(&flow(&kdv).unwrap()).unwrap();
    assert!(same(flow(&h2).unwrap().rhs(), f2.rhs()));
    assert!(hamiltonians_equivalent(&back.replay_hamiltonian(&kdv).unwrap().h, &h2.h).unwrap().is_equal());
}

#[test]
fn trail_rejects_garbage() {
    assert!(TransformTrail::from_json(&serde_json::json!([{ "kind": "twist" }])).is_err());
    assert!(TransformTrail::from_json(&serde_json::json!({})).is_err());
    let t = TransformTrail { steps: vec![TrailStep::Hodograph] };
    assert!(t.replay_hamiltonian(&ham("-(1/2)*u1^2")).is_err());
}
