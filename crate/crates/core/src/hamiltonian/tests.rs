use super::*;
use crate::densities::{CheckOptions, Status};
use crate::syntax::parse_expr;

fn p(s: &str) -> Expr {
    parse_expr(s).unwrap()
}

fn ham(s: &str) -> Hamiltonian {
    Hamiltonian::new(p(s)).unwrap()
}

#[test]
fn kdv_and_mkdv_flows() {
    assert_eq!(flow(&ham("-(1/2)*u1^2 + (1/3)*u^3")).unwrap().rhs(), &p("u3 + 2*u*u1"));
    assert_eq!(flow(&ham("-(1/2)*u1^2 + (1/4)*u^4")).unwrap().rhs(), &p("u3 + 3*u^2*u1"));
}

#[test]
fn degenerate_and_high_order_rejected() {
    assert_eq!(Hamiltonian::new(p("u^3")), Err(HamiltonianError::Degenerate));
    assert!(matches!(Hamiltonian::new(p("u2^2")), Err(HamiltonianError::Order(2))));
}

#[test]
fn separants() {
    assert_eq!(separant_from_h(&ham("-(1/2)*u1^2")).unwrap(), Expr::one());
    assert_eq!(separant_from_h(&ham("-u1^2/(2*u^3) + c1*u^3")).unwrap(), p("u"));
    let h = ham("4*(u1 + u^2)^(1/2)");
    assert_eq!(separant_from_h(&h).unwrap(), p("(u1 + u^2)^(1/2)"));
}

#[test]
fn equivalence_examples() {
    let kdv = p("-(1/2)*u1^2 + (1/3)*u^3");
    assert!(hamiltonians_equivalent(&kdv, &kdv.add(&p("lam*u"))).unwrap().is_equal());
    assert!(hamiltonians_equivalent(&kdv, &kdv.add(&p("u*u1"))).unwrap().is_equal());
    assert!(hamiltonians_equivalent(&kdv, &p("-(1/2)*u1^2 + (1/4)*u^4")).unwrap().is_different());
}

#[test]
fn catalog_flows_match_printed_forms() {
    for id in catalog_ids() {
        let e = catalog_get(id).unwrap();
        let printed = e.flow.ctx.normalize(e.printed_flow.clone()).unwrap();
        assert!(equivalent(e.flow.rhs(), &printed).is_equal(), "{id}: {} vs {}", e.flow.rhs(), printed);
        let sep = crate::densities::separant_density(&e.flow).unwrap();
        assert!(equivalent(&sep, &e.expected_separant).is_equal(), "{id}: separant {sep}");
        if let Some(h) = &e.hamiltonian {
            assert!(equivalent(&separant_from_h(h).unwrap(), &sep).is_equal(), "{id}");
        }
    }
}

#[test]
fn catalog_unknown_id() {
    assert!(matches!(catalog_get("2.99"), Err(HamiltonianError::UnknownId(_))));
}

#[test]
fn verify_kdv() {
    let r = catalog_verify("2.1b", 3, &CheckOptions::default()).unwrap();
    assert!(r.passed(), "{:?}", r.sequence.status);
    assert_eq!(r.sequence.status, Status::Ok);
}

#[test]
fn cd_b_denominator() {
    // P = u^4 + u + 1, Q = 4P
    let (q, dq, d2q) = ("(4*u^4 + 4*u + 4)", "(16*u^3 + 4)", "48*u^2");
    let form = |den: &str| {
        let f = p(&format!("u3 - (3/8)*({dq}*u1 + 2*u1*u2)^2/(u1*({den})) + (1/2)*{d2q}*u1"));
        crate::densities::check_integrability(&FlowEquation::new(f).unwrap(), 1).unwrap().status
    };
    assert_eq!(form(&format!("u1^2 + {q}")), Status::Ok);
    assert!(matches!(form(&format!("u1 + {q}")), Status::Violated { n, .. } if n <= 0));
}

#[test]
fn radical_flags() {
    for (id, r) in [("2.1", false), ("2.1d", false), ("2.1c", false), ("2.3", true), ("cd-B", false)] {
        assert_eq!(catalog_get(id).unwrap().has_radicals, r, "{id}");
    }
}
