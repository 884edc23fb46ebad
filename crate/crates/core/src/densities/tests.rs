use super::*;
use crate::syntax::parse_expr;

fn p(s: &str) -> Expr {
    parse_expr(s).unwrap()
}

fn flow(s: &str) -> FlowEquation {
    FlowEquation::new(p(s)).unwrap()
}

#[test]
fn separant_examples() {
    assert_eq!(separant_density(&flow("u3 + 2*u*u1")).unwrap(), Expr::one());
    assert_eq!(separant_density(&flow("u3/u^3")).unwrap(), p("u"));
    assert!(FlowEquation::new(p("u2")).is_err());
}

#[test]
fn multi_index_sum_examples() {
    let rhos: BTreeMap<i64, Expr> = (-1..=2).map(|i| (i, p(&format!("r{}", i + 1)))).collect();
    assert_eq!(multi_index_sum(&rhos, -1, -2, 2).unwrap(), p("r0^2"));
    assert_eq!(multi_index_sum(&rhos, -1, -1, 2).unwrap(), p("2*r0*r1"));
    assert_eq!(multi_index_sum(&rhos, 0, -1, 3).unwrap(), Expr::zero());
    assert_eq!(multi_index_sum(&rhos, 0, 0, 3).unwrap(), p("r1^3"));
    assert_eq!(multi_index_sum(&rhos, 0, 1, 3).unwrap(), p("3*r1^2*r2"));
    assert!(multi_index_sum(&rhos, 0, 1, 4).is_err());
}

#[test]
fn kdv_first_densities() {
    let f = flow("u3 + 2*u*u1");
    let seq = check_integrability(&f, 3).unwrap();
    assert_eq!(seq.status, Status::Ok);
    assert_eq!(seq.rho(-1), Some(&Expr::one()));
    assert_eq!(seq.rho(0), Some(&Expr::zero()));
    assert_eq!(seq.rho(1), Some(&p("-(2/3)*u")));
    assert_eq!(closed_form_rho(1, &f, &Expr::zero()).unwrap(), p("-(2/3)*u"));
}

#[test]
fn stored_fluxes_balance() {
    let f = flow("u3 + 6*u^2*u1");
    let seq = check_integrability(&f, 3).unwrap();
    assert_eq!(seq.status, Status::Ok);
    for e in &seq.entries {
        let t = crate::jet::total_t(&e.rho, f.rhs()).unwrap();
        let th = e.theta.as_ref().unwrap();
        assert!(crate::jet::total_x(th).unwrap().sub(&t).is_zero(), "n = {}", e.n);
    }
}

#[test]
fn quintic_potential_violates_third_condition() {
    // H = -u1^2/2 + u^5/5
    let f = flow("u3 + 4*u^3*u1");
    let seq = check_integrability(&f, 1).unwrap();
    assert!(matches!(seq.status, Status::Violated { n: 1, .. }), "{:?}", seq.status);
}

#[test]
fn linear_flow_passes() {
    assert_eq!(check_integrability(&flow("u3"), 5).unwrap().status, Status::Ok);
}

#[test]
fn recursion_at_minus_two_with_flat_f2() {
    // F2 = 0: rho_0 = -D_x ln rho_-1
    let f = flow("u3/x^3");
    let cal = calibrate(&f).unwrap();
    assert_eq!(cal.rho0_recursion, p("-1/x"));
    assert!(cal.rho0_discrepancy.is_zero());
}

#[test]
fn calibration_on_cd_flow() {
    let f = flow("(2*c1*u^6*u1 - 2*c2*u^2*u1 + u^2*u3 - 6*u*u1*u2 + 6*u1^3)/u^5");
    let cal = calibrate(&f).unwrap();
    assert_eq!(cal.rho0_recursion, p("u1/u"));
    assert!(cal.rho0_matches_correction);
    assert!(cal.rho0_agrees_mod_im_dx);
    assert!(cal.rho1_agrees_mod_im_dx);
}

#[test]
fn even_densities_of_mkdv_are_trivial() {
    let f = flow("u3 + 3*u^2*u1");
    let rep = hamiltonian_even_triviality(&f, 2).unwrap();
    assert_eq!(rep.len(), 2);
    assert!(rep.iter().all(|r| r.exact));
}

#[test]
fn deterministic() {
    let f = flow("u3 + 3*u^2*u1");
    let a = check_integrability(&f, 3).unwrap();
    let b = check_integrability(&f, 3).unwrap();
    assert_eq!(a.entries, b.entries);
}

#[test]
fn node_budget_reports_resource() {
    let f = flow("u3 + 3*u^2*u1");
    let seq = check_integrability_with(&f, 3, &CheckOptions { node_budget: 3, timeout: None }).unwrap();
    assert!(matches!(seq.status, Status::Resource { .. }), "{:?}", seq.status);
}
