use super::*;
use crate::syntax::parse_expr;

fn p(s: &str) -> Expr {
    parse_expr(s).unwrap()
}

#[test]
fn total_x_basic() {
    assert_eq!(total_x(&p("u^2*u1")).unwrap(), p("2*u*u1^2 + u^2*u2"));
    assert_eq!(total_x(&p("x*u")).unwrap(), p("u + x*u1"));
    assert_eq!(total_x(&p("a")).unwrap(), Expr::zero());
}

#[test]
fn total_x_respects_bound() {
    let ctx = JetContext { max_order: 3, ..Default::default() };
    assert!(matches!(ctx.total_x(&p("u3")), Err(ExprError::JetOrder { order: 4, bound: 3 })));
}

#[test]
fn euler_of_kdv_hamiltonian() {
    // H = -u1^2/2 + u^3  gives  E(H) = u2 + 3u^2
    assert_eq!(variational_derivative(&p("-(1/2)*u1^2 + u^3")).unwrap(), p("u2 + 3*u^2"));
}

#[test]
fn euler_kills_total_derivatives() {
    for s in ["u^3*u1", "u1*u2/u", "x*u1 + u", "u2*u1^(1/3)"] {
        let t = total_x(&p(s)).unwrap();
        assert!(variational_derivative(&t).unwrap().is_zero(), "{s}");
    }
}

#[test]
fn integrate_total_examples() {
    assert_eq!(integrate_total(&p("u1*u2")).unwrap(), p("(1/2)*u1^2"));
    assert_eq!(integrate_total(&p("2*u*u1 + 1")).unwrap(), p("u^2 + x"));
    assert_eq!(integrate_total(&p("u3")).unwrap(), p("u2"));
}

#[test]
fn integrate_total_round_trip() {
    for s in ["u^3*u1^2/(1+u^2)", "exp(u)*u1", "u2^2*u + x^2*u1", "(u1^2+1)^(1/2)", "f(u)^2", "f'(u)^3*u1", "exp(u) + 1/(u + 2)", "exp(2*u)*u/(u^2 + 1)", "u*f(u)", "x^2*f'(u)"] {
        let theta = p(s);
        let t = total_x(&theta).unwrap();
        let back = integrate_total(&t).unwrap();
        assert!(total_x(&back).unwrap().sub(&t).is_zero(), "{s}: {back}");
    }
}

#[test]
fn integrate_total_rejects_non_exact() {
    assert!(matches!(integrate_total(&p("u1^2*u2^2")), Err(JetError::NonlinearTop { .. }) | Err(JetError::NotExact { .. })));
    assert!(matches!(integrate_total(&p("u^2")), Err(JetError::NotExact { .. })));
    let rep = is_exact(&p("u*u2^2")).unwrap();
    assert!(!rep.exact);
    assert!(!rep.residual.is_zero());
}

#[test]
fn is_exact_gives_witness() {
    let rep = is_exact(&p("u*u3 + u1*u2")).unwrap();
    assert!(rep.exact);
    assert_eq!(rep.witness, Some(p("u*u2")));
}

#[test]
fn total_t_kdv_mass() {
    let f = p("u3 + 6*u*u1");
    let dt = total_t(&p("u"), &f).unwrap();
    assert_eq!(dt, f);
    let dt2 = total_t(&p("u^2"), &f).unwrap();
    assert!(is_exact(&dt2).unwrap().exact);
}

#[test]
fn weierstrass_reduction() {
    let w = Weierstrass { name: "phi".into(), g2: p("g2"), g3: p("g3") };
    let ctx = JetContext { reduction: Some(w), ..Default::default() };
    let phi2 = Expr::func("phi", 2, Expr::x()).unwrap();
    assert_eq!(ctx.normalize(phi2).unwrap(), p("6*phi(x)^2 - (1/2)*g2"));
    let sq = Expr::func("phi", 1, Expr::x()).unwrap().powi(2).unwrap();
    assert_eq!(ctx.normalize(sq).unwrap(), p("4*phi(x)^3 - g2*phi(x) - g3"));
    let t = p("6*phi(x)^2 - (1/2)*g2");
    let theta = ctx.integrate_total(&t).unwrap();
    assert_eq!(theta, Expr::func("phi", 1, Expr::x()).unwrap());
}
