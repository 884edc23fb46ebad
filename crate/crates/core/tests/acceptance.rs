//! Acceptance suite. Prints one PASS/FAIL line per criterion; pass criterion
//! numbers as arguments to run a subset.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use hamflow::classify::{check_conditions, identify};
use hamflow::densities::{
    calibrate, check_integrability, even_triviality_of, CheckOptions, FlowEquation, Status,
};
use hamflow::expr::{equivalent, Equivalence, Expr, GenId};
use hamflow::hamiltonian::{catalog_get, catalog_ids, catalog_verify, flow, Hamiltonian};
use hamflow::jet::{integrate_plain, integrate_total, total_x, variational_derivative};
use hamflow::syntax::{parse_expr, print_text};
use hamflow::transform::{
    conserved_flux, galilean_flow, galilean_search, hodograph, point_substitute, potential_form, push_flow,
    reciprocal, transform_hamiltonian, PointTransform, Special, TrailStep,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMARY: [&str; 8] = ["2.1", "2.1a", "2.1b", "2.1c", "2.1d", "2.2", "2.3", "2.13"];

type Criterion = fn() -> Result<String, String>;

fn p(s: &str) -> Expr {
    parse_expr(s).unwrap_or_else(|e| panic!("`{s}`: {e}"))
}

fn ham(s: &str) -> Hamiltonian {
    Hamiltonian::new(p(s)).unwrap()
}

fn same(a: &Expr, b: &Expr) -> bool {
    equivalent(a, b).is_equal()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn catalog_h(id: &str) -> Hamiltonian {
    catalog_get(id).unwrap().hamiltonian.unwrap()
}

fn catalog_flow(id: &str, param: Option<(&str, &str)>) -> FlowEquation {
    let mut f = catalog_get(id).unwrap().flow;
    if let Some((name, value)) = param {
        let g = f.rhs().subs_param(name, &p(value)).unwrap();
        f = FlowEquation::with_context(g, f.ctx.clone()).unwrap();
    }
    f
}

fn target(id: &str) -> Expr {
    let e = catalog_get(id).unwrap();
    e.flow.ctx.normalize(e.printed_flow).unwrap()
}

fn nonzero_q(rng: &mut ChaCha8Rng) -> &'static str {
    ["1", "-1", "2", "-2", "3", "1/2", "-1/3", "3/2"].choose(rng).unwrap()
}

fn small_int(rng: &mut ChaCha8Rng) -> i64 {
    rng.gen_range(-3..=3)
}

/// Random polynomial in `var` of exact degree `deg` (nonzero leading coefficient).
fn poly(rng: &mut ChaCha8Rng, var: &str, deg: usize) -> String {
    let mut terms = Vec::new();
    for k in 0..=deg {
        let c = if k == deg { nonzero_q(rng).to_string() } else { small_int(rng).to_string() };
        terms.push(format!("({c})*{var}^{k}"));
    }
    terms.join(" + ")
}

// 1

fn catalog_pass() -> Result<String, String> {
    let mut notes = Vec::new();
    for id in PRIMARY {
        let entry = catalog_get(id).unwrap();
        let n = if entry.has_radicals { 3 } else { 5 };
        let t = Instant::now();
        let r = catalog_verify(id, n, &CheckOptions::default()).map_err(|e| format!("{id}: {e}"))?;
        let secs = t.elapsed().as_secs_f64();
        ensure(r.passed(), || format!("{id} at n = {n}: {:?}", r.sequence.status))?;
        let budget = if entry.has_radicals { 600.0 } else { 60.0 };
        let over = if secs > budget { " over budget" } else { "" };
        notes.push(format!("{id}@{n} {secs:.1}s{over}"));
    }
    Ok(notes.join(", "))
}

// 2

fn even_triviality() -> Result<String, String> {
    let mut count = 0;
    for id in catalog_ids() {
        let entry = catalog_get(id).unwrap();
        if entry.hamiltonian.is_none() {
            continue;
        }
        let seq = check_integrability(&entry.flow, 2).map_err(|e| format!("{id}: {e}"))?;
        ensure(seq.status == Status::Ok, || format!("{id}: {:?}", seq.status))?;
        let tri = even_triviality_of(&seq).map_err(|e| format!("{id}: {e}"))?;
        for n in [0, 2] {
            let t = tri.iter().find(|t| t.n == n).ok_or_else(|| format!("{id}: no rho_{n}"))?;
            ensure(t.exact, || format!("{id}: rho_{n} not exact, E = {}", t.residual))?;
        }
        count += 1;
    }
    Ok(format!("rho_0, rho_2 exact on {count} Hamiltonians"))
}

// 3

fn recursion_calibration() -> Result<String, String> {
    let mut corrected = Vec::new();
    for id in catalog_ids() {
        let f = catalog_get(id).unwrap().flow;
        let c = calibrate(&f).map_err(|e| format!("{id}: {e}"))?;
        ensure(c.rho0_agrees_mod_im_dx || c.rho0_matches_correction, || {
            format!("{id}: rho_0 discrepancy {} is neither trivial nor the fixed correction", c.rho0_discrepancy)
        })?;
        ensure(c.rho1_agrees_mod_im_dx, || format!("{id}: rho_1 discrepancy {}", c.rho1_discrepancy))?;
        if !c.rho0_agrees_mod_im_dx {
            corrected.push(*id);
        }
    }
    let n = catalog_ids().len();
    if corrected.is_empty() {
        Ok(format!("{n} entries; rho_0 and rho_1 agree with the closed forms mod Im D_x"))
    } else {
        Ok(format!("{n} entries; rho_0 differs by the fixed correction -F2(a^3 - a)/3 on [{}]", corrected.join(", ")))
    }
}

// 4

fn negative_controls() -> Result<String, String> {
    let quintic = flow(&ham("-(1/2)*u1^2 + u^5/5")).unwrap();
    let s = check_integrability(&quintic, 1).unwrap().status;
    ensure(matches!(s, Status::Violated { n: 1, .. }), || format!("quintic: {s:?}"))?;

    let h = ham("-(1/2)*u1^2 + (1/4)*x*u^4 + (1/3)*u^3");
    let report = check_conditions(&h).unwrap();
    let violated: Vec<_> = report.violated().map(|r| r.relation.label.clone()).collect();
    ensure(violated.iter().any(|l| l == "q1' = 0"), || format!("q1 = x: violated {violated:?}"))?;
    let s = check_integrability(&flow(&h).unwrap(), 1).unwrap().status;
    ensure(matches!(s, Status::Violated { n: 1, .. }), || format!("q1 = x flow: {s:?}"))?;
    Ok("quintic and q1 = x both violated at n = 1".into())
}

// 5

fn random_point(rng: &mut ChaCha8Rng, depth: u32) -> PointTransform {
    match rng.gen_range(0..if depth == 0 { 3 } else { 4 }) {
        0 => {
            let deg = rng.gen_range(1..=3);
            let gdeg = rng.gen_range(0..=2);
            PointTransform::linear(&p(&poly(rng, "x", deg)), &p(&poly(rng, "x", gdeg))).unwrap()
        }
        1 => {
            let deg = rng.gen_range(1..=2);
            PointTransform::remark1_shift(&p(&poly(rng, "u", deg))).unwrap()
        }
        2 => PointTransform::scaling(&p(nonzero_q(rng))).unwrap(),
        _ => random_point(rng, 0).then(&random_point(rng, 0)).unwrap(),
    }
}

fn commuting_square() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let hs = [("KdV", ham("-(1/2)*u1^2 + (1/3)*u^3")), ("2.1c", catalog_h("2.1c"))];
    let mut count = 0;
    for _ in 0..24 {
        let t = random_point(&mut rng, 1);
        ensure(t.is_canonical().is_equal(), || format!("not canonical: {t:?}"))?;
        for (name, h) in &hs {
            let lhs = flow(&transform_hamiltonian(h, &t).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            let rhs = push_flow(&flow(h).unwrap(), &t).map_err(|e| e.to_string())?;
            ensure(same(lhs.rhs(), rhs.rhs()), || format!("{name} under x = {}, u = {}", t.phi, t.psi))?;
            count += 1;
        }
    }
    Ok(format!("{count} squares (24 transforms x 2 Hamiltonians)"))
}

// 6

fn chains() -> Result<String, String> {
    let f = catalog_flow("2.1c", None);
    let theta = conserved_flux(&f, &p("u")).map_err(|e| e.to_string())?;
    let v = reciprocal(&f, &p("u"), &theta).map_err(|e| e.to_string())?;
    let w = point_substitute(&v, &p("exp(u)")).map_err(|e| e.to_string())?;
    ensure(same(w.rhs(), &target("cd-exp")), || format!("2.1c chain gave {}", w.rhs()))?;

    let f = catalog_flow("2.1d", Some(("c", "0")));
    let theta = conserved_flux(&f, &p("u^2")).map_err(|e| e.to_string())?;
    let v = reciprocal(&f, &p("u^2"), &theta).map_err(|e| e.to_string())?;
    let w = point_substitute(&v, &p("1/u")).map_err(|e| e.to_string())?;
    ensure(same(w.rhs(), &target("mkdv-w")), || format!("2.1d (c = 0) chain gave {}", w.rhs()))?;

    let f = catalog_flow("2.1d", Some(("c", "-(1/4)*k^2")));
    let rho = p("u^2 - (1/4)*k^2");
    let theta = conserved_flux(&f, &rho).map_err(|e| e.to_string())?;
    let v = reciprocal(&f, &rho, &theta).map_err(|e| e.to_string())?;
    let w = point_substitute(&v, &p("(k/2)*(exp(u) - 1)/(exp(u) + 1)")).map_err(|e| e.to_string())?;
    let c = galilean_search(w.rhs(), &target("cd-tanh")).ok_or("tanh chain: no Galilean shift")?;
    ensure(same(&galilean_flow(w.rhs(), &c), &target("cd-tanh")), || "tanh chain mismatch".into())?;

    let pot = potential_form(&catalog_flow("2.2", None)).map_err(|e| e.to_string())?;
    let kn = hodograph(&pot).map_err(|e| e.to_string())?;
    ensure(same(kn.rhs(), &target("kn")), || format!("2.2 chain gave {}", kn.rhs()))?;
    Ok(format!("4 chains exact; tanh chain Galilean parameter c = {c}"))
}

// 7

struct Sample {
    h: String,
    satisfying: bool,
}

fn integrate_x(e: &Expr) -> Expr {
    integrate_plain(e, GenId::x()).unwrap()
}

fn a1_sample(rng: &mut ChaCha8Rng, satisfying: bool) -> Sample {
    let c = p(nonzero_q(rng));
    let deg = rng.gen_range(0..=2);
    let q2 = p(&poly(rng, "x", deg));
    let mut q1 = c.clone();
    let mut q3 = q2.mul(&q2).div(&c.mul(&p("3"))).unwrap().add(&Expr::int(small_int(rng)));
    let d = |e: &Expr| e.diff(GenId::x()).unwrap();
    let q4_rate = d(&d(&d(&q2))).mul(&p("2")).add(&d(&q2).mul(&q3).mul(&p("2"))).div(&c.mul(&p("6"))).unwrap();
    let mut q4 = integrate_x(&q4_rate).add(&Expr::int(small_int(rng)));
    if !satisfying {
        match rng.gen_range(0..3) {
            0 => q1 = q1.add(&Expr::x()),
            1 => q3 = q3.add(&Expr::x()),
            _ => q4 = q4.add(&Expr::x()),
        }
    }
    let h = format!("-(1/2)*u1^2 + ({q1})*u^4/4 + ({q2})*u^3/3 + ({q3})*u^2/2 + ({q4})*u");
    Sample { h, satisfying }
}

fn a2_sample(rng: &mut ChaCha8Rng, satisfying: bool) -> Sample {
    let a = nonzero_q(rng);
    let b = [0, 1, -1, 2].choose(rng).unwrap();
    let q2 = p(&format!("{a} + ({b})*x"));
    let k = p(nonzero_q(rng));
    let m = Expr::int(small_int(rng));
    let mut q1 = k.mul(&q2).mul(&q2);
    let mut q3 = m.div(&q2.mul(&q2)).unwrap();
    let mut q4 = Expr::int(small_int(rng));
    if !satisfying {
        match rng.gen_range(0..3) {
            0 => q1 = q1.add(&Expr::x()),
            1 if *b != 0 => q3 = q3.add(&Expr::one()),
            _ => q4 = q4.add(&Expr::x()),
        }
    }
    let h = format!("-u1^2/(2*u^3) + ({q1})*u^3/3 + ({q2})*u^2/2 + ({q4})*u - ({q3})/u");
    Sample { h, satisfying }
}

fn b_sample(rng: &mut ChaCha8Rng, satisfying: bool) -> Sample {
    let c = p(nonzero_q(rng));
    let b = Expr::int(*[0, 1, -1].choose(rng).unwrap());
    let h2 = b.mul(&Expr::x()).add(&Expr::int(small_int(rng)));
    let k = |rng: &mut ChaCha8Rng| Expr::int(small_int(rng));
    let mut q1 = p(nonzero_q(rng));
    let mut q2 = h2.mul(&q1).mul(&p("4")).div(&c).unwrap().add(&k(rng));
    let q3 = integrate_x(&q2).mul(&b).mul(&p("3")).div(&c).unwrap().add(&k(rng));
    let q4 = integrate_x(&q3).mul(&b).mul(&p("2")).div(&c).unwrap().add(&k(rng));
    let q5 = integrate_x(&q4).mul(&b).div(&c).unwrap().add(&k(rng));
    let mut q3 = q3;
    if !satisfying {
        match rng.gen_range(0..3) {
            0 => q1 = q1.add(&Expr::x()),
            1 => q2 = q2.add(&Expr::x()),
            _ => q3 = q3.add(&Expr::x()),
        }
    }
    let h = format!(
        "({c})*u^2/2 + ({h2})*u + 4*(u1 + ({q1})*u^4 + ({q2})*u^3 + ({q3})*u^2 + ({q4})*u + ({q5}))^(1/2)"
    );
    Sample { h, satisfying }
}

fn condition_fidelity() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let systems: [(&str, fn(&mut ChaCha8Rng, bool) -> Sample); 3] =
        [("A.1", a1_sample), ("A.2", a2_sample), ("B", b_sample)];
    let mut summary = Vec::new();
    for (name, gen) in systems {
        let mut fail_at = std::collections::BTreeMap::new();
        for i in 0..20 {
            let s = gen(&mut rng, i % 2 == 0);
            let h = ham(&s.h);
            let report = check_conditions(&h).map_err(|e| format!("{name} {}: {e}", s.h))?;
            let holds = report.all_hold();
            ensure(holds == s.satisfying, || {
                format!("{name}: conditions hold = {holds} for {} ({:?})", s.h, report.violated().collect::<Vec<_>>())
            })?;
            let status = check_integrability(&flow(&h).unwrap(), 1).map_err(|e| e.to_string())?.status;
            match (&status, s.satisfying) {
                (Status::Ok, true) => {}
                (Status::Violated { n, .. }, false) if *n <= 1 => *fail_at.entry(*n).or_insert(0) += 1,
                _ => return Err(format!("{name}: {} gave {status:?}", s.h)),
            }
        }
        let at: Vec<String> = fail_at.iter().map(|(n, k)| format!("{k} at n = {n}")).collect();
        summary.push(format!("{name} 10+10 ({})", at.join(", ")));
    }
    Ok(summary.join("; "))
}

// 8

fn random_step(rng: &mut ChaCha8Rng) -> TrailStep {
    let q = |rng: &mut ChaCha8Rng| p(nonzero_q(rng));
    match rng.gen_range(0..6) {
        0 => TrailStep::Special(Special::Dilatation { alpha: q(rng), beta: q(rng), gamma: q(rng) }),
        1 => TrailStep::Special(Special::Galilean { c: q(rng) }),
        2 => TrailStep::Special(Special::ShiftCt { c: q(rng) }),
        3 => {
            let f = format!("({})*x + ({})", nonzero_q(rng), small_int(rng));
            let gdeg = rng.gen_range(0..=2);
            TrailStep::Point(PointTransform::linear(&p(&f), &p(&poly(rng, "x", gdeg))).unwrap())
        }
        4 => TrailStep::Point(PointTransform::translation(&q(rng)).unwrap()),
        _ => TrailStep::Point(PointTransform::scaling(&q(rng)).unwrap()),
    }
}

fn random_word(rng: &mut ChaCha8Rng, h: &Hamiltonian) -> (Hamiltonian, Vec<String>) {
    let len = rng.gen_range(1..=3);
    let mut h = h.clone();
    let mut names = Vec::new();
    while names.len() < len {
        let step = random_step(rng);
        // steps whose preconditions fail are redrawn
        if let Ok(next) = step.apply_hamiltonian(&h) {
            h = next;
            names.push(step.name().to_string());
        }
    }
    (h, names)
}

fn classifier_soundness() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut count = 0;
    for id in PRIMARY {
        let base = catalog_h(id);
        let mut inputs = vec![(base.clone(), vec![])];
        for _ in 0..3 {
            inputs.push(random_word(&mut rng, &base));
        }
        for (h, word) in inputs {
            let c = identify(&h).map_err(|e| format!("{id} {word:?}: {e}"))?;
            ensure(c.catalog_id() == Some(id), || {
                format!("{id} after {word:?}: got {} ({:?})", c.canonical_id, c.diagnostics)
            })?;
            ensure(c.obstructions.is_empty(), || format!("{id} after {word:?}: {:?}", c.obstructions))?;
            let eq = c.verify(&h).map_err(|e| e.to_string())?;
            ensure(eq == Equivalence::Equal, || format!("{id} after {word:?}: replay {eq:?}"))?;
            count += 1;
        }
    }
    Ok(format!("{count} inputs (8 catalog forms + 24 random words)"))
}

// 9

fn atom() -> impl Strategy<Value = &'static str> {
    prop_oneof![
        Just("x"),
        Just("u"),
        Just("u1"),
        Just("u2"),
        Just("u3"),
        Just("a"),
        Just("b"),
        Just("exp(u)"),
        Just("(u1^2 + 1)^(1/2)"),
        Just("(u + 2)^(-1)"),
        Just("f(u)"),
        Just("f'(u)"),
        Just("g(x)"),
    ]
}

fn rational_atom() -> impl Strategy<Value = &'static str> {
    prop_oneof![
        Just("x"),
        Just("u"),
        Just("u1"),
        Just("u2"),
        Just("u3"),
        Just("a"),
        Just("(u + 2)^(-1)"),
        Just("(u1^2 + x)^(-1)"),
        Just("(a*u + 1)^(-1)"),
    ]
}

fn expr_source() -> BoxedStrategy<String> {
    source_from(atom().boxed())
}

fn source_from(atoms: BoxedStrategy<&'static str>) -> BoxedStrategy<String> {
    let factor = (atoms, 1u32..=3).prop_map(|(a, k)| format!("({a})^{k}"));
    let term = (-5i64..=5, 1i64..=4, prop::collection::vec(factor, 0..=3))
        .prop_map(|(n, d, fs)| std::iter::once(format!("({n}/{d})")).chain(fs).collect::<Vec<_>>().join("*"));
    prop::collection::vec(term, 1..=4).prop_map(|ts| ts.join(" + ")).boxed()
}

fn run_property(name: &str, f: impl Fn(Expr) -> Result<(), TestCaseError>) -> Result<(), String> {
    run_property_on(name, expr_source(), f)
}

fn run_property_on(
    name: &str,
    source: BoxedStrategy<String>,
    f: impl Fn(Expr) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config { cases: 1000, failure_persistence: None, ..Config::default() });
    runner.run(&source, |src| f(p(&src))).map_err(|e| format!("{name}: {e}"))
}

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if ok {
        Ok(())
    } else {
        Err(TestCaseError::fail(what()))
    }
}

fn property_suites() -> Result<String, String> {
    run_property("Euler of D_x", |e| {
        let r = variational_derivative(&total_x(&e).unwrap()).unwrap();
        check(r.is_zero(), || format!("E(D_x({e})) = {r}"))
    })?;
    run_property("D_x / d/du_i commutation", |e| {
        let de = total_x(&e).unwrap();
        for i in 0..=3u32 {
            let lhs = de.diff_jet(i).unwrap();
            let mut rhs = total_x(&e.diff_jet(i).unwrap()).unwrap();
            if i > 0 {
                rhs = rhs.add(&e.diff_jet(i - 1).unwrap());
            }
            check(lhs == rhs, || format!("i = {i}, e = {e}"))?;
        }
        Ok(())
    })?;
    run_property_on("integrate_total round trip", source_from(rational_atom().boxed()), |e| {
        let de = total_x(&e).unwrap();
        let back = integrate_total(&de).map_err(|err| TestCaseError::fail(format!("{e}: {err}")))?;
        let diff = back.sub(&e);
        check(diff.is_parametric_constant(), || format!("integrate_total(D_x({e})) - e = {diff}"))
    })?;
    run_property("parser round trip", |e| {
        let printed = print_text(&e);
        let back = parse_expr(&printed).map_err(|err| TestCaseError::fail(format!("{printed}: {err}")))?;
        check(back == e, || format!("{printed} reparsed as {back}"))
    })?;
    Ok("4 suites x 1000 cases".into())
}

fn main() {
    let criteria: [(&str, Criterion); 9] = [
        ("catalog pass", catalog_pass),
        ("even triviality", even_triviality),
        ("recursion calibration", recursion_calibration),
        ("negative controls", negative_controls),
        ("transform commuting square", commuting_square),
        ("transformation chains", chains),
        ("condition-system fidelity", condition_fidelity),
        ("classifier soundness", classifier_soundness),
        ("kernel property suites", property_suites),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let k = i + 1;
        if !only.is_empty() && !only.contains(&k) {
            continue;
        }
        let t = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panic: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("PASS criterion {k} ({name}) [{secs:.1}s]: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {k} ({name}) [{secs:.1}s]: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

