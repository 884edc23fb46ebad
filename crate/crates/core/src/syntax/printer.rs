//! Text and LaTeX printers.
//!
//! Text output is accepted back by the parser and yields the same expression.

use num_traits::{One, Signed};

use crate::expr::tree::{Atom, Tree};
use crate::expr::{Exp, Expr, Q};

pub fn print_text(e: &Expr) -> String {
    text(&Tree::from_expr(e))
}

pub fn print_latex(e: &Expr) -> String {
    latex(&Tree::from_expr(e))
}

fn exp_text(e: Exp) -> String {
    if e.is_integer() && e.is_positive() {
        e.to_string()
    } else {
        format!("({e})")
    }
}

fn q_text(q: &Q) -> String {
    if q.is_integer() {
        q.to_string()
    } else {
        format!("({q})")
    }
}

fn atom_text(a: &Atom) -> String {
    match a {
        Atom::X => "x".into(),
        Atom::Jet(0) => "u".into(),
        Atom::Jet(n) => format!("u{n}"),
        Atom::Param(name) => name.to_string(),
        Atom::Func { name, order, arg } => format!("{name}{}({})", "'".repeat(*order as usize), text(arg)),
    }
}

/// Splits a leading negative numeric factor off a term.
fn split_sign(t: &Tree) -> (bool, Tree) {
    match t {
        Tree::Num(q) if q.is_negative() => (true, Tree::Num(-q)),
        Tree::Product(fs) => match fs.first() {
            Some(Tree::Num(q)) if q.is_negative() => {
                let mut fs = fs.clone();
                if (-q).is_one() {
                    fs.remove(0);
                } else {
                    fs[0] = Tree::Num(-q);
                }
                let t = if fs.len() == 1 { fs.pop().unwrap() } else { Tree::Product(fs) };
                (true, t)
            }
            _ => (false, t.clone()),
        },
        _ => (false, t.clone()),
    }
}

fn is_atomic(t: &Tree) -> bool {
    match t {
        Tree::Num(q) => q.is_integer() && !q.is_negative(),
        Tree::Atom(_) | Tree::Exp(_) => true,
        _ => false,
    }
}

fn factor_text(t: &Tree) -> String {
    match t {
        Tree::Sum(_) => format!("({})", text(t)),
        Tree::Num(q) => q_text(q),
        Tree::Product(_) => {
            let s = text(t);
            if s.starts_with('-') {
                format!("({s})")
            } else {
                s
            }
        }
        _ => text(t),
    }
}

fn power_text(base: &Tree, e: Exp) -> String {
    let b = if is_atomic(base) { text(base) } else { format!("({})", text(base)) };
    format!("{b}^{}", exp_text(e))
}

fn product_text(fs: &[Tree]) -> String {
    let mut num: Vec<String> = Vec::new();
    let mut den: Vec<String> = Vec::new();
    for f in fs {
        match f {
            Tree::Power(b, e) if e.is_negative() && !matches!(**b, Tree::Atom(_)) => {
                if (-*e).is_one() {
                    den.push(factor_text(b));
                } else {
                    den.push(power_text(b, -*e));
                }
            }
            _ => num.push(factor_text(f)),
        }
    }
    let n = if num.is_empty() { "1".to_string() } else { num.join("*") };
    match den.len() {
        0 => n,
        1 => format!("{n}/{}", den[0]),
        _ => format!("{n}/({})", den.join("*")),
    }
}

pub(crate) fn text(t: &Tree) -> String {
    match t {
        Tree::Num(q) => q.to_string(),
        Tree::Atom(a) => atom_text(a),
        Tree::Exp(arg) => format!("exp({})", text(arg)),
        Tree::Power(b, e) => power_text(b, *e),
        Tree::Product(fs) => {
            let (neg, rest) = split_sign(t);
            if neg {
                let body = match &rest {
                    Tree::Product(fs) => product_text(fs),
                    other => factor_text(other),
                };
                format!("-{body}")
            } else {
                product_text(fs)
            }
        }
        Tree::Sum(ts) => {
            let mut s = String::new();
            for (i, term) in ts.iter().enumerate() {
                let (neg, body) = split_sign(term);
                let body = match &body {
                    Tree::Product(fs) => product_text(fs),
                    Tree::Num(q) => q.to_string(),
                    other => text(other),
                };
                match (i, neg) {
                    (0, true) => s.push('-'),
                    (0, false) => {}
                    (_, true) => s.push_str(" - "),
                    (_, false) => s.push_str(" + "),
                }
                s.push_str(&body);
            }
            s
        }
    }
}

fn latex_name(name: &str) -> String {
    let split = name.find(|c: char| c.is_ascii_digit());
    let (head, digits) = match split {
        Some(i) if name[i..].chars().all(|c| c.is_ascii_digit()) => (&name[..i], &name[i..]),
        _ => (name, ""),
    };
    let head = match head {
        "alpha" | "beta" | "gamma" | "delta" | "lambda" | "mu" | "phi" | "psi" | "theta" | "rho" | "kappa" => {
            format!("\\{head}")
        }
        h if h.chars().count() > 1 => format!("\\mathrm{{{h}}}"),
        h => h.to_string(),
    };
    if digits.is_empty() {
        head
    } else {
        format!("{head}_{{{digits}}}")
    }
}

fn latex_atom(a: &Atom) -> String {
    match a {
        Atom::X => "x".into(),
        Atom::Jet(0) => "u".into(),
        Atom::Jet(n) if *n <= 4 => format!("u_{{{}}}", "x".repeat(*n as usize)),
        Atom::Jet(n) => format!("u_{{{n}}}"),
        Atom::Param(name) => latex_name(name),
        Atom::Func { name, order, arg } => {
            let primes = if *order <= 3 { "'".repeat(*order as usize) } else { format!("^{{({order})}}") };
            format!("{}{primes}\\left({}\\right)", latex_name(name), latex(arg))
        }
    }
}

fn latex_q(q: &Q) -> String {
    if q.is_integer() {
        q.to_string()
    } else {
        let sign = if q.is_negative() { "-" } else { "" };
        format!("{sign}\\frac{{{}}}{{{}}}", q.numer().abs(), q.denom())
    }
}

fn latex_power(b: &Tree, e: Exp) -> String {
    let base = latex(b);
    if e == Exp::new(1, 2) {
        return format!("\\sqrt{{{base}}}");
    }
    let wrapped = if is_atomic(b) { base } else { format!("\\left({base}\\right)") };
    if e.is_integer() {
        format!("{wrapped}^{{{e}}}")
    } else {
        format!("{wrapped}^{{{}/{}}}", e.numer(), e.denom())
    }
}

fn latex_factor(t: &Tree) -> String {
    match t {
        Tree::Sum(_) => format!("\\left({}\\right)", latex(t)),
        _ => latex(t),
    }
}

fn latex_product(fs: &[Tree]) -> String {
    let mut num: Vec<String> = Vec::new();
    let mut den: Vec<String> = Vec::new();
    for f in fs {
        match f {
            Tree::Power(b, e) if e.is_negative() => {
                if (-*e).is_one() {
                    den.push(latex_factor(b));
                } else {
                    den.push(latex_power(b, -*e));
                }
            }
            Tree::Num(q) if !q.is_integer() => {
                num.push(q.numer().to_string());
                den.insert(0, q.denom().to_string());
            }
            _ => num.push(latex_factor(f)),
        }
    }
    let n = if num.is_empty() { "1".to_string() } else { num.join(" ") };
    if den.is_empty() {
        n
    } else {
        format!("\\frac{{{n}}}{{{}}}", den.join(" "))
    }
}

pub(crate) fn latex(t: &Tree) -> String {
    match t {
        Tree::Num(q) => latex_q(q),
        Tree::Atom(a) => latex_atom(a),
        Tree::Exp(arg) => format!("e^{{{}}}", latex(arg)),
        Tree::Power(b, e) => latex_power(b, *e),
        Tree::Product(_) | Tree::Sum(_) => {
            let terms: Vec<&Tree> = match t {
                Tree::Sum(ts) => ts.iter().collect(),
                _ => vec![t],
            };
            let mut s = String::new();
            for (i, term) in terms.into_iter().enumerate() {
                let (neg, body) = split_sign(term);
                let body = match &body {
                    Tree::Product(fs) => latex_product(fs),
                    other => latex(other),
                };
                match (i, neg) {
                    (0, true) => s.push('-'),
                    (0, false) => {}
                    (_, true) => s.push_str(" - "),
                    (_, false) => s.push_str(" + "),
                }
                s.push_str(&body);
            }
            s
        }
    }
}
