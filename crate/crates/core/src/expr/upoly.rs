//! Univariate polynomials with expression coefficients, and rational
//! integration by Hermite reduction.

use super::gen::GenId;
use super::scalar::{exp_int, q_int};
use super::{Expr, ExprError};

/// Polynomial in one generator; `coeffs[i]` multiplies `z^i`.
#[derive(Clone, Debug, PartialEq)]
pub struct UPoly {
    pub coeffs: Vec<Expr>,
}

impl UPoly {
    pub fn zero() -> Self {
        UPoly { coeffs: vec![] }
    }

    pub fn constant(c: Expr) -> Self {
        UPoly::from_coeffs(vec![c])
    }

    pub fn from_coeffs(mut coeffs: Vec<Expr>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        UPoly { coeffs }
    }

    /// Reads `e` as a polynomial in `z`; `None` if `z` occurs otherwise.
    pub fn from_expr(e: &Expr, z: GenId) -> Option<Self> {
        let parts = e.coefficients_in(z)?;
        let mut coeffs = Vec::new();
        for (k, c) in parts {
            if !k.is_integer() || k < exp_int(0) {
                return None;
            }
            let k = k.to_integer() as usize;
            if coeffs.len() <= k {
                coeffs.resize(k + 1, Expr::zero());
            }
            coeffs[k] = c;
        }
        Some(UPoly::from_coeffs(coeffs))
    }

    pub fn to_expr(&self, z: GenId) -> Expr {
        let zx = Expr::gen(z);
        let mut acc = Expr::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(&zx).add(c);
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial has degree -1.
    pub fn degree(&self) -> isize {
        self.coeffs.len() as isize - 1
    }

    fn lead(&self) -> &Expr {
        self.coeffs.last().expect("leading coefficient of zero polynomial")
    }

    pub fn add(&self, o: &UPoly) -> UPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        UPoly::from_coeffs(
            (0..n)
                .map(|i| match (self.coeffs.get(i), o.coeffs.get(i)) {
                    (Some(a), Some(b)) => a.add(b),
                    (Some(a), None) => a.clone(),
                    (None, Some(b)) => b.clone(),
                    (None, None) => Expr::zero(),
                })
                .collect(),
        )
    }

    pub fn sub(&self, o: &UPoly) -> UPoly {
        self.add(&o.scale(&Expr::int(-1)))
    }

    pub fn scale(&self, k: &Expr) -> UPoly {
        UPoly::from_coeffs(self.coeffs.iter().map(|c| c.mul(k)).collect())
    }

    pub fn mul(&self, o: &UPoly) -> UPoly {
        if self.is_zero() || o.is_zero() {
            return UPoly::zero();
        }
        let mut out = vec![Vec::new(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j].push(a.mul(b));
            }
        }
        UPoly::from_coeffs(out.into_iter().map(|v| v.into_iter().sum()).collect())
    }

    pub fn pow(&self, k: u32) -> UPoly {
        (0..k).fold(UPoly::constant(Expr::one()), |acc, _| acc.mul(self))
    }

    pub fn derivative(&self) -> UPoly {
        UPoly::from_coeffs(self.coeffs.iter().enumerate().skip(1).map(|(i, c)| c.scale(&q_int(i as i64))).collect())
    }

    /// Quotient and remainder.
    pub fn divrem(&self, d: &UPoly) -> Result<(UPoly, UPoly), ExprError> {
        if d.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        let inv = d.lead().inv()?;
        let mut r = self.coeffs.clone();
        let dd = d.coeffs.len();
        if r.len() < dd {
            return Ok((UPoly::zero(), self.clone()));
        }
        let mut q = vec![Expr::zero(); r.len() - dd + 1];
        for i in (0..q.len()).rev() {
            let c = r[i + dd - 1].mul(&inv);
            if c.is_zero() {
                continue;
            }
            for (j, dc) in d.coeffs.iter().enumerate() {
                r[i + j] = r[i + j].sub(&c.mul(dc));
            }
            q[i] = c;
        }
        r.truncate(dd - 1);
        Ok((UPoly::from_coeffs(q), UPoly::from_coeffs(r)))
    }

    pub fn rem(&self, d: &UPoly) -> Result<UPoly, ExprError> {
        Ok(self.divrem(d)?.1)
    }

    /// `(g, s, t)` with `s*a + t*b = g` and `g` monic.
    pub fn ext_gcd(a: &UPoly, b: &UPoly) -> Result<(UPoly, UPoly, UPoly), ExprError> {
        let (mut r0, mut r1) = (a.clone(), b.clone());
        let (mut s0, mut s1) = (UPoly::constant(Expr::one()), UPoly::zero());
        let (mut t0, mut t1) = (UPoly::zero(), UPoly::constant(Expr::one()));
        while !r1.is_zero() {
            let (q, r) = r0.divrem(&r1)?;
            let s = s0.sub(&q.mul(&s1));
            let t = t0.sub(&q.mul(&t1));
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s);
            t0 = std::mem::replace(&mut t1, t);
        }
        if r0.is_zero() {
            return Ok((r0, s0, t0));
        }
        let inv = r0.lead().inv()?;
        Ok((r0.scale(&inv), s0.scale(&inv), t0.scale(&inv)))
    }

    /// Antiderivative of a polynomial.
    pub fn integrate(&self) -> UPoly {
        let mut c = vec![Expr::zero()];
        c.extend(self.coeffs.iter().enumerate().map(|(i, a)| a.scale(&q_int(i as i64 + 1).recip())));
        UPoly::from_coeffs(c)
    }
}

/// Integrates `num / prod(f_i^k_i)` with respect to `z`, assuming the
/// factors are squarefree and pairwise coprime. Fails with `Unsupported`
/// when the antiderivative has a logarithmic part.
pub fn integrate_rational(num: &UPoly, factors: &[(UPoly, u32)], z: GenId) -> Result<Expr, ExprError> {
    let mut den = UPoly::constant(Expr::one());
    for (f, k) in factors {
        den = den.mul(&f.pow(*k));
    }
    let (q, mut r) = num.divrem(&den)?;
    let mut result = q.integrate().to_expr(z);
    if r.is_zero() {
        return Ok(result);
    }
    // split into partial fractions over the given factors
    let mut rest_den = den;
    let mut parts: Vec<(UPoly, UPoly, u32)> = Vec::new();
    for (i, (f, k)) in factors.iter().enumerate() {
        let a = f.pow(*k);
        if i + 1 == factors.len() {
            parts.push((r.clone(), f.clone(), *k));
            break;
        }
        let b = rest_den.divrem(&a)?.0;
        let (g, s, t) = UPoly::ext_gcd(&a, &b)?;
        if g.degree() != 0 {
            return Err(ExprError::Unsupported("denominator factors are not coprime".into()));
        }
        // r/(a b) = r t / a + r s / b
        parts.push((r.mul(&t).rem(&a)?, f.clone(), *k));
        r = r.mul(&s).rem(&b)?;
        rest_den = b;
    }
    for (mut p, f, mut k) in parts {
        let df = f.derivative();
        let (g, _, t) = UPoly::ext_gcd(&f, &df)?;
        if g.degree() != 0 {
            return Err(ExprError::Unsupported("denominator factor is not squarefree".into()));
        }
        while k > 1 {
            // p = s2 f + t2 f' with deg t2 < deg f
            let t2 = p.mul(&t).rem(&f)?;
            let s2 = p.sub(&t2.mul(&df)).divrem(&f)?;
            if !s2.1.is_zero() {
                return Err(ExprError::Unsupported("inexact Hermite step".into()));
            }
            let km1 = Expr::int(k as i64 - 1);
            let term = t2.to_expr(z).div(&km1)?.div(&f.to_expr(z).powi(k as i64 - 1)?)?;
            result = result.sub(&term);
            p = s2.0.add(&t2.derivative().scale(&km1.inv()?));
            k -= 1;
            let (pq, pr) = p.divrem(&f.pow(k))?;
            result = result.add(&pq.integrate().to_expr(z));
            p = pr;
        }
        if !p.rem(&f)?.is_zero() {
            let rest = p.to_expr(z).div(&f.to_expr(z))?;
            return Err(ExprError::Unsupported(format!("logarithmic integral of {rest}")));
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u() -> Expr {
        Expr::u()
    }

    #[test]
    fn hermite_reduces_to_rational_antiderivative() {
        let z = GenId::jet(0);
        // d/du (u / (u^2 + 1)^2) = (1 - 3u^2) / (u^2 + 1)^3
        let f = UPoly::from_expr(&u().mul(&u()).add(&Expr::one()), z).unwrap();
        let num = UPoly::from_expr(&Expr::one().sub(&u().mul(&u()).scale(&q_int(3))), z).unwrap();
        let got = integrate_rational(&num, &[(f, 3)], z).unwrap();
        let want = u().div(&u().mul(&u()).add(&Expr::one()).powi(2).unwrap()).unwrap();
        assert_eq!(got, want);
    }

    #[test]
    fn logarithmic_part_is_rejected() {
        let z = GenId::jet(0);
        let f = UPoly::from_expr(&u().add(&Expr::one()), z).unwrap();
        let num = UPoly::constant(Expr::one());
        assert!(integrate_rational(&num, &[(f, 1)], z).is_err());
    }

    #[test]
    fn ext_gcd_identity() {
        let z = GenId::jet(0);
        let a = UPoly::from_expr(&u().mul(&u()).add(&Expr::param("c")), z).unwrap();
        let b = a.derivative();
        let (g, s, t) = UPoly::ext_gcd(&a, &b).unwrap();
        assert_eq!(g.degree(), 0);
        assert!(s.mul(&a).add(&t.mul(&b)).sub(&g).is_zero());
    }
}
