//! Sparse multivariate (Laurent–Puiseux) polynomials over the rationals.
//!
//! Monomials carry rational exponents. Terms are kept sorted by a lexicographic
//! monomial order on generator ids, which makes structural equality of two
//! polynomials coincide with equality of their term sets.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use num_traits::{One, Signed, Zero};
use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use super::gen::GenId;
use super::scalar::{Exp, Q};

/// A product of generator powers, sorted by generator id, no zero exponents.
#[derive(Clone, PartialEq, Eq, Hash, Default, Debug)]
pub struct Mono(SmallVec<[(GenId, Exp); 4]>);

impl Mono {
    pub fn one() -> Self {
        Mono(SmallVec::new())
    }

    pub fn var(g: GenId, e: Exp) -> Self {
        if e.is_zero() {
            Mono::one()
        } else {
            Mono(smallvec::smallvec![(g, e)])
        }
    }

    pub fn from_pairs(mut pairs: Vec<(GenId, Exp)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let mut out: SmallVec<[(GenId, Exp); 4]> = SmallVec::new();
        for (g, e) in pairs {
            match out.last_mut() {
                Some(last) if last.0 == g => last.1 += e,
                _ => out.push((g, e)),
            }
        }
        out.retain(|p| !p.1.is_zero());
        Mono(out)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(GenId, Exp)> + '_ {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn exp_of(&self, g: GenId) -> Exp {
        match self.0.binary_search_by_key(&g, |p| p.0) {
            Ok(i) => self.0[i].1,
            Err(_) => Exp::zero(),
        }
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        self.combine(other, false)
    }

    pub fn div(&self, other: &Mono) -> Mono {
        self.combine(other, true)
    }

    fn combine(&self, other: &Mono, negate: bool) -> Mono {
        let (a, b) = (&self.0, &other.0);
        let mut out: SmallVec<[(GenId, Exp); 4]> = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                out.push(a[i]);
                i += 1;
            } else if i == a.len() || b[j].0 < a[i].0 {
                let e = if negate { -b[j].1 } else { b[j].1 };
                out.push((b[j].0, e));
                j += 1;
            } else {
                let e = if negate { a[i].1 - b[j].1 } else { a[i].1 + b[j].1 };
                if !e.is_zero() {
                    out.push((a[i].0, e));
                }
                i += 1;
                j += 1;
            }
        }
        Mono(out)
    }

    pub fn pow(&self, e: Exp) -> Mono {
        if e.is_zero() {
            return Mono::one();
        }
        Mono(self.0.iter().map(|&(g, x)| (g, x * e)).collect())
    }

    /// Replaces the exponent of `g` (removing it when zero).
    pub fn with_exp(&self, g: GenId, e: Exp) -> Mono {
        let mut v = self.0.clone();
        match v.binary_search_by_key(&g, |p| p.0) {
            Ok(i) => {
                if e.is_zero() {
                    v.remove(i);
                } else {
                    v[i].1 = e;
                }
            }
            Err(i) => {
                if !e.is_zero() {
                    v.insert(i, (g, e));
                }
            }
        }
        Mono(v)
    }

    pub fn without(&self, g: GenId) -> Mono {
        self.with_exp(g, Exp::zero())
    }

    pub fn retain(&mut self, mut f: impl FnMut(&(GenId, Exp)) -> bool) {
        self.0.retain(|p| f(p))
    }
}

impl Ord for Mono {
    /// Lexicographic order on exponent vectors, smaller generator id first.
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        let zero = Exp::zero();
        loop {
            match (a.get(i), b.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(&(_, ea)), None) => return ea.cmp(&zero),
                (None, Some(&(_, eb))) => return zero.cmp(&eb),
                (Some(&(ga, ea)), Some(&(gb, eb))) => {
                    if ga == gb {
                        if ea != eb {
                            return ea.cmp(&eb);
                        }
                        i += 1;
                        j += 1;
                    } else if ga < gb {
                        return ea.cmp(&zero);
                    } else {
                        return zero.cmp(&eb);
                    }
                }
            }
        }
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sum of rational multiples of monomials, sorted by descending monomial.
#[derive(Clone, PartialEq, Eq, Default, Debug)]
pub struct Poly {
    terms: Vec<(Mono, Q)>,
}

impl Hash for Poly {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.terms.len().hash(state);
        for (m, c) in &self.terms {
            m.hash(state);
            c.hash(state);
        }
    }
}

impl Poly {
    pub fn zero() -> Self {
        Poly { terms: Vec::new() }
    }

    pub fn constant(c: Q) -> Self {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly { terms: vec![(Mono::one(), c)] }
        }
    }

    pub fn monomial(m: Mono, c: Q) -> Self {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly { terms: vec![(m, c)] }
        }
    }

    /// Collects like terms from an arbitrary list.
    pub fn from_terms(terms: impl IntoIterator<Item = (Mono, Q)>) -> Self {
        let mut acc: FxHashMap<Mono, Q> = FxHashMap::default();
        for (m, c) in terms {
            if c.is_zero() {
                continue;
            }
            match acc.get_mut(&m) {
                Some(v) => *v += c,
                None => {
                    acc.insert(m, c);
                }
            }
        }
        Self::from_map(acc)
    }

    pub fn from_map(acc: FxHashMap<Mono, Q>) -> Self {
        let mut terms: Vec<(Mono, Q)> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        terms.sort_unstable_by(|a, b| b.0.cmp(&a.0));
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[(Mono, Q)] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<(Mono, Q)> {
        self.terms
    }

    pub fn leading(&self) -> Option<&(Mono, Q)> {
        self.terms.first()
    }

    /// The constant value if the polynomial has no generators.
    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.as_slice() {
            [] => Some(Q::zero()),
            [(m, c)] if m.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    pub fn gens(&self) -> Vec<GenId> {
        let mut v: Vec<GenId> = self.terms.iter().flat_map(|(m, _)| m.iter().map(|p| p.0)).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn add(&self, other: &Poly) -> Poly {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        // merge of two sorted lists
        let (a, b) = (&self.terms, &other.terms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            if j == b.len() {
                out.push(a[i].clone());
                i += 1;
            } else if i == a.len() {
                out.push(b[j].clone());
                j += 1;
            } else {
                match a[i].0.cmp(&b[j].0) {
                    Ordering::Greater => {
                        out.push(a[i].clone());
                        i += 1;
                    }
                    Ordering::Less => {
                        out.push(b[j].clone());
                        j += 1;
                    }
                    Ordering::Equal => {
                        let c = &a[i].1 + &b[j].1;
                        if !c.is_zero() {
                            out.push((a[i].0.clone(), c));
                        }
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
        Poly { terms: out }
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &Q) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect() }
    }

    pub fn mul_term(&self, m: &Mono, k: &Q) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        // multiplying by a monomial preserves the order
        Poly { terms: self.terms.iter().map(|(t, c)| (t.mul(m), c * k)).collect() }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if other.len() == 1 {
            let (m, c) = &other.terms[0];
            return self.mul_term(m, c);
        }
        if self.len() == 1 {
            let (m, c) = &self.terms[0];
            return other.mul_term(m, c);
        }
        let mut acc: FxHashMap<Mono, Q> =
            FxHashMap::with_capacity_and_hasher(self.len() * other.len() / 2 + 1, Default::default());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = ma.mul(mb);
                let c = ca * cb;
                match acc.get_mut(&m) {
                    Some(v) => *v += c,
                    None => {
                        acc.insert(m, c);
                    }
                }
            }
        }
        Poly::from_map(acc)
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut result = Poly::constant(Q::one());
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// `r` with `r^k == self` and leading coefficient positive, if one exists.
    pub fn kth_root(&self, k: u32) -> Option<Poly> {
        let (lm, lc) = self.leading()?;
        let kk = Exp::from_integer(k as i64);
        if lm.iter().any(|(_, e)| !e.is_integer() || !(e / kk).is_integer()) {
            return None;
        }
        let lc_root = {
            let n = super::scalar::int_root(&lc.numer().abs(), k)?;
            let d = super::scalar::int_root(lc.denom(), k)?;
            if lc.is_negative() && k % 2 == 0 {
                return None;
            }
            let r = Q::new(n, d);
            if lc.is_negative() { -r } else { r }
        };
        let lead = Poly::monomial(lm.pow(Exp::one() / kk), lc_root);
        // k * lead^(k-1)
        let denom = lead.pow(k - 1).scale(&Q::from_integer(k.into()));
        let (dm, dc) = denom.leading()?.clone();
        let mut root = lead;
        for _ in 0..=self.len() {
            let diff = self.sub(&root.pow(k));
            let Some((m, c)) = diff.leading() else { return Some(root) };
            let tm = m.div(&dm);
            if tm.iter().any(|(_, e)| e.is_negative()) && !lm.iter().any(|(_, e)| e.is_negative()) {
                return None;
            }
            if tm >= root.terms.last()?.0 {
                return None;
            }
            root = root.add(&Poly::monomial(tm, c / &dc));
        }
        None
    }

    /// Minimum and maximum exponent of every generator (absent counts as 0).
    fn exponent_box(&self) -> FxHashMap<GenId, (Exp, Exp)> {
        let mut bx: FxHashMap<GenId, (Exp, Exp)> = FxHashMap::default();
        for g in self.gens() {
            bx.insert(g, (Exp::zero(), Exp::zero()));
        }
        let mut first = true;
        for (m, _) in &self.terms {
            for (g, entry) in bx.iter_mut() {
                let e = m.exp_of(*g);
                if first {
                    *entry = (e, e);
                } else {
                    entry.0 = entry.0.min(e);
                    entry.1 = entry.1.max(e);
                }
            }
            first = false;
        }
        bx
    }

    /// Exact division: returns `q` with `q * divisor == self`, or `None`.
    ///
    /// Greedy leading-term division. Candidate quotient monomials are checked
    /// against the exponent box implied by the degrees of both operands, which
    /// keeps the loop finite in the presence of negative and rational exponents.
    pub fn exact_div(&self, divisor: &Poly) -> Option<Poly> {
        if divisor.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if divisor.len() == 1 {
            let (m, c) = &divisor.terms[0];
            return Some(self.mul_term(&Mono::one().div(m), &c.recip()));
        }
        let nb = self.exponent_box();
        let fb = divisor.exponent_box();
        let mut bounds: FxHashMap<GenId, (Exp, Exp)> = FxHashMap::default();
        for (g, (nmin, nmax)) in &nb {
            let (fmin, fmax) = fb.get(g).copied().unwrap_or((Exp::zero(), Exp::zero()));
            bounds.insert(*g, (*nmin - fmin, *nmax - fmax));
        }
        for (g, (fmin, fmax)) in &fb {
            if !nb.contains_key(g) {
                bounds.insert(*g, (-*fmin, -*fmax));
            }
        }
        if bounds.values().any(|(lo, hi)| lo > hi) {
            return None;
        }
        let (lt_m, lt_c) = divisor.terms[0].clone();
        let mut rem: BTreeMap<Mono, Q> = self.terms.iter().cloned().collect();
        let mut quot: Vec<(Mono, Q)> = Vec::new();
        while let Some((m, c)) = rem.pop_last() {
            let qm = m.div(&lt_m);
            for (g, (lo, hi)) in &bounds {
                let e = qm.exp_of(*g);
                if e < *lo || e > *hi {
                    return None;
                }
            }
            if qm.iter().any(|(g, _)| !bounds.contains_key(g)) {
                return None;
            }
            let qc = &c / &lt_c;
            for (fm, fc) in divisor.terms.iter().skip(1) {
                let key = qm.mul(fm);
                let delta = &qc * fc;
                match rem.get_mut(&key) {
                    Some(v) => {
                        *v -= &delta;
                        if v.is_zero() {
                            rem.remove(&key);
                        }
                    }
                    None => {
                        rem.insert(key, -delta);
                    }
                }
            }
            quot.push((qm, qc));
        }
        // quotient monomials were produced in strictly decreasing order
        Some(Poly { terms: quot })
    }

    /// Rational content (positive) of the coefficients.
    pub fn content(&self) -> Q {
        super::scalar::q_gcd_content(self.terms.iter().map(|t| &t.1))
    }

    /// Componentwise minimum exponent over all terms (absent counts as 0).
    pub fn monomial_content(&self) -> Mono {
        let bx = self.exponent_box();
        Mono::from_pairs(bx.into_iter().map(|(g, (lo, _))| (g, lo)).collect())
    }

    pub fn map_terms(&self, mut f: impl FnMut(&Mono, &Q) -> (Mono, Q)) -> Poly {
        Poly::from_terms(self.terms.iter().map(|(m, c)| f(m, c)))
    }

    pub fn has_negative_leading(&self) -> bool {
        self.terms.first().is_some_and(|(_, c)| c.is_negative())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::gen::GenId;
    use crate::expr::scalar::{exp_int, q_int};

    fn var(n: u32) -> Poly {
        Poly::monomial(Mono::var(GenId::jet(n), exp_int(1)), q_int(1))
    }

    #[test]
    fn exact_division_of_product() {
        let a = var(0).add(&Poly::constant(q_int(1)));
        let b = var(1).add(&var(0).pow(2)).add(&Poly::constant(q_int(3)));
        let p = a.mul(&b);
        assert_eq!(p.exact_div(&a), Some(b.clone()));
        assert_eq!(p.exact_div(&b), Some(a.clone()));
        assert_eq!(p.add(&var(2)).exact_div(&a), None);
    }

    #[test]
    fn exact_division_with_laurent_terms() {
        let inv = Poly::monomial(Mono::var(GenId::jet(0), exp_int(-2)), q_int(1));
        let a = var(0).add(&var(1));
        let p = a.mul(&inv.add(&var(1)));
        assert_eq!(p.exact_div(&a), Some(inv.add(&var(1))));
    }
}
