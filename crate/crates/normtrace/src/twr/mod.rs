//! Exact symbolic arithmetic in the tower field T_m = K(x_0, ..., x_m).
//!
//! T_m is realized as the iterated quotient T_i = T_{i-1}[x_i]/(x_i^q + x_i - rho_i)
//! with rho_i = x_{i-1}^q / (x_{i-1}^{q-1} + 1).  An element is a nested
//! polynomial of degree < q in each x_i with reduced rational-function
//! coefficients in x_0; reduction is eager, so equality of canonical forms is
//! field equality.

pub mod ratfunc;

use crate::error::{Error, Result};
use crate::gf::{Fe, FieldCtx};
use ratfunc::{Poly, RatFunc};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

/// Element of T_m in canonical form.  `Ext` vectors have length >= 2 and no
/// trailing zero; a lone coefficient collapses to the lower level.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TowerElem {
    Base(RatFunc),
    Ext { level: usize, coeffs: Vec<TowerElem> },
}

impl TowerElem {
    pub fn level(&self) -> usize {
        match self {
            TowerElem::Base(_) => 0,
            TowerElem::Ext { level, .. } => *level,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, TowerElem::Base(rf) if rf.is_zero())
    }

    /// Total base-coefficient count; a cheap proxy for representation size.
    fn size(&self) -> usize {
        match self {
            TowerElem::Base(rf) => rf.num.0.len() + rf.den.0.len(),
            TowerElem::Ext { coeffs, .. } => coeffs.iter().map(TowerElem::size).sum(),
        }
    }
}

/// Finite value or the point at infinity, as seen from P_infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Val {
    Finite(Fe),
    Infinity,
}

/// Memo tables for substitutions against one fixed image vector.  Closure
/// generators reuse most coefficient subtrees and denominators, so sharing a
/// cache across a whole generator sweep collapses the sweep to the distinct
/// subexpressions.  Invalid once the images change; build a fresh one then.
#[derive(Default)]
pub struct SubstCache {
    memo: HashMap<TowerElem, TowerElem>,
    inverses: HashMap<TowerElem, TowerElem>,
    /// powers[x][k] = x^k; shared across every coefficient evaluated at the
    /// same image, so repeated evaluations cost additions, not products.
    powers: HashMap<TowerElem, Vec<TowerElem>>,
}

pub struct TowerCtx {
    pub field: Arc<FieldCtx>,
    pub m: usize,
    /// rho[i] (1-indexed) is the Artin-Schreier right-hand side at level i,
    /// an element of T_{i-1}.
    rho: Vec<TowerElem>,
    /// Canonical forms of 1/x_i; these are expensive to recompute and appear
    /// in every reflection-shaped map.
    inv_gens: Vec<TowerElem>,
}

impl TowerCtx {
    pub fn new(field: Arc<FieldCtx>, m: usize) -> Result<TowerCtx> {
        if m > 6 {
            return Err(Error::InvalidArg(format!("tower height {m} exceeds cap 6")));
        }
        let mut ctx = TowerCtx {
            field,
            m,
            rho: vec![TowerElem::Base(RatFunc::zero())],
            inv_gens: Vec::new(),
        };
        let q = ctx.field.q.q as u64;
        for i in 1..=m {
            let x = ctx.gen(i - 1);
            let num = ctx.pow(&x, q);
            let den = ctx.add(&ctx.pow(&x, q - 1), &ctx.one());
            let rho = ctx.mul(&num, &ctx.inv(&den)?);
            ctx.rho.push(rho);
        }
        for i in 0..=m {
            let inv = ctx.inv(&ctx.gen(i))?;
            ctx.inv_gens.push(inv);
        }
        Ok(ctx)
    }

    /// Memoized canonical form of 1/x_i.
    pub fn inv_gen(&self, i: usize) -> &TowerElem {
        &self.inv_gens[i]
    }

    pub fn q(&self) -> u32 {
        self.field.q.q
    }

    pub fn zero(&self) -> TowerElem {
        TowerElem::Base(RatFunc::zero())
    }

    pub fn one(&self) -> TowerElem {
        TowerElem::Base(RatFunc::constant(1))
    }

    pub fn constant(&self, c: Fe) -> TowerElem {
        TowerElem::Base(RatFunc::constant(c))
    }

    pub fn from_ratfunc(&self, rf: RatFunc) -> TowerElem {
        TowerElem::Base(rf)
    }

    /// The generator x_i.
    pub fn gen(&self, i: usize) -> TowerElem {
        assert!(i <= self.m);
        if i == 0 {
            TowerElem::Base(RatFunc::x())
        } else {
            TowerElem::Ext {
                level: i,
                coeffs: vec![self.zero(), self.one()],
            }
        }
    }

    /// Identity images (x_0, ..., x_m).
    pub fn identity_images(&self) -> Vec<TowerElem> {
        (0..=self.m).map(|i| self.gen(i)).collect()
    }

    fn normalize(&self, level: usize, mut coeffs: Vec<TowerElem>) -> TowerElem {
        while coeffs.last().map(|c| c.is_zero()).unwrap_or(false) {
            coeffs.pop();
        }
        match coeffs.len() {
            0 => self.zero(),
            1 => coeffs.pop().unwrap(),
            _ => TowerElem::Ext { level, coeffs },
        }
    }

    fn coeffs_at(&self, e: &TowerElem, level: usize) -> Vec<TowerElem> {
        if e.level() < level {
            vec![e.clone()]
        } else {
            match e {
                TowerElem::Ext { coeffs, .. } => coeffs.clone(),
                TowerElem::Base(_) => unreachable!("Base has level 0"),
            }
        }
    }

    pub fn add(&self, a: &TowerElem, b: &TowerElem) -> TowerElem {
        let level = a.level().max(b.level());
        if level == 0 {
            let (TowerElem::Base(ra), TowerElem::Base(rb)) = (a, b) else {
                unreachable!()
            };
            return TowerElem::Base(ra.add(&self.field, rb));
        }
        let pa = self.coeffs_at(a, level);
        let pb = self.coeffs_at(b, level);
        let n = pa.len().max(pb.len());
        let zero = self.zero();
        let coeffs: Vec<TowerElem> = (0..n)
            .map(|i| self.add(pa.get(i).unwrap_or(&zero), pb.get(i).unwrap_or(&zero)))
            .collect();
        self.normalize(level, coeffs)
    }

    pub fn neg(&self, a: &TowerElem) -> TowerElem {
        match a {
            TowerElem::Base(rf) => TowerElem::Base(rf.neg(&self.field)),
            TowerElem::Ext { level, coeffs } => TowerElem::Ext {
                level: *level,
                coeffs: coeffs.iter().map(|c| self.neg(c)).collect(),
            },
        }
    }

    pub fn sub(&self, a: &TowerElem, b: &TowerElem) -> TowerElem {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &TowerElem, b: &TowerElem) -> TowerElem {
        let level = a.level().max(b.level());
        if level == 0 {
            let (TowerElem::Base(ra), TowerElem::Base(rb)) = (a, b) else {
                unreachable!()
            };
            return TowerElem::Base(ra.mul(&self.field, rb));
        }
        if a.is_zero() || b.is_zero() {
            return self.zero();
        }
        let pa = self.coeffs_at(a, level);
        let pb = self.coeffs_at(b, level);
        let mut conv = vec![self.zero(); pa.len() + pb.len() - 1];
        for (i, ca) in pa.iter().enumerate() {
            if ca.is_zero() {
                continue;
            }
            for (j, cb) in pb.iter().enumerate() {
                if cb.is_zero() {
                    continue;
                }
                let t = self.mul(ca, cb);
                conv[i + j] = self.add(&conv[i + j], &t);
            }
        }
        self.reduce_in_place(level, &mut conv);
        self.normalize(level, conv)
    }

    /// Reduce x_level^d for d >= q via x^q = rho - x.
    fn reduce_in_place(&self, level: usize, coeffs: &mut Vec<TowerElem>) {
        let q = self.q() as usize;
        let rho = &self.rho[level];
        for d in (q..coeffs.len()).rev() {
            if coeffs[d].is_zero() {
                continue;
            }
            let c = std::mem::replace(&mut coeffs[d], self.zero());
            let lo = self.mul(&c, rho);
            coeffs[d - q] = self.add(&coeffs[d - q], &lo);
            coeffs[d - q + 1] = self.sub(&coeffs[d - q + 1], &c);
        }
        coeffs.truncate(q.min(coeffs.len()));
    }

    pub fn pow(&self, a: &TowerElem, mut k: u64) -> TowerElem {
        let mut acc = self.one();
        let mut base = a.clone();
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            k >>= 1;
            if k > 0 {
                base = self.mul(&base, &base);
            }
        }
        acc
    }

    pub fn inv(&self, a: &TowerElem) -> Result<TowerElem> {
        if a.is_zero() {
            return Err(Error::DivisionByZero);
        }
        match a {
            TowerElem::Base(rf) => Ok(TowerElem::Base(rf.inv(&self.field)?)),
            TowerElem::Ext { level, coeffs } => {
                // A compact quotient s / x_j inverts as x_j * (1/s), and a
                // monomial c * x_level inverts through the cached 1/x form;
                // both avoid the extended Euclid on large canonical forms.
                for j in (0..=*level).rev() {
                    let p = self.mul(a, &self.gen(j));
                    if p.size() * 4 <= a.size() {
                        return Ok(self.mul(&self.gen(j), &self.inv(&p)?));
                    }
                }
                if coeffs.len() == 2 && coeffs[0].is_zero() && *level < self.inv_gens.len() {
                    return Ok(self.mul(&self.inv(&coeffs[1])?, self.inv_gen(*level)));
                }
                self.inv_ext(*level, coeffs.clone())
            }
        }
    }

    pub fn div(&self, a: &TowerElem, b: &TowerElem) -> Result<TowerElem> {
        Ok(self.mul(a, &self.inv(b)?))
    }

    /// Extended Euclid against the minimal polynomial of x_level over T_{level-1}.
    fn inv_ext(&self, level: usize, a: Vec<TowerElem>) -> Result<TowerElem> {
        let q = self.q() as usize;
        let mut min_poly = vec![self.zero(); q + 1];
        min_poly[0] = self.neg(&self.rho[level]);
        min_poly[1] = self.one();
        min_poly[q] = self.add(&min_poly[q], &self.one());

        let mut r0 = min_poly;
        let mut s0: Vec<TowerElem> = Vec::new();
        let mut r1 = a;
        let mut s1 = vec![self.one()];
        tp_trim(&mut r1);
        while r1.len() > 1 {
            let (quo, rem) = self.tp_divrem(&r0, &r1)?;
            let s2 = self.tp_sub(&s0, &self.tp_mul(&quo, &s1));
            r0 = r1;
            s0 = s1;
            r1 = rem;
            s1 = s2;
        }
        if r1.is_empty() {
            return Err(Error::DivisionByZero);
        }
        let unit_inv = self.inv(&r1[0])?;
        let coeffs: Vec<TowerElem> = s1.iter().map(|c| self.mul(c, &unit_inv)).collect();
        Ok(self.normalize(level, coeffs))
    }

    fn tp_divrem(
        &self,
        num: &[TowerElem],
        den: &[TowerElem],
    ) -> Result<(Vec<TowerElem>, Vec<TowerElem>)> {
        let dd = den.len() - 1;
        let lead_inv = self.inv(&den[dd])?;
        let mut rem: Vec<TowerElem> = num.to_vec();
        let mut quo = vec![self.zero(); num.len().saturating_sub(dd)];
        for d in (dd..rem.len()).rev() {
            if rem[d].is_zero() {
                continue;
            }
            let c = self.mul(&rem[d], &lead_inv);
            for (k, dc) in den.iter().enumerate() {
                let t = self.mul(&c, dc);
                rem[d - dd + k] = self.sub(&rem[d - dd + k], &t);
            }
            quo[d - dd] = c;
        }
        tp_trim(&mut rem);
        tp_trim(&mut quo);
        Ok((quo, rem))
    }

    fn tp_sub(&self, a: &[TowerElem], b: &[TowerElem]) -> Vec<TowerElem> {
        let n = a.len().max(b.len());
        let zero = self.zero();
        let mut out: Vec<TowerElem> = (0..n)
            .map(|i| self.sub(a.get(i).unwrap_or(&zero), b.get(i).unwrap_or(&zero)))
            .collect();
        tp_trim(&mut out);
        out
    }

    fn tp_mul(&self, a: &[TowerElem], b: &[TowerElem]) -> Vec<TowerElem> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![self.zero(); a.len() + b.len() - 1];
        for (i, ca) in a.iter().enumerate() {
            for (j, cb) in b.iter().enumerate() {
                let t = self.mul(ca, cb);
                out[i + j] = self.add(&out[i + j], &t);
            }
        }
        tp_trim(&mut out);
        out
    }

    /// Walk the canonical terms: exponent vector (index 1..=m) and coefficient.
    pub fn terms<'a>(&self, f: &'a TowerElem) -> Vec<(Vec<u8>, &'a RatFunc)> {
        let mut out = Vec::new();
        let mut exps = vec![0u8; self.m + 1];
        self.collect_terms(f, &mut exps, &mut out);
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    fn collect_terms<'a>(
        &self,
        f: &'a TowerElem,
        exps: &mut Vec<u8>,
        out: &mut Vec<(Vec<u8>, &'a RatFunc)>,
    ) {
        match f {
            TowerElem::Base(rf) => {
                if !rf.is_zero() {
                    out.push((exps.clone(), rf));
                }
            }
            TowerElem::Ext { level, coeffs } => {
                for (k, c) in coeffs.iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    exps[*level] = k as u8;
                    self.collect_terms(c, exps, out);
                    exps[*level] = 0;
                }
            }
        }
    }

    /// Valuation at P_infinity; None encodes +infinity (f = 0).
    ///
    /// Term valuations are pairwise distinct (base-q digit expansion), so the
    /// minimum over terms is exact with no cancellation.
    pub fn valuation_at_infinity(&self, f: &TowerElem) -> Option<i64> {
        let q = self.q() as i64;
        let qm = q.pow(self.m as u32);
        self.terms(f)
            .iter()
            .map(|(exps, rf)| {
                let base = qm * (rf.den.degree() as i64 - rf.num.degree() as i64);
                let lower: i64 = (1..=self.m)
                    .map(|i| exps[i] as i64 * q.pow((self.m - i) as u32))
                    .sum();
                base - lower
            })
            .min()
    }

    /// Value of f at P_infinity.
    pub fn evaluate_at_infinity(&self, f: &TowerElem) -> Val {
        match self.valuation_at_infinity(f) {
            None => Val::Finite(0),
            Some(v) if v > 0 => Val::Finite(0),
            Some(v) if v < 0 => Val::Infinity,
            _ => {
                for c in self.field.elements() {
                    let d = self.sub(f, &self.constant(c));
                    match self.valuation_at_infinity(&d) {
                        None => return Val::Finite(c),
                        Some(v) if v > 0 => return Val::Finite(c),
                        _ => {}
                    }
                }
                unreachable!("a valuation-zero function has a residue in F_{{q^2}}")
            }
        }
    }

    /// Replace x_i by images[i].  The images must satisfy the tower
    /// relations (substitution on canonical forms is only well defined
    /// modulo them); the compact-quotient and inverse fast paths rely on
    /// this.  See [`SubstCache`] for the shared-cache variant.
    pub fn substitute_hom(&self, images: &[TowerElem], f: &TowerElem) -> Result<TowerElem> {
        self.substitute_hom_cached(images, f, &mut SubstCache::default())
    }

    /// substitute_hom with memo tables tied to a fixed image vector; callers
    /// substituting many right factors against the same images (one
    /// automorphism composed against a whole generator sweep) should share
    /// the cache: the generators reuse most coefficient subtrees and
    /// denominators, and each fresh evaluation is expensive.
    pub fn substitute_hom_cached(
        &self,
        images: &[TowerElem],
        f: &TowerElem,
        cache: &mut SubstCache,
    ) -> Result<TowerElem> {
        if let Some(v) = cache.memo.get(f) {
            return Ok(v.clone());
        }
        let out = self.substitute_hom_uncached(images, f, cache)?;
        cache.memo.insert(f.clone(), out.clone());
        Ok(out)
    }

    fn substitute_hom_uncached(
        &self,
        images: &[TowerElem],
        f: &TowerElem,
        cache: &mut SubstCache,
    ) -> Result<TowerElem> {
        match f {
            TowerElem::Base(rf) => {
                if let TowerElem::Base(x) = &images[0] {
                    return Self::compose_base_fractions(&self.field, rf, x);
                }
                let num = self.eval_base_poly_cached(&rf.num, &images[0], cache);
                let den = self.eval_base_poly_cached(&rf.den, &images[0], cache);
                self.div_cached(&num, &den, cache)
            }
            TowerElem::Ext { level, coeffs } => {
                // An element that collapses to something much smaller after
                // multiplying by some x_j is a compact quotient s / x_j; its
                // image is subst(s) / images[j], which avoids evaluating the
                // large canonical polynomial of 1/x_j.
                for j in (0..=*level).rev() {
                    let p = self.mul(f, &self.gen(j));
                    if p.size() * 4 <= f.size() {
                        let num = self.substitute_hom_cached(images, &p, cache)?;
                        let ii = self.inv_image_cached(images, j, cache)?;
                        return Ok(self.mul(&num, &ii));
                    }
                }
                let mut acc = self.zero();
                for c in coeffs.iter().rev() {
                    let c = self.substitute_hom_cached(images, c, cache)?;
                    acc = self.add(&self.mul(&acc, &images[*level]), &c);
                }
                Ok(acc)
            }
        }
    }

    /// Evaluate a reduced fraction rf = P/Q at the reduced rational function
    /// x = n/d, homogeneously and without any gcd pass.  With p = deg P and
    /// q = deg Q, write A = sum P_j n^j d^(p-j) and B = sum Q_j n^j d^(q-j);
    /// then rf(x) = A d^q / (B d^p) after cancelling the common d powers,
    /// i.e. A / (B d^(p-q)) or A d^(q-p) / B.  This is already reduced:
    /// gcd(A, d) = 1 because A reduces to P_p n^p modulo any factor of d and
    /// gcd(n, d) = 1; likewise gcd(B, d) = 1; and a common irreducible
    /// factor of A and B would have a root a (with d(a) != 0) at which both
    /// P and Q vanish at n(a)/d(a), contradicting gcd(P, Q) = 1.
    fn compose_base_fractions(fq: &FieldCtx, rf: &RatFunc, x: &RatFunc) -> Result<TowerElem> {
        if rf.num.is_zero() {
            return Ok(TowerElem::Base(RatFunc::zero()));
        }
        let p = rf.num.degree();
        let q = rf.den.degree();
        if p == 0 && q == 0 {
            return Ok(TowerElem::Base(rf.clone()));
        }
        let mut dp = vec![Poly::constant(1)];
        for j in 1..=p.max(q) {
            dp.push(dp[j - 1].mul(fq, &x.den));
        }
        // sum of c_j n^j d^(k-j) by Horner in n
        let homog = |poly: &Poly, k: usize| -> Poly {
            let mut acc = Poly::zero();
            for j in (0..=k).rev() {
                acc = acc.mul(fq, &x.num);
                let c = poly.0.get(j).copied().unwrap_or(0);
                if c != 0 {
                    acc = acc.add(fq, &dp[k - j].scale(fq, c));
                }
            }
            acc
        };
        let a = homog(&rf.num, p);
        let b = homog(&rf.den, q);
        if b.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let (num, den) = if p >= q {
            (a, b.mul(fq, &dp[p - q]))
        } else {
            (a.mul(fq, &dp[q - p]), b)
        };
        Ok(TowerElem::Base(RatFunc::monic_pair(fq, num, den)))
    }

    /// x^k with all powers of x memoized in the cache.
    fn power_cached(&self, x: &TowerElem, k: usize, cache: &mut SubstCache) -> TowerElem {
        if k == 1 {
            return x.clone();
        }
        if !cache.powers.contains_key(x) {
            cache.powers.insert(x.clone(), vec![self.one(), x.clone()]);
        }
        let entry = cache.powers.get_mut(x).unwrap();
        while entry.len() <= k {
            let next = self.mul(entry.last().unwrap(), x);
            entry.push(next);
        }
        entry[k].clone()
    }

    /// p(x) as a linear combination of cached powers of x; repeated
    /// evaluations at the same x then cost additions only.
    fn eval_base_poly_cached(
        &self,
        p: &Poly,
        x: &TowerElem,
        cache: &mut SubstCache,
    ) -> TowerElem {
        let mut acc = self.zero();
        for (j, &c) in p.0.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let term = if j == 0 {
                self.constant(c)
            } else {
                let xp = self.power_cached(x, j, cache);
                self.mul(&xp, &self.constant(c))
            };
            acc = self.add(&acc, &term);
        }
        acc
    }

    /// True iff a == b * c; an all-base triple is compared cross-multiplied,
    /// avoiding the gcd-normalizing product.
    pub fn eq_mul(&self, a: &TowerElem, b: &TowerElem, c: &TowerElem) -> bool {
        if let (TowerElem::Base(ra), TowerElem::Base(rb), TowerElem::Base(rc)) = (a, b, c) {
            let fq = &self.field;
            let lhs = ra.num.mul(fq, &rb.den).mul(fq, &rc.den);
            let rhs = rb.num.mul(fq, &rc.num).mul(fq, &ra.den);
            return lhs == rhs;
        }
        self.mul(b, c) == *a
    }

    /// Inverse of images[j], memoized, for images satisfying the tower
    /// relations.  The defining relation gives x_j (x_j^(q-1) + 1) = rho_j
    /// = x_(j-1)^q / (x_(j-1)^(q-1) + 1), hence 1/x_j = (x_j^(q-1) + 1)
    /// (x_(j-1)^(q-1) + 1) (1/x_(j-1))^q: applying the homomorphism, every
    /// inverse above level 0 costs only powers and products, never an
    /// extended-Euclid inversion over the tower.
    pub fn inv_image_cached(
        &self,
        images: &[TowerElem],
        j: usize,
        cache: &mut SubstCache,
    ) -> Result<TowerElem> {
        if let Some(i) = cache.inverses.get(&images[j]) {
            return Ok(i.clone());
        }
        let q = self.q() as usize;
        let inv = if j == 0 {
            self.inv(&images[0])?
        } else {
            let prev = self.inv_image_cached(images, j - 1, cache)?;
            let a = self.add(&self.power_cached(&images[j], q - 1, cache), &self.one());
            let b = self.add(&self.power_cached(&images[j - 1], q - 1, cache), &self.one());
            let c = self.power_cached(&prev, q, cache);
            self.mul(&self.mul(&a, &b), &c)
        };
        cache.inverses.insert(images[j].clone(), inv.clone());
        Ok(inv)
    }

    /// a / b with the inverse of b memoized in the supplied cache.
    pub fn div_cached(
        &self,
        a: &TowerElem,
        b: &TowerElem,
        cache: &mut SubstCache,
    ) -> Result<TowerElem> {
        if let Some(i) = cache.inverses.get(b) {
            return Ok(self.mul(a, i));
        }
        let i = self.inv(b)?;
        cache.inverses.insert(b.clone(), i.clone());
        Ok(self.mul(a, &i))
    }

    /// Evaluate at an affine coordinate chain (c_0, ..., c_m).
    pub fn evaluate_at_chain(&self, f: &TowerElem, chain: &[Fe]) -> Result<Fe> {
        match f {
            TowerElem::Base(rf) => rf.eval(&self.field, chain[0]),
            TowerElem::Ext { level, coeffs } => {
                let x = chain[*level];
                let mut acc = 0;
                for c in coeffs.iter().rev() {
                    let cv = self.evaluate_at_chain(c, chain)?;
                    acc = self.field.add(self.field.mul(acc, x), cv);
                }
                Ok(acc)
            }
        }
    }

    /// True iff images[i]^q + images[i] = images[i-1]^q / (images[i-1]^{q-1} + 1)
    /// holds exactly for i = 1..m.
    pub fn check_tower_relation(&self, images: &[TowerElem]) -> Result<bool> {
        let q = self.q() as u64;
        // Work on compact numerator/denominator pairs so images whose
        // canonical polynomial forms are large (1/x shapes) stay small
        // throughout the cross-multiplied comparison.
        let quot: Vec<(TowerElem, TowerElem)> =
            images.iter().map(|f| self.as_quotient(f)).collect();
        for i in 1..=self.m {
            let (n1, d1) = &quot[i];
            let (n0, d0) = &quot[i - 1];
            // lhs = (n1/d1)^q + n1/d1 = (n1^q + n1 d1^{q-1}) / d1^q
            let ln = self.add(&self.pow(n1, q), &self.mul(n1, &self.pow(d1, q - 1)));
            // rhs = (n0/d0)^q / ((n0/d0)^{q-1} + 1) = n0^q / (d0 (n0^{q-1} + d0^{q-1}))
            let rd = self.mul(d0, &self.add(&self.pow(n0, q - 1), &self.pow(d0, q - 1)));
            if rd.is_zero() {
                return Err(Error::RelationFailure(format!(
                    "x_{}^(q-1)+1 vanishes identically under the candidate images",
                    i - 1
                )));
            }
            if self.mul(&ln, &rd) != self.mul(&self.pow(n0, q), &self.pow(d1, q)) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// (s, Some(j)) with f = s / x_j when the canonical form of f is
    /// dominated by a 1/x_j shape, else (f, None).
    pub fn quotient_form(&self, f: &TowerElem) -> (TowerElem, Option<usize>) {
        if let TowerElem::Ext { level, .. } = f {
            for j in (0..=*level).rev() {
                let p = self.mul(f, &self.gen(j));
                if p.size() * 4 <= f.size() {
                    return (p, Some(j));
                }
            }
        }
        (f.clone(), None)
    }

    /// (n, d) with f = n/d, preferring a compact pair s / x_j.
    fn as_quotient(&self, f: &TowerElem) -> (TowerElem, TowerElem) {
        match self.quotient_form(f) {
            (p, Some(j)) => (p, self.gen(j)),
            (p, None) => (p, self.one()),
        }
    }

    /// Least common multiple of every base-coefficient denominator of f,
    /// accumulated into acc.
    fn lcm_base_denominators(&self, f: &TowerElem, acc: &mut Poly) {
        match f {
            TowerElem::Base(rf) => {
                if rf.den.0 != [1] {
                    let g = acc.gcd(&self.field, &rf.den);
                    let (q, _) = rf.den.divrem(&self.field, &g);
                    *acc = acc.mul(&self.field, &q);
                }
            }
            TowerElem::Ext { coeffs, .. } => {
                for c in coeffs {
                    self.lcm_base_denominators(c, acc);
                }
            }
        }
    }

    /// (P, Q) with f = P/Q and both parts polynomial (every base coefficient
    /// has denominator one), preferring the compact s / x_j split first.
    /// Substituting a polynomial pair requires no inversion at all, which is
    /// what makes cross-multiplied comparisons of compositions cheap.
    pub fn polynomial_quotient(&self, f: &TowerElem) -> (TowerElem, TowerElem) {
        let (s, j) = self.quotient_form(f);
        let mut den_poly = Poly(vec![1]);
        self.lcm_base_denominators(&s, &mut den_poly);
        let scale = TowerElem::Base(RatFunc::from_poly(den_poly));
        let num = self.mul(&s, &scale);
        let den = match j {
            Some(j) => self.mul(&self.gen(j), &scale),
            None => scale,
        };
        (num, den)
    }

    // ---- textual form ------------------------------------------------------

    pub fn format(&self, f: &TowerElem) -> String {
        let terms = self.terms(f);
        if terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (t, (exps, rf)) in terms.iter().enumerate() {
            if t > 0 {
                out.push_str(" + ");
            }
            write!(out, "[{}]", fmt_poly(&rf.num)).unwrap();
            write!(out, "/[{}]", fmt_poly(&rf.den)).unwrap();
            for (i, &a) in exps.iter().enumerate().skip(1) {
                if a > 0 {
                    write!(out, "*x{i}^{a}").unwrap();
                }
            }
        }
        out
    }

    pub fn parse(&self, s: &str) -> Result<TowerElem> {
        let s = s.trim();
        if s == "0" {
            return Ok(self.zero());
        }
        let mut acc = self.zero();
        for term in split_top_terms(s)? {
            acc = self.add(&acc, &self.parse_term(&term)?);
        }
        Ok(acc)
    }

    fn parse_term(&self, term: &str) -> Result<TowerElem> {
        let bad = || Error::Parse(format!("malformed term `{term}`"));
        let close = term.find(']').ok_or_else(bad)?;
        if !term.starts_with('[') {
            return Err(bad());
        }
        let num = parse_poly(&term[1..close])?;
        let rest = &term[close + 1..];
        if !rest.starts_with("/[") {
            return Err(bad());
        }
        let close2 = rest.find(']').ok_or_else(bad)?;
        let den = parse_poly(&rest[2..close2])?;
        let mut elem = self.from_ratfunc(RatFunc::new(&self.field, num, den)?);
        for factor in rest[close2 + 1..].split('*').filter(|p| !p.is_empty()) {
            let factor = factor.strip_prefix('x').ok_or_else(bad)?;
            let (i, a) = factor.split_once('^').ok_or_else(bad)?;
            let i: usize = i.parse().map_err(|_| bad())?;
            let a: u64 = a.parse().map_err(|_| bad())?;
            if i == 0 || i > self.m {
                return Err(bad());
            }
            elem = self.mul(&elem, &self.pow(&self.gen(i), a));
        }
        Ok(elem)
    }
}

fn tp_trim(v: &mut Vec<TowerElem>) {
    while v.last().map(|c| c.is_zero()).unwrap_or(false) {
        v.pop();
    }
}

fn fmt_poly(p: &Poly) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    let mut first = true;
    for (k, &c) in p.0.iter().enumerate() {
        if c == 0 {
            continue;
        }
        if !first {
            out.push_str(" + ");
        }
        write!(out, "{c}*x0^{k}").unwrap();
        first = false;
    }
    out
}

fn parse_poly(s: &str) -> Result<Poly> {
    let s = s.trim();
    if s == "0" {
        return Ok(Poly::zero());
    }
    let mut coeffs: Vec<(usize, Fe)> = Vec::new();
    for mono in s.split(" + ") {
        let bad = || Error::Parse(format!("malformed monomial `{mono}`"));
        let (c, xk) = mono.split_once("*x0^").ok_or_else(bad)?;
        let c: Fe = c.trim().parse().map_err(|_| bad())?;
        let k: usize = xk.trim().parse().map_err(|_| bad())?;
        coeffs.push((k, c));
    }
    let deg = coeffs.iter().map(|&(k, _)| k).max().unwrap_or(0);
    let mut v = vec![0; deg + 1];
    for (k, c) in coeffs {
        v[k] = c;
    }
    Ok(Poly(v).normalize())
}

/// Split a printed element into terms at " + " occurrences outside brackets.
fn split_top_terms(s: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut cur = String::new();
    let bytes: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            '[' => depth += 1,
            ']' => {
                depth = depth
                    .checked_sub(1)
                    .ok_or_else(|| Error::Parse("unbalanced brackets".into()))?
            }
            _ => {}
        }
        if depth == 0 && s[i..].starts_with(" + ") && bytes[i] == ' ' {
            out.push(cur.clone());
            cur.clear();
            i += 3;
            continue;
        }
        cur.push(c);
        i += 1;
    }
    if depth != 0 {
        return Err(Error::Parse("unbalanced brackets".into()));
    }
    out.push(cur);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tower(q: u32, m: usize) -> TowerCtx {
        TowerCtx::new(Arc::new(FieldCtx::new(q).unwrap()), m).unwrap()
    }

    #[test]
    fn inverse_roundtrip() {
        let t = tower(3, 1);
        let f = t.add(&t.gen(1), &t.gen(0)); // x_1 + x_0
        let finv = t.inv(&f).unwrap();
        assert_eq!(t.mul(&f, &finv), t.one());
        // inv(x_0) is a pure rational function.
        let x0inv = t.inv(&t.gen(0)).unwrap();
        assert_eq!(x0inv.level(), 0);
        assert_eq!(t.mul(&x0inv, &t.gen(0)), t.one());
    }

    #[test]
    fn generator_power_reduces_by_the_relation() {
        // (x_1)^q = rho(x_0) - x_1 = x_0^3/(x_0^2+1) - x_1 for q = 3.
        let t = tower(3, 1);
        let lhs = t.pow(&t.gen(1), 3);
        let rho = {
            let num = RatFunc::new(&t.field, Poly(vec![0, 0, 0, 1]), Poly(vec![1, 0, 1])).unwrap();
            t.from_ratfunc(num)
        };
        let rhs = t.sub(&rho, &t.gen(1));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn substitution_identity_and_homomorphism() {
        let t = tower(3, 1);
        let ids = t.identity_images();
        let f = t.add(&t.mul(&t.gen(1), &t.gen(1)), &t.gen(0));
        assert_eq!(t.substitute_hom(&ids, &f).unwrap(), f);

        // sub distributes over + and * for a sample pair.
        let images = vec![t.gen(0), t.add(&t.gen(1), &t.one())];
        let g = t.inv(&t.add(&t.gen(0), &t.one())).unwrap();
        let fg = t.mul(&f, &g);
        let sf = t.substitute_hom(&images, &f).unwrap();
        let sg = t.substitute_hom(&images, &g).unwrap();
        assert_eq!(t.substitute_hom(&images, &fg).unwrap(), t.mul(&sf, &sg));
        let sum = t.add(&f, &g);
        assert_eq!(t.substitute_hom(&images, &sum).unwrap(), t.add(&sf, &sg));
    }

    #[test]
    fn scaled_images_satisfy_relation_q3_m1() {
        // x_0 -> 2x_0, x_1 -> 2x_1 + u with u in A^x.
        let t = tower(3, 1);
        let u = 3; // trace(u) = 0, u != 0
        assert_eq!(t.field.trace(u), 0);
        let images = vec![
            t.mul(&t.constant(2), &t.gen(0)),
            t.add(&t.mul(&t.constant(2), &t.gen(1)), &t.constant(u)),
        ];
        assert!(t.check_tower_relation(&images).unwrap());
        // x_0 -> x_0 + 1 is not allowed.
        let bad = vec![t.add(&t.gen(0), &t.one()), t.gen(1)];
        assert!(!t.check_tower_relation(&bad).unwrap());
        assert!(t.check_tower_relation(&t.identity_images()).unwrap());
    }

    #[test]
    fn valuations_at_infinity() {
        let t = tower(3, 2);
        assert_eq!(t.valuation_at_infinity(&t.gen(0)), Some(-9));
        assert_eq!(t.valuation_at_infinity(&t.gen(1)), Some(-3));
        assert_eq!(t.valuation_at_infinity(&t.gen(2)), Some(-1));
        assert_eq!(t.valuation_at_infinity(&t.one()), Some(0));
        assert_eq!(t.valuation_at_infinity(&t.zero()), None);
    }

    #[test]
    fn valuation_is_multiplicative() {
        let t = tower(3, 2);
        let f = t.add(&t.mul(&t.gen(1), &t.gen(2)), &t.inv(&t.gen(0)).unwrap());
        let g = t.sub(&t.gen(2), &t.constant(2));
        let (vf, vg) = (
            t.valuation_at_infinity(&f).unwrap(),
            t.valuation_at_infinity(&g).unwrap(),
        );
        assert_eq!(t.valuation_at_infinity(&t.mul(&f, &g)), Some(vf + vg));
        let sum = t.add(&f, &g);
        assert!(t.valuation_at_infinity(&sum).unwrap() >= vf.min(vg));
        if vf != vg {
            assert_eq!(t.valuation_at_infinity(&sum), Some(vf.min(vg)));
        }
    }

    #[test]
    fn evaluation_at_infinity() {
        let t = tower(3, 1);
        assert_eq!(t.evaluate_at_infinity(&t.inv(&t.gen(0)).unwrap()), Val::Finite(0));
        assert_eq!(t.evaluate_at_infinity(&t.gen(1)), Val::Infinity);
        // (x_0 + 1)/x_0 -> 1.
        let f = t.mul(
            &t.add(&t.gen(0), &t.one()),
            &t.inv(&t.gen(0)).unwrap(),
        );
        assert_eq!(t.evaluate_at_infinity(&f), Val::Finite(1));
    }

    #[test]
    fn ramified_zero_factorization() {
        // x_0^{q-1} + 1 = prod_{a in A^x} (x_0 - a).
        for q in [2u32, 3, 4, 5] {
            let t = tower(q, 1);
            let lhs = t.add(&t.pow(&t.gen(0), (q - 1) as u64), &t.one());
            let mut rhs = t.one();
            for a in t.field.a_nonzero() {
                rhs = t.mul(&rhs, &t.sub(&t.gen(0), &t.constant(a)));
            }
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn kummer_identities() {
        for (q, m) in [(2u32, 2usize), (3, 2), (3, 3), (4, 2), (5, 2)] {
            let t = tower(q, m);
            for i in 0..m {
                let xi = t.gen(i);
                let xi1 = t.gen(i + 1);
                let zi = t.pow(&xi, (q - 1) as u64);
                let ratio = t.div(&xi1, &xi).unwrap();
                // (x_{i+1}/x_i)^q + (1/z_i)(x_{i+1}/x_i) = 1/(z_i + 1)
                let lhs = t.add(
                    &t.pow(&ratio, q as u64),
                    &t.div(&ratio, &zi).unwrap(),
                );
                let rhs = t.inv(&t.add(&zi, &t.one())).unwrap();
                assert_eq!(lhs, rhs, "kummer relation failed at q={q} m={m} i={i}");
                // x_{i+1}/x_i = z_i/((z_{i+1}+1)(z_i+1))
                let zi1 = t.pow(&xi1, (q - 1) as u64);
                let den = t.mul(&t.add(&zi1, &t.one()), &t.add(&zi, &t.one()));
                assert_eq!(ratio, t.div(&zi, &den).unwrap());
            }
        }
    }

    #[test]
    fn format_parse_roundtrip() {
        let t = tower(3, 2);
        let f = t.add(
            &t.mul(
                &t.inv(&t.add(&t.gen(0), &t.one())).unwrap(),
                &t.mul(&t.gen(1), &t.pow(&t.gen(2), 2)),
            ),
            &t.sub(&t.gen(0), &t.constant(5)),
        );
        let s = t.format(&f);
        let back = t.parse(&s).unwrap();
        assert_eq!(back, f);
        assert_eq!(t.format(&back), s);
        assert_eq!(t.parse("0").unwrap(), t.zero());
    }
}
