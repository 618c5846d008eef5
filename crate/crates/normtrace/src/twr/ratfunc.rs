//! Univariate polynomials and reduced rational functions over F_{q^2},
//! the coefficient domain of the tower representation.

use crate::error::{Error, Result};
use crate::gf::{Fe, FieldCtx};

/// Dense polynomial in x_0, low-degree-first, no trailing zeros (empty = 0).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Poly(pub Vec<Fe>);

/// Hard guard against runaway intermediate blowup.
pub const DEGREE_CAP: usize = 1 << 16;

impl Poly {
    pub fn zero() -> Poly {
        Poly(Vec::new())
    }

    pub fn constant(c: Fe) -> Poly {
        if c == 0 {
            Poly::zero()
        } else {
            Poly(vec![c])
        }
    }

    pub fn x() -> Poly {
        Poly(vec![0, 1])
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree; zero polynomial reports 0 by convention of the valuation formula
    /// callers, which must branch on `is_zero` first.
    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn normalize(mut self) -> Poly {
        while self.0.last() == Some(&0) {
            self.0.pop();
        }
        if self.0.len() > DEGREE_CAP {
            panic!("{}", Error::DegreeCap(self.0.len() - 1));
        }
        self
    }

    pub fn add(&self, ctx: &FieldCtx, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        let mut out = vec![0; n];
        for (i, o) in out.iter_mut().enumerate() {
            let a = self.0.get(i).copied().unwrap_or(0);
            let b = other.0.get(i).copied().unwrap_or(0);
            *o = ctx.add(a, b);
        }
        Poly(out).normalize()
    }

    pub fn neg(&self, ctx: &FieldCtx) -> Poly {
        Poly(self.0.iter().map(|&c| ctx.neg(c)).collect())
    }

    pub fn sub(&self, ctx: &FieldCtx, other: &Poly) -> Poly {
        self.add(ctx, &other.neg(ctx))
    }

    pub fn mul(&self, ctx: &FieldCtx, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![0; self.0.len() + other.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.0.iter().enumerate() {
                out[i + j] = ctx.add(out[i + j], ctx.mul(a, b));
            }
        }
        Poly(out).normalize()
    }

    pub fn scale(&self, ctx: &FieldCtx, c: Fe) -> Poly {
        if c == 0 {
            return Poly::zero();
        }
        Poly(self.0.iter().map(|&a| ctx.mul(a, c)).collect()).normalize()
    }

    pub fn divrem(&self, ctx: &FieldCtx, den: &Poly) -> (Poly, Poly) {
        assert!(!den.is_zero(), "polynomial division by zero");
        if self.0.len() < den.0.len() {
            return (Poly::zero(), self.clone());
        }
        let lead_inv = ctx.inv(*den.0.last().unwrap()).expect("nonzero lead");
        let mut rem = self.0.clone();
        let mut quo = vec![0; self.0.len() - den.0.len() + 1];
        for d in (den.0.len() - 1..self.0.len()).rev() {
            let c = ctx.mul(rem[d], lead_inv);
            if c != 0 {
                quo[d - (den.0.len() - 1)] = c;
                for (k, &dc) in den.0.iter().enumerate() {
                    let idx = d - (den.0.len() - 1) + k;
                    rem[idx] = ctx.sub(rem[idx], ctx.mul(c, dc));
                }
            }
        }
        (Poly(quo).normalize(), Poly(rem).normalize())
    }

    pub fn gcd(&self, ctx: &FieldCtx, other: &Poly) -> Poly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.divrem(ctx, &b);
            a = b;
            b = r;
        }
        a.monic(ctx)
    }

    pub fn monic(self, ctx: &FieldCtx) -> Poly {
        match self.0.last() {
            None => self,
            Some(&l) if l == 1 => self,
            Some(&l) => {
                let inv = ctx.inv(l).unwrap();
                self.scale(ctx, inv)
            }
        }
    }

    pub fn eval(&self, ctx: &FieldCtx, x: Fe) -> Fe {
        let mut acc = 0;
        for &c in self.0.iter().rev() {
            acc = ctx.add(ctx.mul(acc, x), c);
        }
        acc
    }
}

/// Reduced fraction of polynomials: gcd(num, den) = 1 and den monic nonzero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RatFunc {
    pub num: Poly,
    pub den: Poly,
}

impl RatFunc {
    pub fn new(ctx: &FieldCtx, num: Poly, den: Poly) -> Result<RatFunc> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(RatFunc {
                num: Poly::zero(),
                den: Poly::constant(1),
            });
        }
        let g = num.gcd(ctx, &den);
        let (num, den) = if g.degree() > 0 {
            (num.divrem(ctx, &g).0, den.divrem(ctx, &g).0)
        } else {
            (num, den)
        };
        let lead = *den.0.last().unwrap();
        let den = den.monic(ctx);
        let num = num.scale(ctx, ctx.inv(lead).unwrap());
        Ok(RatFunc { num, den })
    }

    pub fn zero() -> RatFunc {
        RatFunc {
            num: Poly::zero(),
            den: Poly::constant(1),
        }
    }

    pub fn constant(c: Fe) -> RatFunc {
        RatFunc {
            num: Poly::constant(c),
            den: Poly::constant(1),
        }
    }

    pub fn from_poly(p: Poly) -> RatFunc {
        RatFunc {
            num: p,
            den: Poly::constant(1),
        }
    }

    pub fn x() -> RatFunc {
        RatFunc::from_poly(Poly::x())
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// The constant value if this fraction is a constant.
    pub fn as_constant(&self) -> Option<Fe> {
        if self.den.degree() == 0 && self.num.degree() == 0 {
            Some(self.num.0.first().copied().unwrap_or(0))
        } else {
            None
        }
    }

    /// Rebuild the reduced-fraction invariants when num/den are already known
    /// to be coprime: just make the denominator monic.
    pub(crate) fn monic_pair(ctx: &FieldCtx, num: Poly, den: Poly) -> RatFunc {
        if num.is_zero() {
            return RatFunc::zero();
        }
        let lead = *den.0.last().unwrap();
        if lead == 1 {
            return RatFunc { num, den };
        }
        let inv = ctx.inv(lead).unwrap();
        RatFunc {
            num: num.scale(ctx, inv),
            den: den.scale(ctx, inv),
        }
    }

    pub fn add(&self, ctx: &FieldCtx, other: &RatFunc) -> RatFunc {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        // Both operands are reduced, so only the denominators' common part can
        // survive into the sum; this keeps every gcd small.
        let g = if self.den.degree() == 0 || other.den.degree() == 0 {
            Poly::constant(1)
        } else {
            self.den.gcd(ctx, &other.den)
        };
        if g.degree() == 0 {
            let num = self
                .num
                .mul(ctx, &other.den)
                .add(ctx, &other.num.mul(ctx, &self.den));
            let den = self.den.mul(ctx, &other.den);
            return RatFunc::monic_pair(ctx, num, den);
        }
        let b1 = self.den.divrem(ctx, &g).0;
        let d1 = other.den.divrem(ctx, &g).0;
        let t = self.num.mul(ctx, &d1).add(ctx, &other.num.mul(ctx, &b1));
        if t.is_zero() {
            return RatFunc::zero();
        }
        let h = t.gcd(ctx, &g);
        if h.degree() == 0 {
            let den = b1.mul(ctx, &other.den);
            return RatFunc::monic_pair(ctx, t, den);
        }
        let num = t.divrem(ctx, &h).0;
        let den = b1.mul(ctx, &other.den.divrem(ctx, &h).0);
        RatFunc::monic_pair(ctx, num, den)
    }

    pub fn neg(&self, ctx: &FieldCtx) -> RatFunc {
        RatFunc {
            num: self.num.neg(ctx),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, ctx: &FieldCtx, other: &RatFunc) -> RatFunc {
        self.add(ctx, &other.neg(ctx))
    }

    pub fn mul(&self, ctx: &FieldCtx, other: &RatFunc) -> RatFunc {
        if self.is_zero() || other.is_zero() {
            return RatFunc::zero();
        }
        // Cross-cancel against the opposite denominator; each fraction is
        // already internally reduced, so the product then needs no gcd.
        let reduce = |num: &Poly, den: &Poly| -> (Poly, Poly) {
            if num.degree() == 0 || den.degree() == 0 {
                return (num.clone(), den.clone());
            }
            let g = num.gcd(ctx, den);
            if g.degree() == 0 {
                (num.clone(), den.clone())
            } else {
                (num.divrem(ctx, &g).0, den.divrem(ctx, &g).0)
            }
        };
        let (a, d) = reduce(&self.num, &other.den);
        let (c, b) = reduce(&other.num, &self.den);
        RatFunc::monic_pair(ctx, a.mul(ctx, &c), b.mul(ctx, &d))
    }

    pub fn inv(&self, ctx: &FieldCtx) -> Result<RatFunc> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(RatFunc::monic_pair(ctx, self.den.clone(), self.num.clone()))
    }

    /// Evaluate at x_0 = x; errors if the (reduced) denominator vanishes.
    pub fn eval(&self, ctx: &FieldCtx, x: Fe) -> Result<Fe> {
        let d = self.den.eval(ctx, x);
        if d == 0 {
            return Err(Error::Indeterminate);
        }
        ctx.div(self.num.eval(ctx, x), d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> FieldCtx {
        FieldCtx::new(3).unwrap()
    }

    #[test]
    fn divrem_roundtrip() {
        let c = ctx();
        let a = Poly(vec![1, 2, 0, 1, 5]);
        let b = Poly(vec![2, 1, 1]);
        let (q, r) = a.divrem(&c, &b);
        let back = q.mul(&c, &b).add(&c, &r);
        assert_eq!(back, a.normalize());
        assert!(r.degree() < b.degree() || r.is_zero());
    }

    #[test]
    fn ratfunc_reduces() {
        let c = ctx();
        // (x^2 - 1)/(x - 1) = x + 1
        let num = Poly(vec![2, 0, 1]);
        let den = Poly(vec![2, 1]);
        let f = RatFunc::new(&c, num, den).unwrap();
        assert_eq!(f.num, Poly(vec![1, 1]));
        assert_eq!(f.den, Poly(vec![1]));
    }

    #[test]
    fn field_axioms_spot_check() {
        let c = ctx();
        let f = RatFunc::new(&c, Poly(vec![1, 2]), Poly(vec![0, 1])).unwrap();
        let g = RatFunc::new(&c, Poly(vec![3, 0, 1]), Poly(vec![1, 1])).unwrap();
        let prod = f.mul(&c, &g);
        assert_eq!(prod.mul(&c, &f.inv(&c).unwrap()), g);
        let sum = f.add(&c, &g);
        assert_eq!(sum.sub(&c, &g), f);
    }
}
