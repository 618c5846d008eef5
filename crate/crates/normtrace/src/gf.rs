//! Arithmetic in F_q and F_{q^2} with the trace/norm structure the tower sits on.
//!
//! Elements are dense integer indices into log/exp tables; the index of an
//! element sum c_i * alpha^i is sum c_i * p^i, so serialized indices are
//! reproducible given the modulus.  The modulus is the lexicographically
//! smallest monic irreducible of degree 2e over F_p, coefficients compared
//! low-degree-first.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Field element of F_{q^2}, stored as a table index.  0 is the zero element.
pub type Fe = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimePower {
    pub p: u32,
    pub e: u32,
    pub q: u32,
}

impl PrimePower {
    pub fn new(q: u32) -> Result<Self> {
        if !(2..=64).contains(&q) {
            return Err(Error::CapExceeded(q));
        }
        let mut p = 2;
        while q % p != 0 {
            p += 1;
        }
        let mut e = 0;
        let mut n = q;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        if n != 1 {
            return Err(Error::NotPrimePower(q));
        }
        Ok(PrimePower { p, e, q })
    }
}

/// Immutable context for F_{q^2}; all operations are pure.
pub struct FieldCtx {
    pub q: PrimePower,
    /// q^2
    pub qq: u32,
    /// Monic modulus of degree 2e over F_p, low-degree-first, leading 1 included.
    pub modulus: Vec<u32>,
    exp: Vec<Fe>,
    log: Vec<u32>,
    frob: Vec<Fe>,
    neg: Vec<Fe>,
    subfield: Vec<Fe>,
    in_subfield: Vec<bool>,
    fibers: Vec<Vec<Fe>>,
    mu: Vec<Fe>,
}

fn digits(mut k: u32, p: u32, n: usize) -> Vec<u32> {
    let mut d = vec![0; n];
    for di in d.iter_mut() {
        *di = k % p;
        k /= p;
    }
    d
}

fn undigits(d: &[u32], p: u32) -> u32 {
    d.iter().rev().fold(0, |acc, &c| acc * p + c)
}

fn poly_mod_mul(a: &[u32], b: &[u32], modulus: &[u32], p: u32) -> Vec<u32> {
    let n = modulus.len() - 1;
    let mut prod = vec![0u64; a.len() + b.len()];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            prod[i + j] += (ai * bj) as u64;
        }
    }
    let mut prod: Vec<u32> = prod.iter().map(|&c| (c % p as u64) as u32).collect();
    for d in (n..prod.len()).rev() {
        let c = prod[d];
        if c != 0 {
            prod[d] = 0;
            for k in 0..n {
                let m = modulus[k];
                prod[d - n + k] = (prod[d - n + k] + c * (p - m) % p) % p;
            }
        }
    }
    prod.truncate(n);
    prod
}

/// Trial division by every monic polynomial of degree 1..=half.
fn is_irreducible(f: &[u32], p: u32) -> bool {
    let deg = f.len() - 1;
    for d in 1..=deg / 2 {
        let count = p.pow(d as u32);
        for k in 0..count {
            let mut g = digits(k, p, d);
            g.push(1);
            if poly_rem_is_zero(f, &g, p) {
                return false;
            }
        }
    }
    true
}

fn poly_rem_is_zero(f: &[u32], g: &[u32], p: u32) -> bool {
    let mut r: Vec<u32> = f.to_vec();
    let dg = g.len() - 1;
    while r.len() > dg {
        let c = *r.last().unwrap();
        let dr = r.len() - 1;
        if c != 0 {
            for k in 0..=dg {
                let idx = dr - dg + k;
                r[idx] = (r[idx] + c * (p - g[k]) % p) % p;
            }
        }
        r.pop();
    }
    r.iter().all(|&c| c == 0)
}

impl FieldCtx {
    pub fn new(q: u32) -> Result<FieldCtx> {
        let q = PrimePower::new(q)?;
        let p = q.p;
        let deg = (2 * q.e) as usize;
        let qq = q.q * q.q;

        // Lexicographically smallest monic irreducible of degree 2e.
        let mut modulus = None;
        for k in 0..p.pow(deg as u32) {
            let mut f = digits(k, p, deg);
            f.push(1);
            if is_irreducible(&f, p) {
                modulus = Some(f);
                break;
            }
        }
        let modulus = modulus.expect("an irreducible polynomial of degree 2e always exists");

        // Find a multiplicative generator and fill the exp/log tables.
        let mut exp = Vec::new();
        let mut log = vec![0u32; qq as usize];
        'outer: for g in 2..qq {
            let gd = digits(g, p, deg);
            let mut acc = digits(1, p, deg);
            exp.clear();
            for i in 0..qq - 1 {
                let idx = undigits(&acc, p);
                if idx == 1 && i > 0 {
                    continue 'outer; // order < qq-1
                }
                exp.push(idx);
                acc = poly_mod_mul(&acc, &gd, &modulus, p);
            }
            for (i, &x) in exp.iter().enumerate() {
                log[x as usize] = i as u32;
            }
            break;
        }
        assert_eq!(exp.len() as u32, qq - 1);

        let mut ctx = FieldCtx {
            q,
            qq,
            modulus,
            exp,
            log,
            frob: Vec::new(),
            neg: Vec::new(),
            subfield: Vec::new(),
            in_subfield: vec![false; qq as usize],
            fibers: vec![Vec::new(); qq as usize],
            mu: Vec::new(),
        };

        ctx.neg = (0..qq)
            .map(|x| {
                let d: Vec<u32> = digits(x, p, deg).iter().map(|&c| (p - c) % p).collect();
                undigits(&d, p)
            })
            .collect();
        ctx.frob = (0..qq).map(|x| ctx.pow(x, q.q as u64)).collect();
        for x in 0..qq {
            if ctx.frob[x as usize] == x {
                ctx.subfield.push(x);
                ctx.in_subfield[x as usize] = true;
            }
        }
        debug_assert_eq!(ctx.subfield.len() as u32, q.q);
        for a in 0..qq {
            let c = ctx.trace(a);
            ctx.fibers[c as usize].push(a);
        }
        let mut mu: Vec<Fe> = (1..qq).map(|x| ctx.pow(x, (q.q - 1) as u64)).collect();
        mu.sort_unstable();
        mu.dedup();
        ctx.mu = mu;
        Ok(ctx)
    }

    #[inline]
    pub fn zero(&self) -> Fe {
        0
    }

    #[inline]
    pub fn one(&self) -> Fe {
        1
    }

    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        let p = self.q.p;
        if p == 2 {
            return a ^ b;
        }
        let mut out = 0;
        let mut mul = 1;
        let (mut a, mut b) = (a, b);
        while a != 0 || b != 0 {
            out += (a % p + b % p) % p * mul;
            a /= p;
            b /= p;
            mul *= p;
        }
        out
    }

    #[inline]
    pub fn neg(&self, a: Fe) -> Fe {
        self.neg[a as usize]
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        if a == 0 || b == 0 {
            return 0;
        }
        let n = self.qq - 1;
        self.exp[((self.log[a as usize] + self.log[b as usize]) % n) as usize]
    }

    pub fn inv(&self, a: Fe) -> Result<Fe> {
        if a == 0 {
            return Err(Error::DivisionByZero);
        }
        let n = self.qq - 1;
        Ok(self.exp[((n - self.log[a as usize]) % n) as usize])
    }

    pub fn div(&self, a: Fe, b: Fe) -> Result<Fe> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: Fe, mut k: u64) -> Fe {
        if a == 0 {
            return if k == 0 { 1 } else { 0 };
        }
        let n = (self.qq - 1) as u64;
        k %= n;
        self.exp[((self.log[a as usize] as u64 * k) % n) as usize]
    }

    /// Embed a small integer via repeated addition of 1 (prime field image).
    pub fn from_int(&self, n: i64) -> Fe {
        let p = self.q.p as i64;
        let r = n.rem_euclid(p) as Fe;
        r
    }

    /// a^q, the conjugate over F_q.
    #[inline]
    pub fn frob_q(&self, a: Fe) -> Fe {
        self.frob[a as usize]
    }

    /// Trace to F_q: a^q + a.
    pub fn trace(&self, a: Fe) -> Fe {
        self.add(self.frob_q(a), a)
    }

    /// Norm to F_q: a^(q+1).
    pub fn norm(&self, a: Fe) -> Fe {
        self.mul(self.frob_q(a), a)
    }

    #[inline]
    pub fn is_in_subfield(&self, a: Fe) -> bool {
        self.in_subfield[a as usize]
    }

    /// The F_q subset, sorted by element index.
    pub fn subfield(&self) -> &[Fe] {
        &self.subfield
    }

    /// A_c = { a : a^q + a = c }, for c in F_q.
    pub fn trace_fiber(&self, c: Fe) -> Result<&[Fe]> {
        if !self.is_in_subfield(c) {
            return Err(Error::NotInSubfield(c));
        }
        Ok(&self.fibers[c as usize])
    }

    /// A = A_0, the kernel of the trace.
    pub fn a_zero(&self) -> &[Fe] {
        &self.fibers[0]
    }

    /// A^x = A \ {0}.
    pub fn a_nonzero(&self) -> Vec<Fe> {
        self.fibers[0].iter().copied().filter(|&a| a != 0).collect()
    }

    /// mu = { b^(q-1) : b in K^x }, the (q+1) roots of T^(q+1) - 1.
    pub fn power_residues(&self) -> &[Fe] {
        &self.mu
    }

    pub fn elements(&self) -> impl Iterator<Item = Fe> {
        0..self.qq
    }

    /// Nonzero elements of F_q.
    pub fn subfield_units(&self) -> Vec<Fe> {
        self.subfield.iter().copied().filter(|&x| x != 0).collect()
    }
}
