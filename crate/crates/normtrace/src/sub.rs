//! The decomposition subtower `Z_m = K(z_0, ..., z_m)` with `z_i = x_i^{q-1}`.
//!
//! Provides the embedding of the `z_i` into the big tower, symbolic checks of
//! the defining `z`-recursion and its reflection symmetry, verification that
//! the stabilizer generators act trivially on the lower `z`-coordinates, a
//! full enumeration of the rational places of `Z_m`, and counts for the
//! intermediate towers generated by `s_i = x_i^r` for a divisor `r` of `q-1`.

use std::collections::HashSet;

use serde_json::json;

use crate::error::{Error, Result};
use crate::gf::{Fe, FieldCtx};
use crate::grp::{decomposition_generators, epsilon, pa_family_with_report};
use crate::plc::{epsilon_m, n1_formula, TowerKind};
use crate::sgp::genus_t;
use crate::twr::{TowerCtx, TowerElem};

const ENUMERATION_CAP: u64 = 1_000_000;

/// A rational place of the subtower, identified by the values of the
/// coordinates `z_0, ..., z_m` (or by its defining divisor where some
/// coordinate is infinite or indeterminate).
///
/// The derived ordering gives a deterministic global order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ZPlace {
    /// The common pole of all coordinates; totally ramified over the bottom.
    ZInfinity,
    /// The zero of `z_0 + 1`; totally ramified over the bottom.
    ZMinusOne,
    /// Common zero of `z_0, ..., z_{m-1}` with `z_m = b`, where `b` is 0 or -1.
    ZCommonZero { b: Fe },
    /// Extra zeros of `z_layer + 1` lying over `z_0 = 0`; only for even `q`
    /// and `m >= 2`, at layers 1 and `m-1`. The label `a` ranges over the
    /// trace-zero set and distinguishes the `q` places of a layer.
    ZEvenSpecial { layer: usize, a: Fe },
    /// An affine chain whose start is not a `(q-1)`-th power: the unique
    /// rational place over `z_0 = chain[0]`.
    ZUniqueChain { chain: Vec<Fe> },
    /// An affine chain starting at a `(q-1)`-th power `d_0` not in `{0, -1}`;
    /// the fibre over `z_0 = d_0` decomposes completely.
    ZSplitChain { chain: Vec<Fe> },
}

impl ZPlace {
    pub fn variant_name(&self) -> &'static str {
        match self {
            ZPlace::ZInfinity => "z_infinity",
            ZPlace::ZMinusOne => "z_minus_one",
            ZPlace::ZCommonZero { .. } => "z_common_zero",
            ZPlace::ZEvenSpecial { .. } => "z_even_special",
            ZPlace::ZUniqueChain { .. } => "z_unique_chain",
            ZPlace::ZSplitChain { .. } => "z_split_chain",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let params = match self {
            ZPlace::ZInfinity | ZPlace::ZMinusOne => json!({}),
            ZPlace::ZCommonZero { b } => json!({ "b": b }),
            ZPlace::ZEvenSpecial { layer, a } => json!({ "layer": layer, "a": a }),
            ZPlace::ZUniqueChain { chain } | ZPlace::ZSplitChain { chain } => {
                json!({ "chain": chain })
            }
        };
        json!({ "variant": self.variant_name(), "params": params })
    }

    pub fn to_csv_row(&self) -> String {
        let (layer, value, chain) = match self {
            ZPlace::ZInfinity | ZPlace::ZMinusOne => {
                (String::new(), String::new(), String::new())
            }
            ZPlace::ZCommonZero { b } => (String::new(), b.to_string(), String::new()),
            ZPlace::ZEvenSpecial { layer, a } => {
                (layer.to_string(), a.to_string(), String::new())
            }
            ZPlace::ZUniqueChain { chain } | ZPlace::ZSplitChain { chain } => (
                String::new(),
                String::new(),
                chain
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
            ),
        };
        format!("{},{},{},{}", self.variant_name(), layer, value, chain)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZPlaceCounts {
    pub infinity: u64,
    pub minus_one: u64,
    pub common_zeros: u64,
    pub even_special: u64,
    pub unique_chains: u64,
    pub split_chains: u64,
}

impl ZPlaceCounts {
    pub fn total(&self) -> u64 {
        self.infinity
            + self.minus_one
            + self.common_zeros
            + self.even_special
            + self.unique_chains
            + self.split_chains
    }
}

#[derive(Debug, Clone)]
pub struct ZPlaceSet {
    pub q: u32,
    pub m: usize,
    pub places: Vec<ZPlace>,
    pub counts: ZPlaceCounts,
    /// Number of split-type starting values (the `(q-1)`-th powers outside
    /// `{0, -1}`); always `q`.
    pub split_starts: u64,
}

/// The canonical form of `z_i = x_i^{q-1}` inside the big tower.
pub fn z_embed(t: &TowerCtx, i: usize) -> TowerElem {
    t.pow(&t.gen(i), u64::from(t.q()) - 1)
}

/// Checks the subtower recursion `w_{i+1}(w_{i+1}+1)^{q-1} = w_i^q/(w_i+1)^{q-1}`
/// for consecutive entries of `w`, in cross-multiplied form (no inversion).
pub fn z_recursion_holds(t: &TowerCtx, w: &[TowerElem]) -> bool {
    let q = u64::from(t.q());
    let one = t.one();
    for i in 0..w.len().saturating_sub(1) {
        let lhs = t.mul(
            &t.mul(&w[i + 1], &t.pow(&t.add(&w[i + 1], &one), q - 1)),
            &t.pow(&t.add(&w[i], &one), q - 1),
        );
        if lhs != t.pow(&w[i], q) {
            return false;
        }
    }
    true
}

/// The reflected coordinates `w_i = 1/z_{m-i}` satisfy the same recursion.
pub fn z_reflection_check(t: &TowerCtx) -> bool {
    let q = u64::from(t.q());
    let m = t.m;
    let w: Vec<TowerElem> = (0..=m)
        .map(|i| t.pow(t.inv_gen(m - i), q - 1))
        .collect();
    z_recursion_holds(t, &w)
}

/// Verifies on generators that the stabilizer acts trivially on
/// `z_0, ..., z_{m-eps}` and the conjugator family on `z_1, ..., z_{m-eps}`,
/// and that the cut is tight: some stabilizer generator moves `z_{m-eps+1}`.
pub fn fixed_field_check(t: &TowerCtx) -> Result<bool> {
    let q = t.q();
    let m = t.m;
    let eps = epsilon(q, m) as usize;
    if m < eps {
        return Err(Error::InvalidArg(format!(
            "height {m} below stabilizer depth {eps}"
        )));
    }
    let z: Vec<TowerElem> = (0..=m).map(|i| z_embed(t, i)).collect();

    for sigma in decomposition_generators(t)? {
        for zi in z.iter().take(m - eps + 1) {
            if &t.substitute_hom(&sigma.images, zi)? != zi {
                return Ok(false);
            }
        }
    }
    let (pa, _) = pa_family_with_report(t)?;
    for tau in &pa {
        for zi in z.iter().take(m - eps + 1).skip(1) {
            if &t.substitute_hom(&tau.images, zi)? != zi {
                return Ok(false);
            }
        }
    }
    // Tightness: the coordinate just above the fixed field must move.
    let above = &z[m - eps + 1];
    let mut moved = false;
    for sigma in decomposition_generators(t)? {
        if &t.substitute_hom(&sigma.images, above)? != above {
            moved = true;
            break;
        }
    }
    Ok(moved)
}

/// All `d'` with `d'(d'+1)^{q-1}(d+1)^{q-1} = d^q`, the rational continuations
/// of an affine chain value `d` (requires `d` distinct from 0 and -1).
fn z_continuations(f: &FieldCtx, d: Fe) -> Vec<Fe> {
    let q = u64::from(f.q.q);
    let rhs = f.pow(d, q);
    let scale = f.pow(f.add(d, f.one()), q - 1);
    let mut roots = Vec::new();
    for t in f.elements() {
        let lhs = f.mul(
            f.mul(t, f.pow(f.add(t, f.one()), q - 1)),
            scale,
        );
        if lhs == rhs {
            roots.push(t);
        }
    }
    roots
}

/// Enumerates the rational places of the subtower of height `m` and checks
/// the count against the closed formula.
pub fn enumerate_z_places(f: &FieldCtx, m: usize) -> Result<ZPlaceSet> {
    let q = f.q.q;
    let expected = n1_formula(q, m, TowerKind::Z);
    if expected > ENUMERATION_CAP {
        return Err(Error::EnumerationCap(expected));
    }
    let neg_one = f.neg(f.one());
    let mu: HashSet<Fe> = f.power_residues().iter().copied().collect();

    let mut places = vec![
        ZPlace::ZInfinity,
        ZPlace::ZMinusOne,
        ZPlace::ZCommonZero { b: f.zero() },
        ZPlace::ZCommonZero { b: neg_one },
    ];

    if q % 2 == 0 && m >= 2 {
        let layers: Vec<usize> = if m == 2 { vec![1] } else { vec![1, m - 1] };
        for layer in layers {
            for &a in f.a_zero() {
                places.push(ZPlace::ZEvenSpecial { layer, a });
            }
        }
    }

    let mut split_starts = 0u64;
    for d0 in f.elements() {
        if d0 == f.zero() || d0 == neg_one {
            continue;
        }
        let split = mu.contains(&d0);
        if split {
            split_starts += 1;
        }
        let per_level = if split { q as usize } else { 1 };
        let mut chains = vec![vec![d0]];
        for _ in 0..m {
            let mut next = Vec::with_capacity(chains.len() * per_level);
            for chain in &chains {
                let last = *chain.last().expect("nonempty chain");
                let mut conts = z_continuations(f, last);
                conts.sort_unstable();
                if conts.len() != per_level {
                    return Err(Error::Verification(format!(
                        "start {d0}: {} continuations of {last}, expected {per_level}",
                        conts.len()
                    )));
                }
                for c in conts {
                    if c == f.zero() || c == neg_one {
                        return Err(Error::Verification(format!(
                            "start {d0}: degenerate continuation {c}"
                        )));
                    }
                    if !split && mu.contains(&c) {
                        return Err(Error::Verification(format!(
                            "start {d0}: continuation {c} is a power residue"
                        )));
                    }
                    let mut grown = chain.clone();
                    grown.push(c);
                    next.push(grown);
                }
            }
            chains = next;
        }
        for chain in chains {
            places.push(if split {
                ZPlace::ZSplitChain { chain }
            } else {
                ZPlace::ZUniqueChain { chain }
            });
        }
    }

    if split_starts != u64::from(q) {
        return Err(Error::Verification(format!(
            "{split_starts} split-type starting values, expected {q}"
        )));
    }
    if places.len() as u64 != expected {
        return Err(Error::Verification(format!(
            "subtower place count {} does not match formula value {expected}",
            places.len()
        )));
    }
    places.sort();

    let mut counts = ZPlaceCounts {
        infinity: 0,
        minus_one: 0,
        common_zeros: 0,
        even_special: 0,
        unique_chains: 0,
        split_chains: 0,
    };
    for p in &places {
        match p {
            ZPlace::ZInfinity => counts.infinity += 1,
            ZPlace::ZMinusOne => counts.minus_one += 1,
            ZPlace::ZCommonZero { .. } => counts.common_zeros += 1,
            ZPlace::ZEvenSpecial { .. } => counts.even_special += 1,
            ZPlace::ZUniqueChain { .. } => counts.unique_chains += 1,
            ZPlace::ZSplitChain { .. } => counts.split_chains += 1,
        }
    }

    Ok(ZPlaceSet {
        q,
        m,
        places,
        counts,
        split_starts,
    })
}

/// All roots in the big field of `phi(T) = T^q + d^{-1}T - (d+1)^{-1}`, the
/// reduced minimal polynomial of `x_1/x_0` at a zero of `z_0 - d`.
pub fn chain_step_roots(f: &FieldCtx, d: Fe) -> Result<Vec<Fe>> {
    if d == f.zero() || d == f.neg(f.one()) {
        return Err(Error::InvalidArg(format!("degenerate chain value {d}")));
    }
    // Multiplied through by d(d+1): d(d+1) T^q + (d+1) T - d = 0.
    let q = u64::from(f.q.q);
    let d1 = f.add(d, f.one());
    let lead = f.mul(d, d1);
    let mut roots = Vec::new();
    for t in f.elements() {
        let v = f.sub(f.add(f.mul(lead, f.pow(t, q)), f.mul(d1, t)), d);
        if v == f.zero() {
            roots.push(t);
        }
    }
    Ok(roots)
}

/// The unique rational root of the chain-step polynomial when `d` is not a
/// `(q-1)`-th power; errors if the root is not unique.
pub fn dtilde_root(f: &FieldCtx, d: Fe) -> Result<Fe> {
    let roots = chain_step_roots(f, d)?;
    if roots.len() != 1 {
        return Err(Error::Verification(format!(
            "chain-step polynomial at {d} has {} rational roots, expected 1",
            roots.len()
        )));
    }
    Ok(roots[0])
}

/// Closed form `d (d+1)^{-1} (d^q+1)^{-1}` for the unique root.
pub fn dtilde_closed_form(f: &FieldCtx, d: Fe) -> Result<Fe> {
    let q = u64::from(f.q.q);
    let a = f.inv(f.add(d, f.one()))?;
    let b = f.inv(f.add(f.pow(d, q), f.one()))?;
    Ok(f.mul(d, f.mul(a, b)))
}

/// Recursion data for the tower generated by `s_i = x_i^r`, `r` a divisor of
/// `q - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntermediateSpec {
    pub q: u32,
    pub m: usize,
    pub r: u32,
}

impl IntermediateSpec {
    pub fn new(q: u32, m: usize, r: u32) -> Result<IntermediateSpec> {
        if r == 0 || (q - 1) % r != 0 {
            return Err(Error::InvalidArg(format!(
                "{r} does not divide {}",
                q - 1
            )));
        }
        Ok(IntermediateSpec { q, m, r })
    }

    /// The cofactor `(q-1)/r`.
    pub fn e(&self) -> u32 {
        (self.q - 1) / self.r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntermediateReport {
    pub q: u32,
    pub m: usize,
    pub r: u32,
    /// Complete rational chains of the `s`-recursion.
    pub affine_chains: u64,
    /// Affine chains plus the pole, the ramified zeros, the common-zero
    /// places, and the even-`q` specials.
    pub total: u64,
    /// Observed excess over `(q^{m+1} + eps*_m)(q-1)/r`; bounded by
    /// `2q <= k <= q^2 - q + 2`.
    pub k: u64,
    pub genus: u64,
}

/// Counts the rational places of the `r`-th power intermediate tower by
/// scanning the `s`-recursion
/// `s_{i+1}(s_{i+1}^e + 1)^r = s_i^q / (s_i^e + 1)^r` with `e = (q-1)/r`,
/// and checks the excess-count sandwich.
pub fn intermediate_enumerate(f: &FieldCtx, m: usize, r: u32) -> Result<IntermediateReport> {
    let q = f.q.q;
    let spec = IntermediateSpec::new(q, m, r)?;
    let e = u64::from(spec.e());
    let rr = u64::from(r);
    let qq = u64::from(q);

    let split_expected = u64::pow(qq, m as u32 + 1) * (qq - 1) / rr;
    if split_expected > ENUMERATION_CAP {
        return Err(Error::EnumerationCap(split_expected));
    }

    let neg_one = f.neg(f.one());
    let step_scale = |v: Fe| f.pow(f.add(f.pow(v, e), f.one()), rr);
    let continuations = |v: Fe| -> Vec<Fe> {
        let rhs = f.pow(v, qq);
        let scale = step_scale(v);
        let mut roots = Vec::new();
        for t in f.elements() {
            if f.mul(f.mul(t, step_scale(t)), scale) == rhs {
                roots.push(t);
            }
        }
        roots
    };

    let mut affine_chains = 0u64;
    for s0 in f.elements() {
        if s0 == f.zero() || f.pow(s0, e) == neg_one {
            continue;
        }
        let mut frontier = vec![s0];
        for _ in 0..m {
            let mut next = Vec::new();
            for v in frontier {
                next.extend(continuations(v));
            }
            frontier = next;
        }
        affine_chains += frontier.len() as u64;
    }

    // Non-affine places mirror the top-tower taxonomy collapsed by degree r:
    // the pole, (q-1)/r ramified zeros, 1 + (q-1)/r common-zero places, and
    // the even-q specials in groups of size r.
    let eps = epsilon_m(q, m);
    let total = affine_chains + 1 + e + (1 + e) + eps / rr;
    let base = (u64::pow(qq, m as u32 + 1) * (qq - 1) + eps) / rr;
    let k = total
        .checked_sub(base)
        .ok_or_else(|| Error::Verification("place count below split part".into()))?;
    let (lo, hi) = (2 * qq, qq * qq - qq + 2);
    if k < lo || k > hi {
        return Err(Error::Verification(format!(
            "excess count {k} outside [{lo}, {hi}] for q={q}, m={m}, r={r}"
        )));
    }

    let g = genus_t(q, m);
    assert_eq!(g % u64::from(r), 0, "genus not divisible by the tower degree");
    Ok(IntermediateReport {
        q,
        m,
        r,
        affine_chains,
        total,
        k,
        genus: g / u64::from(r),
    })
}
