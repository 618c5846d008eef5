//! Rational places of T_m/F_{q^2}: enumeration, classification by coordinate
//! signature, and exact evaluation at the completely-split affine places.

use crate::error::{Error, Result};
use crate::gf::{Fe, FieldCtx};
use crate::twr::{TowerCtx, TowerElem, Val};
use std::collections::HashMap;

/// Rational place of T_m, named by its defining data.
///
/// The derived variant order (pole first, then the ramified and affine
/// families, split chains last) fixes the deterministic global ordering used
/// by generator matrices and permutation actions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Place {
    /// Common pole of x_0, ..., x_m, totally ramified through the tower.
    Infinity,
    /// Zero of x_0 - a for a with a^{q-1} = -1; a pole of every higher x_i.
    RamifiedZero { a: Fe },
    /// The chain (0, ..., 0, b) with b in the trace kernel.
    BottomZero { b: Fe },
    /// Even q, m >= 2 only: x_0 .. x_{layer-1} vanish, x_layer = a in F_q^x,
    /// x_{layer+1}, ... have poles; b in the trace fiber over a pins the place
    /// via the auxiliary coordinate x_m + a^2/x_{m-2} + b (resp. layer 1).
    EvenSpecial { layer: usize, a: Fe, b: Fe },
    /// Completely split affine chain: trace(c_0) != 0 and
    /// c_i^q + c_i = c_{i-1}^q/(c_{i-1}^{q-1}+1) at every level.
    SplitAffine { chain: Vec<Fe> },
}

impl Place {
    pub fn variant_name(&self) -> &'static str {
        match self {
            Place::Infinity => "Infinity",
            Place::RamifiedZero { .. } => "RamifiedZero",
            Place::BottomZero { .. } => "BottomZero",
            Place::EvenSpecial { .. } => "EvenSpecial",
            Place::SplitAffine { .. } => "SplitAffine",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let params: Vec<serde_json::Value> = match self {
            Place::Infinity => vec![],
            Place::RamifiedZero { a } => vec![(*a).into()],
            Place::BottomZero { b } => vec![(*b).into()],
            Place::EvenSpecial { layer, a, b } => {
                vec![(*layer).into(), (*a).into(), (*b).into()]
            }
            Place::SplitAffine { chain } => chain.iter().map(|&c| c.into()).collect(),
        };
        serde_json::json!({ "variant": self.variant_name(), "params": params })
    }

    /// CSV row with columns variant,a,b,chain.
    pub fn to_csv_row(&self) -> String {
        let (a, b, chain) = match self {
            Place::Infinity => (String::new(), String::new(), String::new()),
            Place::RamifiedZero { a } => (a.to_string(), String::new(), String::new()),
            Place::BottomZero { b } => (String::new(), b.to_string(), String::new()),
            Place::EvenSpecial { layer, a, b } => {
                (a.to_string(), b.to_string(), format!("layer{layer}"))
            }
            Place::SplitAffine { chain } => (
                String::new(),
                String::new(),
                chain
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
            ),
        };
        format!("{},{},{},{}", self.variant_name(), a, b, chain)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PlaceCounts {
    pub infinity: usize,
    pub ramified_zero: usize,
    pub bottom_zero: usize,
    pub even_special: usize,
    pub split_affine: usize,
}

impl PlaceCounts {
    pub fn total(&self) -> usize {
        self.infinity + self.ramified_zero + self.bottom_zero + self.even_special
            + self.split_affine
    }
}

/// All rational places of T_m, globally sorted, with the split chains also
/// exposed as an indexed family for permutation actions and code columns.
#[derive(Debug, Clone)]
pub struct PlaceSet {
    pub q: u32,
    pub m: usize,
    pub places: Vec<Place>,
    pub counts: PlaceCounts,
    /// Split chains in sorted order; `places` contains the same data.
    pub splits: Vec<Vec<Fe>>,
    split_index: HashMap<Vec<Fe>, usize>,
}

impl PlaceSet {
    pub fn split_index_of(&self, chain: &[Fe]) -> Option<usize> {
        self.split_index.get(chain).copied()
    }
}

/// All y in F_{q^2} with y^q + y = v: a coset of the trace kernel (size q)
/// when v lies in F_q, empty otherwise.
pub fn artin_schreier_solve(ctx: &FieldCtx, v: Fe) -> Vec<Fe> {
    ctx.elements()
        .filter(|&y| ctx.add(ctx.frob_q(y), y) == v)
        .collect()
}

/// The tower step value rho(c) = c^q / (c^{q-1} + 1) = norm(c)/trace(c).
pub fn rho_value(ctx: &FieldCtx, c: Fe) -> Result<Fe> {
    let den = ctx.add(ctx.pow(c, (ctx.q.q - 1) as u64), 1);
    if den == 0 {
        return Err(Error::Indeterminate);
    }
    Ok(ctx.div(ctx.pow(c, ctx.q.q as u64), den)?)
}

/// Tower and decomposition-subtower selectors for the counting formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TowerKind {
    T,
    Z,
}

/// Defect term in the rational-place count: 0 for odd q or m = 1,
/// q(q-1) for even q and m = 2, 2q(q-1) for even q and m >= 3.
pub fn epsilon_m(q: u32, m: usize) -> u64 {
    if q % 2 == 1 || m <= 1 {
        0
    } else if m == 2 {
        (q as u64) * (q as u64 - 1)
    } else {
        2 * (q as u64) * (q as u64 - 1)
    }
}

/// Exact number of rational places of T_m (kind T) or Z_m (kind Z).
pub fn n1_formula(q: u32, m: usize, kind: TowerKind) -> u64 {
    let qq = q as u64;
    match kind {
        TowerKind::T => qq.pow(m as u32 + 2) - qq.pow(m as u32 + 1) + 2 * qq + epsilon_m(q, m),
        TowerKind::Z => {
            qq.pow(m as u32 + 1) + qq * qq - qq + 2 + epsilon_m(q, m) / (qq - 1)
        }
    }
}

const ENUMERATION_CAP: u64 = 1_000_000;

/// Enumerate all rational places of T_m and verify the count against the
/// closed formula.
pub fn enumerate_places(ctx: &FieldCtx, m: usize) -> Result<PlaceSet> {
    let q = ctx.q.q;
    let split_expected = (q as u64).pow(m as u32 + 1) * (q as u64 - 1);
    if split_expected > ENUMERATION_CAP {
        return Err(Error::EnumerationCap(split_expected));
    }

    let mut places = Vec::new();
    let mut counts = PlaceCounts::default();

    places.push(Place::Infinity);
    counts.infinity = 1;
    for a in ctx.a_nonzero() {
        places.push(Place::RamifiedZero { a });
        counts.ramified_zero += 1;
    }
    for &b in ctx.a_zero() {
        places.push(Place::BottomZero { b });
        counts.bottom_zero += 1;
    }
    if q % 2 == 0 && m >= 2 {
        let layers: &[usize] = if m == 2 { &[1] } else { &[1, m - 1] };
        for &layer in layers {
            for a in ctx.a_nonzero() {
                for &b in ctx.trace_fiber(a)? {
                    places.push(Place::EvenSpecial { layer, a, b });
                    counts.even_special += 1;
                }
            }
        }
    }

    // Split chains: grow level by level from the q^2 - q trace-nonzero starts.
    let mut chains: Vec<Vec<Fe>> = ctx
        .elements()
        .filter(|&c| ctx.trace(c) != 0)
        .map(|c| vec![c])
        .collect();
    for _level in 1..=m {
        let mut next = Vec::with_capacity(chains.len() * q as usize);
        for chain in &chains {
            let prev = *chain.last().unwrap();
            let v = rho_value(ctx, prev)?;
            debug_assert!(ctx.is_in_subfield(v) && v != 0, "rho lands in F_q^x on split chains");
            let sols = artin_schreier_solve(ctx, v);
            if sols.len() != q as usize {
                return Err(Error::Verification(format!(
                    "split chain continuation count {} != q at value {v}",
                    sols.len()
                )));
            }
            for y in sols {
                if ctx.trace(y) == 0 {
                    return Err(Error::Verification(
                        "split chain produced a trace-zero coordinate".into(),
                    ));
                }
                let mut c = chain.clone();
                c.push(y);
                next.push(c);
            }
        }
        chains = next;
    }
    chains.sort();
    counts.split_affine = chains.len();
    let split_index: HashMap<Vec<Fe>, usize> = chains
        .iter()
        .enumerate()
        .map(|(i, c)| (c.clone(), i))
        .collect();
    for c in &chains {
        places.push(Place::SplitAffine { chain: c.clone() });
    }

    if counts.split_affine as u64 != split_expected {
        return Err(Error::Verification(format!(
            "split count {} != q^(m+1)(q-1) = {split_expected}",
            counts.split_affine
        )));
    }
    let expected = n1_formula(q, m, TowerKind::T);
    if counts.total() as u64 != expected {
        return Err(Error::Verification(format!(
            "place count {} != closed formula {expected}",
            counts.total()
        )));
    }

    places.sort();
    Ok(PlaceSet {
        q,
        m,
        places,
        counts,
        splits: chains,
        split_index,
    })
}

/// Exact value of f at a split affine place (coordinate substitution).
pub fn evaluate_at_split(ctx: &TowerCtx, f: &TowerElem, chain: &[Fe]) -> Result<Fe> {
    ctx.evaluate_at_chain(f, chain)
}

/// Resolves the `b` parameter of an even-q special place: given (layer, a, b)
/// the callback reports whether the pinning coordinate built from that data
/// evaluates to zero at the place being classified.
pub type TieBreaker<'a> = &'a dyn Fn(usize, Fe, Fe) -> Result<bool>;

/// Reconstruct a place from the values of x_0, ..., x_m at it.
pub fn classify_place_from_signature(
    ctx: &FieldCtx,
    m: usize,
    values: &[Val],
    tie_breaker: Option<TieBreaker>,
) -> Result<Place> {
    assert_eq!(values.len(), m + 1);
    let invalid = || {
        Error::InvalidSignature(format!(
            "signature {values:?} matches no rational place"
        ))
    };

    if values.iter().all(|v| *v == Val::Infinity) {
        return Ok(Place::Infinity);
    }
    if let Val::Finite(a) = values[0] {
        if a != 0 && ctx.trace(a) == 0 {
            // Pole of every higher coordinate.
            if m >= 1 && values[1..].iter().all(|v| *v == Val::Infinity) {
                return Ok(Place::RamifiedZero { a });
            }
            return Err(invalid());
        }
        if ctx.trace(a) != 0 {
            let mut chain = Vec::with_capacity(m + 1);
            for v in values {
                match v {
                    Val::Finite(c) => chain.push(*c),
                    Val::Infinity => return Err(invalid()),
                }
            }
            for i in 1..=m {
                let lhs = ctx.add(ctx.frob_q(chain[i]), chain[i]);
                if lhs != rho_value(ctx, chain[i - 1])? {
                    return Err(invalid());
                }
            }
            return Ok(Place::SplitAffine { chain });
        }
        // a = 0: the chain over the bottom zero, possibly with an even-q
        // special breakout at some layer.
        let mut i = 0;
        while i < m && values[i] == Val::Finite(0) {
            i += 1;
        }
        match values[i] {
            Val::Finite(b) if i == m => {
                if ctx.trace(b) == 0 {
                    return Ok(Place::BottomZero { b });
                }
                return Err(invalid());
            }
            Val::Finite(a) => {
                // (0, ..., 0, a, inf, ..., inf) with a in A^x at position i.
                if ctx.q.q % 2 != 0
                    || a == 0
                    || ctx.trace(a) != 0
                    || !(i == 1 || i == m - 1)
                    || values[i + 1..].iter().any(|v| *v != Val::Infinity)
                {
                    return Err(invalid());
                }
                let layer = if m == 2 { 1 } else { i };
                let tb = tie_breaker.ok_or_else(|| {
                    Error::InvalidSignature(
                        "even-q special signature requires a tie-breaker".into(),
                    )
                })?;
                let mut found = None;
                for &b in ctx.trace_fiber(a)? {
                    if tb(layer, a, b)? {
                        if found.is_some() {
                            return Err(Error::InvalidSignature(
                                "tie-breaker matched two parameters".into(),
                            ));
                        }
                        found = Some(b);
                    }
                }
                let b = found.ok_or_else(|| {
                    Error::InvalidSignature("tie-breaker matched no parameter".into())
                })?;
                Ok(Place::EvenSpecial { layer, a, b })
            }
            Val::Infinity => Err(invalid()),
        }
    } else {
        Err(invalid())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twr::TowerCtx;
    use std::sync::Arc;

    fn fc(q: u32) -> FieldCtx {
        FieldCtx::new(q).unwrap()
    }

    #[test]
    fn artin_schreier_examples() {
        let ctx = fc(3);
        // y^3 + y = 2 has solutions 1 + kernel = {1, 4, 7}.
        assert_eq!(artin_schreier_solve(&ctx, 2), vec![1, 4, 7]);
        // v = 0 gives exactly the trace kernel.
        assert_eq!(artin_schreier_solve(&ctx, 0), ctx.a_zero());
        // v outside F_3 has no solution.
        let u = 3;
        assert!(!ctx.is_in_subfield(u));
        assert!(artin_schreier_solve(&ctx, u).is_empty());
    }

    #[test]
    fn place_count_examples() {
        let p = enumerate_places(&fc(3), 2).unwrap();
        assert_eq!(p.counts.total(), 60);
        assert_eq!(p.counts.split_affine, 54);
        assert_eq!(p.counts.infinity, 1);
        assert_eq!(p.counts.ramified_zero, 2);
        assert_eq!(p.counts.bottom_zero, 3);

        let p = enumerate_places(&fc(4), 2).unwrap();
        assert_eq!(p.counts.total(), 212);
        assert_eq!(p.counts.split_affine, 192);
        assert_eq!(p.counts.even_special, 12);

        let p = enumerate_places(&fc(2), 1).unwrap();
        assert_eq!(p.counts.total(), 8);
        assert_eq!(p.counts.split_affine, 4);
    }

    #[test]
    fn counts_match_formula_on_small_grid() {
        for q in [2u32, 3, 4, 5] {
            let ctx = fc(q);
            for m in 1..=3usize {
                if (q as u64).pow(m as u32 + 1) * (q as u64 - 1) > 30_000 {
                    continue;
                }
                let p = enumerate_places(&ctx, m).unwrap();
                assert_eq!(p.counts.total() as u64, n1_formula(q, m, TowerKind::T));
            }
        }
    }

    #[test]
    fn n1_formula_examples() {
        assert_eq!(n1_formula(3, 2, TowerKind::T), 60);
        assert_eq!(n1_formula(3, 2, TowerKind::Z), 35);
        assert_eq!(n1_formula(4, 3, TowerKind::Z), 278);
        assert_eq!(n1_formula(2, 1, TowerKind::T), 8);
    }

    #[test]
    fn split_evaluation() {
        // q = 2: the four split chains are (w,w), (w,w^2), (w^2,w), (w^2,w^2).
        let field = Arc::new(fc(2));
        let t = TowerCtx::new(field.clone(), 1).unwrap();
        let p = enumerate_places(&field, 1).unwrap();
        assert_eq!(p.splits, vec![vec![2, 2], vec![2, 3], vec![3, 2], vec![3, 3]]);
        let x0 = t.gen(0);
        assert_eq!(evaluate_at_split(&t, &x0, &[2, 2]).unwrap(), 2);
        // x_0^{q-1} + 1 never vanishes at a split place.
        let f = t.add(&t.gen(0), &t.one()); // q = 2: x_0 + 1
        for chain in &p.splits {
            assert_ne!(evaluate_at_split(&t, &f, chain).unwrap(), 0);
        }
        // The defining relation vanishes identically on chains.
        let t3 = TowerCtx::new(Arc::new(fc(3)), 2).unwrap();
        let p3 = enumerate_places(&t3.field, 2).unwrap();
        let rel = {
            let lhs = t3.add(&t3.pow(&t3.gen(1), 3), &t3.gen(1));
            let den = t3.add(&t3.pow(&t3.gen(0), 2), &t3.one());
            let rhs = t3.mul(&t3.pow(&t3.gen(0), 3), &t3.inv(&den).unwrap());
            t3.sub(&lhs, &rhs)
        };
        for chain in p3.splits.iter().take(10) {
            assert_eq!(evaluate_at_split(&t3, &rel, chain).unwrap(), 0);
        }
    }

    #[test]
    fn classification_examples() {
        let ctx = fc(3);
        let inf = vec![Val::Infinity; 3];
        assert_eq!(
            classify_place_from_signature(&ctx, 2, &inf, None).unwrap(),
            Place::Infinity
        );
        let u = 3; // trace-zero nonzero
        let sig = vec![Val::Finite(u), Val::Infinity];
        assert_eq!(
            classify_place_from_signature(&ctx, 1, &sig, None).unwrap(),
            Place::RamifiedZero { a: u }
        );
        let sig = vec![Val::Finite(0), Val::Finite(0), Val::Finite(u)];
        assert_eq!(
            classify_place_from_signature(&ctx, 2, &sig, None).unwrap(),
            Place::BottomZero { b: u }
        );
        // Split chains round-trip through classification.
        let p = enumerate_places(&ctx, 2).unwrap();
        let chain = &p.splits[7];
        let sig: Vec<Val> = chain.iter().map(|&c| Val::Finite(c)).collect();
        assert_eq!(
            classify_place_from_signature(&ctx, 2, &sig, None).unwrap(),
            Place::SplitAffine { chain: chain.clone() }
        );
        // A finite chain violating the recursion is rejected.
        let bad = vec![Val::Finite(1), Val::Finite(1), Val::Finite(2)];
        assert!(classify_place_from_signature(&ctx, 2, &bad, None).is_err());
    }

    #[test]
    fn even_special_classification_uses_tie_breaker() {
        let ctx = fc(4);
        let a = ctx.a_nonzero()[0];
        let fiber = ctx.trace_fiber(a).unwrap();
        let want = fiber[1];
        let sig = vec![Val::Finite(0), Val::Finite(a), Val::Infinity, Val::Infinity];
        let tb = |_layer: usize, _a: Fe, b: Fe| -> Result<bool> { Ok(b == want) };
        let got = classify_place_from_signature(&ctx, 3, &sig, Some(&tb)).unwrap();
        assert_eq!(got, Place::EvenSpecial { layer: 1, a, b: want });
        // Without a tie-breaker the signature is not classifiable.
        assert!(classify_place_from_signature(&ctx, 3, &sig, None).is_err());
    }
}
