//! One-point evaluation codes on the tower: parameter computation from the
//! Weierstrass semigroup, explicit low-degree generator matrices evaluated at
//! the completely-split places, brute-force distance checks, a
//! Gilbert–Varshamov comparison, and the action of the infinite-place
//! stabilizer on the codes.

use serde_json::json;

use crate::error::{Error, Result};
use crate::gf::{Fe, FieldCtx};
use crate::grp::{split_permutation, Automorphism};
use crate::plc::PlaceSet;
use crate::sgp::{SemigroupKind, SemigroupSpec};
use crate::twr::{TowerCtx, Val};

/// Search-space cap for the exhaustive distance computation.
const BRUTE_FORCE_CAP: u64 = 10_000_000;

/// Parameters of the code evaluating `L(t P_infinity)` at the split places.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeParams {
    pub q: u32,
    pub m: usize,
    pub kind: SemigroupKind,
    /// Pole-order bound at the infinite place.
    pub t: u64,
    /// Number of evaluation points (all completely-split rational places).
    pub n: u64,
    /// Dimension, i.e. the number of pole orders up to `t`.
    pub k: u64,
    /// Designed distance `n - t`.
    pub dstar: u64,
}

impl CodeParams {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "q": self.q,
            "m": self.m,
            "kind": kind_tag(self.kind),
            "t": self.t,
            "n": self.n,
            "k": self.k,
            "dstar": self.dstar,
        })
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.q,
            self.m,
            kind_tag(self.kind),
            self.t,
            self.n,
            self.k,
            self.dstar
        )
    }
}

pub fn kind_tag(kind: SemigroupKind) -> String {
    match kind {
        SemigroupKind::T => "t".into(),
        SemigroupKind::Z => "z".into(),
        SemigroupKind::Intermediate(r) => format!("s{r}"),
    }
}

/// Number of completely-split rational places, the full evaluation domain.
pub fn split_count(q: u32, m: usize, kind: SemigroupKind) -> u64 {
    let qq = u64::from(q);
    let base = qq.pow(m as u32 + 1) * (qq - 1);
    match kind {
        SemigroupKind::T => base,
        SemigroupKind::Z => base / (qq - 1),
        SemigroupKind::Intermediate(r) => base / u64::from(r),
    }
}

pub fn one_point_params(q: u32, m: usize, kind: SemigroupKind, t: u64) -> Result<CodeParams> {
    let spec = SemigroupSpec::new(kind, q, m)?;
    let n = split_count(q, m, kind);
    if t >= n {
        return Err(Error::InvalidArg(format!(
            "pole bound {t} must be below the code length {n}"
        )));
    }
    let k = spec.dim_l(t);
    let dstar = n - t;
    let params = CodeParams {
        q,
        m,
        kind,
        t,
        n,
        k,
        dstar,
    };
    // Goppa bound: k + dstar >= n + 1 - g.
    if t >= 1 && params.k + params.dstar < n + 1 - spec.genus() {
        return Err(Error::Verification(format!(
            "dimension {} below the Riemann-Roch bound",
            params.k
        )));
    }
    Ok(params)
}

/// Generator matrix with rows indexed by basis functions and columns by the
/// ordered split places.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorMatrix {
    pub n: usize,
    /// `rows[j]` is the evaluation vector of `x_0^j`.
    pub rows: Vec<Vec<Fe>>,
}

impl GeneratorMatrix {
    pub fn k(&self) -> usize {
        self.rows.len()
    }

    /// CSV export: a modulus header line, then one row of element indices per
    /// basis function.
    pub fn to_csv(&self, f: &FieldCtx) -> String {
        let mut out = format!("# field order {}, entries are element indices\n", f.q.q * f.q.q);
        for row in &self.rows {
            out.push_str(
                &row.iter()
                    .map(|e| e.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            );
            out.push('\n');
        }
        out
    }
}

/// The basis `1, x_0, ..., x_0^j` with `j = floor(t / q^m)` spans
/// `L(t P_infinity)` when `t <= q^m (q-1)`, since `x_0` has pole order `q^m`.
pub fn generator_matrix_x0(f: &FieldCtx, places: &PlaceSet, t: u64) -> Result<GeneratorMatrix> {
    let q = f.q.q;
    let m = places.m;
    let qm = u64::from(q).pow(m as u32);
    if t > qm * u64::from(q - 1) {
        return Err(Error::InvalidArg(format!(
            "pole bound {t} outside the pure-powers range {}",
            qm * u64::from(q - 1)
        )));
    }
    let jmax = (t / qm) as usize;
    let spec = SemigroupSpec::new(SemigroupKind::T, q, m)?;
    if (jmax + 1) as u64 != spec.dim_l(t) {
        return Err(Error::Verification(format!(
            "{} pure powers of x_0 but dimension {}",
            jmax + 1,
            spec.dim_l(t)
        )));
    }
    let n = places.splits.len();
    let mut rows = Vec::with_capacity(jmax + 1);
    for j in 0..=jmax {
        let row: Vec<Fe> = places
            .splits
            .iter()
            .map(|chain| f.pow(chain[0], j as u64))
            .collect();
        rows.push(row);
    }
    let gm = GeneratorMatrix { n, rows };
    let rank = rank(f, &gm.rows);
    if rank != gm.k() {
        return Err(Error::Verification(format!(
            "generator matrix rank {rank} below row count {}",
            gm.k()
        )));
    }
    Ok(gm)
}

/// Reduced row echelon form over the big field; returns the rank. Rows below
/// the rank are zero; the result is the canonical basis of the row space.
pub fn rref(f: &FieldCtx, rows: &mut [Vec<Fe>]) -> usize {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    let mut pivot_row = 0;
    for col in 0..ncols {
        let Some(r) = (pivot_row..nrows).find(|&r| rows[r][col] != f.zero()) else {
            continue;
        };
        rows.swap(pivot_row, r);
        let inv = f.inv(rows[pivot_row][col]).expect("nonzero pivot");
        for c in col..ncols {
            rows[pivot_row][c] = f.mul(rows[pivot_row][c], inv);
        }
        for r in 0..nrows {
            if r != pivot_row && rows[r][col] != f.zero() {
                let factor = rows[r][col];
                for c in col..ncols {
                    let sub = f.mul(factor, rows[pivot_row][c]);
                    rows[r][c] = f.sub(rows[r][c], sub);
                }
            }
        }
        pivot_row += 1;
        if pivot_row == nrows {
            break;
        }
    }
    pivot_row
}

pub fn rank(f: &FieldCtx, rows: &[Vec<Fe>]) -> usize {
    let mut work: Vec<Vec<Fe>> = rows.to_vec();
    rref(f, &mut work)
}

/// Exhaustive minimum Hamming weight over all nonzero codewords.
pub fn min_distance_bruteforce(f: &FieldCtx, gm: &GeneratorMatrix) -> Result<u64> {
    let q2 = u64::from(f.q.q) * u64::from(f.q.q);
    let k = gm.k();
    let space = q2
        .checked_pow(k as u32)
        .filter(|&s| s <= BRUTE_FORCE_CAP)
        .ok_or(Error::EnumerationCap(q2.saturating_pow(k as u32)))?;
    let _ = space;
    let elements: Vec<Fe> = f.elements().collect();
    let mut best = gm.n as u64;
    // Depth-first over messages, accumulating partial codewords per level.
    let mut stack: Vec<Vec<Fe>> = vec![vec![f.zero(); gm.n]; k + 1];
    fn rec(
        f: &FieldCtx,
        gm: &GeneratorMatrix,
        elements: &[Fe],
        stack: &mut Vec<Vec<Fe>>,
        level: usize,
        nonzero: bool,
        best: &mut u64,
    ) {
        if level == gm.k() {
            if nonzero {
                let w = stack[level].iter().filter(|&&e| e != f.zero()).count() as u64;
                if w < *best {
                    *best = w;
                }
            }
            return;
        }
        for &c in elements {
            for i in 0..gm.n {
                let add = f.mul(c, gm.rows[level][i]);
                let prev = stack[level][i];
                stack[level + 1][i] = f.add(prev, add);
            }
            rec(
                f,
                gm,
                elements,
                stack,
                level + 1,
                nonzero || c != f.zero(),
                best,
            );
        }
    }
    rec(f, gm, &elements, &mut stack, 0, false, &mut best);
    Ok(best)
}

/// True iff the column permutation induced by `sigma` on the split places
/// preserves the row space of the low-degree generator matrix.
pub fn code_automorphism_check(
    t: &TowerCtx,
    places: &PlaceSet,
    sigma: &Automorphism,
    pole_bound: u64,
) -> Result<bool> {
    if t.evaluate_at_infinity(&sigma.images[0]) != Val::Infinity {
        return Err(Error::InvalidArg(
            "automorphism does not fix the infinite place".into(),
        ));
    }
    let gm = generator_matrix_x0(&t.field, places, pole_bound)?;
    let perm = split_permutation(t, sigma, places)?;
    let mut permuted: Vec<Vec<Fe>> = gm
        .rows
        .iter()
        .map(|row| {
            let mut out = vec![0; gm.n];
            for (j, &e) in row.iter().enumerate() {
                out[perm[j] as usize] = e;
            }
            out
        })
        .collect();
    let mut original = gm.rows.clone();
    rref(&t.field, &mut original);
    rref(&t.field, &mut permuted);
    Ok(original == permuted)
}

/// A finite-length rate point `(k/n, dstar/n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub m: usize,
    pub t: u64,
    pub n: u64,
    pub k: u64,
    pub rate: f64,
    pub reldist: f64,
}

/// Asymptotic comparison of the tower's rate line against the q^2-ary
/// Gilbert-Varshamov curve, plus finite-height rate points for both towers.
#[derive(Debug, Clone)]
pub struct GvReport {
    pub q: u32,
    /// Relative-distance interval where the tower line strictly exceeds the
    /// GV curve; `None` when the line never crosses.
    pub crossing: Option<(f64, f64)>,
    pub t_points: Vec<RatePoint>,
    pub z_points: Vec<RatePoint>,
    /// The comparison curves are asymptotic; finite-height points are
    /// attached for context only.
    pub finite_length_caveat: bool,
}

/// Tower rate line `R(delta) = 1 - delta - 1/(q-1)`.
pub fn tower_line(q: u32, delta: f64) -> f64 {
    1.0 - delta - 1.0 / (f64::from(q) - 1.0)
}

/// The q^2-ary Gilbert-Varshamov curve `1 - H_{q^2}(delta)`.
pub fn gv_curve(q: u32, delta: f64) -> f64 {
    let alpha = f64::from(q) * f64::from(q);
    let log = |x: f64| x.ln() / alpha.ln();
    1.0 - delta * log(alpha - 1.0) + delta * log(delta) + (1.0 - delta) * log(1.0 - delta)
}

pub fn gv_scan(q: u32) -> Result<GvReport> {
    const STEP: f64 = 1e-4;
    let mut lo = None;
    let mut hi = None;
    let mut i = 1;
    loop {
        let delta = STEP * f64::from(i);
        if delta >= 1.0 {
            break;
        }
        if tower_line(q, delta) > gv_curve(q, delta) {
            lo.get_or_insert(delta);
            hi = Some(delta);
        }
        i += 1;
    }
    let crossing = lo.zip(hi);

    let mut t_points = Vec::new();
    let mut z_points = Vec::new();
    for m in 1..=4 {
        let nt = split_count(q, m, SemigroupKind::T);
        let nz = split_count(q, m, SemigroupKind::Z);
        for tenth in [2u64, 5, 8] {
            // Pole bounds with the same ratio t/n on both towers.
            let tz = nz * tenth / 10;
            let tt = tz * u64::from(q - 1);
            for (kind, n, t, out) in [
                (SemigroupKind::T, nt, tt, &mut t_points),
                (SemigroupKind::Z, nz, tz, &mut z_points),
            ] {
                if t == 0 || t >= n {
                    continue;
                }
                let p = one_point_params(q, m, kind, t)?;
                out.push(RatePoint {
                    m,
                    t,
                    n,
                    k: p.k,
                    rate: p.k as f64 / n as f64,
                    reldist: p.dstar as f64 / n as f64,
                });
            }
        }
    }
    Ok(GvReport {
        q,
        crossing,
        t_points,
        z_points,
        finite_length_caveat: true,
    })
}

/// Exact comparison at equal `t/n`: the subtower achieves dimension at least
/// as large, relative to length, as the big tower. Cross-multiplied to avoid
/// rounding.
pub fn z_dominates_t(q: u32, m: usize) -> Result<bool> {
    let nz = split_count(q, m, SemigroupKind::Z);
    let nt = split_count(q, m, SemigroupKind::T);
    let hz = SemigroupSpec::new(SemigroupKind::Z, q, m)?;
    let ht = SemigroupSpec::new(SemigroupKind::T, q, m)?;
    for tz in 1..nz {
        let tt = tz * u64::from(q - 1);
        let kz = hz.dim_l(tz);
        let kt = ht.dim_l(tt);
        if kz * nt < kt * nz {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::grp::{decomposition_generators, identity};
    use crate::plc::enumerate_places;
    use crate::twr::TowerCtx;

    fn setup(q: u32, m: usize) -> (Arc<FieldCtx>, PlaceSet) {
        let f = Arc::new(FieldCtx::new(q).unwrap());
        let places = enumerate_places(&f, m).unwrap();
        (f, places)
    }

    #[test]
    fn parameter_examples() {
        let p = one_point_params(3, 2, SemigroupKind::T, 20).unwrap();
        assert_eq!((p.n, p.k, p.dstar), (54, 5, 34));
        let p = one_point_params(2, 1, SemigroupKind::T, 2).unwrap();
        assert_eq!((p.n, p.k, p.dstar), (4, 2, 2));
        // Riemann-Roch range: k = t + 1 - g once t >= 2g - 1.
        let spec = SemigroupSpec::new(SemigroupKind::T, 3, 2).unwrap();
        let g = spec.genus();
        for t in (2 * g - 1)..(2 * g + 5) {
            let p = one_point_params(3, 2, SemigroupKind::T, t).unwrap();
            assert_eq!(p.k, t + 1 - g);
        }
    }

    #[test]
    fn explicit_matrix_q2_m1() {
        let (f, places) = setup(2, 1);
        let gm = generator_matrix_x0(&f, &places, 2).unwrap();
        assert_eq!(gm.rows, vec![vec![1, 1, 1, 1], vec![2, 2, 3, 3]]);
        // Constants only below the first pole order.
        let gm1 = generator_matrix_x0(&f, &places, 1).unwrap();
        assert_eq!(gm1.rows, vec![vec![1, 1, 1, 1]]);
        assert!(gm.to_csv(&f).starts_with("# field order 4"));
    }

    #[test]
    fn rank_equals_dimension_for_all_small_pole_bounds() {
        for (q, m) in [(2u32, 1), (2, 2), (3, 1), (3, 2), (4, 1), (4, 2)] {
            let (f, places) = setup(q, m);
            let spec = SemigroupSpec::new(SemigroupKind::T, q, m).unwrap();
            let tmax = u64::from(q).pow(m as u32) * u64::from(q - 1);
            for t in 0..=tmax {
                let gm = generator_matrix_x0(&f, &places, t).unwrap();
                assert_eq!(gm.k() as u64, spec.dim_l(t), "q={q}, m={m}, t={t}");
            }
        }
    }

    #[test]
    fn brute_force_distance_examples() {
        let (f, places) = setup(2, 1);
        let gm = generator_matrix_x0(&f, &places, 2).unwrap();
        assert_eq!(min_distance_bruteforce(&f, &gm).unwrap(), 2);
        // Repetition code: distance n.
        let gm1 = generator_matrix_x0(&f, &places, 1).unwrap();
        assert_eq!(min_distance_bruteforce(&f, &gm1).unwrap(), 4);
    }

    #[test]
    fn designed_distance_is_a_lower_bound() {
        for (q, m) in [(2u32, 1), (2, 2), (3, 1)] {
            let (f, places) = setup(q, m);
            let n = places.splits.len() as u64;
            let tmax = u64::from(q).pow(m as u32) * u64::from(q - 1);
            for t in 1..=tmax {
                let gm = generator_matrix_x0(&f, &places, t).unwrap();
                let q2 = u64::from(q * q);
                if q2.pow(gm.k() as u32) > BRUTE_FORCE_CAP {
                    continue;
                }
                let d = min_distance_bruteforce(&f, &gm).unwrap();
                assert!(d >= n - t, "q={q}, m={m}, t={t}: d={d}");
                // Singleton bound on the true distance.
                assert!(gm.k() as u64 + d <= n + 1);
            }
        }
    }

    #[test]
    fn stabilizer_generators_preserve_the_code() {
        let f = Arc::new(FieldCtx::new(3).unwrap());
        let t = TowerCtx::new(f.clone(), 1).unwrap();
        let places = enumerate_places(&f, 1).unwrap();
        assert!(code_automorphism_check(&t, &places, &identity(&t), 3).unwrap());
        for sigma in decomposition_generators(&t).unwrap() {
            for pole_bound in 1..=6 {
                assert!(
                    code_automorphism_check(&t, &places, &sigma, pole_bound).unwrap(),
                    "pole bound {pole_bound}"
                );
            }
        }
    }

    #[test]
    fn scaling_automorphism_acts_diagonally_on_rows() {
        // sigma: x_0 -> c x_0 permutes columns; on the row of x_0^j this is
        // multiplication by c^{-j}, so the row spaces agree row by row.
        let f = Arc::new(FieldCtx::new(3).unwrap());
        let t = TowerCtx::new(f.clone(), 1).unwrap();
        let places = enumerate_places(&f, 1).unwrap();
        let sigma = decomposition_generators(&t)
            .unwrap()
            .into_iter()
            .find(|s| {
                !s.is_identity(&t) && t.substitute_hom(&s.images, &t.gen(0)).unwrap() != t.gen(0)
            })
            .expect("a scaling generator");
        let img = t.substitute_hom(&sigma.images, &t.gen(0)).unwrap();
        let chain = &places.splits[0];
        let c = f
            .div(t.evaluate_at_chain(&img, chain).unwrap(), chain[0])
            .unwrap();
        assert_eq!(img, t.mul(&t.constant(c), &t.gen(0)));
        let gm = generator_matrix_x0(&f, &places, 3).unwrap();
        let perm = split_permutation(&t, &sigma, &places).unwrap();
        for (j, row) in gm.rows.iter().enumerate() {
            let mut permuted = vec![0; gm.n];
            for (col, &e) in row.iter().enumerate() {
                permuted[perm[col] as usize] = e;
            }
            let scale = f.inv(f.pow(c, j as u64)).unwrap();
            let scaled: Vec<Fe> = row.iter().map(|&e| f.mul(scale, e)).collect();
            assert_eq!(permuted, scaled, "row {j}");
        }
    }

    #[test]
    fn gv_crossing_by_alphabet() {
        for q in [2u32, 3, 4, 5] {
            assert!(gv_scan(q).unwrap().crossing.is_none(), "q={q}");
        }
        for q in [7u32, 8, 9] {
            let rep = gv_scan(q).unwrap();
            let (lo, hi) = rep.crossing.expect("crossing interval");
            assert!(lo < hi, "q={q}");
            assert!(rep.finite_length_caveat);
        }
    }

    #[test]
    fn subtower_rate_points_dominate() {
        for q in [3u32, 4, 5] {
            for m in [1, 2] {
                assert!(z_dominates_t(q, m).unwrap(), "q={q}, m={m}");
            }
        }
    }
}
