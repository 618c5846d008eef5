//! End-to-end acceptance suite. Each test prints one machine-greppable
//! pass/fail line (run with `--nocapture` to see them on success).

use std::panic::{catch_unwind, resume_unwind, UnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use normtrace::cod::{
    code_automorphism_check, generator_matrix_x0, gv_scan, min_distance_bruteforce,
    z_dominates_t,
};
use normtrace::gf::FieldCtx;
use normtrace::grp::{
    closure, conjugator_maps, decomposition_generators, epsilon, hurwitz_bounds,
    stabilizer_and_orbit, structure_check,
};
use normtrace::plc::{enumerate_places, n1_formula, Place, TowerKind};
use normtrace::sgp::{SemigroupKind, SemigroupSpec};
use normtrace::sub::{enumerate_z_places, fixed_field_check, intermediate_enumerate, z_embed, z_recursion_holds};
use normtrace::twr::{TowerCtx, TowerElem};

const CLOSURE_CAP: usize = 100_000;

fn report<F: FnOnce() + UnwindSafe>(name: &str, body: F) {
    let outcome = catch_unwind(body);
    let status = if outcome.is_ok() { "PASS" } else { "FAIL" };
    println!("acceptance: {name}: {status}");
    if let Err(e) = outcome {
        resume_unwind(e);
    }
}

fn tower(q: u32, m: usize) -> TowerCtx {
    TowerCtx::new(Arc::new(FieldCtx::new(q).unwrap()), m).unwrap()
}

#[test]
fn criterion_1_place_counts() {
    report("1 place counts match the closed formula", || {
        for q in [2u32, 3, 4, 5, 7] {
            let f = Arc::new(FieldCtx::new(q).unwrap());
            for m in 1..=4 {
                let splits = u64::from(q).pow(m as u32 + 1) * u64::from(q - 1);
                if splits > 30_000 {
                    continue;
                }
                let start = Instant::now();
                let set = enumerate_places(&f, m).unwrap();
                assert!(
                    start.elapsed() < Duration::from_secs(10),
                    "q={q}, m={m} enumeration too slow"
                );
                assert_eq!(
                    set.places.len() as u64,
                    n1_formula(q, m, TowerKind::T),
                    "q={q}, m={m}"
                );
            }
        }
        let f3 = Arc::new(FieldCtx::new(3).unwrap());
        assert_eq!(enumerate_places(&f3, 2).unwrap().places.len(), 60);
        let f4 = Arc::new(FieldCtx::new(4).unwrap());
        assert_eq!(enumerate_places(&f4, 2).unwrap().places.len(), 212);
        let f2 = Arc::new(FieldCtx::new(2).unwrap());
        assert_eq!(enumerate_places(&f2, 1).unwrap().places.len(), 8);
    });
}

#[test]
fn criterion_2_genus_equals_gap_count() {
    report("2 genus = gap count and degree-(q-1) genus identity", || {
        for q in [2u32, 3, 4, 5, 7, 8, 9] {
            for m in 1..=6 {
                let ht = SemigroupSpec::new(SemigroupKind::T, q, m).unwrap();
                let hz = SemigroupSpec::new(SemigroupKind::Z, q, m).unwrap();
                assert_eq!(ht.genus(), ht.gap_count(), "T q={q}, m={m}");
                assert_eq!(hz.genus(), hz.gap_count(), "Z q={q}, m={m}");
                let (g, gz, qi) = (ht.genus() as i64, hz.genus() as i64, i64::from(q));
                assert_eq!(
                    2 * g - 2,
                    (qi - 1) * (2 * gz - 2) + 2 * (qi - 2),
                    "identity q={q}, m={m}"
                );
            }
        }
        assert_eq!(SemigroupSpec::new(SemigroupKind::T, 3, 2).unwrap().genus(), 16);
        assert_eq!(SemigroupSpec::new(SemigroupKind::Z, 3, 2).unwrap().genus(), 8);
    });
}

fn closure_case(q: u32, m: usize, expected_order: usize) {
    let start = Instant::now();
    let t = tower(q, m);
    let f = t.field.clone();
    let places = enumerate_places(&f, m).unwrap();
    let mut gens = decomposition_generators(&t).unwrap();
    gens.extend(conjugator_maps(&t).unwrap());
    let cl = closure(&t, &places, &gens, CLOSURE_CAP).unwrap();
    assert_eq!(cl.order, expected_order, "closure order q={q}, m={m}");

    let (stab, orbit) = stabilizer_and_orbit(&t, &cl).unwrap();
    let eps = epsilon(q, m);
    assert_eq!(
        stab as u64,
        u64::from(q).pow(eps) * u64::from(q - 1),
        "stabilizer q={q}, m={m}"
    );
    let expected_orbit = hurwitz_bounds(q, m).expected_orbit;
    assert_eq!(orbit.len() as u64, expected_orbit, "orbit q={q}, m={m}");
    // The orbit is exactly the set of non-split rational places.
    let nonsplit: Vec<&Place> = places
        .places
        .iter()
        .filter(|p| !matches!(p, Place::SplitAffine { .. }))
        .collect();
    assert_eq!(orbit.len(), nonsplit.len());
    for p in &orbit {
        assert!(!matches!(p, Place::SplitAffine { .. }));
    }
    assert!(structure_check(&t, &cl).unwrap(), "structure q={q}, m={m}");
    eprintln!(
        "closure q={q} m={m}: order {} in {:.1}s",
        cl.order,
        start.elapsed().as_secs_f64()
    );
    assert!(
        start.elapsed() < Duration::from_secs(300),
        "closure q={q}, m={m} too slow"
    );
}

#[test]
fn criterion_3_group_orders() {
    report("3 full group orders, stabilizers, orbits, structure", || {
        for (q, m, order) in [
            (3u32, 1, 36),
            (4, 1, 96),
            (5, 1, 200),
            (5, 2, 200),
            (4, 2, 960),
            (4, 3, 1536),
            (4, 4, 1536),
        ] {
            closure_case(q, m, order);
        }
    });
}

#[test]
fn criterion_4_exceptional_cases() {
    report("4 exceptional small cases reported with bounds", || {
        for (q, m, cap) in [(2u32, 2usize, 168usize), (2, 3, 96)] {
            let t = tower(q, m);
            let places = enumerate_places(&t.field, m).unwrap();
            let mut gens = decomposition_generators(&t).unwrap();
            gens.extend(conjugator_maps(&t).unwrap());
            let cl = closure(&t, &places, &gens, CLOSURE_CAP).unwrap();
            println!("acceptance:   ({q},{m}) closure order {} (cap {cap})", cl.order);
            assert!(cl.order <= cap, "({q},{m}) order {}", cl.order);
            assert!(hurwitz_bounds(q, m).exceptional.is_some());
        }
        let t = tower(3, 2);
        let places = enumerate_places(&t.field, 2).unwrap();
        let mut gens = decomposition_generators(&t).unwrap();
        gens.extend(conjugator_maps(&t).unwrap());
        let cl = closure(&t, &places, &gens, CLOSURE_CAP).unwrap();
        println!("acceptance:   (3,2) closure order {}", cl.order);
        assert_eq!(cl.order, 36);
        assert!(hurwitz_bounds(3, 2).exceptional.is_some());
    });
}

#[test]
fn criterion_5_symbolic_generator_checks() {
    report("5 generators, subtower identities, fixed field", || {
        // Generator construction validates the defining relation internally.
        for q in [2u32, 3, 4, 5] {
            for m in 1..=4 {
                let t = tower(q, m);
                assert!(!decomposition_generators(&t).unwrap().is_empty());
                assert!(!conjugator_maps(&t).unwrap().is_empty());
            }
        }
        // Power-coordinate recursion and ratio recurrence, exactly.
        for q in [2u32, 3, 4, 5] {
            for m in 1..=3 {
                let t = tower(q, m);
                let z: Vec<TowerElem> = (0..=m).map(|i| z_embed(&t, i)).collect();
                assert!(z_recursion_holds(&t, &z), "q={q}, m={m}");
                for i in 1..=m {
                    let ratio = t.mul(&t.gen(i), t.inv_gen(i - 1));
                    let lhs = t.mul(&t.pow(&ratio, u64::from(q) - 1), &z[i - 1]);
                    assert_eq!(lhs, z[i], "ratio q={q}, i={i}");
                }
                assert!(fixed_field_check(&t).unwrap(), "fixed field q={q}, m={m}");
            }
        }
    });
}

#[test]
fn criterion_6_subtower_counts_and_scaling() {
    report("6 subtower places, semigroup scaling, intermediate bounds", || {
        for q in [2u32, 3, 4, 5] {
            let f = Arc::new(FieldCtx::new(q).unwrap());
            for m in 1..=4 {
                let set = enumerate_z_places(&f, m).unwrap();
                assert_eq!(
                    set.places.len() as u64,
                    n1_formula(q, m, TowerKind::Z),
                    "q={q}, m={m}"
                );
                let ht = SemigroupSpec::new(SemigroupKind::T, q, m).unwrap();
                let hz = SemigroupSpec::new(SemigroupKind::Z, q, m).unwrap();
                for n in 0..=2 * ht.conductor() {
                    assert_eq!(
                        hz.contains(n),
                        ht.contains(n * u64::from(q - 1)),
                        "scaling q={q}, m={m}, n={n}"
                    );
                }
            }
            for m in 1..=3 {
                for r in 1..q {
                    if (q - 1) % r != 0 {
                        continue;
                    }
                    // The excess bound check is internal to the enumeration.
                    intermediate_enumerate(&f, m, r).unwrap();
                }
            }
        }
        let f3 = Arc::new(FieldCtx::new(3).unwrap());
        assert_eq!(enumerate_z_places(&f3, 2).unwrap().places.len(), 35);
    });
}

#[test]
fn criterion_7_code_parameters_and_distances() {
    report("7 code ranks, designed distances, code automorphisms", || {
        for q in [2u32, 3, 4] {
            for m in 1..=2 {
                let f = Arc::new(FieldCtx::new(q).unwrap());
                let places = enumerate_places(&f, m).unwrap();
                let spec = SemigroupSpec::new(SemigroupKind::T, q, m).unwrap();
                let n = places.splits.len() as u64;
                let tmax = u64::from(q).pow(m as u32) * u64::from(q - 1);
                for t in 0..=tmax {
                    let gm = generator_matrix_x0(&f, &places, t).unwrap();
                    assert_eq!(gm.k() as u64, spec.dim_l(t), "rank q={q}, m={m}, t={t}");
                    let q2 = u64::from(q * q);
                    if t >= 1 && t < n && q2.pow(gm.k() as u32) <= 10_000_000 {
                        let d = min_distance_bruteforce(&f, &gm).unwrap();
                        assert!(d >= n - t, "distance q={q}, m={m}, t={t}: {d}");
                    }
                }
            }
        }
        // The length-4 dimension-2 code over the quartic field has distance
        // exactly 2.
        let f2 = Arc::new(FieldCtx::new(2).unwrap());
        let places = enumerate_places(&f2, 1).unwrap();
        let gm = generator_matrix_x0(&f2, &places, 2).unwrap();
        assert_eq!(min_distance_bruteforce(&f2, &gm).unwrap(), 2);

        for q in [2u32, 3] {
            for m in 1..=2 {
                let t = tower(q, m);
                let places = enumerate_places(&t.field, m).unwrap();
                let tmax = u64::from(q).pow(m as u32) * u64::from(q - 1);
                for sigma in decomposition_generators(&t).unwrap() {
                    for pole_bound in 1..=tmax {
                        assert!(
                            code_automorphism_check(&t, &places, &sigma, pole_bound).unwrap(),
                            "q={q}, m={m}, t={pole_bound}"
                        );
                    }
                }
            }
        }
    });
}

#[test]
fn criterion_8_gilbert_varshamov_comparison() {
    report("8 asymptotic GV crossing and subtower rate dominance", || {
        for q in [2u32, 3, 4, 5] {
            assert!(gv_scan(q).unwrap().crossing.is_none(), "q={q}");
        }
        for q in [7u32, 8, 9] {
            let (lo, hi) = gv_scan(q).unwrap().crossing.expect("interval");
            assert!(lo < hi, "q={q}");
        }
        for q in [2u32, 3, 4, 5] {
            for m in [1, 2] {
                assert!(z_dominates_t(q, m).unwrap(), "q={q}, m={m}");
            }
        }
    });
}
