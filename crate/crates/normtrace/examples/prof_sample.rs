use normtrace::gf::FieldCtx;
use normtrace::grp::{compose, conjugator_maps, decomposition_generators};
use normtrace::twr::{SubstCache, TowerCtx, TowerElem};
use std::sync::Arc;
use std::time::Instant;

fn size(t: &TowerCtx, e: &TowerElem) -> usize {
    t.format(e).len()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let q: u32 = args[1].parse().unwrap();
    let m: usize = args[2].parse().unwrap();
    let f = Arc::new(FieldCtx::new(q).unwrap());
    let t = TowerCtx::new(f, m).unwrap();
    let mut gens = decomposition_generators(&t).unwrap();
    gens.extend(conjugator_maps(&t).unwrap());

    // build a "typical" big cur: refl * dec * pa
    let n = gens.len();
    let cur = compose(&t, &gens[n - 1], &gens[0]).unwrap();
    let cur = compose(&t, &cur, &gens[gens.len() / 2]).unwrap();
    println!(
        "cur sizes: {:?}",
        cur.images.iter().map(|e| size(&t, e)).collect::<Vec<_>>()
    );

    let mut cache = SubstCache::default();
    let mut worst: Vec<(f64, usize, String)> = Vec::new();
    let start_all = Instant::now();
    for (gi, g) in gens.iter().enumerate() {
        let pq: Vec<(TowerElem, TowerElem)> = g
            .images
            .iter()
            .map(|im| t.polynomial_quotient(im))
            .collect();
        let s = Instant::now();
        for ((p, qd), hi) in pq.iter().zip(&cur.images) {
            let lhs = t.substitute_hom_cached(&cur.images, p, &mut cache).unwrap();
            let qv = t.substitute_hom_cached(&cur.images, qd, &mut cache).unwrap();
            let _ = t.eq_mul(&lhs, hi, &qv);
        }
        let el = s.elapsed().as_secs_f64();
        let psz: usize = pq.iter().map(|(p, qd)| size(&t, p) + size(&t, qd)).sum();
        worst.push((el, gi, format!("pq size {psz}")));
    }
    println!("all gens sampled in {:?}", start_all.elapsed());
    worst.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    for (el, gi, note) in worst.iter().take(8) {
        println!("gen {gi}: {el:.4}s  {note}");
    }
    let total: f64 = worst.iter().map(|w| w.0).sum();
    println!("avg {:.4}s total {:.1}s", total / worst.len() as f64, total);
}
