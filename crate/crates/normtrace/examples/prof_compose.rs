use normtrace::gf::FieldCtx;
use normtrace::grp::{compose, conjugator_maps, decomposition_generators, Automorphism};
use normtrace::twr::TowerCtx;
use std::sync::Arc;
use std::time::Instant;

fn size(t: &TowerCtx, a: &Automorphism) -> usize {
    a.images.iter().map(|e| t.format(e).len()).sum()
}

fn main() {
    let (q, m): (u32, usize) = {
        let args: Vec<String> = std::env::args().collect();
        (args[1].parse().unwrap(), args[2].parse().unwrap())
    };
    let f = Arc::new(FieldCtx::new(q).unwrap());
    let start = Instant::now();
    let t = TowerCtx::new(f, m).unwrap();
    println!("ctx: {:?}", start.elapsed());
    let start = Instant::now();
    let dec = decomposition_generators(&t).unwrap();
    println!("dec gens: {:?}", start.elapsed());
    let start = Instant::now();
    let conj = conjugator_maps(&t).unwrap();
    println!("conj gens: {:?}", start.elapsed());
    println!("dec {} conj {}", dec.len(), conj.len());
    let mut gens = dec.clone();
    gens.extend(conj.iter().cloned());
    // time a few representative composes
    let pairs = [
        ("dec*dec", &gens[0], &gens[1]),
        ("dec*refl", &gens[0], &gens[gens.len() - 1]),
        ("refl*dec", &gens[gens.len() - 1], &gens[0]),
        ("refl*refl", &gens[gens.len() - 1], &gens[gens.len() - 2]),
    ];
    let mut products = Vec::new();
    for (name, a, b) in pairs {
        let start = Instant::now();
        let c = compose(&t, a, b).unwrap();
        println!(
            "{name}: {:?}  sizes {} x {} -> {}",
            start.elapsed(),
            size(&t, a),
            size(&t, b),
            size(&t, &c)
        );
        products.push(c);
    }
    // second generation: product * generator, both orders
    for (i, p) in products.iter().enumerate() {
        let g = &gens[gens.len() - 1];
        let start = Instant::now();
        let c = compose(&t, p, g).unwrap();
        println!(
            "prod{i}*refl: {:?}  sizes {} x {} -> {}",
            start.elapsed(),
            size(&t, p),
            size(&t, g),
            size(&t, &c)
        );
        let start = Instant::now();
        let c2 = compose(&t, g, p).unwrap();
        println!(
            "refl*prod{i}: {:?}  -> size {}",
            start.elapsed(),
            size(&t, &c2),
        );
        let _ = c;
    }
}
