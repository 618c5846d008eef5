use normtrace::gf::FieldCtx;
use normtrace::grp::*;
use normtrace::plc::enumerate_places;
use normtrace::twr::TowerCtx;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let q: u32 = args[1].parse().unwrap();
    let m: usize = args[2].parse().unwrap();
    let f = Arc::new(FieldCtx::new(q).unwrap());
    let t = TowerCtx::new(f.clone(), m).unwrap();
    let places = enumerate_places(&f, m).unwrap();

    let s = Instant::now();
    let mut gens = decomposition_generators(&t).unwrap();
    gens.extend(conjugator_maps(&t).unwrap());
    println!("gens {} in {:?}", gens.len(), s.elapsed());

    let s = Instant::now();
    let perms: Vec<_> = gens
        .iter()
        .map(|g| split_permutation(&t, g, &places).unwrap())
        .collect();
    println!("gen perms in {:?} (n={})", s.elapsed(), perms[0].len());

    let s = Instant::now();
    let cl = closure(&t, &places, &gens, 100_000).unwrap();
    println!("closure order {} in {:?}", cl.order, s.elapsed());

    let s = Instant::now();
    let (stab, orbit) = stabilizer_and_orbit(&t, &cl).unwrap();
    println!(
        "stab {} orbit {} in {:?}",
        stab,
        orbit.len(),
        s.elapsed()
    );

    let s = Instant::now();
    let ok = structure_check(&t, &cl).unwrap();
    println!("structure {} in {:?}", ok, s.elapsed());
}
