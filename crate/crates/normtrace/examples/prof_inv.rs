use normtrace::gf::FieldCtx;
use normtrace::grp::{compose, conjugator_maps, decomposition_generators};
use normtrace::twr::TowerCtx;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let q: u32 = args[1].parse().unwrap();
    let m: usize = args[2].parse().unwrap();
    let f = Arc::new(FieldCtx::new(q).unwrap());
    let t = TowerCtx::new(f, m).unwrap();
    let dec = decomposition_generators(&t).unwrap();
    let conj = conjugator_maps(&t).unwrap();

    for (name, e) in [
        ("dec top image", &dec[0].images[m]),
        ("dec mid image", &dec[0].images[1]),
        ("pa top image", &conj[0].images[m]),
    ] {
        let s = Instant::now();
        let i = t.inv(e).unwrap();
        println!("inv({name}): {:?}", s.elapsed());
        let s = Instant::now();
        let _ = t.mul(e, &i);
        println!("  check mul: {:?}", s.elapsed());
    }
    // a generic product element's images
    let p = compose(&t, &conj[conj.len() - 1], &dec[0]).unwrap();
    let p2 = compose(&t, &p, &conj[0]).unwrap();
    for j in 0..=m {
        let s = Instant::now();
        let _ = t.inv(&p2.images[j]).unwrap();
        println!("inv(prod image {j}): {:?}", s.elapsed());
    }
}
