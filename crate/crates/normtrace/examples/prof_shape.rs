use normtrace::gf::FieldCtx;
use normtrace::grp::{conjugator_maps, decomposition_generators};
use normtrace::twr::{TowerCtx, TowerElem};
use std::collections::HashSet;
use std::sync::Arc;

fn collect<'a>(e: &'a TowerElem, out: &mut Vec<&'a TowerElem>) {
    out.push(e);
    if let TowerElem::Ext { coeffs, .. } = e {
        for c in coeffs {
            collect(c, out);
        }
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let q: u32 = args[1].parse().unwrap();
    let m: usize = args[2].parse().unwrap();
    let f = Arc::new(FieldCtx::new(q).unwrap());
    let t = TowerCtx::new(f, m).unwrap();
    let mut gens = decomposition_generators(&t).unwrap();
    gens.extend(conjugator_maps(&t).unwrap());
    let mut total = 0usize;
    let mut distinct: HashSet<&TowerElem> = HashSet::new();
    let quots: Vec<Vec<(TowerElem, Option<usize>)>> = gens
        .iter()
        .map(|g| g.images.iter().map(|im| t.quotient_form(im)).collect())
        .collect();
    for gq in &quots {
        for (s, _) in gq {
            let mut subs = Vec::new();
            collect(s, &mut subs);
            total += subs.len();
            distinct.extend(subs);
        }
    }
    println!("gens {}: {} subtree nodes, {} distinct", gens.len(), total, distinct.len());
}
