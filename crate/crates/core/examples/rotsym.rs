use eqlab::correspondence::model_wcp_symbolic;
use eqlab::rotsym::{build_irreducible_model, effective_parameters, has_momentum_quartic, invert_parameters, verify_match, MatchOptions, RotsymParams};
use eqlab::scalar::rat;

fn main() {
    let params = RotsymParams::reference();
    let report = verify_match(&params, &MatchOptions::for_params(&params)).unwrap();
    print!("{}", report.to_json());

    for n in 1..=3 {
        let p = RotsymParams::new(n, rat(2, 1), rat(1, 3), rat(1, 2)).unwrap();
        let r = verify_match(&p, &MatchOptions { numeric: false, ..MatchOptions::for_params(&p) }).unwrap();
        println!("N = {n}: exact match {}", r.exact_match);
    }

    let (m0sq, l0) = effective_parameters(&rat(1, 1), &rat(1, 2), &rat(1, 1)).unwrap();
    let back = invert_parameters(&m0sq, &l0, &rat(1, 2)).unwrap();
    println!("m0^2 = {m0sq}, lambda0 = {l0}; back to m = {:?}, v = {}", back.m, back.v);

    // one set only: the quartic drags the momenta along
    let irr = build_irreducible_model(2, &rat(1, 1), &rat(1, 4)).unwrap();
    let h = model_wcp_symbolic(&irr).unwrap();
    println!("irreducible: H(p,q) = {h}");
    println!("momentum quartic present: {}", has_momentum_quartic(&h));
}
