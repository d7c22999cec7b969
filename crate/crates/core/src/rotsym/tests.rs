use super::*;
use crate::frame::FiducialFrame;
use crate::scalar::{coeff, Atom};

fn p(n: u32, m: (i64, i64), z: (i64, i64), v: (i64, i64)) -> RotsymParams {
    RotsymParams::new(n, rat(m.0, m.1), rat(z.0, z.1), rat(v.0, v.1)).unwrap()
}

fn example(name: &str) -> String {
    std::fs::read_to_string(format!("{}/examples/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn classical_examples() {
    let pq = SetId::pq();
    let (p0, q0) = (ScalarPoly::shift(pq.momentum(0)), ScalarPoly::shift(pq.position(0)));
    let (p1, q1) = (ScalarPoly::shift(pq.momentum(1)), ScalarPoly::shift(pq.position(1)));
    let free = (&p0.pow(2) + &q0.pow(2)).scale(&coeff(1, 2));
    assert_eq!(build_classical(1, &rat(1, 1), &rat(0, 1)), free);

    let quad = &(&(&p0.pow(2) + &p1.pow(2)) + &q0.pow(2)) + &q1.pow(2);
    let want = &quad.scale(&coeff(1, 2)) + &(&q0.pow(2) + &q1.pow(2)).pow(2);
    assert_eq!(build_classical(2, &rat(1, 1), &rat(1, 1)), want);
}

#[test]
fn classical_is_index_symmetric() {
    let h = build_classical(2, &rat(3, 2), &rat(2, 7));
    let swap = |g: crate::generator::Generator| crate::generator::Generator { mode: 1 - g.mode, ..g };
    let mut swapped = ScalarPoly::zero();
    for (m, c) in h.terms() {
        let mut term = ScalarPoly::constant(c.clone());
        for (a, e) in m.factors() {
            let Atom::Shift(g) = a else { unreachable!() };
            term = &term * &ScalarPoly::shift(swap(*g)).pow(*e as u32);
        }
        swapped.add_assign_ref(&term);
    }
    assert_eq!(swapped, h);
}

#[test]
fn effective_parameter_values() {
    assert_eq!(effective_parameters(&rat(1, 1), &rat(1, 2), &rat(1, 1)).unwrap(), (rat(5, 4), rat(1, 16)));
    assert_eq!(effective_parameters(&rat(2, 1), &rat(1, 2), &rat(1, 1)).unwrap(), (rat(5, 1), rat(1, 1)));
    // quartic suppression: λ₀/ζ⁴ is fixed as ζ shrinks
    for k in 1..6 {
        let z = rat(1, 10i64.pow(k));
        let (_, l) = effective_parameters(&rat(1, 1), &z, &rat(3, 1)).unwrap();
        assert_eq!(l / (&z * &z * &z * &z), rat(3, 1));
    }
    for z in [rat(0, 1), rat(1, 1), rat(-1, 2)] {
        assert!(matches!(effective_parameters(&rat(1, 1), &z, &rat(1, 1)), Err(RotsymError::ZetaOutOfRange(_))));
    }
}

#[test]
fn inversion() {
    let inv = invert_parameters(&rat(5, 4), &rat(1, 16), &rat(1, 2)).unwrap();
    assert_eq!((inv.m, inv.v.clone()), (Some(rat(1, 1)), rat(1, 1)));
    assert_eq!(invert_parameters(&rat(1, 1), &rat(0, 1), &rat(1, 3)).unwrap().v, rat(0, 1));
    assert!(invert_parameters(&rat(1, 1), &rat(0, 1), &rat(1, 1)).is_err());
}

#[test]
fn zeta_bounds_on_params() {
    assert!(RotsymParams::new(1, rat(1, 1), rat(0, 1), rat(1, 1)).is_err());
    assert!(RotsymParams::new(1, rat(1, 1), rat(1, 1_000_000), rat(1, 1)).is_ok());
    assert!(RotsymParams::new(0, rat(1, 1), rat(1, 2), rat(1, 1)).is_err());
}

#[test]
fn generated_text_matches_example_file() {
    let generated = parse_model(&reducible_model_text(1, &rat(1, 1), &rat(1, 2), &rat(1, 1))).unwrap();
    assert_eq!(generated, parse_model(&example("rotsym_n1.eqm")).unwrap());
    let irr = parse_model(&irreducible_model_text(2, &rat(1, 1), &rat(1, 4))).unwrap();
    assert_eq!(irr, parse_model(&example("irreducible_w.eqm")).unwrap());
}

#[test]
fn gram_of_zeta_frame() {
    let m = build_reducible_model(&RotsymParams::reference()).unwrap();
    let g: &FiducialFrame = &m.fiducial;
    let gram: Vec<Vec<_>> = g.gram().iter().map(|r| r.iter().map(|x| x.eval(&m.bindings).unwrap()).collect()).collect();
    let want = [[1.0, 0.5], [0.5, 1.0]];
    for i in 0..2 {
        for j in 0..2 {
            let norm = (gram[i][i].re * gram[j][j].re).sqrt();
            assert!((gram[i][j].re / norm - want[i][j]).abs() < 1e-14 && gram[i][j].im.abs() < 1e-14);
        }
    }
}

#[test]
fn two_mode_model_validates() {
    let m = build_reducible_model(&p(2, (1, 1), (1, 2), (1, 1))).unwrap();
    assert_eq!(m.fiducial.len(), 4);
}

#[test]
fn exact_match_for_several_n() {
    for n in 1..=3 {
        for (m, z, v) in [((1, 1), (1, 2), (1, 1)), ((2, 1), (1, 3), (1, 2)), ((3, 2), (2, 5), (0, 1))] {
            let params = p(n, m, z, v);
            let r = verify_match(&params, &MatchOptions { numeric: false, ..MatchOptions::for_params(&params) }).unwrap();
            assert!(r.exact_match, "N={n}: {} vs {}", r.wcp_rendered, r.classical_rendered);
        }
    }
}

#[test]
fn free_sector_mass() {
    let params = p(1, (3, 1), (1, 3), (0, 1));
    assert_eq!(params.m0_sq(), rat(10, 1));
    assert_eq!(params.lambda0(), rat(0, 1));
    let r = verify_match(&params, &MatchOptions { numeric: false, ..MatchOptions::for_params(&params) }).unwrap();
    assert!(r.exact_match);
}

#[test]
fn small_zeta_decouples() {
    let params = p(1, (1, 1), (1, 1_000_000), (1, 1));
    let m = build_reducible_model(&params).unwrap();
    let h = crate::correspondence::model_wcp_symbolic(&m).unwrap();
    let free = build_classical(1, &rat(1, 1), &rat(0, 1));
    let diff = &h - &free;
    assert!(diff.terms().all(|(_, c)| crate::scalar::coeff_to_c64(c).norm() < 1e-11));
}

#[test]
fn reference_numeric_match() {
    let params = RotsymParams::reference();
    let r = verify_match(&params, &MatchOptions::for_params(&params)).unwrap();
    assert!(r.exact_match);
    assert_eq!((r.m0sq.as_str(), r.lambda0.as_str()), ("5/4", "1/16"));
    assert_eq!(r.numeric_points.len(), 9);
    assert!(r.max_abs_dev.unwrap() <= 1e-4, "{:?}", r.max_abs_dev);
    let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    for key in ["exact_match", "classical_rendered", "wcp_rendered", "numeric_points", "max_abs_dev", "truncation"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn irreducible_quartic_involves_momenta() {
    let m = build_irreducible_model(2, &rat(1, 1), &rat(1, 4)).unwrap();
    let h = crate::correspondence::model_wcp_symbolic(&m).unwrap();
    assert!(has_momentum_quartic(&h));
    let r = build_reducible_model(&RotsymParams::reference()).unwrap();
    assert!(!has_momentum_quartic(&crate::correspondence::model_wcp_symbolic(&r).unwrap()));
}

#[test]
fn validation_boundary() {
    for (z, ok) in [(rat(9, 10), true), (rat(1, 1), false), (rat(11, 10), false)] {
        let res = validate(&parse_model(&reducible_model_text(1, &rat(1, 1), &z, &rat(1, 1))).unwrap());
        if ok {
            assert!(res.is_ok());
        } else {
            assert!(matches!(res, Err(ModelError::GramNotPositiveDefinite { .. })), "{z}: {res:?}");
        }
    }
}
