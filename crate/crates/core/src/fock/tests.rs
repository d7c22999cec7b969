use super::*;
use crate::dsl::{parse_model, validate};
use crate::scalar::{Atom, ScalarPoly};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn q(n: u32) -> OperatorExpr {
    SetId::pq().position(n).into()
}

fn p(n: u32) -> OperatorExpr {
    SetId::pq().momentum(n).into()
}

fn k(x: i64) -> ScalarPoly {
    ScalarPoly::int(x)
}

fn one_mode(d: usize, omega: f64) -> FockSpace {
    FockSpace::uniform(&[(SetId::pq(), 1)], d, omega, 1.0).unwrap()
}

fn vacuum(space: &FockSpace, omega: f64) -> StateVector {
    let b = &q(0).scale(&ScalarPoly::rational(crate::scalar::Rational::from_float(omega).unwrap()))
        + &p(0).scale(&ScalarPoly::i());
    let m = build_operator(&b, space, &Bindings::new()).unwrap();
    fiducial_solve(&[m], space).map_err(|e| e.to_string()).unwrap().state
}

fn model(path: &str) -> CheckedModel {
    let text = std::fs::read_to_string(format!("{}/examples/{path}", env!("CARGO_MANIFEST_DIR"))).unwrap();
    validate(&parse_model(&text).unwrap()).unwrap()
}

#[test]
fn two_level_position_matrix() {
    let (qm, _) = build_generators(&one_mode(2, 1.0), SetId::pq(), 0).unwrap();
    let h = 0.5f64.sqrt();
    let want = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(h, 0.0), c(h, 0.0), c(0.0, 0.0)]);
    assert!((qm.matrix.to_dense() - want).norm() < 1e-15);
    assert!(qm.hermitian);
}

#[test]
fn position_has_zero_vacuum_mean() {
    for d in [2, 5, 16] {
        let (qm, _) = build_generators(&one_mode(d, 1.3), SetId::pq(), 0).unwrap();
        assert_eq!(expectation(&qm, &StateVector::basis(d, 0)).unwrap(), c(0.0, 0.0));
    }
}

#[test]
fn truncated_ccr_defect_sits_in_the_corner() {
    let space = one_mode(16, 1.0);
    let (qm, pm) = build_generators(&space, SetId::pq(), 0).unwrap();
    let comm = qm.matrix.mul(&pm.matrix).add_scaled(&pm.matrix.mul(&qm.matrix), c(-1.0, 0.0));
    for n in 0..16 {
        let col = comm.matvec(StateVector::basis(16, n).amps());
        let mut defect = col.clone();
        defect[n] -= c(0.0, 1.0);
        let d = krylov::norm(&defect);
        if n < 15 {
            assert!(d < 1e-13, "n={n} defect {d}");
        } else {
            assert!(d > 1.0);
        }
    }
}

#[test]
fn scalar_builds_identity() {
    let space = FockSpace::uniform(&[(SetId::pq(), 2)], 3, 1.0, 1.0).unwrap();
    let m = build_operator(&OperatorExpr::one(), &space, &Bindings::new()).unwrap();
    assert_eq!(m.matrix, Csr::identity(9));
}

#[test]
fn cross_mode_product_matches_dense_kron() {
    let space = FockSpace::uniform(&[(SetId::pq(), 2)], 4, 1.5, 0.7).unwrap();
    let m = build_operator(&(&q(0) * &p(1)), &space, &Bindings::new()).unwrap();
    let single = FockSpace::uniform(&[(SetId::pq(), 1)], 4, 1.5, 0.7).unwrap();
    let (q1, p1) = build_generators(&single, SetId::pq(), 0).unwrap();
    let (qd, pd) = (q1.matrix.to_dense(), p1.matrix.to_dense());
    let want = qd.kronecker(&pd);
    assert!((m.matrix.to_dense() - want).norm() < 1e-14);
    assert!(!m.hermitian || hermitian_check(&(&q(0) * &p(1))));
    // row-major: index of (n0, n1) is 4·n0 + n1
    assert_eq!(space.index(&[2, 3]), 11);
    assert_eq!(space.occupations(11), vec![2, 3]);
}

#[test]
fn eq8_factorization_as_matrices() {
    let m0 = ScalarPoly::param("m0");
    let b = &q(0).scale(&m0) + &p(0).scale(&ScalarPoly::i());
    let lhs = &b.adjoint() * &b;
    let rhs = &(&(&p(0) * &p(0)) + &(&q(0) * &q(0)).scale(&(&m0 * &m0))) - &OperatorExpr::scalar(&ScalarPoly::hbar() * &m0);
    for (hbar, m0v, omega) in [(1.0, 1.0, 1.0), (0.5, 2.0, 1.0), (1.0, 0.7, 1.9)] {
        let d = 20;
        let space = FockSpace::uniform(&[(SetId::pq(), 1)], d, omega, hbar).unwrap();
        let bind = Bindings::new().with_hbar(hbar).with(Atom::param("m0"), m0v);
        let l = build_operator(&lhs, &space, &bind).unwrap().matrix.to_dense();
        let r = build_operator(&rhs, &space, &bind).unwrap().matrix.to_dense();
        for i in 0..d - 2 {
            for j in 0..d - 2 {
                assert!((l[(i, j)] - r[(i, j)]).norm() < 1e-12, "({i},{j})");
            }
        }
    }
}

#[test]
fn vacuum_fiducial_is_exact() {
    for omega in [1.0, 2.0, 0.37] {
        let space = one_mode(12, omega);
        let w = crate::scalar::Rational::from_float(omega).unwrap();
        let b = &q(0).scale(&ScalarPoly::rational(w)) + &p(0).scale(&ScalarPoly::i());
        let sol = fiducial_solve(&[build_operator(&b, &space, &Bindings::new()).unwrap()], &space).unwrap();
        assert_eq!(sol.state, StateVector::basis(12, 0));
        assert!(sol.residual < 1e-15, "omega={omega}: {}", sol.residual);
        assert!(sol.gap > 0.1);
    }
}

#[test]
fn decoupled_zeta_gives_product_vacuum() {
    let text = std::fs::read_to_string(format!("{}/examples/rotsym_n1.eqm", env!("CARGO_MANIFEST_DIR"))).unwrap();
    let mut spec = parse_model(&text).unwrap();
    spec.set_param("zeta", crate::scalar::rat(0, 1));
    let m = validate(&spec).unwrap();
    let space = FockSpace::for_model(&m, Some(8)).unwrap();
    let sol = model_fiducial(&m, &space).unwrap();
    assert_eq!(sol.residual, 0.0);
    assert_eq!(sol.state, StateVector::basis(64, 0));
}

#[test]
fn zeta_fiducial_residual_shrinks_with_truncation() {
    let m = model("rotsym_n1.eqm");
    let mut last = f64::INFINITY;
    for d in [12, 24, 48] {
        let space = FockSpace::for_model(&m, Some(d)).unwrap();
        let sol = model_fiducial(&m, &space).map_err(|e| e.to_string()).unwrap();
        assert!((sol.state.norm() - 1.0).abs() < 1e-12);
        if d == 24 {
            assert!(sol.residual <= 1e-6, "D=24 residual {}", sol.residual);
        }
        assert!(sol.residual < 10.0 * last, "D={d}: {} after {last}", sol.residual);
        assert!(sol.gap > 1e-3);
        last = sol.residual;
    }
}

#[test]
fn coherent_overlap_and_moments() {
    let space = one_mode(64, 1.0);
    let vac = StateVector::basis(64, 0);
    let (qm, pm) = build_generators(&space, SetId::pq(), 0).unwrap();
    let coords = [SetId::pq().position(0)];
    for (pv, qv) in [(0.0, 0.0), (1.0, 0.0), (0.0, -1.0), (0.6, 0.8), (-1.0, 1.0)] {
        let cs = coherent_state(&space, &vac, &coords, &[pv], &[qv], LEAKAGE_BOUND).unwrap();
        let overlap = vac.inner(&cs.state).unwrap().norm();
        let want = (-(pv * pv + qv * qv) / 4.0).exp();
        assert!((overlap - want).abs() < 1e-8, "({pv},{qv}) overlap {overlap} vs {want}");
        assert!((expectation(&qm, &cs.state).unwrap() - c(qv, 0.0)).norm() < 1e-8);
        assert!((expectation(&pm, &cs.state).unwrap() - c(pv, 0.0)).norm() < 1e-8);
    }
}

#[test]
fn zero_displacement_leaves_fiducial() {
    let m = model("rotsym_n1.eqm");
    let space = FockSpace::for_model(&m, None).unwrap();
    let fid = model_fiducial(&m, &space).unwrap().state;
    let cs = coherent_state(&space, &fid, &m.shifted_positions(), &[0.0], &[0.0], LEAKAGE_BOUND).unwrap();
    assert_eq!(cs.state, fid);
}

#[test]
fn truncation_leakage_is_reported() {
    let space = one_mode(10, 1.0);
    let err = coherent_state(&space, &StateVector::basis(10, 0), &[SetId::pq().position(0)], &[3.0], &[3.0], LEAKAGE_BOUND)
        .unwrap_err();
    assert!(matches!(err, FockError::TruncationLeakage { .. }));
}

#[test]
fn expectation_examples() {
    let space = one_mode(10, 1.0);
    let id = build_operator(&OperatorExpr::one(), &space, &Bindings::new()).unwrap();
    let mut v = StateVector::new((0..10).map(|k| c(k as f64, 1.0 - k as f64)).collect());
    v.normalize();
    assert!((expectation(&id, &v).unwrap() - c(1.0, 0.0)).norm() < 1e-14);

    // a†a = (Q − iP)(Q + iP)/2ℏ at ω = ℏ = 1
    let b = &q(0) + &p(0).scale(&ScalarPoly::i());
    let num = (&b.adjoint() * &b).scale(&ScalarPoly::frac(1, 2));
    let nm = build_operator(&num, &space, &Bindings::new()).unwrap();
    assert!((expectation(&nm, &StateVector::basis(10, 3)).unwrap() - c(3.0, 0.0)).norm() < 1e-13);

    let h = (&(&p(0) * &p(0)) + &(&q(0) * &q(0))).scale(&ScalarPoly::frac(1, 2));
    let hm = build_operator(&h, &space, &Bindings::new()).unwrap();
    assert!((expectation(&hm, &StateVector::basis(10, 0)).unwrap() - c(0.5, 0.0)).norm() < 1e-14);
    assert_eq!(
        expectation(&hm, &StateVector::basis(9, 0)).unwrap_err(),
        FockError::DimensionMismatch { expected: 10, found: 9 }
    );
}

#[test]
fn hermitian_flag_makes_matrix_exactly_hermitian() {
    let space = FockSpace::uniform(&[(SetId::pq(), 2)], 6, 1.3, 0.9).unwrap();
    let sym = (&(&q(0) * &p(1)) + &(&p(1) * &q(0))).scale(&ScalarPoly::frac(1, 3));
    let e = &(&sym * &sym) + &(&p(0) * &q(1)).scale(&k(2));
    let m = build_operator(&e, &space, &Bindings::new()).unwrap();
    assert!(m.hermitian);
    assert_eq!(m.matrix.hermitian_defect(), 0.0);
    let mut v = StateVector::new((0..36).map(|j| c((j as f64).cos(), (j as f64 * 0.3).sin())).collect());
    v.normalize();
    assert!(expectation(&m, &v).unwrap().im.abs() <= 1e-12);
    let qp = build_operator(&(&q(0) * &p(0)), &space, &Bindings::new()).unwrap();
    assert!(!qp.hermitian);
}

#[test]
fn representation_frequency_does_not_change_physics() {
    // Q² + P⁴/4 + Q·P·Q in a coherent state built on the ω = 1 vacuum
    let e = &(&(&q(0) * &q(0)) + &(&p(0) * &p(0)).pow(2).scale(&ScalarPoly::frac(1, 4))) + &(&(&q(0) * &p(0)) * &q(0));
    let e = &e + &e.adjoint();
    let mut vals = Vec::new();
    for omega_rep in [1.0, 2.0] {
        let space = one_mode(96, omega_rep);
        let fid = vacuum(&space, 1.0);
        let cs = coherent_state(&space, &fid, &[SetId::pq().position(0)], &[0.7], &[-0.4], LEAKAGE_BOUND).unwrap();
        let m = build_operator(&e, &space, &Bindings::new()).unwrap();
        vals.push(expectation(&m, &cs.state).unwrap());
    }
    assert!((vals[0] - vals[1]).norm() < 1e-6, "{vals:?}");
}

#[test]
fn dumps_are_line_oriented() {
    let dump = StateVector::basis(3, 1).dump();
    let lines: Vec<&str> = dump.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1 1.0"));
    let (qm, _) = build_generators(&one_mode(2, 1.0), SetId::pq(), 0).unwrap();
    assert_eq!(qm.dump().lines().count(), 2);
}
