mod common;

use proptest::prelude::*;

use eqlab::correspondence::PhasePoint;
use eqlab::dynamics::{reduced_evolve, TimeGrid};
use eqlab::expr::{canonicalize, hermitian_part, OperatorExpr};
use eqlab::fock::{build_operator, coherent_state, expectation, FockSpace, StateVector};
use eqlab::frame::{vacuum_frame, FiducialFrame};
use eqlab::generator::{Generator, SetId};
use eqlab::ordering::{normal_order, normal_product, wcp_symbolic};
use eqlab::rotsym::{effective_parameters, invert_parameters};
use eqlab::scalar::{coeff, rat, Bindings, ScalarPoly};

fn term(modes: u32, max_degree: usize) -> impl Strategy<Value = (Vec<Generator>, ScalarPoly)> {
    let gens = common::generators(modes);
    (
        prop::collection::vec(0..gens.len(), 0..=max_degree),
        (-4i64..=4, 1i64..=4, -2i64..=2, 1i64..=3),
    )
        .prop_map(move |(idx, (a, b, c, d))| {
            let re = ScalarPoly::constant(coeff(a, b));
            let im = &ScalarPoly::constant(coeff(c, d)) * &ScalarPoly::i();
            (idx.into_iter().map(|k| gens[k]).collect(), &re + &im)
        })
}

fn poly(modes: u32, max_degree: usize, terms: usize) -> impl Strategy<Value = OperatorExpr> {
    prop::collection::vec(term(modes, max_degree), 1..=terms).prop_map(|ts| {
        ts.into_iter().fold(OperatorExpr::zero(), |acc, (w, c)| &acc + &OperatorExpr::word(w, c))
    })
}

fn vacuum(modes: u32) -> FiducialFrame {
    let gens: Vec<(Generator, ScalarPoly)> =
        (0..modes).map(|k| (SetId::pq().position(k), ScalarPoly::frac(1 + k as i64, 1))).collect();
    vacuum_frame("vac", &gens).unwrap()
}

/// Generators replaced by their classical symbols, as commuting factors.
fn substitute_symbols(e: &OperatorExpr) -> ScalarPoly {
    let mut out = ScalarPoly::zero();
    for (w, c) in e.terms() {
        let v = w.iter().fold(c.clone(), |acc, g| &acc * &ScalarPoly::shift(*g));
        out.add_assign_ref(&v);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn canonicalize_is_idempotent(e in poly(2, 6, 5)) {
        let once = canonicalize(&e);
        prop_assert_eq!(canonicalize(&once), once);
    }

    #[test]
    fn canonical_form_keeps_low_matrix_block(e in poly(2, 4, 4)) {
        let d = 12;
        let space = FockSpace::uniform(&[(SetId::pq(), 2)], d, 1.0, 1.0).unwrap();
        let b = Bindings::new().with_hbar(1.0);
        let raw = build_operator(&e, &space, &b).unwrap().matrix.to_dense();
        let canon = build_operator(&canonicalize(&e), &space, &b).unwrap().matrix.to_dense();
        let low: Vec<usize> = (0..space.dim()).filter(|&k| space.occupations(k).iter().all(|&n| n < d - 4)).collect();
        for &r in &low {
            for &c in &low {
                let (x, y) = (raw[(r, c)], canon[(r, c)]);
                prop_assert!((x - y).norm() <= 1e-12 * (1.0 + x.norm()), "({}, {}): {} vs {}", r, c, x, y);
            }
        }
    }

    #[test]
    fn normal_order_round_trips(e in poly(2, 4, 4)) {
        let f = vacuum(2);
        prop_assert_eq!(canonicalize(&normal_order(&e, &f).unwrap()), canonicalize(&e));
    }

    #[test]
    fn normal_order_round_trips_in_zeta_frame(e in poly(1, 4, 3), zn in 1i64..9) {
        let z = ScalarPoly::frac(zn, 10);
        let (q, p): (OperatorExpr, OperatorExpr) = (SetId::pq().position(0).into(), SetId::pq().momentum(0).into());
        let (s, r): (OperatorExpr, OperatorExpr) = (SetId::rs().position(0).into(), SetId::rs().momentum(0).into());
        let i = OperatorExpr::scalar(ScalarPoly::i());
        let b1 = &(&q + &s.scale(&z)) + &(&i * &p);
        let b2 = &(&s + &q.scale(&z)) + &(&i * &r);
        let f = FiducialFrame::new("zeta", &[b1, b2]).unwrap();
        prop_assert_eq!(canonicalize(&normal_order(&e, &f).unwrap()), canonicalize(&e));
    }

    #[test]
    fn classical_substitution(e in poly(2, 4, 4)) {
        let f = vacuum(2);
        let nf = normal_product(&hermitian_part(&e), &f).unwrap();
        let sets = [SetId::pq()].into_iter().collect();
        prop_assume!(!nf.is_zero());
        prop_assert_eq!(wcp_symbolic(&nf, &f, &sets).unwrap(), substitute_symbols(&nf));
    }

    #[test]
    fn adjoint_covariance(e in poly(2, 4, 4)) {
        let f = vacuum(2);
        let lhs = normal_order(&e, &f).unwrap().adjoint();
        let rhs = normal_order(&e.adjoint(), &f).unwrap();
        prop_assert_eq!(canonicalize(&lhs), canonicalize(&rhs));
    }

    #[test]
    fn parameter_inversion_round_trips(m in (1i64..20, 1i64..20), z in (1i64..50, 51i64..100), v in (0i64..20, 1i64..20)) {
        let (m, z, v) = (rat(m.0, m.1), rat(z.0, z.1), rat(v.0, v.1));
        let (m0sq, l0) = effective_parameters(&m, &z, &v).unwrap();
        let inv = invert_parameters(&m0sq, &l0, &z).unwrap();
        prop_assert_eq!(&inv.m_sq, &(&m * &m));
        prop_assert_eq!(inv.v, v);
        prop_assert_eq!(inv.m, Some(m));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hermitian_expectations_are_real(e in poly(1, 4, 4), p in -1.0f64..1.0, q in -1.0f64..1.0) {
        let h = hermitian_part(&e);
        let space = FockSpace::uniform(&[(SetId::pq(), 1)], 48, 1.0, 1.0).unwrap();
        let m = build_operator(&h, &space, &Bindings::new().with_hbar(1.0)).unwrap();
        let cs = coherent_state(&space, &StateVector::basis(48, 0), &[SetId::pq().position(0)], &[p], &[q], 1e-6).unwrap();
        prop_assert!(expectation(&m, &cs.state).unwrap().im.abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn reduced_energy_drift_is_bounded(
        a in 0i64..4, c in 0i64..3, b in -2i64..=2, p0 in -1.0f64..1.0, q0 in -1.0f64..1.0,
    ) {
        let (p, q) = (ScalarPoly::shift(SetId::pq().momentum(0)), ScalarPoly::shift(SetId::pq().position(0)));
        let quad = (&p.pow(2) + &q.pow(2)).scale(&coeff(1, 2));
        let quartic = &q.pow(4).scale(&coeff(a, 8)) + &(&p * &q).pow(2).scale(&coeff(c, 8));
        let h = &(&quad + &quartic) + &(&p * &q).scale(&coeff(b, 8));
        let grid = TimeGrid::new(1e-2, 50.0).unwrap();
        let t = reduced_evolve(&h, &[SetId::pq().position(0)], &Bindings::new(), &PhasePoint::new(vec![p0], vec![q0]), &grid).unwrap();
        let e0 = t.energy[0];
        let drift: Vec<f64> = t.energy.iter().map(|e| (e - e0).abs() / e0.abs().max(1e-12)).collect();
        let half = drift.len() / 2;
        let early = drift[..half].iter().copied().fold(0.0, f64::max);
        let late = drift[half..].iter().copied().fold(0.0, f64::max);
        prop_assert!(late <= 1e-8, "drift {:.3e}", late);
        prop_assert!(late <= 10.0 * early + 1e-12, "early {:.3e}, late {:.3e}", early, late);
    }
}
