use super::*;
use crate::dsl::{parse_model, validate};
use crate::generator::SetId;
use crate::scalar::rat;

fn model_text(path: &str) -> String {
    std::fs::read_to_string(format!("{}/examples/{path}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn model(path: &str) -> CheckedModel {
    validate(&parse_model(&model_text(path)).unwrap()).unwrap()
}

fn pt(p: f64, q: f64) -> PhasePoint {
    PhasePoint::new(vec![p], vec![q])
}

fn harmonic_cl() -> ScalarPoly {
    let q = ScalarPoly::shift(SetId::pq().position(0));
    let p = ScalarPoly::shift(SetId::pq().momentum(0));
    (&p.pow(2) + &q.pow(2)).scale(&crate::scalar::coeff(1, 2))
}

#[test]
fn grid_is_uniform() {
    let g = TimeGrid::new(0.01, 10.0).unwrap();
    assert_eq!(g.steps, 1000);
    assert_eq!(g.times().len(), 1001);
    assert!(g.times().windows(2).all(|w| w[1] > w[0]));
    assert!(TimeGrid::new(0.0, 1.0).is_err());
}

#[test]
fn vacuum_is_stationary() {
    let m = model("harmonic.eqm");
    let space = FockSpace::for_model(&m, Some(32)).unwrap();
    let h = fock::build_operator(&m.hamiltonian, &space, &m.bindings).unwrap();
    let t = schrodinger_evolve(&space, &h, &StateVector::basis(32, 0), &m.shifted_positions(), &TimeGrid::new(0.05, 5.0).unwrap())
        .unwrap();
    assert!(t.q.iter().all(|q| q[0].abs() < 1e-10));
    assert!(t.max_norm_drift() < 1e-12);
}

#[test]
fn harmonic_mean_position_is_cosine() {
    let m = model("harmonic.eqm");
    let run = evolve_model(&m, &pt(0.0, 1.0), &TimeGrid::new(0.01, 10.0).unwrap(), None).unwrap();
    for (t, q) in run.full.grid.times().iter().zip(&run.full.q) {
        assert!((q[0] - t.cos()).abs() < 1e-6, "t={t}");
    }
    for ((t, q), p) in run.reduced.grid.times().iter().zip(&run.reduced.q).zip(&run.reduced.p) {
        assert!((q[0] - t.cos()).abs() < 1e-8 && (p[0] + t.sin()).abs() < 1e-8, "t={t}");
    }
    assert!(run.deviation.max_dq < 1e-6 && run.deviation.max_dp < 1e-6);
    assert!(run.full.max_norm_drift() < 1e-9);
    assert!(run.full.max_energy_drift() < 1e-8);
    assert!(run.reduced.max_energy_drift() < 1e-8);
}

#[test]
fn quartic_energy_log_is_flat() {
    let m = model("quartic.eqm");
    let run = evolve_model(&m, &pt(0.5, 1.0), &TimeGrid::new(0.01, 5.0).unwrap(), None).unwrap();
    assert!(run.full.max_energy_drift() < 1e-8);
    assert!(run.full.max_norm_drift() < 1e-9);
    assert!(run.deviation.max_dq > 1e-6);
}

#[test]
fn time_reversal_recovers_start() {
    let q = ScalarPoly::shift(SetId::pq().position(0));
    let p = ScalarPoly::shift(SetId::pq().momentum(0));
    let coords = [SetId::pq().position(0)];
    // separable quartic and a non-separable coupling
    let hs = [&harmonic_cl() + &q.pow(4).scale(&crate::scalar::coeff(1, 10)), &harmonic_cl() + &(&p * &q).pow(2)];
    for h in hs {
        let fwd = reduced_evolve(&h, &coords, &Bindings::new(), &pt(0.3, -0.8), &TimeGrid::new(0.01, 5.0).unwrap()).unwrap();
        let end = PhasePoint::new(fwd.p.last().unwrap().clone(), fwd.q.last().unwrap().clone());
        let back = TimeGrid { dt: -0.01, steps: 500 };
        let rev = reduced_evolve(&h, &coords, &Bindings::new(), &end, &back).unwrap();
        assert!((rev.p.last().unwrap()[0] - 0.3).abs() < 1e-6);
        assert!((rev.q.last().unwrap()[0] + 0.8).abs() < 1e-6);
        assert!(fwd.max_energy_drift() < 1e-8, "{}", fwd.max_energy_drift());
    }
}

#[test]
fn rotsym_reduced_energy_is_conserved() {
    let m = model("rotsym_n1.eqm");
    let h = model_wcp_symbolic(&m).unwrap();
    let t = reduced_evolve(&h, &m.shifted_positions(), &m.bindings, &pt(0.5, 1.0), &TimeGrid::new(0.01, 50.0).unwrap()).unwrap();
    assert!(t.max_energy_drift() <= 1e-8, "{}", t.max_energy_drift());
    // no secular growth: late drift is not larger than early drift by much
    let e0 = t.energy[0];
    let half = t.energy.len() / 2;
    let early = t.energy[..half].iter().map(|e| (e - e0).abs()).fold(0.0, f64::max);
    let late = t.energy[half..].iter().map(|e| (e - e0).abs()).fold(0.0, f64::max);
    assert!(late <= 10.0 * early.max(1e-15));
}

#[test]
fn identical_trajectories_give_zero_report() {
    let coords = [SetId::pq().position(0)];
    let t = reduced_evolve(&harmonic_cl(), &coords, &Bindings::new(), &pt(0.0, 1.0), &TimeGrid::new(0.1, 1.0).unwrap()).unwrap();
    let r = compare_trajectories(&t, &t).unwrap();
    assert_eq!((r.max_dq, r.max_dp, r.rms_dq, r.rms_dp), (0.0, 0.0, 0.0, 0.0));
    let other = reduced_evolve(&harmonic_cl(), &coords, &Bindings::new(), &pt(0.0, 1.0), &TimeGrid::new(0.1, 2.0).unwrap()).unwrap();
    assert_eq!(compare_trajectories(&t, &other).unwrap_err(), DynamicsError::GridMismatch);
}

#[test]
fn smaller_hbar_tracks_the_classical_path() {
    let grid = TimeGrid::new(0.01, 5.0).unwrap();
    let mut devs = Vec::new();
    for hbar in [rat(1, 1), rat(1, 4)] {
        let mut spec = parse_model(&model_text("quartic.eqm")).unwrap();
        spec.set_param("hbar", hbar);
        let m = validate(&spec).unwrap();
        devs.push(evolve_model(&m, &pt(0.0, 1.0), &grid, None).unwrap().deviation.max_dq);
    }
    assert!(devs[1] < devs[0], "{devs:?}");
}

#[test]
fn csv_columns() {
    let m = model("harmonic.eqm");
    let run = evolve_model(&m, &pt(0.0, 1.0), &TimeGrid::new(0.1, 0.3).unwrap(), Some(32)).unwrap();
    let csv = run.to_csv();
    assert_eq!(csv.lines().next().unwrap(), "t,p0,q0,Qexp0,Pexp0,norm,energy,energy_cl");
    assert_eq!(csv.lines().count(), 5);
}
