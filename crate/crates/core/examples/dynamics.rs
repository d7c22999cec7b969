use eqlab::correspondence::PhasePoint;
use eqlab::dsl::{parse_model, validate};
use eqlab::dynamics::{evolve_model, TimeGrid};
use eqlab::scalar::rat;

const QUARTIC: &str = include_str!("quartic.eqm");

fn main() {
    let grid = TimeGrid::new(0.01, 5.0).unwrap();
    let start = PhasePoint::new(vec![0.0], vec![1.0]);

    for hbar in [rat(1, 1), rat(1, 4), rat(1, 16)] {
        let mut spec = parse_model(QUARTIC).unwrap();
        spec.set_param("hbar", hbar.clone());
        let m = validate(&spec).unwrap();
        let run = evolve_model(&m, &start, &grid, None).unwrap();
        let s = run.summary("quartic", &start);
        println!(
            "hbar = {hbar:<5} max|<Q>-q| = {:.3e}  norm drift {:.1e}  energy drift {:.1e} / {:.1e}",
            s.max_dq, s.max_norm_drift, s.quantum_energy_drift, s.classical_energy_drift
        );
        if hbar == rat(1, 1) {
            std::fs::write(std::env::temp_dir().join("quartic_trajectory.csv"), run.to_csv()).unwrap();
        }
    }
}
