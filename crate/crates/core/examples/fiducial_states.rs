use eqlab::dsl::{parse_model, validate};
use eqlab::fock::{build_generators, coherent_state, expectation, model_fiducial, FockSpace};

const MODEL: &str = include_str!("rotsym_n1.eqm");

fn main() {
    let m = validate(&parse_model(MODEL).unwrap()).unwrap();

    println!("D   dim    residual   gap");
    for d in [12, 16, 24, 32] {
        let space = FockSpace::for_model(&m, Some(d)).unwrap();
        let fid = model_fiducial(&m, &space).unwrap();
        println!("{d:<3} {:<6} {:.3e}  {:.3}", space.dim(), fid.residual, fid.gap);
    }

    let space = FockSpace::for_model(&m, None).unwrap();
    let fid = model_fiducial(&m, &space).unwrap().state;
    let coords = m.shifted_positions();
    let (q_op, p_op) = build_generators(&space, coords[0].set, coords[0].mode).unwrap();
    for (p, q) in [(0.0, 0.0), (0.5, -1.0), (1.0, 1.0)] {
        let cs = coherent_state(&space, &fid, &coords, &[p], &[q], 1e-6).unwrap();
        let qm = expectation(&q_op, &cs.state).unwrap().re;
        let pm = expectation(&p_op, &cs.state).unwrap().re;
        println!("|p={p}, q={q}>: <Q> = {qm:.10}, <P> = {pm:.10}, leakage {:.1e}", cs.leakage);
    }
}
