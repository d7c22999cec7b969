use eqlab::correspondence::{hbar_split, model_metric, model_wcp_symbolic, square_grid, wcp_numeric, PhasePoint, WcpOptions, DEFAULT_STEP};
use eqlab::dsl::{parse_model, validate};

const QUARTIC: &str = include_str!("quartic.eqm");

fn main() {
    let m = validate(&parse_model(QUARTIC).unwrap()).unwrap();

    let h = model_wcp_symbolic(&m).unwrap();
    let (classical, corrections) = hbar_split(&h);
    println!("H(p,q)        = {h}");
    println!("hbar^0 part   = {classical}");
    println!("hbar^k, k > 0 = {corrections}");

    let report = wcp_numeric(&m, "quartic", &square_grid(1, 5, 1.5), &WcpOptions::default()).unwrap();
    print!("{}", report.to_csv());
    println!("max |numeric - symbolic| = {:.2e}", report.max_abs_dev);

    let g = model_metric(&m, &PhasePoint::new(vec![0.3], vec![-0.4]), DEFAULT_STEP, None).unwrap();
    println!("metric {:?}", g.matrix);
}
