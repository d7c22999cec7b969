use std::env;

use eqlab::dsl::{parse_model, render_model, validate};

const DEFAULT: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/rotsym_n1.eqm");

fn main() {
    let path = env::args().nth(1).unwrap_or_else(|| DEFAULT.to_string());
    let text = std::fs::read_to_string(&path).expect("readable model file");

    let spec = match parse_model(&text) {
        Ok(s) => s,
        Err(diags) => {
            for d in diags {
                eprintln!("{}", d.render(&path));
            }
            std::process::exit(1);
        }
    };
    print!("{}", render_model(&spec));

    match validate(&spec) {
        Ok(m) => {
            println!("# fiducial frame `{}`, {} modes, D = {}", m.fiducial.name(), m.total_modes(), m.truncation);
            println!("# H has {} words after normal-product expansion", m.hamiltonian.len());
        }
        Err(e) => eprintln!("invalid: {e}"),
    }

    // a few broken inputs and what the parser says about them
    for bad in ["set pq modes 1\nH = Q[0]^^2\n", "set pq modes 1\nH = Q[1]\n", "param x = 1/0\n"] {
        for d in parse_model(bad).unwrap_err() {
            println!("{}", d.render("<inline>"));
        }
    }
}
