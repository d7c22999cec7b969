#![allow(dead_code)]

use rand::Rng;

use eqlab::expr::{hermitian_part, OperatorExpr};
use eqlab::generator::{Generator, SetId};
use eqlab::scalar::{coeff, ScalarPoly};

pub fn example_path(name: &str) -> String {
    format!("{}/examples/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn example(name: &str) -> String {
    std::fs::read_to_string(example_path(name)).unwrap()
}

pub fn generators(modes: u32) -> Vec<Generator> {
    (0..modes).flat_map(|k| [SetId::pq().position(k), SetId::pq().momentum(k)]).collect()
}

/// Small complex rational with numerator and denominator in a narrow range.
pub fn small_coeff(rng: &mut impl Rng) -> ScalarPoly {
    let re = ScalarPoly::constant(coeff(rng.random_range(-4..=4), rng.random_range(1..=4)));
    let im = ScalarPoly::constant(coeff(rng.random_range(-2..=2), rng.random_range(1..=3)));
    &re + &(&im * &ScalarPoly::i())
}

/// Random polynomial in `P`, `Q` of one set with up to `terms` words of
/// degree at most `max_degree`.
pub fn random_poly(rng: &mut impl Rng, modes: u32, max_degree: usize, terms: usize) -> OperatorExpr {
    let gens = generators(modes);
    let mut e = OperatorExpr::zero();
    for _ in 0..rng.random_range(1..=terms) {
        let deg = rng.random_range(0..=max_degree);
        let word: Vec<Generator> = (0..deg).map(|_| gens[rng.random_range(0..gens.len())]).collect();
        e = &e + &OperatorExpr::word(word, small_coeff(rng));
    }
    e
}

/// Random Hermitian polynomial: the Hermitian part of [`random_poly`],
/// retried until nonzero.
pub fn random_hermitian(rng: &mut impl Rng, modes: u32, max_degree: usize, terms: usize) -> OperatorExpr {
    loop {
        let h = hermitian_part(&random_poly(rng, modes, max_degree, terms));
        if !h.is_zero() {
            return h;
        }
    }
}

/// Model source for a Hamiltonian in the vacuum frame at unit frequency.
pub fn model_text(h: &OperatorExpr, modes: u32, truncation: u32) -> String {
    format!("param hbar = 1\nset pq modes {modes}\ntruncation {truncation}\nH = {}\n", h.render_plain())
}
