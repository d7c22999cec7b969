use eqlab::expr::{canonicalize, OperatorExpr};
use eqlab::frame::vacuum_frame;
use eqlab::generator::SetId;
use eqlab::ordering::{normal_order, normal_product, wcp_symbolic};
use eqlab::scalar::ScalarPoly;

fn main() {
    let m0 = ScalarPoly::param("m0");
    let q: OperatorExpr = SetId::pq().position(0).into();
    let p: OperatorExpr = SetId::pq().momentum(0).into();
    let i = OperatorExpr::scalar(ScalarPoly::i());

    // b = m0 Q + iP annihilates the vacuum of frequency m0
    let b = &q.scale(&m0) + &(&i * &p);
    let bdag = b.adjoint();
    let f = vacuum_frame("vac", &[(SetId::pq().position(0), m0.clone())]).unwrap();

    let h = &p.pow(2) + &q.pow(2).scale(&m0.pow(2));
    println!("b† b          = {}", canonicalize(&(&bdag * &b)).render());
    println!("H             = {}", canonicalize(&h).render());
    println!("normal order  = {}", normal_order(&h, &f).unwrap().render());
    println!(":H:           = {}", normal_product(&h, &f).unwrap().render());

    let pq = [SetId::pq()].into_iter().collect();
    println!("<p,q|H|p,q>   = {}", wcp_symbolic(&h, &f, &pq).unwrap());
    println!("<p,q|Q^4|p,q> = {}", wcp_symbolic(&q.pow(4), &f, &pq).unwrap());
}
