use super::*;
use crate::expr::hermitian_check;

fn ast(s: &str) -> String {
    parse_expr_ast(s).unwrap().to_string()
}

fn errors(text: &str) -> Vec<Diagnostic> {
    parse_model(text).expect_err("should be rejected")
}

pub(crate) fn corpus() -> Vec<(String, String)> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("examples");
    let mut out: Vec<(String, String)> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| {
            let p = e.ok()?.path();
            (p.extension()? == "eqm").then(|| (p.display().to_string(), std::fs::read_to_string(&p).unwrap()))
        })
        .collect();
    out.sort();
    out
}

#[test]
fn precedence_golden() {
    assert_eq!(ast("-x^2"), "(neg (^ x 2))");
    assert_eq!(ast("a*b + c"), "(+ (* a b) c)");
    assert_eq!(ast("a - b - c"), "(- (- a b) c)");
    assert_eq!(ast("a/b*c"), "(* (/ a b) c)");
    assert_eq!(ast("2*-3"), "(* 2 (neg 3))");
    assert_eq!(ast("-a*b"), "(* (neg a) b)");
    assert_eq!(ast("x^-1"), "(^ x -1)");
    assert_eq!(ast("(a + b)^2"), "(^ (+ a b) 2)");
    assert_eq!(ast("2*:[ Q[0]*P[0] ]: @f"), "(* 2 (: (* Q[0] P[0]) @f))");
}

#[test]
fn chained_powers_are_rejected() {
    assert!(parse_expr_ast("a^2^3").is_err());
}

#[test]
fn harmonic_parses() {
    let text = "param hbar = 1, omega = 1\nset pq modes 1\nH = 1/2*(P[0]^2 + omega^2*Q[0]^2)\n";
    let spec = parse_model(text).unwrap();
    assert_eq!(spec.total_modes(), 1);
    let m = validate(&spec).unwrap();
    assert!(hermitian_check(&m.hamiltonian));
    assert_eq!(m.truncation, DEFAULT_D_SINGLE);
    assert_eq!(m.fiducial.name(), VACUUM_FRAME);
}

#[test]
fn unclosed_bracket_column() {
    let d = errors("set pq modes 1\nH = Q[0\n");
    assert_eq!(d[0].message, "expected ']'");
    assert_eq!((d[0].span.line, d[0].span.column), (2, 8));
    assert_eq!(d[0].render("m.eqm"), "m.eqm:2:8: error: expected ']'");
}

#[test]
fn declaration_errors() {
    let d = errors("set pq modes 1\nset pq modes 2\nH = Q[0]");
    assert!(d[0].message.contains("duplicate"));
    let d = errors("set pq modes 1\nH = Q[0] + x");
    assert!(d[0].message.contains("unknown identifier `x`"));
    let d = errors("set pq modes 1\nH = Q[3]");
    assert!(d[0].message.contains("arity mismatch"));
    let d = errors("set pq modes 1\nH = :[ Q[0] ]: @nowhere");
    assert!(d[0].message.contains("unknown frame"));
    let d = errors("set pq modes 1\nparam i = 2\nH = Q[0]");
    assert!(d[0].message.contains("reserved"));
    let d = errors("set pq modes 1\n");
    assert!(d[0].message.contains("missing Hamiltonian"));
}

#[test]
fn region_rules() {
    let base = "set pq modes 1\nframe f = Q[0] + i*P[0]\n";
    let d = errors(&format!("{base}H = Q[0]*:[ Q[0] ]: @f"));
    assert!(d[0].message.contains("only be multiplied by a scalar"));
    let d = errors(&format!("{base}H = :[ :[ Q[0] ]: @f ]: @f"));
    assert!(d[0].message.contains("nested"));
    let spec = parse_model(&format!("{base}H = 2*:[ Q[0]^2 ]: @f - :[ Q[0]^2 ]: @f")).unwrap();
    assert_eq!(spec.hamiltonian.regions["f"].render_plain(), "Q[0]*Q[0]");
}

#[test]
fn continuation_lines() {
    let spec = parse_model("set pq modes 1\nH = Q[0]^2\n  # note\n  + P[0]^2\n").unwrap();
    assert_eq!(spec.hamiltonian.plain.len(), 2);
}

#[test]
fn corpus_round_trips() {
    for (name, text) in corpus() {
        let spec = parse_model(&text).unwrap_or_else(|d| panic!("{name}: {:?}", d));
        let again = parse_model(&render_model(&spec)).unwrap();
        assert_eq!(spec, again, "{name}");
        validate(&spec).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

fn rotsym_text(zeta: &str) -> String {
    format!(
        "param m = 1, zeta = {zeta}, v = 1\nset pq modes 1\nset rs modes 1\n\
         frame fid = m*(Q[0] + zeta*S[0]) + i*P[0], m*(S[0] + zeta*Q[0]) + i*R[0]\n\
         shifted pq\nH = 1/2*:[ P[0]^2 + m^2*(Q[0] + zeta*S[0])^2 ]: @fid\n"
    )
}

#[test]
fn zeta_boundary() {
    assert!(validate(&parse_model(&rotsym_text("1/2")).unwrap()).is_ok());
    assert!(validate(&parse_model(&rotsym_text("9/10")).unwrap()).is_ok());
    for z in ["1", "11/10"] {
        let r = validate(&parse_model(&rotsym_text(z)).unwrap());
        assert!(matches!(r, Err(ModelError::GramNotPositiveDefinite { .. })), "{z}: {r:?}");
    }
}

#[test]
fn validation_errors() {
    let spec = parse_model("set pq modes 1\nH = Q[0]*P[0]").unwrap();
    assert!(matches!(validate(&spec), Err(ModelError::NonHermitianHamiltonian)));
    let spec = parse_model("set pq modes 2\nframe f = Q[0] + i*P[0], 2*Q[0] + 2*i*P[0]\nH = Q[0]").unwrap();
    assert!(matches!(validate(&spec), Err(ModelError::DependentFiducialConditions { .. })));
    let spec = parse_model("set pq modes 2\nframe f = Q[0] + i*P[0]\nH = Q[0]").unwrap();
    assert!(matches!(validate(&spec), Err(ModelError::ConditionCount { .. })));
    let spec = parse_model("set pq modes 1\ntruncation 3\nH = Q[0]").unwrap();
    assert!(matches!(validate(&spec), Err(ModelError::Truncation(3))));
}

#[test]
fn symbolic_parameters_survive() {
    let spec = parse_model("param omega\nset pq modes 1\nH = 1/2*(P[0]^2 + omega^2*Q[0]^2)").unwrap();
    let m = validate(&spec).unwrap();
    assert!(m.hamiltonian.render().contains("omega^2"));
}
