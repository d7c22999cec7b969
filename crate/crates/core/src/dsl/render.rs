use std::fmt::Write;

use super::ModelSpec;

/// Canonical text of a model. Parsing the output gives back an identical
/// `ModelSpec`.
pub fn render_model(spec: &ModelSpec) -> String {
    let mut out = String::new();
    for (name, value) in &spec.params {
        match value {
            Some(v) => writeln!(out, "param {name} = {v}").unwrap(),
            None => writeln!(out, "param {name}").unwrap(),
        }
    }
    for (set, n) in &spec.sets {
        writeln!(out, "set {set} modes {n}").unwrap();
    }
    for f in &spec.frames {
        let conds: Vec<String> = f.conditions.iter().map(|c| c.render_plain()).collect();
        writeln!(out, "frame {} = {}", f.name, conds.join(", ")).unwrap();
    }
    if let Some(f) = &spec.fiducial {
        writeln!(out, "fiducial {f}").unwrap();
    }
    if let Some(s) = &spec.shifted {
        let names: Vec<String> = s.iter().map(|x| x.to_string()).collect();
        writeln!(out, "shifted {}", names.join(", ")).unwrap();
    }
    if let Some(t) = &spec.truncation {
        match &t.basis {
            Some(b) => writeln!(out, "truncation {} basis {}", t.dim, b).unwrap(),
            None => writeln!(out, "truncation {}", t.dim).unwrap(),
        }
    }
    let h = &spec.hamiltonian;
    let mut parts = Vec::new();
    if !h.plain.is_zero() || h.regions.is_empty() {
        parts.push(h.plain.render_plain());
    }
    for (frame, e) in &h.regions {
        parts.push(format!(":[ {} ]: @{}", e.render_plain(), frame));
    }
    writeln!(out, "H = {}", parts.join("\n  + ")).unwrap();
    out
}
