//! Fiducial frames: sets of annihilation operators `b_i = Σ c_ig·g`.
//!
//! A frame is valid when the `b_i` mutually commute, the Gram matrix
//! `G_ij = [b_i, b_j†]/hbar` is Hermitian positive definite, and the map from
//! the spanned generators to `{b_i, b_i†}` is invertible. The conditions are
//! kept unnormalized: `G` is whatever the raw combinations produce, and the
//! ordering engine uses it as is.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::expr::OperatorExpr;
use crate::generator::Generator;
use crate::scalar::{coeff, imag_unit, Atom, Coeff, ScalarPoly};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("frame `{frame}`: condition {index} is not a linear combination of generators")]
    NotLinear { frame: String, index: usize },
    #[error("frame `{frame}` has no conditions")]
    Empty { frame: String },
    #[error("frame `{frame}`: conditions {i} and {j} do not commute")]
    NonCommuting { frame: String, i: usize, j: usize },
    #[error("frame `{frame}`: Gram matrix is not positive definite (leading minor {order} is {minor})")]
    GramNotPositiveDefinite { frame: String, order: usize, minor: String },
    #[error("frame `{frame}`: cannot decide the sign of Gram minor {order} = {minor}")]
    GramUndecidable { frame: String, order: usize, minor: String },
    #[error("frame `{frame}`: {conditions} conditions span {generators} generators; need exactly twice as many generators")]
    SpanMismatch { frame: String, conditions: usize, generators: usize },
    #[error("frame `{frame}`: conditions are linearly dependent")]
    Dependent { frame: String },
    #[error("frame `{frame}`: inverting the frame needs division by `{pivot}`; bind the parameters to numbers")]
    SymbolicPivot { frame: String, pivot: String },
}

/// Index into the ladder operators of a frame: `b_index` or its adjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ladder {
    pub index: usize,
    pub dagger: bool,
}

pub type LinearForm = BTreeMap<Generator, ScalarPoly>;

#[derive(Debug, Clone, PartialEq)]
pub struct FiducialFrame {
    name: Arc<str>,
    conditions: Vec<LinearForm>,
    span: Vec<Generator>,
    gram: Vec<Vec<ScalarPoly>>,
    /// Each spanned generator as `Σ coefficient · ladder`.
    inverse: BTreeMap<Generator, Vec<(Ladder, ScalarPoly)>>,
}

/// `[g, h] / hbar`.
fn ccr_over_hbar(g: &Generator, h: &Generator) -> Option<Coeff> {
    match g.ccr_sign(h) {
        0 => None,
        s => Some(imag_unit() * coeff(s as i64, 1)),
    }
}

/// `[Σ a_g g, Σ b_h h] / hbar` for two linear forms.
fn bracket(a: &LinearForm, b: &LinearForm) -> ScalarPoly {
    let mut out = ScalarPoly::zero();
    for (g, ca) in a {
        for (h, cb) in b {
            if let Some(k) = ccr_over_hbar(g, h) {
                out.add_product(ca, &cb.scale(&k));
            }
        }
    }
    out
}

fn adjoint_form(a: &LinearForm) -> LinearForm {
    a.iter().map(|(g, c)| (*g, c.conj())).collect()
}

impl FiducialFrame {
    /// Builds and validates a frame from linear annihilation conditions.
    pub fn new(name: &str, conditions: &[OperatorExpr]) -> Result<Self, FrameError> {
        let frame = name.to_string();
        if conditions.is_empty() {
            return Err(FrameError::Empty { frame });
        }
        let mut forms = Vec::with_capacity(conditions.len());
        for (index, c) in conditions.iter().enumerate() {
            let mut form = LinearForm::new();
            for (w, k) in c.terms() {
                if w.len() != 1 {
                    return Err(FrameError::NotLinear { frame, index });
                }
                form.insert(w[0], k.clone());
            }
            if form.is_empty() {
                return Err(FrameError::NotLinear { frame, index });
            }
            forms.push(form);
        }
        let n = forms.len();

        for i in 0..n {
            for j in i + 1..n {
                if !bracket(&forms[i], &forms[j]).is_zero() {
                    return Err(FrameError::NonCommuting { frame, i, j });
                }
            }
        }

        let gram: Vec<Vec<ScalarPoly>> = (0..n)
            .map(|i| (0..n).map(|j| bracket(&forms[i], &adjoint_form(&forms[j]))).collect())
            .collect();
        check_positive_definite(&frame, &gram)?;

        let span: Vec<Generator> = forms
            .iter()
            .flat_map(|f| f.keys().copied())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if span.len() != 2 * n {
            return Err(FrameError::SpanMismatch { frame, conditions: n, generators: span.len() });
        }
        let inverse = invert(&frame, &forms, &span)?;

        Ok(FiducialFrame { name: Arc::from(name), conditions: forms, span, gram, inverse })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn name_arc(&self) -> Arc<str> {
        self.name.clone()
    }

    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    pub fn span(&self) -> &[Generator] {
        &self.span
    }

    pub fn contains(&self, g: &Generator) -> bool {
        self.inverse.contains_key(g)
    }

    /// Linear form of `b_i` (or `b_i†`).
    pub fn ladder_form(&self, l: Ladder) -> LinearForm {
        let f = &self.conditions[l.index];
        if l.dagger {
            adjoint_form(f)
        } else {
            f.clone()
        }
    }

    pub fn conditions(&self) -> &[LinearForm] {
        &self.conditions
    }

    /// Condition `i` as an operator expression.
    pub fn condition_expr(&self, i: usize) -> OperatorExpr {
        let mut e = OperatorExpr::zero();
        for (g, c) in &self.conditions[i] {
            e.add_term(vec![*g], c.clone());
        }
        e
    }

    /// `G_ij = [b_i, b_j†]/hbar`.
    pub fn gram(&self) -> &[Vec<ScalarPoly>] {
        &self.gram
    }

    /// `G_ij / sqrt(G_ii G_jj)` when every square root is exact.
    pub fn normalized_gram(&self) -> Option<Vec<Vec<ScalarPoly>>> {
        let n = self.gram.len();
        let mut out = vec![vec![ScalarPoly::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let d = (&self.gram[i][i] * &self.gram[j][j]).sqrt_exact()?;
                out[i][j] = &self.gram[i][j] * &d.inverse().ok()?;
            }
        }
        Some(out)
    }

    /// Expansion of a spanned generator in ladder operators.
    pub fn expansion(&self, g: &Generator) -> Option<&[(Ladder, ScalarPoly)]> {
        self.inverse.get(g).map(Vec::as_slice)
    }
}

/// Laplace expansion is used for symbolic matrices; numeric ones go through
/// exact Gaussian elimination.
fn determinant(m: &[Vec<ScalarPoly>]) -> Option<ScalarPoly> {
    let n = m.len();
    if n == 0 {
        return Some(ScalarPoly::one());
    }
    if m.iter().all(|r| r.iter().all(|x| x.as_constant().is_some())) {
        let mut a: Vec<Vec<Coeff>> =
            m.iter().map(|r| r.iter().map(|x| x.as_constant().unwrap()).collect()).collect();
        let mut det = coeff(1, 1);
        for c in 0..n {
            let Some(p) = (c..n).find(|&r| !a[r][c].is_zero()) else {
                return Some(ScalarPoly::zero());
            };
            if p != c {
                a.swap(p, c);
                det = -det;
            }
            let pivot = a[c][c].clone();
            det = &det * &pivot;
            for r in c + 1..n {
                let f = &a[r][c] / &pivot;
                if f.is_zero() {
                    continue;
                }
                for k in c..n {
                    let v = &a[c][k] * &f;
                    a[r][k] = &a[r][k] - &v;
                }
            }
        }
        return Some(ScalarPoly::constant(det));
    }
    if n > 8 {
        return None;
    }
    Some(laplace(m))
}

fn laplace(m: &[Vec<ScalarPoly>]) -> ScalarPoly {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut out = ScalarPoly::zero();
    for col in 0..n {
        if m[0][col].is_zero() {
            continue;
        }
        let minor: Vec<Vec<ScalarPoly>> = m[1..]
            .iter()
            .map(|r| r.iter().enumerate().filter(|(k, _)| *k != col).map(|(_, x)| x.clone()).collect())
            .collect();
        let sub = &m[0][col] * &laplace(&minor);
        if col % 2 == 0 {
            out.add_assign_ref(&sub);
        } else {
            out.add_assign_ref(&-sub);
        }
    }
    out
}

/// Sign of a real polynomial when it can be read off: symbolic parameters and
/// `hbar` are positive; classical shift symbols have no sign.
fn manifest_sign(p: &ScalarPoly) -> Option<std::cmp::Ordering> {
    use std::cmp::Ordering;
    if p.is_zero() {
        return Some(Ordering::Equal);
    }
    if !p.is_real() {
        return None;
    }
    if p.atoms().iter().any(|a| matches!(a, Atom::Shift(_))) {
        return None;
    }
    let signs: BTreeSet<bool> = p.terms().map(|(_, c)| c.re.is_positive()).collect();
    match (signs.contains(&true), signs.contains(&false)) {
        (true, false) => Some(Ordering::Greater),
        (false, true) => Some(Ordering::Less),
        _ => None,
    }
}

/// Sylvester's criterion on the leading principal minors.
fn check_positive_definite(frame: &str, gram: &[Vec<ScalarPoly>]) -> Result<(), FrameError> {
    let n = gram.len();
    for k in 1..=n {
        let lead: Vec<Vec<ScalarPoly>> = gram[..k].iter().map(|r| r[..k].to_vec()).collect();
        let det = determinant(&lead).ok_or_else(|| FrameError::GramUndecidable {
            frame: frame.to_string(),
            order: k,
            minor: "(too large for symbolic expansion)".to_string(),
        })?;
        match manifest_sign(&det) {
            Some(std::cmp::Ordering::Greater) => {}
            Some(_) => {
                return Err(FrameError::GramNotPositiveDefinite {
                    frame: frame.to_string(),
                    order: k,
                    minor: det.render(),
                })
            }
            None => {
                return Err(FrameError::GramUndecidable {
                    frame: frame.to_string(),
                    order: k,
                    minor: det.render(),
                })
            }
        }
    }
    Ok(())
}

/// Gauss–Jordan inversion of the ladder/generator matrix, pivoting only on
/// single-term entries so every step stays inside the Laurent polynomials.
fn invert(
    frame: &str,
    forms: &[LinearForm],
    span: &[Generator],
) -> Result<BTreeMap<Generator, Vec<(Ladder, ScalarPoly)>>, FrameError> {
    let n = forms.len();
    let size = 2 * n;
    let ladders: Vec<Ladder> = (0..n)
        .map(|index| Ladder { index, dagger: false })
        .chain((0..n).map(|index| Ladder { index, dagger: true }))
        .collect();
    // Row k: ladder k in terms of span generators, augmented by identity.
    let mut rows: Vec<Vec<ScalarPoly>> = ladders
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let f = &forms[l.index];
            let mut row: Vec<ScalarPoly> = span
                .iter()
                .map(|g| {
                    let c = f.get(g).cloned().unwrap_or_default();
                    if l.dagger {
                        c.conj()
                    } else {
                        c
                    }
                })
                .collect();
            row.extend((0..size).map(|j| if j == k { ScalarPoly::one() } else { ScalarPoly::zero() }));
            row
        })
        .collect();

    for col in 0..size {
        let pivot_row = (col..size).find(|&r| rows[r][col].is_unit());
        let Some(pr) = pivot_row else {
            return Err(match (col..size).find(|&r| !rows[r][col].is_zero()) {
                Some(r) => FrameError::SymbolicPivot {
                    frame: frame.to_string(),
                    pivot: rows[r][col].render(),
                },
                None => FrameError::Dependent { frame: frame.to_string() },
            });
        };
        rows.swap(pr, col);
        let inv = rows[col][col].inverse().expect("unit pivot");
        rows[col] = rows[col].iter().map(|x| x * &inv).collect();
        for r in 0..size {
            if r == col || rows[r][col].is_zero() {
                continue;
            }
            let f = rows[r][col].clone();
            let pivot = rows[col].clone();
            for (x, y) in rows[r].iter_mut().zip(&pivot) {
                if !y.is_zero() {
                    *x = &*x - &(y * &f);
                }
            }
        }
    }

    // After elimination: generator `span[c]` = Σ_k rows[c][size + k] · ladder_k.
    let mut out = BTreeMap::new();
    for (c, g) in span.iter().enumerate() {
        let exp: Vec<(Ladder, ScalarPoly)> = (0..size)
            .filter_map(|k| {
                let x = &rows[c][size + k];
                (!x.is_zero()).then(|| (ladders[k], x.clone()))
            })
            .collect();
        out.insert(*g, exp);
    }
    Ok(out)
}

/// Frame annihilating the ground state of `(P² + ω²Q²)/2` on each listed
/// mode: `b = ω·Q + i·P`.
pub fn vacuum_frame(name: &str, modes: &[(Generator, ScalarPoly)]) -> Result<FiducialFrame, FrameError> {
    let conds: Vec<OperatorExpr> = modes
        .iter()
        .map(|(g, omega)| {
            let q = OperatorExpr::generator(*g).scale(omega);
            let p = OperatorExpr::generator(g.partner()).scale(&ScalarPoly::i());
            &q + &p
        })
        .collect();
    FiducialFrame::new(name, &conds)
}
