//! Normal ordering with respect to a fiducial frame, and the symbolic weak
//! correspondence map `H ↦ ⟨p,q| H |p,q⟩`.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::expr::{displace, hermitian_check, shift_map, OperatorExpr, OrderTag, Word, MAX_DEGREE};
use crate::frame::{FiducialFrame, Ladder};
use crate::generator::{Generator, SetId};
use crate::scalar::ScalarPoly;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("generator {generator} lies outside the span of frame `{frame}`")]
    FrameSpan { generator: Generator, frame: String },
    #[error("expression is not normal-ordered in frame `{0}`")]
    NotNormalOrdered(String),
    #[error("operator is not Hermitian")]
    Hermiticity,
    #[error("expression degree {0} exceeds the cap of {MAX_DEGREE}")]
    DegreeCap(usize),
}

/// `b†_{creators…} b_{annihilators…}`, both index lists sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LadderMonomial {
    pub creators: Vec<usize>,
    pub annihilators: Vec<usize>,
}

impl LadderMonomial {
    pub fn degree(&self) -> usize {
        self.creators.len() + self.annihilators.len()
    }
}

/// Polynomial in the ladder operators of one frame, in normal order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LadderPoly {
    pub terms: BTreeMap<LadderMonomial, ScalarPoly>,
}

impl LadderPoly {
    fn add(&mut self, m: LadderMonomial, c: ScalarPoly) {
        use std::collections::btree_map::Entry;
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                o.get_mut().add_assign_ref(&c);
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Vacuum expectation after displacing each `b_i` by `shift[i]`:
    /// substitute `b_i → β_i`, `b_i† → conj(β_i)`.
    pub fn displaced_expectation(&self, shift: &[ScalarPoly]) -> ScalarPoly {
        let conj: Vec<ScalarPoly> = shift.iter().map(ScalarPoly::conj).collect();
        let mut out = ScalarPoly::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for &k in &m.creators {
                v = &v * &conj[k];
            }
            for &k in &m.annihilators {
                v = &v * &shift[k];
            }
            out.add_assign_ref(&v);
        }
        out
    }

    /// Human-readable form using `b[i]` and `b[i]'` for the adjoint.
    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let ops: Vec<String> = m
                    .creators
                    .iter()
                    .map(|k| format!("b[{k}]'"))
                    .chain(m.annihilators.iter().map(|k| format!("b[{k}]")))
                    .collect();
                if ops.is_empty() {
                    format!("({})", c.render())
                } else {
                    format!("({})*{}", c.render(), ops.join("*"))
                }
            })
            .collect();
        parts.join(" + ")
    }
}

fn check_degree(e: &OperatorExpr) -> Result<(), AlgebraError> {
    let d = e.degree();
    if d > MAX_DEGREE {
        Err(AlgebraError::DegreeCap(d))
    } else {
        Ok(())
    }
}

/// Expresses `e` in the ladder operators of `f` and sorts every word into
/// normal order. With `contract` the commutators `[b_i, b_j†] = hbar·G_ij`
/// are kept (an operator identity); without it they are dropped, which is
/// the normal product `:e:` of the written expression.
pub fn ladder_form(e: &OperatorExpr, f: &FiducialFrame, contract: bool) -> Result<LadderPoly, AlgebraError> {
    check_degree(e)?;
    let hbar_gram: Vec<Vec<ScalarPoly>> = f
        .gram()
        .iter()
        .map(|row| row.iter().map(|x| x * &ScalarPoly::hbar()).collect())
        .collect();
    let mut out = LadderPoly::default();
    for (word, c) in e.terms() {
        let mut cur: BTreeMap<LadderMonomial, ScalarPoly> = BTreeMap::new();
        cur.insert(LadderMonomial::default(), c.clone());
        for g in word {
            let exp = f.expansion(g).ok_or_else(|| AlgebraError::FrameSpan {
                generator: *g,
                frame: f.name().to_string(),
            })?;
            let mut next: BTreeMap<LadderMonomial, ScalarPoly> = BTreeMap::new();
            for (mono, k) in &cur {
                for (l, d) in exp {
                    let kd = k * d;
                    right_multiply(mono, *l, contract, &hbar_gram, |m, factor| {
                        let slot = next.entry(m).or_default();
                        match factor {
                            None => slot.add_assign_ref(&kd),
                            Some(x) => slot.add_product(&kd, x),
                        }
                    });
                }
            }
            next.retain(|_, v| !v.is_zero());
            cur = next;
        }
        for (m, k) in cur {
            out.add(m, k);
        }
    }
    Ok(out)
}

/// `mono · l` rewritten in normal order; `emit(monomial, factor)` with
/// `None` standing for a unit factor.
fn right_multiply(
    mono: &LadderMonomial,
    l: Ladder,
    contract: bool,
    hbar_gram: &[Vec<ScalarPoly>],
    mut emit: impl FnMut(LadderMonomial, Option<&ScalarPoly>),
) {
    if !l.dagger {
        let mut m = mono.clone();
        let pos = m.annihilators.partition_point(|&x| x <= l.index);
        m.annihilators.insert(pos, l.index);
        emit(m, None);
        return;
    }
    let mut moved = mono.clone();
    let pos = moved.creators.partition_point(|&x| x <= l.index);
    moved.creators.insert(pos, l.index);
    emit(moved, None);
    if !contract {
        return;
    }
    // A·b_j† = b_j†·A + Σ_k [b_{a_k}, b_j†]·(A without a_k)
    for k in 0..mono.annihilators.len() {
        let a = mono.annihilators[k];
        let g = &hbar_gram[a][l.index];
        if g.is_zero() {
            continue;
        }
        let mut m = mono.clone();
        m.annihilators.remove(k);
        emit(m, Some(g));
    }
}

/// Expands normal-ordered ladder words back into generator words (order kept).
fn from_ladder(lp: &LadderPoly, f: &FiducialFrame) -> OperatorExpr {
    let mut out = OperatorExpr::zero();
    let forms: Vec<Vec<(Generator, ScalarPoly)>> = (0..f.len())
        .map(|i| f.ladder_form(Ladder { index: i, dagger: false }).into_iter().collect())
        .collect();
    let dforms: Vec<Vec<(Generator, ScalarPoly)>> = (0..f.len())
        .map(|i| f.ladder_form(Ladder { index: i, dagger: true }).into_iter().collect())
        .collect();
    for (m, c) in &lp.terms {
        let factors = m
            .creators
            .iter()
            .map(|&k| &dforms[k])
            .chain(m.annihilators.iter().map(|&k| &forms[k]));
        let mut partial: Vec<(Word, ScalarPoly)> = vec![(Vec::new(), c.clone())];
        for form in factors {
            let mut next = Vec::with_capacity(partial.len() * form.len());
            for (w, k) in &partial {
                for (g, x) in form {
                    let mut nw = w.clone();
                    nw.push(*g);
                    next.push((nw, k * x));
                }
            }
            partial = next;
        }
        for (w, k) in partial {
            out.add_term(w, k);
        }
    }
    out.with_tag(OrderTag::Normal(f.name_arc()))
}

/// Rewrites `e` with every `b†` left of every `b` of frame `f`, keeping the
/// contraction scalars so the result equals `e` as an operator.
pub fn normal_order(e: &OperatorExpr, f: &FiducialFrame) -> Result<OperatorExpr, AlgebraError> {
    Ok(from_ladder(&ladder_form(e, f, true)?, f))
}

/// The normal product `:e:` in frame `f`: ladder words reordered without
/// contractions.
pub fn normal_product(e: &OperatorExpr, f: &FiducialFrame) -> Result<OperatorExpr, AlgebraError> {
    Ok(from_ladder(&ladder_form(e, f, false)?, f))
}

/// Vacuum expectation of a normal-ordered expression: its scalar part.
pub fn fiducial_expectation(e: &OperatorExpr, f: &FiducialFrame) -> Result<ScalarPoly, AlgebraError> {
    match e.tag() {
        OrderTag::Normal(name) if **name == *f.name() => Ok(e.scalar_part()),
        _ => Err(AlgebraError::NotNormalOrdered(f.name().to_string())),
    }
}

/// Scalar part of `displace(e, shifts)` without materializing the operator
/// terms.
fn displaced_scalar_part(e: &OperatorExpr, shifts: &BTreeMap<Generator, ScalarPoly>) -> ScalarPoly {
    let mut out = ScalarPoly::zero();
    'words: for (w, c) in e.terms() {
        let mut v = c.clone();
        for g in w {
            match shifts.get(g) {
                Some(s) if !s.is_zero() => v = &v * s,
                _ => continue 'words,
            }
        }
        out.add_assign_ref(&v);
    }
    out
}

/// `H(p,q) = ⟨p,q| H |p,q⟩` as an exact polynomial: normal order in `f`,
/// displace the generators of `shifted_sets` by their classical symbols, and
/// take the fiducial expectation.
pub fn wcp_symbolic(
    h: &OperatorExpr,
    f: &FiducialFrame,
    shifted_sets: &BTreeSet<SetId>,
) -> Result<ScalarPoly, AlgebraError> {
    if !hermitian_check(h) {
        return Err(AlgebraError::Hermiticity);
    }
    let ordered = normal_order(h, f)?;
    let shifts = shift_map(f.span().iter().copied(), shifted_sets);
    debug_assert!(matches!(ordered.tag(), OrderTag::Normal(_)));
    Ok(displaced_scalar_part(&ordered, &shifts))
}

/// The literal composition `fiducial_expectation ∘ displace ∘ normal_order`.
pub fn wcp_symbolic_composed(
    h: &OperatorExpr,
    f: &FiducialFrame,
    shifted_sets: &BTreeSet<SetId>,
) -> Result<ScalarPoly, AlgebraError> {
    if !hermitian_check(h) {
        return Err(AlgebraError::Hermiticity);
    }
    let ordered = normal_order(h, f)?;
    let shifts = shift_map(f.span().iter().copied(), shifted_sets);
    fiducial_expectation(&displace(&ordered, &shifts), f)
}

/// Displacement of each ladder operator of `f` when the generators of
/// `shifted_sets` are shifted by their classical symbols.
pub fn ladder_shifts(f: &FiducialFrame, shifted_sets: &BTreeSet<SetId>) -> Vec<ScalarPoly> {
    (0..f.len())
        .map(|i| {
            let mut beta = ScalarPoly::zero();
            for (g, c) in f.ladder_form(Ladder { index: i, dagger: false }) {
                if shifted_sets.contains(&g.set) {
                    beta.add_product(&c, &ScalarPoly::shift(g));
                }
            }
            beta
        })
        .collect()
}
