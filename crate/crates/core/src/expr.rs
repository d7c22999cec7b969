//! Polynomials in canonical operators.
//!
//! An [`OperatorExpr`] is a sum of words (ordered products of generators)
//! with [`ScalarPoly`] coefficients. Words are kept exactly as written until
//! [`canonicalize`] rewrites them into the fixed generator order using
//! `[Q, P] = i·hbar`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use crate::generator::{Generator, Kind, SetId};
use crate::scalar::{coeff, imag_unit, ScalarPoly};

/// Expressions above this total degree are rejected by the ordering engine.
pub const MAX_DEGREE: usize = 12;

pub type Word = Vec<Generator>;

/// Records which rewriting, if any, produced the current word forms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum OrderTag {
    Raw,
    /// Every word is sorted in generator order.
    Canonical,
    /// Every word is the generator expansion of a normal-ordered ladder word
    /// of the named frame.
    Normal(Arc<str>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorExpr {
    terms: BTreeMap<Word, ScalarPoly>,
    tag: OrderTag,
}

impl Default for OperatorExpr {
    fn default() -> Self {
        Self::zero()
    }
}

impl OperatorExpr {
    pub fn zero() -> Self {
        OperatorExpr { terms: BTreeMap::new(), tag: OrderTag::Raw }
    }

    pub fn scalar(s: ScalarPoly) -> Self {
        let mut e = Self::zero();
        e.add_term(Vec::new(), s);
        e
    }

    pub fn one() -> Self {
        Self::scalar(ScalarPoly::one())
    }

    pub fn generator(g: Generator) -> Self {
        Self::word(vec![g], ScalarPoly::one())
    }

    pub fn word(w: Word, c: ScalarPoly) -> Self {
        let mut e = Self::zero();
        e.add_term(w, c);
        e
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Word, ScalarPoly)>, tag: OrderTag) -> Self {
        let mut e = Self::zero();
        for (w, c) in terms {
            e.add_term(w, c);
        }
        e.tag = tag;
        e
    }

    pub fn tag(&self) -> &OrderTag {
        &self.tag
    }

    pub fn with_tag(mut self, tag: OrderTag) -> Self {
        self.tag = tag;
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &ScalarPoly)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, w: &[Generator]) -> ScalarPoly {
        self.terms.get(w).cloned().unwrap_or_default()
    }

    /// Coefficient of the empty word.
    pub fn scalar_part(&self) -> ScalarPoly {
        self.coefficient(&[])
    }

    pub fn add_term(&mut self, w: Word, c: ScalarPoly) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(w) {
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

    /// Maximum word length (0 for scalars and the zero expression).
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn generators(&self) -> BTreeSet<Generator> {
        self.terms.keys().flat_map(|w| w.iter().copied()).collect()
    }

    pub fn sets(&self) -> BTreeSet<SetId> {
        self.generators().into_iter().map(|g| g.set).collect()
    }

    pub fn scale(&self, c: &ScalarPoly) -> OperatorExpr {
        let mut out = OperatorExpr::zero();
        for (w, x) in &self.terms {
            out.add_term(w.clone(), x * c);
        }
        out.tag = self.tag.clone();
        out
    }

    pub fn pow(&self, k: u32) -> OperatorExpr {
        let mut acc = OperatorExpr::one();
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Hermitian adjoint: reversed words, conjugated coefficients.
    pub fn adjoint(&self) -> OperatorExpr {
        let mut out = OperatorExpr::zero();
        for (w, c) in &self.terms {
            let mut r = w.clone();
            r.reverse();
            out.add_term(r, c.conj());
        }
        out
    }

    /// Applies `f` to every coefficient, keeping the tag.
    pub fn map_coefficients<E>(
        &self,
        f: impl Fn(&ScalarPoly) -> Result<ScalarPoly, E>,
    ) -> Result<OperatorExpr, E> {
        let mut out = OperatorExpr::zero();
        for (w, c) in &self.terms {
            out.add_term(w.clone(), f(c)?);
        }
        out.tag = self.tag.clone();
        Ok(out)
    }

    /// DSL rendering of the words, ignoring the tag.
    pub fn render_plain(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut ordered: Vec<_> = self.terms.iter().collect();
        ordered.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(b.0)));
        let mut out = String::new();
        for (k, (w, c)) in ordered.into_iter().enumerate() {
            let word = w.iter().map(|g| g.to_string()).collect::<Vec<_>>().join("*");
            let (neg, body) = render_term(c, &word);
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            out.push_str(&body);
        }
        out
    }

    /// Canonical textual form. Normal-ordered expressions render their
    /// operator part inside `:[ ... ]: @frame` with the scalar part outside.
    pub fn render(&self) -> String {
        match &self.tag {
            OrderTag::Normal(frame) => {
                let mut ops = self.clone();
                let scalar = ops.terms.remove(&Vec::new()).unwrap_or_default();
                ops.tag = OrderTag::Raw;
                let mut out = String::new();
                if !ops.is_zero() {
                    out.push_str(&format!(":[ {} ]: @{}", ops.render_plain(), frame));
                }
                if !scalar.is_zero() {
                    let s = OperatorExpr::scalar(scalar).render_plain();
                    if out.is_empty() {
                        out = s;
                    } else if let Some(rest) = s.strip_prefix('-') {
                        out.push_str(" - ");
                        out.push_str(rest);
                    } else {
                        out.push_str(" + ");
                        out.push_str(&s);
                    }
                }
                if out.is_empty() {
                    out.push('0');
                }
                out
            }
            _ => self.render_plain(),
        }
    }
}

/// Renders `c * word` with the sign split off.
fn render_term(c: &ScalarPoly, word: &str) -> (bool, String) {
    if word.is_empty() {
        let r = c.render();
        if c.is_compound() {
            if c.len() > 1 {
                return (false, format!("({})", r));
            }
            return (false, r);
        }
        return match r.strip_prefix('-') {
            Some(rest) => (true, rest.to_string()),
            None => (false, r),
        };
    }
    if c == &ScalarPoly::one() {
        return (false, word.to_string());
    }
    if c == &-ScalarPoly::one() {
        return (true, word.to_string());
    }
    if c.len() > 1 {
        return (false, format!("({})*{}", c.render(), word));
    }
    let r = c.render();
    if c.is_compound() {
        return (false, format!("{}*{}", r, word));
    }
    match r.strip_prefix('-') {
        Some(rest) => (true, format!("{}*{}", rest, word)),
        None => (false, format!("{}*{}", r, word)),
    }
}

impl fmt::Display for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn merged_tag(a: &OrderTag, b: &OrderTag) -> OrderTag {
    if a == b {
        a.clone()
    } else {
        OrderTag::Raw
    }
}

impl Add<&OperatorExpr> for &OperatorExpr {
    type Output = OperatorExpr;
    fn add(self, rhs: &OperatorExpr) -> OperatorExpr {
        let mut out = self.clone();
        for (w, c) in &rhs.terms {
            out.add_term(w.clone(), c.clone());
        }
        out.tag = merged_tag(&self.tag, &rhs.tag);
        out
    }
}

impl Add for OperatorExpr {
    type Output = OperatorExpr;
    fn add(self, rhs: OperatorExpr) -> OperatorExpr {
        &self + &rhs
    }
}

impl Sub<&OperatorExpr> for &OperatorExpr {
    type Output = OperatorExpr;
    fn sub(self, rhs: &OperatorExpr) -> OperatorExpr {
        self + &(-rhs)
    }
}

impl Sub for OperatorExpr {
    type Output = OperatorExpr;
    fn sub(self, rhs: OperatorExpr) -> OperatorExpr {
        &self - &rhs
    }
}

impl Neg for &OperatorExpr {
    type Output = OperatorExpr;
    fn neg(self) -> OperatorExpr {
        self.scale(&-ScalarPoly::one())
    }
}

impl Neg for OperatorExpr {
    type Output = OperatorExpr;
    fn neg(self) -> OperatorExpr {
        -&self
    }
}

impl Mul<&OperatorExpr> for &OperatorExpr {
    type Output = OperatorExpr;
    fn mul(self, rhs: &OperatorExpr) -> OperatorExpr {
        let mut out = OperatorExpr::zero();
        for (wa, ca) in &self.terms {
            for (wb, cb) in &rhs.terms {
                let mut w = wa.clone();
                w.extend_from_slice(wb);
                out.add_term(w, ca * cb);
            }
        }
        // A product of scalars with a tagged expression keeps its form.
        out.tag = match (self.degree(), rhs.degree()) {
            (0, _) => rhs.tag.clone(),
            (_, 0) => self.tag.clone(),
            _ => OrderTag::Raw,
        };
        out
    }
}

impl Mul for OperatorExpr {
    type Output = OperatorExpr;
    fn mul(self, rhs: OperatorExpr) -> OperatorExpr {
        &self * &rhs
    }
}

impl From<Generator> for OperatorExpr {
    fn from(g: Generator) -> Self {
        OperatorExpr::generator(g)
    }
}

impl From<ScalarPoly> for OperatorExpr {
    fn from(s: ScalarPoly) -> Self {
        OperatorExpr::scalar(s)
    }
}

/// Rewrites every word into generator order using the canonical commutation
/// relations. Generators of different sets or modes commute; within one
/// (set, mode) block `Q^a P^b Q = Q^(a+1) P^b − i·hbar·b·Q^a P^(b−1)`.
pub fn canonicalize(e: &OperatorExpr) -> OperatorExpr {
    let mut out = OperatorExpr::zero();
    for (word, c) in &e.terms {
        for (w, k) in canonical_word(word) {
            out.add_term(w, c * &k);
        }
    }
    out.tag = OrderTag::Canonical;
    out
}

fn canonical_word(word: &[Generator]) -> Vec<(Word, ScalarPoly)> {
    let mut blocks: BTreeMap<(SetId, u32), Vec<Kind>> = BTreeMap::new();
    for g in word {
        blocks.entry((g.set, g.mode)).or_default().push(g.kind);
    }
    let mut acc: Vec<(Word, ScalarPoly)> = vec![(Vec::new(), ScalarPoly::one())];
    for ((set, mode), kinds) in blocks {
        let ordered = weyl_order(&kinds);
        let mut next = Vec::with_capacity(acc.len() * ordered.len());
        for (w, c) in &acc {
            for (&(a, b), k) in &ordered {
                let mut nw = w.clone();
                for _ in 0..a {
                    nw.push(set.position(mode));
                }
                for _ in 0..b {
                    nw.push(set.momentum(mode));
                }
                next.push((nw, c * k));
            }
        }
        acc = next;
    }
    acc
}

/// Single-mode word in `Q`/`P` as a combination of `Q^a P^b`.
fn weyl_order(kinds: &[Kind]) -> BTreeMap<(u32, u32), ScalarPoly> {
    let minus_i_hbar = ScalarPoly::hbar().scale(&-imag_unit());
    let mut poly: BTreeMap<(u32, u32), ScalarPoly> = BTreeMap::new();
    poly.insert((0, 0), ScalarPoly::one());
    for kind in kinds {
        let mut next: BTreeMap<(u32, u32), ScalarPoly> = BTreeMap::new();
        for (&(a, b), c) in &poly {
            match kind {
                Kind::Momentum => next.entry((a, b + 1)).or_default().add_assign_ref(c),
                Kind::Position => {
                    next.entry((a + 1, b)).or_default().add_assign_ref(c);
                    if b > 0 {
                        let k = minus_i_hbar.scale(&coeff(b as i64, 1));
                        next.entry((a, b - 1)).or_default().add_product(c, &k);
                    }
                }
            }
        }
        next.retain(|_, c| !c.is_zero());
        poly = next;
    }
    poly
}

/// `true` iff `e − e†` vanishes as an operator identity.
pub fn hermitian_check(e: &OperatorExpr) -> bool {
    canonicalize(&(e - &e.adjoint())).is_zero()
}

/// Replaces each generator `g` with `g + shift(g)`; generators absent from the
/// map are left alone. The tag is preserved: substitution maps sorted words
/// to sorted words and normal-ordered ladder words to normal-ordered ones.
pub fn displace(e: &OperatorExpr, shifts: &BTreeMap<Generator, ScalarPoly>) -> OperatorExpr {
    let mut out = OperatorExpr::zero();
    for (word, c) in &e.terms {
        let mut partial: Vec<(Word, ScalarPoly)> = vec![(Vec::new(), c.clone())];
        for g in word {
            let shift = shifts.get(g).filter(|s| !s.is_zero());
            let mut next = Vec::with_capacity(partial.len() * 2);
            for (w, k) in partial {
                if let Some(s) = shift {
                    next.push((w.clone(), &k * s));
                }
                let mut nw = w;
                nw.push(*g);
                next.push((nw, k));
            }
            partial = next;
        }
        for (w, k) in partial {
            out.add_term(w, k);
        }
    }
    out.tag = e.tag.clone();
    out
}

/// Shift map sending the generators of `sets` to their classical symbols and
/// every other generator in `span` to zero.
pub fn shift_map(
    span: impl IntoIterator<Item = Generator>,
    sets: &BTreeSet<SetId>,
) -> BTreeMap<Generator, ScalarPoly> {
    span.into_iter()
        .map(|g| {
            let s = if sets.contains(&g.set) { ScalarPoly::shift(g) } else { ScalarPoly::zero() };
            (g, s)
        })
        .collect()
}

/// `(Q·P + P·Q)/2`-style symmetrization helper: `(e + e†)/2`.
pub fn hermitian_part(e: &OperatorExpr) -> OperatorExpr {
    (e + &e.adjoint()).scale(&ScalarPoly::frac(1, 2))
}

/// `i·hbar` as a scalar, handy in tests and examples.
pub fn i_hbar() -> ScalarPoly {
    ScalarPoly::hbar().scale(&imag_unit())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: u32) -> OperatorExpr {
        SetId::pq().position(n).into()
    }
    fn p(n: u32) -> OperatorExpr {
        SetId::pq().momentum(n).into()
    }

    #[test]
    fn pq_reorders_with_commutator() {
        let got = canonicalize(&(&p(0) * &q(0)));
        let want = &(&q(0) * &p(0)) - &OperatorExpr::scalar(i_hbar());
        assert_eq!(got.terms, want.terms);
    }

    #[test]
    fn cross_mode_commutes() {
        let got = canonicalize(&(&p(2) * &q(1)));
        assert_eq!(got.terms, (&q(1) * &p(2)).terms);
    }

    #[test]
    fn qpq_two_step() {
        // Q·P·Q = Q²·P − iℏ·Q
        let got = canonicalize(&(&(&q(0) * &p(0)) * &q(0)));
        let want = &(&(&q(0) * &q(0)) * &p(0)) - &q(0).scale(&i_hbar());
        assert_eq!(got.terms, want.terms);
    }

    #[test]
    fn canonicalize_is_idempotent_on_sample() {
        let e = &(&(&p(0) * &q(0)) * &(&p(0) * &q(1))) + &(&p(1) * &q(1));
        let once = canonicalize(&e);
        assert_eq!(canonicalize(&once), once);
    }

    #[test]
    fn hermiticity() {
        let omega = ScalarPoly::param("omega");
        let h = &p(0).pow(2) + &q(0).pow(2).scale(&omega.pow(2));
        assert!(hermitian_check(&h));
        assert!(!hermitian_check(&(&q(0) * &p(0))));
        let sym = (&(&q(0) * &p(0)) + &(&p(0) * &q(0))).scale(&ScalarPoly::frac(1, 2));
        assert!(hermitian_check(&sym));
        // QP − iℏ/2 equals the symmetrized product as an operator
        let shifted = &(&q(0) * &p(0)) - &OperatorExpr::scalar(i_hbar().scale(&coeff(1, 2)));
        assert!(hermitian_check(&shifted));
    }

    #[test]
    fn displacement_binomial() {
        let g = SetId::pq().position(0);
        let shifts: BTreeMap<_, _> = [(g, ScalarPoly::shift(g))].into_iter().collect();
        let got = displace(&q(0).pow(2), &shifts);
        let qs = ScalarPoly::shift(g);
        let want = &(&q(0).pow(2) + &q(0).scale(&qs.scale(&coeff(2, 1))))
            + &OperatorExpr::scalar(qs.pow(2));
        assert_eq!(got.terms, want.terms);
        let pg = SetId::pq().momentum(0);
        let shifts: BTreeMap<_, _> = [(pg, ScalarPoly::shift(pg))].into_iter().collect();
        let got = displace(&p(0), &shifts);
        assert_eq!(got.terms, (&p(0) + &OperatorExpr::scalar(ScalarPoly::shift(pg))).terms);
    }

    #[test]
    fn rendering() {
        let e = &(&q(0) * &p(0)).scale(&ScalarPoly::frac(-1, 2)) + &OperatorExpr::scalar(ScalarPoly::hbar());
        assert_eq!(e.render(), "-1/2*Q[0]*P[0] + hbar");
        let n = e.clone().with_tag(OrderTag::Normal(Arc::from("vac")));
        assert_eq!(n.render(), ":[ -1/2*Q[0]*P[0] ]: @vac + hbar");
    }
}
