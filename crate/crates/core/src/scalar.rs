//! Exact scalar polynomials.
//!
//! Coefficients are complex rationals. Monomials are products of atoms
//! (`hbar`, named parameters, classical shift symbols) with signed integer
//! exponents, so `hbar/omega` is a single monomial. All atoms denote real
//! quantities: conjugation acts on coefficients only.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::generator::Generator;

pub type Rational = BigRational;
pub type Coeff = Complex<BigRational>;

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn coeff(n: i64, d: i64) -> Coeff {
    Complex::new(rat(n, d), Rational::zero())
}

pub fn coeff_from_rational(r: Rational) -> Coeff {
    Complex::new(r, Rational::zero())
}

pub fn imag_unit() -> Coeff {
    Complex::new(Rational::zero(), Rational::one())
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    // Ratio<BigInt>::to_f64 handles large numerators/denominators gracefully.
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn coeff_to_c64(c: &Coeff) -> Complex64 {
    Complex64::new(rational_to_f64(&c.re), rational_to_f64(&c.im))
}

fn coeff_is_real(c: &Coeff) -> bool {
    c.im.is_zero()
}

/// Exact square root of a non-negative rational, when it is rational.
pub fn rational_sqrt(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    if &(&n * &n) == r.numer() && &(&d * &d) == r.denom() {
        Some(BigRational::new(n, d))
    } else {
        None
    }
}

fn render_rational(r: &Rational) -> String {
    r.to_string()
}

/// Renders a coefficient as a DSL factor (no leading sign handling).
fn render_coeff(c: &Coeff) -> String {
    match (c.re.is_zero(), c.im.is_zero()) {
        (_, true) => render_rational(&c.re),
        (true, false) => {
            if c.im.is_one() {
                "i".to_string()
            } else if (-&c.im).is_one() {
                "-i".to_string()
            } else {
                format!("{}*i", render_rational(&c.im))
            }
        }
        (false, false) => {
            let sign = if c.im.is_negative() { "-" } else { "+" };
            let im = c.im.abs();
            let im_s = if im.is_one() {
                "i".to_string()
            } else {
                format!("{}*i", render_rational(&im))
            };
            format!("({} {} {})", render_rational(&c.re), sign, im_s)
        }
    }
}

/// Symbolic atoms appearing in scalar coefficients.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Hbar,
    Param(Arc<str>),
    /// Classical phase-space coordinate paired with a generator (`q[n]` for `Q[n]`).
    Shift(Generator),
}

impl Atom {
    pub fn param(name: &str) -> Self {
        Atom::Param(Arc::from(name))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Hbar => f.write_str("hbar"),
            Atom::Param(name) => f.write_str(name),
            Atom::Shift(g) => f.write_str(&g.shift_name()),
        }
    }
}

/// Sorted product of atoms with non-zero integer exponents.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<(Atom, i32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn atom(a: Atom, exp: i32) -> Self {
        if exp == 0 {
            Monomial::one()
        } else {
            Monomial(vec![(a, exp)])
        }
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(Atom, i32)] {
        &self.0
    }

    pub fn exponent(&self, a: &Atom) -> i32 {
        self.0
            .iter()
            .find(|(b, _)| b == a)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, ea) = &self.0[i];
            let (b, eb) = &other.0[j];
            match a.cmp(b) {
                std::cmp::Ordering::Less => {
                    out.push((a.clone(), *ea));
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push((b.clone(), *eb));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let e = ea + eb;
                    if e != 0 {
                        out.push((a.clone(), e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    pub fn inverse(&self) -> Monomial {
        Monomial(self.0.iter().map(|(a, e)| (a.clone(), -e)).collect())
    }

    pub fn pow(&self, k: i32) -> Monomial {
        if k == 0 {
            return Monomial::one();
        }
        Monomial(self.0.iter().map(|(a, e)| (a.clone(), e * k)).collect())
    }

    /// Sum of exponents of shift symbols.
    pub fn shift_degree(&self) -> i32 {
        self.0
            .iter()
            .filter(|(a, _)| matches!(a, Atom::Shift(_)))
            .map(|(_, e)| *e)
            .sum()
    }

    fn render(&self) -> String {
        self.0
            .iter()
            .map(|(a, e)| {
                if *e == 1 {
                    a.to_string()
                } else {
                    format!("{}^{}", a, e)
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalarError {
    #[error("no numeric value bound for `{0}`")]
    Unbound(String),
    #[error("cannot substitute a non-invertible expression for `{0}` raised to a negative power")]
    NonInvertibleSubstitution(String),
    #[error("expression is not a single term and has no exact inverse")]
    NotInvertible,
}

/// Exact polynomial over complex rationals in the symbolic atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ScalarPoly {
    terms: BTreeMap<Monomial, Coeff>,
}

impl ScalarPoly {
    pub fn zero() -> Self {
        ScalarPoly { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(Coeff::one())
    }

    pub fn constant(c: Coeff) -> Self {
        Self::term(Monomial::one(), c)
    }

    pub fn rational(r: Rational) -> Self {
        Self::constant(coeff_from_rational(r))
    }

    pub fn int(n: i64) -> Self {
        Self::constant(coeff(n, 1))
    }

    pub fn frac(n: i64, d: i64) -> Self {
        Self::constant(coeff(n, d))
    }

    pub fn i() -> Self {
        Self::constant(imag_unit())
    }

    pub fn term(m: Monomial, c: Coeff) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        ScalarPoly { terms }
    }

    pub fn atom(a: Atom) -> Self {
        Self::term(Monomial::atom(a, 1), Coeff::one())
    }

    pub fn hbar() -> Self {
        Self::atom(Atom::Hbar)
    }

    pub fn param(name: &str) -> Self {
        Self::atom(Atom::param(name))
    }

    pub fn shift(g: Generator) -> Self {
        Self::atom(Atom::Shift(g))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    /// The value if the polynomial has no symbolic atoms.
    pub fn as_constant(&self) -> Option<Coeff> {
        match self.terms.len() {
            0 => Some(Coeff::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn constant_term(&self) -> Coeff {
        self.terms.get(&Monomial::one()).cloned().unwrap_or_else(Coeff::zero)
    }

    pub fn is_real(&self) -> bool {
        self.terms.values().all(coeff_is_real)
    }

    /// Real part of every coefficient, imaginary parts dropped.
    pub fn real_part(&self) -> ScalarPoly {
        self.map_coeffs(|c| Complex::new(c.re.clone(), Rational::zero()))
    }

    pub fn imag_part(&self) -> ScalarPoly {
        self.map_coeffs(|c| Complex::new(c.im.clone(), Rational::zero()))
    }

    pub fn conj(&self) -> ScalarPoly {
        self.map_coeffs(|c| c.conj())
    }

    fn map_coeffs(&self, f: impl Fn(&Coeff) -> Coeff) -> ScalarPoly {
        let mut out = ScalarPoly::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c));
        }
        out
    }

    pub fn add_term(&mut self, m: Monomial, c: Coeff) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let s = o.get() + &c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add_assign_ref(&mut self, other: &ScalarPoly) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    /// `self += a * b` without building the intermediate product.
    pub fn add_product(&mut self, a: &ScalarPoly, b: &ScalarPoly) {
        for (ma, ca) in &a.terms {
            for (mb, cb) in &b.terms {
                self.add_term(ma.mul(mb), ca * cb);
            }
        }
    }

    pub fn scale(&self, c: &Coeff) -> ScalarPoly {
        if c.is_zero() {
            return ScalarPoly::zero();
        }
        self.map_coeffs(|x| x * c)
    }

    pub fn pow(&self, k: u32) -> ScalarPoly {
        let mut acc = ScalarPoly::one();
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Integer power; negative exponents require a single-term polynomial.
    pub fn powi(&self, k: i32) -> Result<ScalarPoly, ScalarError> {
        if k >= 0 {
            Ok(self.pow(k as u32))
        } else {
            Ok(self.inverse()?.pow(k.unsigned_abs()))
        }
    }

    /// Exact inverse of a single non-zero term (a unit of the Laurent ring).
    pub fn inverse(&self) -> Result<ScalarPoly, ScalarError> {
        if self.terms.len() != 1 {
            return Err(ScalarError::NotInvertible);
        }
        let (m, c) = self.terms.iter().next().unwrap();
        Ok(ScalarPoly::term(m.inverse(), Coeff::one() / c))
    }

    pub fn is_unit(&self) -> bool {
        self.terms.len() == 1
    }

    /// Exact square root of a single term with even exponents and a
    /// perfect-square non-negative rational coefficient.
    pub fn sqrt_exact(&self) -> Option<ScalarPoly> {
        if self.is_zero() {
            return Some(ScalarPoly::zero());
        }
        if self.terms.len() != 1 {
            return None;
        }
        let (m, c) = self.terms.iter().next().unwrap();
        if !c.im.is_zero() || m.factors().iter().any(|(_, e)| e % 2 != 0) {
            return None;
        }
        let r = rational_sqrt(&c.re)?;
        let half = Monomial(m.factors().iter().map(|(a, e)| (a.clone(), e / 2)).collect());
        Some(ScalarPoly::term(half, coeff_from_rational(r)))
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        self.terms
            .keys()
            .flat_map(|m| m.0.iter().map(|(a, _)| a.clone()))
            .collect()
    }

    pub fn contains_atom(&self, a: &Atom) -> bool {
        self.terms.keys().any(|m| m.exponent(a) != 0)
    }

    /// Keeps the terms whose monomial satisfies `keep`.
    pub fn filter(&self, keep: impl Fn(&Monomial) -> bool) -> ScalarPoly {
        ScalarPoly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Partial derivative with respect to an atom.
    pub fn derivative(&self, a: &Atom) -> ScalarPoly {
        let mut out = ScalarPoly::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(a);
            if e == 0 {
                continue;
            }
            let reduced = m.mul(&Monomial::atom(a.clone(), -1));
            out.add_term(reduced, c * coeff(e as i64, 1));
        }
        out
    }

    /// Replaces atoms for which `f` returns a value.
    pub fn substitute(
        &self,
        f: &dyn Fn(&Atom) -> Option<ScalarPoly>,
    ) -> Result<ScalarPoly, ScalarError> {
        let mut out = ScalarPoly::zero();
        for (m, c) in &self.terms {
            let mut acc = ScalarPoly::constant(c.clone());
            let mut kept = Monomial::one();
            for (a, e) in m.factors() {
                match f(a) {
                    Some(v) => {
                        let p = v.powi(*e).map_err(|_| {
                            ScalarError::NonInvertibleSubstitution(a.to_string())
                        })?;
                        acc = &acc * &p;
                    }
                    None => kept = kept.mul(&Monomial::atom(a.clone(), *e)),
                }
            }
            out.add_assign_ref(&(&acc * &ScalarPoly::term(kept, Coeff::one())));
        }
        Ok(out)
    }

    /// Numeric value under the given bindings.
    pub fn eval(&self, b: &Bindings) -> Result<Complex64, ScalarError> {
        let mut total = Complex64::zero();
        for (m, c) in &self.terms {
            let mut v = coeff_to_c64(c);
            for (a, e) in m.factors() {
                let x = b.get(a).ok_or_else(|| ScalarError::Unbound(a.to_string()))?;
                v *= x.powi(*e);
            }
            total += v;
        }
        Ok(total)
    }

    /// DSL-compatible rendering; `0` for the empty polynomial.
    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let (negative, mag) = split_sign(c);
            let body = if m.is_one() {
                render_coeff(&mag)
            } else if mag.is_one() {
                m.render()
            } else {
                format!("{}*{}", render_coeff(&mag), m.render())
            };
            if k == 0 {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            out.push_str(&body);
        }
        out
    }

    /// Whether rendering this polynomial needs parentheses as a factor.
    pub(crate) fn is_compound(&self) -> bool {
        match self.terms.len() {
            0 => false,
            1 => {
                let c = self.terms.values().next().unwrap();
                !c.re.is_zero() && !c.im.is_zero()
            }
            _ => true,
        }
    }
}

/// Pulls a leading minus sign out of a coefficient for rendering.
fn split_sign(c: &Coeff) -> (bool, Coeff) {
    let negative = if c.re.is_zero() { c.im.is_negative() } else { c.re.is_negative() };
    if negative {
        (true, -c.clone())
    } else {
        (false, c.clone())
    }
}

impl fmt::Display for ScalarPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl Add<&ScalarPoly> for &ScalarPoly {
    type Output = ScalarPoly;
    fn add(self, rhs: &ScalarPoly) -> ScalarPoly {
        let mut out = self.clone();
        out.add_assign_ref(rhs);
        out
    }
}

impl Add for ScalarPoly {
    type Output = ScalarPoly;
    fn add(mut self, rhs: ScalarPoly) -> ScalarPoly {
        self.add_assign_ref(&rhs);
        self
    }
}

impl Sub<&ScalarPoly> for &ScalarPoly {
    type Output = ScalarPoly;
    fn sub(self, rhs: &ScalarPoly) -> ScalarPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Sub for ScalarPoly {
    type Output = ScalarPoly;
    fn sub(self, rhs: ScalarPoly) -> ScalarPoly {
        &self - &rhs
    }
}

impl Mul<&ScalarPoly> for &ScalarPoly {
    type Output = ScalarPoly;
    fn mul(self, rhs: &ScalarPoly) -> ScalarPoly {
        let mut out = ScalarPoly::zero();
        out.add_product(self, rhs);
        out
    }
}

impl Mul for ScalarPoly {
    type Output = ScalarPoly;
    fn mul(self, rhs: ScalarPoly) -> ScalarPoly {
        &self * &rhs
    }
}

impl Neg for ScalarPoly {
    type Output = ScalarPoly;
    fn neg(self) -> ScalarPoly {
        self.scale(&-Coeff::one())
    }
}

impl Neg for &ScalarPoly {
    type Output = ScalarPoly;
    fn neg(self) -> ScalarPoly {
        self.scale(&-Coeff::one())
    }
}

impl From<Rational> for ScalarPoly {
    fn from(r: Rational) -> Self {
        ScalarPoly::rational(r)
    }
}

/// Numeric values for atoms.
#[derive(Debug, Clone, Default)]
pub struct Bindings {
    values: BTreeMap<Atom, f64>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_hbar(mut self, hbar: f64) -> Self {
        self.values.insert(Atom::Hbar, hbar);
        self
    }

    pub fn set(&mut self, a: Atom, v: f64) {
        self.values.insert(a, v);
    }

    pub fn with(mut self, a: Atom, v: f64) -> Self {
        self.set(a, v);
        self
    }

    pub fn get(&self, a: &Atom) -> Option<f64> {
        self.values.get(a).copied()
    }

    pub fn hbar(&self) -> Option<f64> {
        self.get(&Atom::Hbar)
    }
}
