//! The rotationally symmetric quartic model realized with a second
//! canonical set `{R, S}` coupled into the fiducial vector through `ζ`.

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use std::fmt::Write;
use thiserror::Error;

use crate::correspondence::{model_wcp_symbolic, square_grid, wcp_numeric, CorrespondenceError, PointResult, WcpOptions};
use crate::dsl::{parse_model, validate, CheckedModel, ModelError};
use crate::generator::{Kind, SetId};
use crate::scalar::{coeff_from_rational, rat, rational_sqrt, rational_to_f64, Rational, ScalarPoly};

pub const MATCH_SCHEMA: &str = "eqlab.match/1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RotsymError {
    #[error("zeta = {0} is outside the open interval (0, 1)")]
    ZetaOutOfRange(Rational),
    #[error("{0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Correspondence(#[from] CorrespondenceError),
    #[error("generated model failed to parse: {0}")]
    Generated(String),
}

/// `N` modes per set, mass `m`, coupling `ζ` and quartic strength `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotsymParams {
    n: u32,
    m: Rational,
    zeta: Rational,
    v: Rational,
}

impl RotsymParams {
    pub fn new(n: u32, m: Rational, zeta: Rational, v: Rational) -> Result<Self, RotsymError> {
        check_zeta(&zeta)?;
        if n == 0 {
            return Err(RotsymError::InvalidParameter("N must be at least 1".into()));
        }
        if !m.is_positive() {
            return Err(RotsymError::InvalidParameter(format!("m = {m} must be positive")));
        }
        if v.is_negative() {
            return Err(RotsymError::InvalidParameter(format!("v = {v} must be non-negative")));
        }
        Ok(RotsymParams { n, m, zeta, v })
    }

    /// `N = 1, m = 1, ζ = 1/2, v = 1`.
    pub fn reference() -> Self {
        RotsymParams { n: 1, m: rat(1, 1), zeta: rat(1, 2), v: rat(1, 1) }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> &Rational {
        &self.m
    }

    pub fn zeta(&self) -> &Rational {
        &self.zeta
    }

    pub fn v(&self) -> &Rational {
        &self.v
    }

    pub fn m0_sq(&self) -> Rational {
        effective_parameters(&self.m, &self.zeta, &self.v).unwrap().0
    }

    pub fn lambda0(&self) -> Rational {
        effective_parameters(&self.m, &self.zeta, &self.v).unwrap().1
    }
}

fn check_zeta(zeta: &Rational) -> Result<(), RotsymError> {
    if zeta.is_positive() && *zeta < Rational::one() {
        Ok(())
    } else {
        Err(RotsymError::ZetaOutOfRange(zeta.clone()))
    }
}

/// `½ Σ (pₙ² + m₀² qₙ²) + λ₀ {Σ qₙ²}²` over the `pq` set.
pub fn build_classical(n: u32, m0_sq: &Rational, lambda0: &Rational) -> ScalarPoly {
    let pq = SetId::pq();
    let mut quad = ScalarPoly::zero();
    let mut qsq = ScalarPoly::zero();
    for k in 0..n {
        let p = ScalarPoly::shift(pq.momentum(k));
        let q2 = ScalarPoly::shift(pq.position(k)).pow(2);
        quad.add_assign_ref(&p.pow(2));
        quad.add_assign_ref(&q2.scale(&coeff_from_rational(m0_sq.clone())));
        qsq.add_assign_ref(&q2);
    }
    &quad.scale(&coeff_from_rational(rat(1, 2))) + &qsq.pow(2).scale(&coeff_from_rational(lambda0.clone()))
}

/// `(m²(1+ζ²), vζ⁴m⁴)`.
pub fn effective_parameters(m: &Rational, zeta: &Rational, v: &Rational) -> Result<(Rational, Rational), RotsymError> {
    check_zeta(zeta)?;
    let m2 = m * m;
    let z2 = zeta * zeta;
    Ok((&m2 * (Rational::one() + &z2), v * &z2 * &z2 * &m2 * &m2))
}

/// Microscopic parameters realizing a target `(m₀², λ₀)` at a given `ζ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Inverted {
    pub m_sq: Rational,
    /// `m` when `m²` is a rational square.
    pub m: Option<Rational>,
    pub v: Rational,
}

impl Inverted {
    pub fn m_f64(&self) -> f64 {
        rational_to_f64(&self.m_sq).sqrt()
    }
}

pub fn invert_parameters(m0_sq: &Rational, lambda0: &Rational, zeta: &Rational) -> Result<Inverted, RotsymError> {
    check_zeta(zeta)?;
    if !m0_sq.is_positive() {
        return Err(RotsymError::InvalidParameter(format!("m0^2 = {m0_sq} must be positive")));
    }
    if lambda0.is_negative() {
        return Err(RotsymError::InvalidParameter(format!("lambda0 = {lambda0} must be non-negative")));
    }
    let z2 = zeta * zeta;
    let m_sq = m0_sq / (Rational::one() + &z2);
    let v = lambda0 / (&z2 * &z2 * &m_sq * &m_sq);
    Ok(Inverted { m: rational_sqrt(&m_sq), m_sq, v })
}

fn sum_of(n: u32, term: impl Fn(u32) -> String) -> String {
    (0..n).map(term).collect::<Vec<_>>().join(" + ")
}

/// Model source for the reducible construction. No range checks are made,
/// so `ζ ≥ 1` reaches validation.
pub fn reducible_model_text(n: u32, m: &Rational, zeta: &Rational, v: &Rational) -> String {
    let mut out = String::new();
    writeln!(out, "param m = {m}, zeta = {zeta}, v = {v}").unwrap();
    writeln!(out, "set pq modes {n}\nset rs modes {n}").unwrap();
    let conds: Vec<String> = (0..n)
        .flat_map(|k| {
            [format!("m*(Q[{k}] + zeta*S[{k}]) + i*P[{k}]"), format!("m*(S[{k}] + zeta*Q[{k}]) + i*R[{k}]")]
        })
        .collect();
    writeln!(out, "frame fid = {}", conds.join(", ")).unwrap();
    writeln!(out, "fiducial fid\nshifted pq\ntruncation 24").unwrap();
    let a = sum_of(n, |k| format!("P[{k}]^2 + m^2*(Q[{k}] + zeta*S[{k}])^2"));
    let b = sum_of(n, |k| format!("R[{k}]^2 + m^2*(S[{k}] + zeta*Q[{k}])^2"));
    writeln!(out, "H = 1/2*:[ {a} ]: @fid\n  + 1/2*:[ {b} ]: @fid\n  + v*:[ ({b})^2 ]: @fid").unwrap();
    out
}

/// The same quartic with irreducible operators only: one set, vacuum frame
/// of frequency `m0`, coupling `w`.
pub fn irreducible_model_text(n: u32, m0: &Rational, w: &Rational) -> String {
    let mut out = String::new();
    writeln!(out, "param hbar = 1, m0 = {m0}, w = {w}").unwrap();
    writeln!(out, "set pq modes {n}").unwrap();
    writeln!(out, "frame vac = {}", (0..n).map(|k| format!("m0*Q[{k}] + i*P[{k}]")).collect::<Vec<_>>().join(", "))
        .unwrap();
    let a = sum_of(n, |k| format!("P[{k}]^2 + m0^2*Q[{k}]^2"));
    writeln!(out, "H = 1/2*:[ {a} ]: @vac\n  + w*:[ ({a})^2 ]: @vac").unwrap();
    out
}

fn checked(text: &str) -> Result<CheckedModel, RotsymError> {
    let spec = parse_model(text)
        .map_err(|d| RotsymError::Generated(d.iter().map(|x| x.render("<generated>")).collect::<Vec<_>>().join("; ")))?;
    Ok(validate(&spec)?)
}

pub fn build_reducible_model(params: &RotsymParams) -> Result<CheckedModel, RotsymError> {
    checked(&reducible_model_text(params.n, &params.m, &params.zeta, &params.v))
}

pub fn build_irreducible_model(n: u32, m0: &Rational, w: &Rational) -> Result<CheckedModel, RotsymError> {
    checked(&irreducible_model_text(n, m0, w))
}

/// Numeric part of a match check.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchOptions {
    pub numeric: bool,
    pub points_per_axis: usize,
    pub radius: f64,
    pub dim: Option<usize>,
}

impl MatchOptions {
    /// Numeric check on a 3×3 grid of radius 1 for `N = 1`, symbolic only
    /// otherwise.
    pub fn for_params(params: &RotsymParams) -> Self {
        MatchOptions { numeric: params.n == 1, points_per_axis: 3, radius: 1.0, dim: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchReport {
    pub schema: &'static str,
    #[serde(rename = "N")]
    pub n: u32,
    pub m: String,
    pub zeta: String,
    pub v: String,
    pub m0sq: String,
    pub lambda0: String,
    pub exact_match: bool,
    pub classical_rendered: String,
    pub wcp_rendered: String,
    pub numeric_points: Vec<PointResult>,
    pub max_abs_dev: Option<f64>,
    pub truncation: Option<usize>,
    pub fiducial_residual: Option<f64>,
}

impl MatchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap() + "\n"
    }
}

/// Compares the classical limit of the reducible model against the target
/// classical Hamiltonian at the effective parameters, exactly, and
/// optionally against the numeric expectation values.
pub fn verify_match(params: &RotsymParams, opts: &MatchOptions) -> Result<MatchReport, RotsymError> {
    let (m0_sq, lambda0) = (params.m0_sq(), params.lambda0());
    let classical = build_classical(params.n, &m0_sq, &lambda0);
    let model = build_reducible_model(params)?;
    let wcp = model_wcp_symbolic(&model)?;
    let mut report = MatchReport {
        schema: MATCH_SCHEMA,
        n: params.n,
        m: params.m.to_string(),
        zeta: params.zeta.to_string(),
        v: params.v.to_string(),
        m0sq: m0_sq.to_string(),
        lambda0: lambda0.to_string(),
        exact_match: wcp == classical,
        classical_rendered: classical.to_string(),
        wcp_rendered: wcp.to_string(),
        numeric_points: Vec::new(),
        max_abs_dev: None,
        truncation: None,
        fiducial_residual: None,
    };
    if opts.numeric {
        let grid = square_grid(params.n as usize, opts.points_per_axis, opts.radius);
        let wcp_opts = WcpOptions { dim: opts.dim, ..WcpOptions::default() };
        let r = wcp_numeric(&model, "rotsym", &grid, &wcp_opts)?;
        report.max_abs_dev = Some(r.max_abs_dev);
        report.truncation = Some(r.truncation);
        report.fiducial_residual = Some(r.fiducial_residual);
        // the symbolic column holds the target classical value
        report.numeric_points = r.points;
    }
    Ok(report)
}

/// True when the polynomial has a term mixing momenta into degree > 2.
pub fn has_momentum_quartic(h: &ScalarPoly) -> bool {
    h.terms().any(|(m, c)| {
        !c.is_zero()
            && m.shift_degree() >= 4
            && m.factors().iter().any(|(a, _)| matches!(a, crate::scalar::Atom::Shift(g) if g.kind == Kind::Momentum))
    })
}

#[cfg(test)]
mod tests;
