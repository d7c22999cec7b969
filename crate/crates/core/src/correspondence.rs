//! The weak correspondence `H(p,q) = ⟨p,q|𝓗|p,q⟩` evaluated symbolically and
//! numerically, the ℏ split of the symbolic result, and the Fubini–Study
//! metric of the coherent-state manifold.

use std::collections::BTreeSet;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dsl::CheckedModel;
use crate::expr::{displace, shift_map, OperatorExpr};
use crate::fock::{self, build_operator, coherent_state, expectation, FockError, FockSpace, MatrixOp, StateVector};
use crate::generator::{Generator, SetId};
use crate::ordering::{wcp_symbolic, AlgebraError};
use crate::scalar::{Atom, Bindings, ScalarError, ScalarPoly};

pub const WCP_SCHEMA: &str = "eqlab.wcp/1";
pub const METRIC_SCHEMA: &str = "eqlab.metric/1";

/// Default finite-difference step of the metric.
pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorrespondenceError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("point has {found} coordinates, expected {expected}")]
    PointShape { expected: usize, found: usize },
    #[error("metric step {step} too large: {reason}")]
    StepTooLarge { step: f64, reason: String },
    #[error("metric step must be positive, got {0}")]
    BadStep(f64),
}

/// A phase-space point: momenta and positions of the shifted modes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhasePoint {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl PhasePoint {
    pub fn new(p: Vec<f64>, q: Vec<f64>) -> Self {
        PhasePoint { p, q }
    }
}

/// `n × n` grid over `[-r, r]²` in the first shifted mode; other modes at 0.
pub fn square_grid(modes: usize, n: usize, r: f64) -> Vec<PhasePoint> {
    let ticks: Vec<f64> = if n <= 1 { vec![0.0] } else { (0..n).map(|k| -r + 2.0 * r * k as f64 / (n - 1) as f64).collect() };
    let mut out = Vec::new();
    for &p in &ticks {
        for &q in &ticks {
            let mut pv = vec![0.0; modes];
            let mut qv = vec![0.0; modes];
            if modes > 0 {
                pv[0] = p;
                qv[0] = q;
            }
            out.push(PhasePoint { p: pv, q: qv });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointResult {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// `None` when the point was flagged.
    pub numeric: Option<f64>,
    pub symbolic: f64,
    pub abs_dev: Option<f64>,
    pub rel_dev: Option<f64>,
    pub leakage: Option<f64>,
    pub flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WcpReport {
    pub schema: &'static str,
    pub model: String,
    pub truncation: usize,
    pub dimension: usize,
    pub hbar: f64,
    pub basis_omega: f64,
    pub fiducial_residual: f64,
    pub symbolic: String,
    pub points: Vec<PointResult>,
    pub max_abs_dev: f64,
}

impl WcpReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// One row per point: `p…, q…, H_num, H_sym, abs_dev`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let n = self.points.first().map_or(0, |r| r.p.len());
        let mut header: Vec<String> = (0..n).map(|k| format!("p{k}")).collect();
        header.extend((0..n).map(|k| format!("q{k}")));
        header.extend(["H_num", "H_sym", "abs_dev"].map(String::from));
        w.write_record(&header).unwrap();
        for r in &self.points {
            let mut row: Vec<String> = r.p.iter().chain(&r.q).map(|x| x.to_string()).collect();
            row.push(r.numeric.map_or(String::new(), |x| x.to_string()));
            row.push(r.symbolic.to_string());
            row.push(r.abs_dev.map_or(String::new(), |x| x.to_string()));
            w.write_record(&row).unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

/// Binds the shift symbols of `coords` (positions) and their momenta.
pub fn bind_point(bindings: &Bindings, coords: &[Generator], pt: &PhasePoint) -> Bindings {
    let mut b = bindings.clone();
    for (k, g) in coords.iter().enumerate() {
        b.set(Atom::Shift(*g), pt.q[k]);
        b.set(Atom::Shift(g.partner()), pt.p[k]);
    }
    b
}

fn check_point(coords: &[Generator], pt: &PhasePoint) -> Result<(), CorrespondenceError> {
    for len in [pt.p.len(), pt.q.len()] {
        if len != coords.len() {
            return Err(CorrespondenceError::PointShape { expected: coords.len(), found: len });
        }
    }
    Ok(())
}

/// Symbolic `H(p,q)` of a checked model.
pub fn model_wcp_symbolic(model: &CheckedModel) -> Result<ScalarPoly, CorrespondenceError> {
    Ok(wcp_symbolic(&model.hamiltonian, &model.fiducial, &model.shifted)?)
}

#[derive(Debug, Clone)]
pub struct WcpOptions {
    /// Per-mode truncation; the model's when `None`.
    pub dim: Option<usize>,
    pub leakage_bound: f64,
}

impl Default for WcpOptions {
    fn default() -> Self {
        WcpOptions { dim: None, leakage_bound: fock::LEAKAGE_BOUND }
    }
}

/// Numeric `⟨p,q|𝓗|p,q⟩` at each point next to the symbolic value. Points
/// whose coherent state leaks past the bound are flagged, not fatal.
pub fn wcp_numeric(
    model: &CheckedModel,
    name: &str,
    points: &[PhasePoint],
    opts: &WcpOptions,
) -> Result<WcpReport, CorrespondenceError> {
    let coords = model.shifted_positions();
    for pt in points {
        check_point(&coords, pt)?;
    }
    let space = FockSpace::for_model(model, opts.dim)?;
    let fid = fock::model_fiducial(model, &space)?;
    let h = build_operator(&model.hamiltonian, &space, &model.bindings)?;
    let sym = model_wcp_symbolic(model)?;

    let results: Vec<Result<PointResult, CorrespondenceError>> = points
        .par_iter()
        .map(|pt| {
            let symbolic = sym.eval(&bind_point(&model.bindings, &coords, pt))?.re;
            let mut r = PointResult {
                p: pt.p.clone(),
                q: pt.q.clone(),
                numeric: None,
                symbolic,
                abs_dev: None,
                rel_dev: None,
                leakage: None,
                flag: None,
            };
            match coherent_state(&space, &fid.state, &coords, &pt.p, &pt.q, opts.leakage_bound) {
                Ok(cs) => {
                    let num = expectation(&h, &cs.state)?.re;
                    let dev = (num - symbolic).abs();
                    r.numeric = Some(num);
                    r.abs_dev = Some(dev);
                    r.rel_dev = Some(dev / symbolic.abs().max(1e-300));
                    r.leakage = Some(cs.leakage);
                }
                Err(e @ FockError::TruncationLeakage { leakage, .. }) => {
                    r.leakage = Some(leakage);
                    r.flag = Some(e.to_string());
                }
                Err(e) => return Err(e.into()),
            }
            Ok(r)
        })
        .collect();
    let points = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let max_abs_dev = points.iter().filter_map(|r| r.abs_dev).fold(0.0, f64::max);
    Ok(WcpReport {
        schema: WCP_SCHEMA,
        model: name.to_string(),
        truncation: space.modes().first().map_or(1, |m| m.dim),
        dimension: space.dim(),
        hbar: space.hbar(),
        basis_omega: model.basis_omega,
        fiducial_residual: fid.residual,
        symbolic: sym.render(),
        points,
        max_abs_dev,
    })
}

/// `⟨0|𝓗(P + p, Q + q)|0⟩`: the shifted operator built as a matrix and
/// evaluated in the fiducial vector.
pub fn displaced_fiducial_expectation(
    h: &OperatorExpr,
    space: &FockSpace,
    fiducial: &StateVector,
    coords: &[Generator],
    pt: &PhasePoint,
    bindings: &Bindings,
) -> Result<C64, CorrespondenceError> {
    check_point(coords, pt)?;
    let sets: BTreeSet<SetId> = coords.iter().map(|g| g.set).collect();
    let shifted: Vec<Generator> = coords.iter().flat_map(|g| [*g, g.partner()]).collect();
    let mut shifts = shift_map(shifted.iter().copied(), &sets);
    shifts.retain(|g, _| shifted.contains(g));
    let moved = displace(h, &shifts);
    let m = build_operator(&moved, space, &bind_point(bindings, coords, pt))?;
    Ok(expectation(&m, fiducial)?)
}

/// Terms of `h` free of ℏ, and the rest.
pub fn hbar_split(h: &ScalarPoly) -> (ScalarPoly, ScalarPoly) {
    let classical = h.filter(|m| m.exponent(&Atom::Hbar) == 0);
    let corrections = h - &classical;
    (classical, corrections)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricTensor {
    pub schema: &'static str,
    /// Coordinate order `p_1 … p_N, q_1 … q_N`.
    pub matrix: Vec<Vec<f64>>,
    pub step: f64,
    /// Largest entry change between steps `h` and `h/2`.
    pub halving_change: f64,
    pub symmetry_defect: f64,
}

impl MetricTensor {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metric serializes") + "\n"
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.matrix {
            w.write_record(row.iter().map(|x| x.to_string())).unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

/// `2ℏ Re[⟨∂_i ψ|∂_j ψ⟩ − ⟨∂_i ψ|ψ⟩⟨ψ|∂_j ψ⟩]` from central differences
/// `(ψ(x + h e_i) − ψ(x − h e_i)) / 2h`. Each displaced state is first rotated
/// so its overlap with `center` is real positive, which removes any
/// point-dependent phase before differencing.
pub fn metric_from_states(
    center: &StateVector,
    plus: &[StateVector],
    minus: &[StateVector],
    step: f64,
    hbar: f64,
) -> Result<Vec<Vec<f64>>, FockError> {
    let align = |s: &StateVector| -> Result<Vec<C64>, FockError> {
        let o = center.inner(s)?;
        let ph = if o.norm() > 0.0 { o.conj() / o.norm() } else { C64::new(1.0, 0.0) };
        Ok(s.amps().iter().map(|x| x * ph).collect())
    };
    let mut derivs = Vec::with_capacity(plus.len());
    for (a, b) in plus.iter().zip(minus) {
        let (a, b) = (align(a)?, align(b)?);
        derivs.push(a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * step)).collect::<Vec<C64>>());
    }
    let psi = center.amps();
    let proj: Vec<C64> = derivs.iter().map(|d| fock::krylov::dot(psi, d)).collect();
    let n = derivs.len();
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let v = fock::krylov::dot(&derivs[i], &derivs[j]) - proj[i].conj() * proj[j];
            g[i][j] = 2.0 * hbar * v.re;
        }
    }
    Ok(g)
}

fn metric_at_step(
    space: &FockSpace,
    fiducial: &StateVector,
    coords: &[Generator],
    pt: &PhasePoint,
    step: f64,
) -> Result<Vec<Vec<f64>>, FockError> {
    let n = coords.len();
    let state = |p: &[f64], q: &[f64]| coherent_state(space, fiducial, coords, p, q, fock::LEAKAGE_BOUND).map(|c| c.state);
    let center = state(&pt.p, &pt.q)?;
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for k in 0..2 * n {
        for (sign, out) in [(1.0, &mut plus), (-1.0, &mut minus)] {
            let (mut p, mut q) = (pt.p.clone(), pt.q.clone());
            if k < n {
                p[k] += sign * step;
            } else {
                q[k - n] += sign * step;
            }
            out.push(state(&p, &q)?);
        }
    }
    metric_from_states(&center, &plus, &minus, step, space.hbar())
}

/// Fubini–Study metric pulled back to the coherent states at `pt`, with a
/// Richardson step `(4·g(h/2) − g(h))/3`. Fails with `StepTooLarge` when the
/// error estimate `|g(h) − g(h/2)|/3` of the half step exceeds `1e-6` or the
/// result is asymmetric by more than `1e-6`.
pub fn fubini_study_metric(
    space: &FockSpace,
    fiducial: &StateVector,
    coords: &[Generator],
    pt: &PhasePoint,
    step: f64,
) -> Result<MetricTensor, CorrespondenceError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(CorrespondenceError::BadStep(step));
    }
    check_point(coords, pt)?;
    let g1 = metric_at_step(space, fiducial, coords, pt, step)?;
    let g2 = metric_at_step(space, fiducial, coords, pt, step / 2.0)?;
    let n = g1.len();
    let mut g = vec![vec![0.0; n]; n];
    let mut change: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            g[i][j] = (4.0 * g2[i][j] - g1[i][j]) / 3.0;
            change = change.max((g2[i][j] - g1[i][j]).abs());
        }
    }
    let mut defect: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            defect = defect.max((g[i][j] - g[j][i]).abs());
        }
    }
    if change / 3.0 > 1e-6 {
        return Err(CorrespondenceError::StepTooLarge { step, reason: format!("halving moved an entry by {change:.3e}") });
    }
    if defect > 1e-6 {
        return Err(CorrespondenceError::StepTooLarge { step, reason: format!("symmetry defect {defect:.3e}") });
    }
    Ok(MetricTensor { schema: METRIC_SCHEMA, matrix: g, step, halving_change: change, symmetry_defect: defect })
}

/// Metric of a checked model at `pt`, on its own fiducial vector.
pub fn model_metric(
    model: &CheckedModel,
    pt: &PhasePoint,
    step: f64,
    dim: Option<usize>,
) -> Result<MetricTensor, CorrespondenceError> {
    let space = FockSpace::for_model(model, dim)?;
    let fid = fock::model_fiducial(model, &space)?;
    fubini_study_metric(&space, &fid.state, &model.shifted_positions(), pt, step)
}

/// Hamiltonian matrix of a checked model.
pub fn model_hamiltonian(model: &CheckedModel, space: &FockSpace) -> Result<MatrixOp, CorrespondenceError> {
    Ok(build_operator(&model.hamiltonian, space, &model.bindings)?)
}
