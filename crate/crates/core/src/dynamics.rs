//! Full Schrödinger propagation and the reduced classical flow of
//! `H(p,q) = ⟨p,q|𝓗|p,q⟩`, and their comparison.

use num_complex::Complex64 as C64;
use serde::Serialize;
use thiserror::Error;

use crate::correspondence::{model_wcp_symbolic, CorrespondenceError, PhasePoint};
use crate::dsl::CheckedModel;
use crate::fock::{
    self, build_generators, coherent_state, expectation, expm_action, FockError, FockSpace, MatrixOp, StateVector,
};
use crate::generator::Generator;
use crate::scalar::{Atom, Bindings, ScalarError, ScalarPoly};

pub const EVOLVE_SCHEMA: &str = "eqlab.evolve/1";

/// Inner tolerance of each exponential step.
pub const STEP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Correspondence(#[from] CorrespondenceError),
    #[error("Hamiltonian matrix is not flagged Hermitian")]
    NotHermitian,
    #[error("time grids differ")]
    GridMismatch,
    #[error("invalid time grid: {0}")]
    BadGrid(String),
    #[error("implicit midpoint iteration did not converge at t = {0}")]
    NoConvergence(f64),
}

/// Uniform samples `t_k = k·dt`, `k = 0 … steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    /// Grid reaching `horizon` with step close to `dt`.
    pub fn new(dt: f64, horizon: f64) -> Result<Self, DynamicsError> {
        if !(dt > 0.0 && dt.is_finite() && horizon >= 0.0 && horizon.is_finite()) {
            return Err(DynamicsError::BadGrid(format!("dt = {dt}, horizon = {horizon}")));
        }
        let steps = (horizon / dt).round() as usize;
        if steps > 50_000_000 {
            return Err(DynamicsError::BadGrid(format!("{steps} steps")));
        }
        let dt = if steps == 0 { dt } else { horizon / steps as f64 };
        Ok(TimeGrid { dt, steps })
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| k as f64 * self.dt).collect()
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.dt
    }
}

/// Phase points or quantum means per sample, with the conserved quantities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub grid: TimeGrid,
    /// `p(t)` or `⟨P⟩(t)`, one vector per sample.
    pub p: Vec<Vec<f64>>,
    /// `q(t)` or `⟨Q⟩(t)`.
    pub q: Vec<Vec<f64>>,
    pub norm: Vec<f64>,
    pub energy: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.norm.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max)
    }

    /// `max |E(t) − E(0)| / max(|E(0)|, 1e-300)`.
    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0.abs().max(1e-300)
    }
}

/// Samples `iℏ ∂ψ/∂t = Hψ` on `grid`, one exponential action per step, and
/// records `⟨P⟩`, `⟨Q⟩` of the `coords` modes, `‖ψ‖` and `⟨H⟩`.
pub fn schrodinger_evolve(
    space: &FockSpace,
    h: &MatrixOp,
    psi0: &StateVector,
    coords: &[Generator],
    grid: &TimeGrid,
) -> Result<Trajectory, DynamicsError> {
    if !h.hermitian {
        return Err(DynamicsError::NotHermitian);
    }
    if h.dim() != psi0.len() || space.dim() != psi0.len() {
        return Err(FockError::DimensionMismatch { expected: h.dim(), found: psi0.len() }.into());
    }
    let gens: Vec<(MatrixOp, MatrixOp)> =
        coords.iter().map(|g| build_generators(space, g.set, g.mode)).collect::<Result<_, _>>()?;
    let tau = C64::new(0.0, -grid.dt / space.hbar());
    let mut out = Trajectory { grid: *grid, p: Vec::new(), q: Vec::new(), norm: Vec::new(), energy: Vec::new() };
    let mut psi = psi0.clone();
    for k in 0..=grid.steps {
        if k > 0 {
            let next = expm_action(&h.matrix, psi.amps(), tau, STEP_TOL).map_err(FockError::from)?;
            psi = StateVector::new(next);
        }
        let n = psi.norm();
        let mut unit = psi.clone();
        unit.normalize();
        out.q.push(gens.iter().map(|(q, _)| expectation(q, &unit).map(|z| z.re)).collect::<Result<_, _>>()?);
        out.p.push(gens.iter().map(|(_, p)| expectation(p, &unit).map(|z| z.re)).collect::<Result<_, _>>()?);
        out.norm.push(n);
        out.energy.push(expectation(h, &unit)?.re);
    }
    Ok(out)
}

/// A polynomial in `p_1…p_N, q_1…q_N` with numeric coefficients.
#[derive(Debug, Clone)]
struct NumPoly {
    /// coefficient and `(variable, exponent)` factors; variables `0..N` are
    /// momenta and `N..2N` positions
    terms: Vec<(f64, Vec<(usize, i32)>)>,
}

impl NumPoly {
    fn compile(h: &ScalarPoly, coords: &[Generator], bindings: &Bindings) -> Result<Self, ScalarError> {
        let n = coords.len();
        let var = |a: &Atom| -> Option<usize> {
            let Atom::Shift(g) = a else { return None };
            let k = coords.iter().position(|c| c.set == g.set && c.mode == g.mode)?;
            Some(if *g == coords[k] { n + k } else { k })
        };
        let mut terms = Vec::new();
        for (m, c) in h.terms() {
            let mut coef = crate::scalar::coeff_to_c64(c).re;
            let mut factors = Vec::new();
            for (a, e) in m.factors() {
                match var(a) {
                    Some(v) => factors.push((v, *e)),
                    None => coef *= bindings.get(a).ok_or_else(|| ScalarError::Unbound(a.to_string()))?.powi(*e),
                }
            }
            terms.push((coef, factors));
        }
        Ok(NumPoly { terms })
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(c, f)| f.iter().fold(*c, |acc, (v, e)| acc * x[*v].powi(*e))).sum()
    }

    fn uses(&self, v: usize) -> bool {
        self.terms.iter().any(|(_, f)| f.iter().any(|(w, _)| *w == v))
    }
}

/// Hamilton's equations of a classical polynomial with exact gradients.
struct Flow {
    n: usize,
    h: NumPoly,
    /// `∂H/∂p_k` then `∂H/∂q_k`.
    grad: Vec<NumPoly>,
    separable: bool,
}

impl Flow {
    fn new(h: &ScalarPoly, coords: &[Generator], bindings: &Bindings) -> Result<Self, ScalarError> {
        let n = coords.len();
        let atoms: Vec<Atom> = coords
            .iter()
            .map(|g| Atom::Shift(g.partner()))
            .chain(coords.iter().map(|g| Atom::Shift(*g)))
            .collect();
        let grad = atoms.iter().map(|a| NumPoly::compile(&h.derivative(a), coords, bindings)).collect::<Result<Vec<_>, _>>()?;
        // separable when no ∂H/∂p depends on q and no ∂H/∂q depends on p
        let separable = (0..n).all(|k| (n..2 * n).all(|v| !grad[k].uses(v)))
            && (n..2 * n).all(|k| (0..n).all(|v| !grad[k].uses(v)));
        Ok(Flow { n, h: NumPoly::compile(h, coords, bindings)?, grad, separable })
    }

    fn energy(&self, x: &[f64]) -> f64 {
        self.h.eval(x)
    }

    /// Kick–drift–kick Strang step for `H = T(p) + V(q)`.
    fn strang(&self, x: &mut [f64], dt: f64) {
        let n = self.n;
        let kick = |x: &mut [f64], s: f64| {
            let g: Vec<f64> = (0..n).map(|k| self.grad[n + k].eval(x)).collect();
            for k in 0..n {
                x[k] -= s * g[k];
            }
        };
        kick(x, dt / 2.0);
        let g: Vec<f64> = (0..n).map(|k| self.grad[k].eval(x)).collect();
        for k in 0..n {
            x[n + k] += dt * g[k];
        }
        kick(x, dt / 2.0);
    }

    fn field(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut f = vec![0.0; 2 * n];
        for k in 0..n {
            f[k] = -self.grad[n + k].eval(x);
            f[n + k] = self.grad[k].eval(x);
        }
        f
    }

    /// Implicit midpoint by fixed-point iteration.
    fn midpoint(&self, x: &mut [f64], dt: f64, t: f64) -> Result<(), DynamicsError> {
        let x0 = x.to_vec();
        let mut y = x0.clone();
        for _ in 0..200 {
            let mid: Vec<f64> = x0.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
            let f = self.field(&mid);
            let next: Vec<f64> = x0.iter().zip(&f).map(|(a, fi)| a + dt * fi).collect();
            let diff = next.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = next.iter().map(|a| a.abs()).fold(1.0, f64::max);
            y = next;
            if diff <= 1e-15 * scale {
                x.copy_from_slice(&y);
                return Ok(());
            }
        }
        Err(DynamicsError::NoConvergence(t))
    }
}

/// Weights of the sixth-order symmetric composition of a second-order
/// symmetric step (Yoshida's solution A).
const YOSHIDA6: [f64; 7] = {
    let w1 = -1.177_679_984_178_87;
    let w2 = 0.235_573_213_359_357;
    let w3 = 0.784_513_610_477_560;
    let w0 = 1.0 - 2.0 * (w1 + w2 + w3);
    [w3, w2, w1, w0, w1, w2, w3]
};

/// Integrates `q̇ = ∂H/∂p`, `ṗ = −∂H/∂q` from `start` on `grid`. Separable
/// `H` uses Strang splitting, anything else the implicit midpoint rule; both
/// are composed to sixth order. Negative `dt` integrates backwards.
pub fn reduced_evolve(
    h_cl: &ScalarPoly,
    coords: &[Generator],
    bindings: &Bindings,
    start: &PhasePoint,
    grid: &TimeGrid,
) -> Result<Trajectory, DynamicsError> {
    let flow = Flow::new(h_cl, coords, bindings)?;
    let n = coords.len();
    if start.p.len() != n || start.q.len() != n {
        return Err(CorrespondenceError::PointShape { expected: n, found: start.p.len().min(start.q.len()) }.into());
    }
    let mut x: Vec<f64> = start.p.iter().chain(&start.q).copied().collect();
    let mut out = Trajectory { grid: *grid, p: Vec::new(), q: Vec::new(), norm: Vec::new(), energy: Vec::new() };
    for k in 0..=grid.steps {
        if k > 0 {
            for w in YOSHIDA6 {
                if flow.separable {
                    flow.strang(&mut x, w * grid.dt);
                } else {
                    flow.midpoint(&mut x, w * grid.dt, k as f64 * grid.dt)?;
                }
            }
        }
        out.p.push(x[..n].to_vec());
        out.q.push(x[n..].to_vec());
        out.norm.push(1.0);
        out.energy.push(flow.energy(&x));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub times: Vec<f64>,
    /// `max_k |⟨Q_k⟩(t) − q_k(t)|` per sample.
    pub dq: Vec<f64>,
    pub dp: Vec<f64>,
    pub max_dq: f64,
    pub max_dp: f64,
    pub rms_dq: f64,
    pub rms_dp: f64,
}

pub fn compare_trajectories(full: &Trajectory, reduced: &Trajectory) -> Result<DeviationReport, DynamicsError> {
    if full.grid != reduced.grid || full.len() != reduced.len() {
        return Err(DynamicsError::GridMismatch);
    }
    let dev = |a: &[Vec<f64>], b: &[Vec<f64>]| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)).collect()
    };
    let dq = dev(&full.q, &reduced.q);
    let dp = dev(&full.p, &reduced.p);
    let rms = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / v.len().max(1) as f64).sqrt();
    Ok(DeviationReport {
        times: full.grid.times(),
        max_dq: dq.iter().copied().fold(0.0, f64::max),
        max_dp: dp.iter().copied().fold(0.0, f64::max),
        rms_dq: rms(&dq),
        rms_dp: rms(&dp),
        dq,
        dp,
    })
}

/// Both trajectories of a model from the same phase point and their
/// comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolveRun {
    pub full: Trajectory,
    pub reduced: Trajectory,
    pub deviation: DeviationReport,
    pub truncation: usize,
    pub leakage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolveSummary {
    pub schema: &'static str,
    pub model: String,
    pub dt: f64,
    pub horizon: f64,
    pub truncation: usize,
    pub start: PhasePoint,
    pub initial_leakage: f64,
    pub max_dq: f64,
    pub max_dp: f64,
    pub rms_dq: f64,
    pub rms_dp: f64,
    pub max_norm_drift: f64,
    pub quantum_energy_drift: f64,
    pub classical_energy_drift: f64,
}

impl EvolveRun {
    pub fn summary(&self, model: &str, start: &PhasePoint) -> EvolveSummary {
        EvolveSummary {
            schema: EVOLVE_SCHEMA,
            model: model.to_string(),
            dt: self.full.grid.dt,
            horizon: self.full.grid.horizon(),
            truncation: self.truncation,
            start: start.clone(),
            initial_leakage: self.leakage,
            max_dq: self.deviation.max_dq,
            max_dp: self.deviation.max_dp,
            rms_dq: self.deviation.rms_dq,
            rms_dp: self.deviation.rms_dp,
            max_norm_drift: self.full.max_norm_drift(),
            quantum_energy_drift: self.full.max_energy_drift(),
            classical_energy_drift: self.reduced.max_energy_drift(),
        }
    }

    /// `t, p…, q…, Qexp…, Pexp…, norm, energy, energy_cl`.
    pub fn to_csv(&self) -> String {
        let n = self.reduced.p.first().map_or(0, Vec::len);
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|k| format!("p{k}")));
        header.extend((0..n).map(|k| format!("q{k}")));
        header.extend((0..n).map(|k| format!("Qexp{k}")));
        header.extend((0..n).map(|k| format!("Pexp{k}")));
        header.extend(["norm", "energy", "energy_cl"].map(String::from));
        w.write_record(&header).unwrap();
        for (i, t) in self.full.grid.times().iter().enumerate() {
            let mut row = vec![t.to_string()];
            let cols = [&self.reduced.p[i], &self.reduced.q[i], &self.full.q[i], &self.full.p[i]];
            row.extend(cols.iter().flat_map(|c| c.iter().map(|x| x.to_string())));
            row.push(self.full.norm[i].to_string());
            row.push(self.full.energy[i].to_string());
            row.push(self.reduced.energy[i].to_string());
            w.write_record(&row).unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

/// Runs the full and reduced dynamics of `model` from the coherent state
/// at `start`; the reduced flow uses the symbolic `H(p,q)` including its ℏ
/// terms.
pub fn evolve_model(
    model: &CheckedModel,
    start: &PhasePoint,
    grid: &TimeGrid,
    dim: Option<usize>,
) -> Result<EvolveRun, DynamicsError> {
    let space = FockSpace::for_model(model, dim)?;
    let coords = model.shifted_positions();
    let fid = fock::model_fiducial(model, &space)?;
    let cs = coherent_state(&space, &fid.state, &coords, &start.p, &start.q, fock::LEAKAGE_BOUND)?;
    let h = fock::build_operator(&model.hamiltonian, &space, &model.bindings)?;
    let full = schrodinger_evolve(&space, &h, &cs.state, &coords, grid)?;
    let h_cl = model_wcp_symbolic(model)?;
    let reduced = reduced_evolve(&h_cl, &coords, &model.bindings, start, grid)?;
    let deviation = compare_trajectories(&full, &reduced)?;
    Ok(EvolveRun { full, reduced, deviation, truncation: space.modes().first().map_or(1, |m| m.dim), leakage: cs.leakage })
}

#[cfg(test)]
mod tests;
