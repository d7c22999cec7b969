//! Truncated multimode Fock spaces: operator matrices, fiducial vectors and
//! coherent states.
//!
//! Each mode keeps `D` number states `|0⟩ … |D−1⟩` of a ladder operator with
//! frequency `ω_rep`:
//!
//! ```text
//! Q = √(ℏ/2ω)(a + a†)      P = i√(ℏω/2)(a† − a)
//! ```
//!
//! Basis states are enumerated row-major over the mode occupations: the
//! first mode varies slowest, so `index = Σ n_k · Π_{j>k} D_j`.

pub mod krylov;
pub mod sparse;

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::dsl::CheckedModel;
use crate::expr::{hermitian_check, OperatorExpr};
use crate::generator::{Generator, Kind, SetId};
use crate::scalar::{Bindings, ScalarError};

pub use krylov::{expm_action, lowest_eigenpair, Eigenpair, KrylovError};
pub use sparse::Csr;

/// Largest total dimension accepted by [`FockSpace::new`].
pub const MAX_DIM: usize = 1 << 22;

/// Default bound on the leakage indicator of a coherent state.
pub const LEAKAGE_BOUND: f64 = 1e-6;

/// Gap below which the fiducial ground space counts as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FockError {
    #[error("generator {0} has no mode in this Fock space")]
    UnknownGenerator(Generator),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("fiducial ground space is degenerate (gap {gap:.3e})")]
    DegenerateGroundSpace { gap: f64 },
    #[error("truncation leakage {leakage:.3e} exceeds the bound {bound:.1e}; increase the truncation")]
    TruncationLeakage { leakage: f64, bound: f64 },
    #[error("Fock space of dimension {0} is too large")]
    TooLarge(usize),
    #[error("invalid mode: {0}")]
    InvalidMode(String),
    #[error("no fiducial conditions given")]
    NoConditions,
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Krylov(#[from] KrylovError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockMode {
    pub set: SetId,
    pub mode: u32,
    pub dim: usize,
    /// Frequency of the number basis.
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockSpace {
    modes: Vec<FockMode>,
    hbar: f64,
    strides: Vec<usize>,
    dim: usize,
}

impl FockSpace {
    pub fn new(modes: Vec<FockMode>, hbar: f64) -> Result<Self, FockError> {
        for m in &modes {
            if m.dim == 0 {
                return Err(FockError::InvalidMode(format!("{}[{}] has dimension 0", m.set, m.mode)));
            }
            if !(m.omega > 0.0 && m.omega.is_finite()) {
                return Err(FockError::InvalidMode(format!("{}[{}] has frequency {}", m.set, m.mode, m.omega)));
            }
        }
        let mut dim = 1usize;
        for m in &modes {
            dim = dim.checked_mul(m.dim).filter(|d| *d <= MAX_DIM).ok_or(FockError::TooLarge(usize::MAX))?;
        }
        let mut strides = vec![1; modes.len()];
        for k in (0..modes.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * modes[k + 1].dim;
        }
        Ok(FockSpace { modes, hbar, strides, dim })
    }

    /// Same `dim` and `omega` for every mode of the listed sets.
    pub fn uniform(sets: &[(SetId, u32)], dim: usize, omega: f64, hbar: f64) -> Result<Self, FockError> {
        let modes = sets
            .iter()
            .flat_map(|(s, n)| (0..*n).map(move |mode| FockMode { set: *s, mode, dim, omega }))
            .collect();
        FockSpace::new(modes, hbar)
    }

    /// The space a checked model asks for, optionally with another per-mode
    /// truncation.
    pub fn for_model(model: &CheckedModel, dim: Option<usize>) -> Result<Self, FockError> {
        let d = dim.unwrap_or(model.truncation as usize);
        FockSpace::uniform(&model.spec.sets, d, model.basis_omega, model.hbar())
    }

    pub fn modes(&self) -> &[FockMode] {
        &self.modes
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode_index(&self, set: SetId, mode: u32) -> Option<usize> {
        self.modes.iter().position(|m| m.set == set && m.mode == mode)
    }

    /// Occupation numbers of basis state `index`.
    pub fn occupations(&self, index: usize) -> Vec<usize> {
        self.modes.iter().zip(&self.strides).map(|(m, s)| (index / s) % m.dim).collect()
    }

    pub fn index(&self, occupations: &[usize]) -> usize {
        occupations.iter().zip(&self.strides).map(|(n, s)| n * s).sum()
    }

    /// Dense single-mode matrix of a generator kind.
    fn local(&self, k: usize, kind: Kind) -> DMatrix<C64> {
        let m = &self.modes[k];
        let d = m.dim;
        let mut out = DMatrix::zeros(d, d);
        let (xq, xp) = ((self.hbar / (2.0 * m.omega)).sqrt(), (self.hbar * m.omega / 2.0).sqrt());
        for n in 1..d {
            let s = (n as f64).sqrt();
            // a|n⟩ = √n|n−1⟩: entry (n−1, n) of a, (n, n−1) of a†
            match kind {
                Kind::Position => {
                    out[(n - 1, n)] = C64::new(xq * s, 0.0);
                    out[(n, n - 1)] = C64::new(xq * s, 0.0);
                }
                Kind::Momentum => {
                    out[(n - 1, n)] = C64::new(0.0, -xp * s);
                    out[(n, n - 1)] = C64::new(0.0, xp * s);
                }
            }
        }
        out
    }

    /// Embeds per-mode factors; missing modes get the identity.
    fn embed(&self, factors: &[Option<Csr>]) -> Csr {
        let mut out: Option<Csr> = None;
        for (k, m) in self.modes.iter().enumerate() {
            let f = factors[k].clone().unwrap_or_else(|| Csr::identity(m.dim));
            out = Some(match out {
                None => f,
                Some(acc) => acc.kron(&f),
            });
        }
        out.unwrap_or_else(|| Csr::identity(1))
    }
}

/// A sparse operator on a [`FockSpace`].
#[derive(Debug, Clone)]
pub struct MatrixOp {
    pub matrix: Csr,
    /// Set only when the construction makes `A = A†` hold exactly.
    pub hermitian: bool,
    /// Expression the matrix was built from.
    pub source: Option<OperatorExpr>,
}

impl MatrixOp {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector, FockError> {
        check_dim(self.dim(), v.len())?;
        Ok(StateVector::new(self.matrix.matvec(&v.amps)))
    }

    /// `row col re im` per stored entry.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (r, c, v) in self.matrix.triplets() {
            let _ = writeln!(s, "{r} {c} {:.17e} {:.17e}", v.re, v.im);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
    normalized: bool,
}

impl StateVector {
    pub fn new(amps: Vec<C64>) -> Self {
        StateVector { amps, normalized: false }
    }

    /// Basis state `index` of a space of dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        StateVector { amps, normalized: true }
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<C64> {
        self.amps
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm(&self) -> f64 {
        krylov::norm(&self.amps)
    }

    /// Scales to unit norm and returns the norm it had.
    pub fn normalize(&mut self) -> f64 {
        let n = self.norm();
        if n > 0.0 {
            self.amps.iter_mut().for_each(|x| *x /= n);
            self.normalized = true;
        }
        n
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64, FockError> {
        check_dim(self.len(), other.len())?;
        Ok(krylov::dot(&self.amps, &other.amps))
    }

    pub fn scaled(&self, s: C64) -> StateVector {
        StateVector { amps: self.amps.iter().map(|x| x * s).collect(), normalized: self.normalized && (s.norm() - 1.0).abs() < 1e-15 }
    }

    /// `index re im` per basis state.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.amps.iter().enumerate() {
            let _ = writeln!(s, "{k} {:.17e} {:.17e}", v.re, v.im);
        }
        s
    }
}

fn check_dim(expected: usize, found: usize) -> Result<(), FockError> {
    if expected == found {
        Ok(())
    } else {
        Err(FockError::DimensionMismatch { expected, found })
    }
}

/// Matrices of `Q` and `P` for one mode.
pub fn build_generators(space: &FockSpace, set: SetId, mode: u32) -> Result<(MatrixOp, MatrixOp), FockError> {
    let q = build_operator(&OperatorExpr::generator(set.position(mode)), space, &Bindings::new())?;
    let p = build_operator(&OperatorExpr::generator(set.momentum(mode)), space, &Bindings::new())?;
    Ok((q, p))
}

/// Matrix of `e`. Words map to matrix products in word order; coefficients
/// are evaluated with `bindings` (the space supplies `hbar` when unbound).
/// When `e` passes the symbolic Hermiticity check the matrix is replaced by
/// its Hermitian part, which removes rounding asymmetry.
pub fn build_operator(e: &OperatorExpr, space: &FockSpace, bindings: &Bindings) -> Result<MatrixOp, FockError> {
    let mut b = bindings.clone();
    if b.hbar().is_none() {
        b = b.with_hbar(space.hbar);
    }
    let n = space.dim();
    let mut total = Csr::zeros(n, n);
    let mut cache: HashMap<(usize, Vec<Kind>), Csr> = HashMap::new();
    for (word, c) in e.terms() {
        let c = c.eval(&b)?;
        if c == C64::new(0.0, 0.0) {
            continue;
        }
        let mut per_mode: Vec<Vec<Kind>> = vec![Vec::new(); space.modes.len()];
        for g in word {
            let k = space.mode_index(g.set, g.mode).ok_or(FockError::UnknownGenerator(*g))?;
            per_mode[k].push(g.kind);
        }
        let factors: Vec<Option<Csr>> = per_mode
            .into_iter()
            .enumerate()
            .map(|(k, kinds)| {
                if kinds.is_empty() {
                    return None;
                }
                let key = (k, kinds);
                let m = cache.entry(key.clone()).or_insert_with(|| {
                    let d = space.modes[k].dim;
                    let mut acc = DMatrix::<C64>::identity(d, d);
                    for kind in &key.1 {
                        acc *= space.local(k, *kind);
                    }
                    Csr::from_dense(&acc)
                });
                Some(m.clone())
            })
            .collect();
        total = total.add_scaled(&space.embed(&factors), c);
    }
    let hermitian = hermitian_check(e);
    if hermitian {
        total = total.add_scaled(&total.adjoint(), C64::new(1.0, 0.0)).scale(C64::new(0.5, 0.0));
    }
    Ok(MatrixOp { matrix: total, hermitian, source: Some(e.clone()) })
}

/// `⟨v|A|v⟩`.
pub fn expectation(a: &MatrixOp, v: &StateVector) -> Result<C64, FockError> {
    check_dim(a.dim(), v.len())?;
    Ok(krylov::dot(&v.amps, &a.matrix.matvec(&v.amps)))
}

#[derive(Debug, Clone)]
pub struct FiducialSolution {
    pub state: StateVector,
    /// `√(Σ‖b_i v‖²)`.
    pub residual: f64,
    /// `⟨v|K|v⟩` for `K = Σ b_i† b_i`.
    pub eigenvalue: f64,
    /// Distance to the next eigenvalue of `K`.
    pub gap: f64,
}

/// Deterministic start vector with weight on every basis state.
fn start_vector(space: &FockSpace) -> Vec<C64> {
    (0..space.dim())
        .map(|k| {
            let occ: usize = space.occupations(k).iter().sum();
            let w = (-0.3 * occ as f64).exp();
            C64::new(w * (1.0 + 0.25 * (k as f64 * 0.61).sin()), 0.1 * w * (k as f64 * 1.3).cos())
        })
        .collect()
}

/// Unit vector best annihilated by every condition: the ground state of
/// `K = Σ b_i† b_i`, with states touching occupation `D − 2` or above lifted
/// by `‖K‖`. The phase makes the largest amplitude real positive.
pub fn fiducial_solve(conditions: &[MatrixOp], space: &FockSpace) -> Result<FiducialSolution, FockError> {
    if conditions.is_empty() {
        return Err(FockError::NoConditions);
    }
    let n = space.dim();
    let mut k = Csr::zeros(n, n);
    for b in conditions {
        check_dim(n, b.dim())?;
        k = k.add_scaled(&b.matrix.adjoint().mul(&b.matrix), C64::new(1.0, 0.0));
    }
    k = k.add_scaled(&k.adjoint(), C64::new(1.0, 0.0)).scale(C64::new(0.5, 0.0));
    // rounding noise, e.g. from ω·√(ℏ/2ω) − √(ℏω/2)
    k = k.prune(1e-14 * k.max_abs());
    // Truncated conditions can have spurious near-null vectors living at the
    // cutoff; lift the edge occupations so only the interior solution is near 0.
    let raw = k.clone();
    if space.modes.iter().all(|m| m.dim >= 4) {
        let lift = k.norm_bound().max(1.0);
        let t = (0..n)
            .filter(|&j| space.occupations(j).iter().zip(&space.modes).any(|(o, m)| o + 2 >= m.dim))
            .map(|j| (j, j, C64::new(lift, 0.0)))
            .collect();
        k = k.add_scaled(&Csr::from_triplets(n, n, t), C64::new(1.0, 0.0));
    }

    let (mut v, _, gap) = if k.is_diagonal() {
        let d: Vec<f64> = k.diagonal().iter().map(|x| x.re).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
        let gap = if n > 1 { d[order[1]] - d[order[0]] } else { f64::INFINITY };
        (StateVector::basis(n, order[0]).into_amps(), d[order[0]], gap)
    } else {
        let start = start_vector(space);
        let e0 = lowest_eigenpair(&k, &start, &[], 1e-13)?;
        let gap = if n > 1 {
            let e1 = lowest_eigenpair(&k, &start, &[e0.vector.clone()], 1e-10)?;
            e1.value - e0.value
        } else {
            f64::INFINITY
        };
        (e0.vector, e0.value, gap)
    };
    if gap < DEGENERACY_GAP {
        return Err(FockError::DegenerateGroundSpace { gap });
    }

    let big = v.iter().copied().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()).then(b.0.cmp(&a.0))).unwrap().1;
    let phase = big.conj() / big.norm();
    v.iter_mut().for_each(|x| *x *= phase);
    let mut state = StateVector::new(v);
    state.normalize();
    let eigenvalue = krylov::dot(state.amps(), &raw.matvec(state.amps())).re;

    let residual = conditions
        .iter()
        .map(|b| krylov::norm(&b.matrix.matvec(state.amps())).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(FiducialSolution { state, residual, eigenvalue, gap })
}

/// Matrices of a frame's raw conditions.
pub fn condition_matrices(
    frame: &crate::frame::FiducialFrame,
    space: &FockSpace,
    bindings: &Bindings,
) -> Result<Vec<MatrixOp>, FockError> {
    (0..frame.len()).map(|i| build_operator(&frame.condition_expr(i), space, bindings)).collect()
}

/// Fiducial vector of a checked model on `space`.
pub fn model_fiducial(model: &CheckedModel, space: &FockSpace) -> Result<FiducialSolution, FockError> {
    fiducial_solve(&condition_matrices(&model.fiducial, space, &model.bindings)?, space)
}

#[derive(Debug, Clone)]
pub struct CoherentState {
    pub state: StateVector,
    /// `max(|1 − ‖v‖|, population with some occupation ≥ D − 2)`.
    pub leakage: f64,
}

/// Population of basis states with some mode at occupation ≥ `D − 2`.
pub fn edge_population(space: &FockSpace, v: &StateVector) -> f64 {
    v.amps
        .iter()
        .enumerate()
        .filter(|(k, _)| space.occupations(*k).iter().zip(&space.modes).any(|(n, m)| n + 2 >= m.dim))
        .map(|(_, x)| x.norm_sqr())
        .sum()
}

/// `|p,q⟩ = exp(−i Σ q_n P_n/ℏ) exp(i Σ p_n Q_n/ℏ) |fiducial⟩`: the `Q` factor
/// acts first. `coords` lists the position generators carrying the shifts,
/// paired with `p` and `q` by index. Fails with `TruncationLeakage` when the
/// leakage indicator exceeds `bound`.
pub fn coherent_state(
    space: &FockSpace,
    fiducial: &StateVector,
    coords: &[Generator],
    p: &[f64],
    q: &[f64],
    bound: f64,
) -> Result<CoherentState, FockError> {
    check_dim(space.dim(), fiducial.len())?;
    check_dim(coords.len(), p.len())?;
    check_dim(coords.len(), q.len())?;
    let hbar = space.hbar;
    let n = space.dim();
    let mut sum_q = Csr::zeros(n, n);
    let mut sum_p = Csr::zeros(n, n);
    for (k, g) in coords.iter().enumerate() {
        let (qm, pm) = build_generators(space, g.set, g.mode)?;
        sum_q = sum_q.add_scaled(&qm.matrix, C64::new(p[k], 0.0));
        sum_p = sum_p.add_scaled(&pm.matrix, C64::new(q[k], 0.0));
    }
    let mut v = fiducial.amps.clone();
    if sum_q.nnz() > 0 {
        v = expm_action(&sum_q, &v, C64::new(0.0, 1.0 / hbar), 1e-13)?;
    }
    if sum_p.nnz() > 0 {
        v = expm_action(&sum_p, &v, C64::new(0.0, -1.0 / hbar), 1e-13)?;
    }
    let mut state = StateVector::new(v);
    let norm = state.normalize();
    let leakage = (1.0 - norm).abs().max(edge_population(space, &state));
    if leakage > bound {
        return Err(FockError::TruncationLeakage { leakage, bound });
    }
    Ok(CoherentState { state, leakage })
}

#[cfg(test)]
mod tests;
