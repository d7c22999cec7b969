use std::collections::{BTreeMap, BTreeSet};

use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use super::parser::param_atom;
use super::{Diagnostic, ModelSpec, Span};
use crate::expr::{hermitian_check, OperatorExpr};
use crate::frame::{vacuum_frame, FiducialFrame, FrameError};
use crate::generator::{Generator, SetId};
use crate::ordering::{normal_product, AlgebraError};
use crate::scalar::{rational_to_f64, Atom, Bindings, Coeff, ScalarError, ScalarPoly};

/// Name of the frame synthesized when a model declares none.
pub const VACUUM_FRAME: &str = "vacuum";

/// Default per-mode truncation for one mode and for several.
pub const DEFAULT_D_SINGLE: u32 = 64;
pub const DEFAULT_D_MULTI: u32 = 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("frame `{frame}`: Gram matrix is not positive definite (leading minor {order} is {minor})")]
    GramNotPositiveDefinite { frame: String, order: usize, minor: String },
    #[error("Hamiltonian is not Hermitian")]
    NonHermitianHamiltonian,
    #[error("frame `{frame}`: fiducial conditions are linearly dependent")]
    DependentFiducialConditions { frame: String },
    #[error("frame `{frame}` has {conditions} conditions but the model has {modes} modes")]
    ConditionCount { frame: String, conditions: usize, modes: usize },
    #[error("fiducial frame `{frame}` does not involve {generator}")]
    FiducialCoverage { frame: String, generator: Generator },
    #[error("several frames are declared; name the fiducial one with `fiducial <name>`")]
    AmbiguousFiducial,
    #[error("unknown frame `{0}`")]
    UnknownFrame(String),
    #[error("truncation dimension {0} is below the minimum of 4")]
    Truncation(u32),
    #[error(transparent)]
    Frame(FrameError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

impl From<FrameError> for ModelError {
    fn from(e: FrameError) -> Self {
        match e {
            FrameError::GramNotPositiveDefinite { frame, order, minor } => {
                ModelError::GramNotPositiveDefinite { frame, order, minor }
            }
            FrameError::Dependent { frame } => ModelError::DependentFiducialConditions { frame },
            other => ModelError::Frame(other),
        }
    }
}

/// A model whose frames, Hamiltonian and truncation have been checked.
#[derive(Debug, Clone)]
pub struct CheckedModel {
    pub spec: ModelSpec,
    /// Bound parameters substituted, regions replaced by their normal
    /// products; `hbar` and unbound parameters stay symbolic.
    pub hamiltonian: OperatorExpr,
    pub frames: BTreeMap<String, FiducialFrame>,
    /// Frame whose joint null vector is the fiducial state.
    pub fiducial: FiducialFrame,
    pub shifted: BTreeSet<SetId>,
    pub truncation: u32,
    /// Frequency of the number basis used by the numerics.
    pub basis_omega: f64,
    /// Numeric values: every bound parameter and `hbar`.
    pub bindings: Bindings,
}

impl CheckedModel {
    pub fn hbar(&self) -> f64 {
        self.bindings.hbar().unwrap_or(1.0)
    }

    pub fn total_modes(&self) -> usize {
        self.spec.total_modes()
    }

    /// Position generators in set/mode order.
    pub fn positions(&self) -> Vec<Generator> {
        self.spec.sets.iter().flat_map(|(s, n)| (0..*n).map(move |k| s.position(k))).collect()
    }

    /// Position generators of the shifted sets: the coordinates `q` of a
    /// coherent state (momenta `p` follow the same order).
    pub fn shifted_positions(&self) -> Vec<Generator> {
        self.positions().into_iter().filter(|g| self.shifted.contains(&g.set)).collect()
    }

    /// Parses an operator in this model's scope and substitutes the bound
    /// parameters other than `hbar`.
    pub fn operator(&self, text: &str) -> Result<OperatorExpr, Vec<Diagnostic>> {
        let e = super::parse_operator(&self.spec, text)?;
        let values: BTreeMap<Atom, ScalarPoly> = self
            .spec
            .params
            .iter()
            .filter_map(|(name, v)| Some((param_atom(name), ScalarPoly::rational(v.clone()?))))
            .filter(|(a, _)| *a != Atom::Hbar)
            .collect();
        substitute_params(&e, &values).map_err(|err| vec![Diagnostic::error(Span { offset: 0, len: 0, line: 1, column: 1 }, err.to_string())])
    }

    /// Frame used for the `normal-order` command: the fiducial one unless
    /// another is named.
    pub fn frame(&self, name: &str) -> Option<&FiducialFrame> {
        if self.fiducial.name() == name {
            return Some(&self.fiducial);
        }
        self.frames.get(name)
    }
}

fn substitute_params(
    e: &OperatorExpr,
    values: &BTreeMap<Atom, ScalarPoly>,
) -> Result<OperatorExpr, ScalarError> {
    e.map_coefficients(|c| c.substitute(&|a| values.get(a).cloned()))
}

/// Exact rank of the coefficient matrix; `None` if an entry is symbolic.
fn numeric_rank(rows: &[Vec<ScalarPoly>]) -> Option<usize> {
    let mut a: Vec<Vec<Coeff>> = Vec::new();
    for r in rows {
        a.push(r.iter().map(|x| x.as_constant()).collect::<Option<Vec<_>>>()?);
    }
    let cols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..a.len()).find(|&r| !a[r][c].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        let pivot = a[rank][c].clone();
        for r in 0..a.len() {
            if r != rank && !a[r][c].is_zero() {
                let f = &a[r][c] / &pivot;
                for k in c..cols {
                    let v = &a[rank][k] * &f;
                    a[r][k] = &a[r][k] - &v;
                }
            }
        }
        rank += 1;
    }
    Some(rank)
}

fn check_independent(name: &str, conds: &[OperatorExpr]) -> Result<(), ModelError> {
    let gens: BTreeSet<Generator> = conds.iter().flat_map(|c| c.generators()).collect();
    let rows: Vec<Vec<ScalarPoly>> =
        conds.iter().map(|c| gens.iter().map(|g| c.coefficient(&[*g])).collect()).collect();
    match numeric_rank(&rows) {
        Some(r) if r < conds.len() => Err(ModelError::DependentFiducialConditions { frame: name.to_string() }),
        _ => Ok(()),
    }
}

/// Physical frequency of the implicit vacuum frame: `omega`, `m0` or `m`,
/// else 1.
fn default_frequency(values: &BTreeMap<Atom, ScalarPoly>, spec: &ModelSpec) -> ScalarPoly {
    for name in ["omega", "m0", "m"] {
        if spec.params.contains_key(name) {
            let a = Atom::param(name);
            return values.get(&a).cloned().unwrap_or_else(|| ScalarPoly::atom(a));
        }
    }
    ScalarPoly::one()
}

/// Checks a parsed model and prepares it for both engines.
pub fn validate(spec: &ModelSpec) -> Result<CheckedModel, ModelError> {
    let mut values: BTreeMap<Atom, ScalarPoly> = BTreeMap::new();
    let mut bindings = Bindings::new().with_hbar(1.0);
    for (name, v) in &spec.params {
        if let Some(r) = v {
            let a = param_atom(name);
            bindings.set(a.clone(), rational_to_f64(r));
            if a != Atom::Hbar {
                values.insert(a, ScalarPoly::rational(r.clone()));
            }
        }
    }

    let mut frames = BTreeMap::new();
    for decl in &spec.frames {
        let conds = decl
            .conditions
            .iter()
            .map(|c| substitute_params(c, &values))
            .collect::<Result<Vec<_>, _>>()?;
        check_independent(&decl.name, &conds)?;
        frames.insert(decl.name.clone(), FiducialFrame::new(&decl.name, &conds)?);
    }

    let fiducial = match (&spec.fiducial, frames.len()) {
        (Some(name), _) => frames.get(name).ok_or_else(|| ModelError::UnknownFrame(name.clone()))?.clone(),
        (None, 1) => frames.values().next().unwrap().clone(),
        (None, 0) => {
            let omega = default_frequency(&values, spec);
            let modes: Vec<(Generator, ScalarPoly)> = spec
                .sets
                .iter()
                .flat_map(|(s, n)| (0..*n).map(move |k| s.position(k)))
                .map(|g| (g, omega.clone()))
                .collect();
            vacuum_frame(VACUUM_FRAME, &modes)?
        }
        (None, _) => return Err(ModelError::AmbiguousFiducial),
    };
    let modes = spec.total_modes();
    if fiducial.len() != modes {
        return Err(ModelError::ConditionCount {
            frame: fiducial.name().to_string(),
            conditions: fiducial.len(),
            modes,
        });
    }
    for (s, n) in &spec.sets {
        for k in 0..*n {
            for g in [s.position(k), s.momentum(k)] {
                if !fiducial.contains(&g) {
                    return Err(ModelError::FiducialCoverage { frame: fiducial.name().to_string(), generator: g });
                }
            }
        }
    }

    let mut h = substitute_params(&spec.hamiltonian.plain, &values)?;
    for (name, region) in &spec.hamiltonian.regions {
        let e = substitute_params(region, &values)?;
        let f = frames.get(name).ok_or_else(|| ModelError::UnknownFrame(name.clone()))?;
        h = &h + &normal_product(&e, f)?;
    }
    let h = h.with_tag(crate::expr::OrderTag::Raw);
    if !hermitian_check(&h) {
        return Err(ModelError::NonHermitianHamiltonian);
    }

    let default_d = if modes == 1 { DEFAULT_D_SINGLE } else { DEFAULT_D_MULTI };
    let truncation = spec.truncation.as_ref().map_or(default_d, |t| t.dim);
    if truncation < 4 {
        return Err(ModelError::Truncation(truncation));
    }
    let basis_omega = match spec.truncation.as_ref().and_then(|t| t.basis.as_ref()) {
        Some(b) => rational_to_f64(b),
        None => default_frequency(&values, spec)
            .as_constant()
            .and_then(|c| c.re.to_f64())
            .filter(|w| *w > 0.0)
            .unwrap_or(1.0),
    };

    let shifted = spec.shifted.clone().unwrap_or_else(|| spec.sets.iter().map(|(s, _)| *s).collect());

    Ok(CheckedModel {
        spec: spec.clone(),
        hamiltonian: h,
        frames,
        fiducial,
        shifted,
        truncation,
        basis_omega,
        bindings,
    })
}
