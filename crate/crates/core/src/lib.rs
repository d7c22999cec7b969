//! Coherent-state quantization laboratory.
//!
//! The crate pairs an exact operator-algebra engine (generators, scalar
//! polynomials, fiducial frames, normal ordering) with truncated Fock-space
//! numerics, so that the classical Hamiltonian `H(p,q) = ⟨p,q|𝓗|p,q⟩` can be
//! computed both ways and compared.
//!
//! Module map:
//! - [`scalar`], [`generator`], [`expr`], [`frame`], [`ordering`]: exact algebra.
//! - [`dsl`]: the `.eqm` model language.
//! - [`fock`]: sparse matrices, fiducial vectors, coherent states.
//! - [`correspondence`]: symbolic/numeric `H(p,q)`, ℏ split, Fubini–Study metric.
//! - [`dynamics`]: Schrödinger propagation and reduced classical flow.
//! - [`rotsym`]: the rotationally symmetric model with a second operator set.
//! - [`cli`]: the `eqlab` command-line front end.

pub mod cli;
pub mod correspondence;
pub mod dsl;
pub mod dynamics;
pub mod expr;
pub mod fock;
pub mod frame;
pub mod generator;
pub mod rotsym;
pub mod ordering;
pub mod scalar;

pub use expr::{canonicalize, displace, hermitian_check, OperatorExpr, OrderTag};
pub use frame::{FiducialFrame, FrameError};
pub use generator::{Generator, Kind, SetId};
pub use ordering::{fiducial_expectation, normal_order, normal_product, wcp_symbolic, AlgebraError};
pub use scalar::{Atom, Bindings, ScalarPoly};
