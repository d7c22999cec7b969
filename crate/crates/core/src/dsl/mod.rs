//! The `.eqm` model language.
//!
//! A model file is a list of line-oriented statements:
//!
//! ```text
//! # harmonic oscillator
//! param hbar = 1, omega = 1
//! set pq modes 1
//! H = 1/2*(P[0]^2 + omega^2*Q[0]^2)
//! ```
//!
//! Statements are `param`, `set`, `frame`, `fiducial`, `shifted`,
//! `truncation` and `H = <expr>`. Inside expressions, `Q[n]`-style names are
//! generators of a declared set, `q[n]`-style names are classical shift
//! symbols, `i` is the imaginary unit and `hbar` is Planck's constant.
//! `:[ expr ]: @frame` is the normal product of `expr` in a declared frame.
//! The full grammar is in `docs/grammar.md`.

mod lexer;
mod parser;
mod render;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::expr::OperatorExpr;
use crate::generator::SetId;
use crate::scalar::Rational;

pub use parser::{parse_expr_ast, parse_operator, Ast, AstKind, BinOp};
pub use render::render_model;
pub use validate::{validate, CheckedModel, ModelError, DEFAULT_D_MULTI, DEFAULT_D_SINGLE, VACUUM_FRAME};

/// Source location: byte offset and length, plus 1-based line and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Span {
    pub offset: usize,
    pub len: usize,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub span: Span,
    pub message: String,
    /// What the parser would have accepted at this point, when known.
    pub expected: Option<String>,
}

impl Diagnostic {
    pub fn error(span: Span, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, span, message: message.into(), expected: None }
    }

    pub fn expected(span: Span, what: &str) -> Self {
        Diagnostic {
            severity: Severity::Error,
            span,
            message: format!("expected {what}"),
            expected: Some(what.to_string()),
        }
    }

    /// `file:line:col: severity: message`
    pub fn render(&self, file: &str) -> String {
        format!("{}:{}:{}: {}: {}", file, self.span.line, self.span.column, self.severity, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameDecl {
    pub name: String,
    /// Raw annihilation conditions, as written.
    pub conditions: Vec<OperatorExpr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Truncation {
    pub dim: u32,
    /// Frequency of the number basis; a numerical choice only.
    pub basis: Option<Rational>,
}

/// `plain + Σ_f :[ regions[f] ]: @f`
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Hamiltonian {
    pub plain: OperatorExpr,
    pub regions: BTreeMap<String, OperatorExpr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    /// Declared parameters; `None` keeps the parameter symbolic.
    pub params: BTreeMap<String, Option<Rational>>,
    pub sets: Vec<(SetId, u32)>,
    pub frames: Vec<FrameDecl>,
    pub fiducial: Option<String>,
    pub shifted: Option<BTreeSet<SetId>>,
    pub truncation: Option<Truncation>,
    pub hamiltonian: Hamiltonian,
}

impl ModelSpec {
    pub fn total_modes(&self) -> usize {
        self.sets.iter().map(|(_, n)| *n as usize).sum()
    }

    pub fn frame(&self, name: &str) -> Option<&FrameDecl> {
        self.frames.iter().find(|f| f.name == name)
    }

    /// Sets a parameter value, declaring the parameter if needed.
    pub fn set_param(&mut self, name: &str, value: Rational) {
        self.params.insert(name.to_string(), Some(value));
    }
}

/// Parses a model; on failure every problem found is reported.
pub fn parse_model(text: &str) -> Result<ModelSpec, Vec<Diagnostic>> {
    parser::parse(text)
}

#[cfg(test)]
mod tests;
