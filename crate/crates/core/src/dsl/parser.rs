use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::lexer::{lex, LineIndex, Tok, Token};
use super::{Diagnostic, FrameDecl, Hamiltonian, ModelSpec, Span, Truncation};
use crate::expr::{OperatorExpr, MAX_DEGREE};
use crate::generator::{Generator, Kind, SetId};
use crate::scalar::{Atom, Rational, ScalarPoly};

const MAX_NESTING: usize = 200;
const MAX_MODES: u32 = 64;
const KEYWORDS: [&str; 8] = ["param", "set", "modes", "frame", "fiducial", "shifted", "truncation", "basis"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Expression syntax tree, kept for precedence tests and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Ast {
    pub kind: AstKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AstKind {
    Int(BigInt),
    Name(String),
    /// `X[n]` with an uppercase or lowercase letter.
    Indexed(char, u32),
    Neg(Box<Ast>),
    Bin(BinOp, Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, i64),
    Region(Box<Ast>, String),
}

/// S-expression rendering: `(+ a (* b c))`.
impl fmt::Display for Ast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            AstKind::Int(n) => write!(f, "{n}"),
            AstKind::Name(s) => f.write_str(s),
            AstKind::Indexed(c, n) => write!(f, "{c}[{n}]"),
            AstKind::Neg(a) => write!(f, "(neg {a})"),
            AstKind::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                write!(f, "({s} {a} {b})")
            }
            AstKind::Pow(a, k) => write!(f, "(^ {a} {k})"),
            AstKind::Region(a, frame) => write!(f, "(: {a} @{frame})"),
        }
    }
}

enum Stmt {
    Param(Vec<(String, Option<Rational>, Span)>),
    Set(String, u32, Span),
    Frame(String, Vec<Ast>, Span),
    Fiducial(String, Span),
    Shifted(Vec<(String, Span)>, Span),
    Truncation(u32, Option<Rational>, Span),
    Hamiltonian(Ast, Span),
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    depth: usize,
    diags: Vec<Diagnostic>,
}

type PResult<T> = Result<T, ()>;

impl Parser {
    fn new(text: &str) -> Self {
        let mut diags = Vec::new();
        let toks = lex(text, &mut diags);
        Parser { toks, pos: 0, depth: 0, diags }
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at(&self, t: &Tok) -> bool {
        &self.peek().tok == t
    }

    fn fail<T>(&mut self, d: Diagnostic) -> PResult<T> {
        self.diags.push(d);
        Err(())
    }

    fn expect(&mut self, t: Tok, what: &str) -> PResult<Token> {
        if self.at(&t) {
            Ok(self.bump())
        } else {
            let span = self.peek().span;
            self.fail(Diagnostic::expected(span, what))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Span)> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                let span = self.bump().span;
                Ok((s, span))
            }
            _ => {
                let span = self.peek().span;
                self.fail(Diagnostic::expected(span, what))
            }
        }
    }

    fn int(&mut self, what: &str) -> PResult<(BigInt, Span)> {
        match &self.peek().tok {
            Tok::Int(s) => {
                let n: BigInt = s.parse().expect("lexer only emits digits");
                let span = self.bump().span;
                Ok((n, span))
            }
            _ => {
                let span = self.peek().span;
                self.fail(Diagnostic::expected(span, what))
            }
        }
    }

    fn small_int(&mut self, what: &str) -> PResult<(u32, Span)> {
        let (n, span) = self.int(what)?;
        match u32::try_from(&n) {
            Ok(v) => Ok((v, span)),
            Err(_) => self.fail(Diagnostic::error(span, format!("integer {n} is too large"))),
        }
    }

    fn join(&self, a: Span, b: Span) -> Span {
        let end = (b.offset + b.len).max(a.offset + a.len);
        Span { len: end - a.offset, ..a }
    }

    /// `['-'] INT ['/' INT]`
    fn rational(&mut self) -> PResult<(Rational, Span)> {
        let start = self.peek().span;
        let neg = if self.at(&Tok::Minus) {
            self.bump();
            true
        } else {
            false
        };
        let (n, mut end) = self.int("a rational number")?;
        let mut d = BigInt::from(1);
        if self.at(&Tok::Slash) {
            self.bump();
            let (x, s) = self.int("a denominator")?;
            if x.is_zero() {
                return self.fail(Diagnostic::error(s, "zero denominator"));
            }
            d = x;
            end = s;
        }
        let r = Rational::new(if neg { -n } else { n }, d);
        Ok((r, self.join(start, end)))
    }

    fn skip_line(&mut self) {
        while !matches!(self.peek().tok, Tok::Newline | Tok::Eof) {
            self.bump();
        }
    }

    fn statements(&mut self) -> Vec<Stmt> {
        let mut out = Vec::new();
        loop {
            while self.at(&Tok::Newline) {
                self.bump();
            }
            if self.at(&Tok::Eof) {
                break;
            }
            match self.statement() {
                Ok(s) => {
                    out.push(s);
                    if !matches!(self.peek().tok, Tok::Newline | Tok::Eof) {
                        let span = self.peek().span;
                        self.diags.push(Diagnostic::expected(span, "end of line"));
                        self.skip_line();
                    }
                }
                Err(()) => self.skip_line(),
            }
        }
        out
    }

    fn statement(&mut self) -> PResult<Stmt> {
        self.depth = 0;
        let head = self.peek().clone();
        let kw = match &head.tok {
            Tok::Ident(s) => s.clone(),
            _ => return self.fail(Diagnostic::expected(head.span, "a statement")),
        };
        if kw == "H" && self.peek_at(1) == &Tok::Eq {
            self.bump();
            self.bump();
            let e = self.expr()?;
            return Ok(Stmt::Hamiltonian(e, head.span));
        }
        match kw.as_str() {
            "param" => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    let (name, span) = self.ident("a parameter name")?;
                    let value = if self.at(&Tok::Eq) {
                        self.bump();
                        Some(self.rational()?.0)
                    } else {
                        None
                    };
                    items.push((name, value, span));
                    if !self.at(&Tok::Comma) {
                        break;
                    }
                    self.bump();
                }
                Ok(Stmt::Param(items))
            }
            "set" => {
                self.bump();
                let (name, span) = self.ident("an operator set name")?;
                match &self.peek().tok {
                    Tok::Ident(s) if s == "modes" => {
                        self.bump();
                    }
                    _ => {
                        let span = self.peek().span;
                        return self.fail(Diagnostic::expected(span, "`modes`"));
                    }
                }
                let (n, nspan) = self.small_int("a mode count")?;
                if n == 0 || n > MAX_MODES {
                    return self.fail(Diagnostic::error(
                        nspan,
                        format!("mode count must be between 1 and {MAX_MODES}"),
                    ));
                }
                Ok(Stmt::Set(name, n, span))
            }
            "frame" => {
                self.bump();
                let (name, span) = self.ident("a frame name")?;
                self.expect(Tok::Eq, "`=`")?;
                let mut conds = vec![self.expr()?];
                while self.at(&Tok::Comma) {
                    self.bump();
                    conds.push(self.expr()?);
                }
                Ok(Stmt::Frame(name, conds, span))
            }
            "fiducial" => {
                self.bump();
                let (name, span) = self.ident("a frame name")?;
                Ok(Stmt::Fiducial(name, span))
            }
            "shifted" => {
                self.bump();
                let mut items = vec![self.ident("an operator set name")?];
                while self.at(&Tok::Comma) {
                    self.bump();
                    items.push(self.ident("an operator set name")?);
                }
                Ok(Stmt::Shifted(items, head.span))
            }
            "truncation" => {
                self.bump();
                let (d, _) = self.small_int("a truncation dimension")?;
                let basis = match &self.peek().tok {
                    Tok::Ident(s) if s == "basis" => {
                        self.bump();
                        let (r, span) = self.rational()?;
                        if !r.is_positive() {
                            return self.fail(Diagnostic::error(span, "basis frequency must be positive"));
                        }
                        Some(r)
                    }
                    _ => None,
                };
                Ok(Stmt::Truncation(d, basis, head.span))
            }
            _ => self.fail(Diagnostic::expected(head.span, "a statement")),
        }
    }

    fn nest(&mut self, span: Span) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return self.fail(Diagnostic::error(span, "expression nested too deeply"));
        }
        Ok(())
    }

    fn expr(&mut self) -> PResult<Ast> {
        let start = self.peek().span;
        self.nest(start)?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            let span = self.join(lhs.span, rhs.span);
            lhs = Ast { kind: AstKind::Bin(op, Box::new(lhs), Box::new(rhs)), span };
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> PResult<Ast> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.unary()?;
            let span = self.join(lhs.span, rhs.span);
            lhs = Ast { kind: AstKind::Bin(op, Box::new(lhs), Box::new(rhs)), span };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Ast> {
        if self.at(&Tok::Minus) {
            let start = self.bump().span;
            self.nest(start)?;
            let inner = self.unary()?;
            self.depth -= 1;
            let span = self.join(start, inner.span);
            return Ok(Ast { kind: AstKind::Neg(Box::new(inner)), span });
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Ast> {
        let base = self.primary()?;
        if !self.at(&Tok::Caret) {
            return Ok(base);
        }
        self.bump();
        let neg = if self.at(&Tok::Minus) {
            self.bump();
            true
        } else {
            false
        };
        let (k, kspan) = self.int("an integer exponent")?;
        let k = match i64::try_from(&k) {
            Ok(v) if v <= MAX_DEGREE as i64 => v,
            _ => {
                return self.fail(Diagnostic::error(kspan, format!("exponent exceeds {MAX_DEGREE}")));
            }
        };
        let span = self.join(base.span, kspan);
        Ok(Ast { kind: AstKind::Pow(Box::new(base), if neg { -k } else { k }), span })
    }

    fn primary(&mut self) -> PResult<Ast> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Int(_) => {
                let (n, span) = self.int("a number")?;
                Ok(Ast { kind: AstKind::Int(n), span })
            }
            Tok::Ident(name) => {
                self.bump();
                if self.at(&Tok::LBracket) {
                    let mut chars = name.chars();
                    let c = chars.next().unwrap();
                    if chars.next().is_some() || !c.is_ascii_alphabetic() {
                        let span = self.peek().span;
                        return self.fail(Diagnostic::error(
                            span,
                            format!("only single-letter names take an index, found `{name}[`"),
                        ));
                    }
                    self.bump();
                    let (n, _) = self.small_int("a mode index")?;
                    let close = self.expect(Tok::RBracket, "']'")?;
                    return Ok(Ast { kind: AstKind::Indexed(c, n), span: self.join(t.span, close.span) });
                }
                Ok(Ast { kind: AstKind::Name(name), span: t.span })
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                let close = self.expect(Tok::RParen, "')'")?;
                Ok(Ast { kind: e.kind, span: self.join(t.span, close.span) })
            }
            Tok::RegionOpen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RegionClose, "']:'")?;
                self.expect(Tok::At, "'@' and a frame name")?;
                let (frame, fspan) = self.ident("a frame name")?;
                Ok(Ast { kind: AstKind::Region(Box::new(e), frame), span: self.join(t.span, fspan) })
            }
            _ => self.fail(Diagnostic::expected(t.span, "an expression")),
        }
    }
}

/// Parses a single expression (no statements) into its syntax tree.
pub fn parse_expr_ast(text: &str) -> Result<Ast, Vec<Diagnostic>> {
    let mut p = Parser::new(text);
    let r = p.expr();
    if r.is_ok() && !p.at(&Tok::Eof) {
        let span = p.peek().span;
        p.diags.push(Diagnostic::expected(span, "end of input"));
    }
    match r {
        Ok(a) if p.diags.is_empty() => Ok(a),
        _ => Err(p.diags),
    }
}

/// Lowers a standalone operator expression using the sets and parameters
/// of `spec`. Regions are not allowed.
pub fn parse_operator(spec: &ModelSpec, text: &str) -> Result<OperatorExpr, Vec<Diagnostic>> {
    let ast = parse_expr_ast(text)?;
    let frames = spec.frames.iter().map(|f| f.name.clone()).collect();
    let scope = Scope { params: &spec.params, sets: &spec.sets, frames: &frames };
    scope.lower_plain(&ast).map_err(|d| vec![d])
}

/// Expression value during lowering: operators outside regions, plus the
/// contents of each `:[ ]: @frame` region.
#[derive(Clone, Default)]
struct Val {
    plain: OperatorExpr,
    regions: BTreeMap<String, OperatorExpr>,
}

impl Val {
    fn scalar(s: ScalarPoly) -> Self {
        Val { plain: OperatorExpr::scalar(s), regions: BTreeMap::new() }
    }

    fn as_scalar(&self) -> Option<ScalarPoly> {
        if !self.regions.is_empty() || self.plain.degree() > 0 {
            return None;
        }
        Some(self.plain.scalar_part())
    }

    fn scale(&self, s: &ScalarPoly) -> Val {
        Val {
            plain: self.plain.scale(s),
            regions: self
                .regions
                .iter()
                .map(|(k, v)| (k.clone(), v.scale(s)))
                .filter(|(_, v)| !v.is_zero())
                .collect(),
        }
    }

    fn add(mut self, other: Val, sign: i64) -> Val {
        let k = ScalarPoly::int(sign);
        self.plain = &self.plain + &other.plain.scale(&k);
        for (f, e) in other.regions {
            let slot = self.regions.entry(f).or_default();
            *slot = &*slot + &e.scale(&k);
        }
        self.regions.retain(|_, v| !v.is_zero());
        self
    }
}

struct Scope<'s> {
    params: &'s BTreeMap<String, Option<Rational>>,
    sets: &'s [(SetId, u32)],
    frames: &'s BTreeSet<String>,
}

impl Scope<'_> {
    fn generator(&self, c: char, n: u32, span: Span) -> Result<Generator, Diagnostic> {
        let (set, kind, count) = self
            .sets
            .iter()
            .find_map(|(s, count)| {
                let l = c.to_ascii_uppercase();
                if s.position_letter() == l {
                    Some((*s, Kind::Position, *count))
                } else if s.momentum_letter() == l {
                    Some((*s, Kind::Momentum, *count))
                } else {
                    None
                }
            })
            .ok_or_else(|| Diagnostic::error(span, format!("unknown identifier `{c}`: no declared set uses this letter")))?;
        if n >= count {
            return Err(Diagnostic::error(
                span,
                format!("arity mismatch: set {set} has {count} mode(s), index {n} is out of range"),
            ));
        }
        Ok(Generator { set, mode: n, kind })
    }

    fn lower(&self, a: &Ast) -> Result<Val, Diagnostic> {
        match &a.kind {
            AstKind::Int(n) => Ok(Val::scalar(ScalarPoly::rational(Rational::from_integer(n.clone())))),
            AstKind::Name(s) => match s.as_str() {
                "i" => Ok(Val::scalar(ScalarPoly::i())),
                "hbar" => Ok(Val::scalar(ScalarPoly::hbar())),
                _ if self.params.contains_key(s) => Ok(Val::scalar(ScalarPoly::param(s))),
                _ => Err(Diagnostic::error(a.span, format!("unknown identifier `{s}`"))),
            },
            AstKind::Indexed(c, n) => {
                let g = self.generator(*c, *n, a.span)?;
                if c.is_ascii_uppercase() {
                    Ok(Val { plain: OperatorExpr::generator(g), regions: BTreeMap::new() })
                } else {
                    Ok(Val::scalar(ScalarPoly::shift(g)))
                }
            }
            AstKind::Neg(x) => Ok(self.lower(x)?.scale(&ScalarPoly::int(-1))),
            AstKind::Bin(op, x, y) => {
                let l = self.lower(x)?;
                let r = self.lower(y)?;
                match op {
                    BinOp::Add => Ok(l.add(r, 1)),
                    BinOp::Sub => Ok(l.add(r, -1)),
                    BinOp::Mul => {
                        if let Some(s) = l.as_scalar() {
                            return Ok(r.scale(&s));
                        }
                        if let Some(s) = r.as_scalar() {
                            return Ok(l.scale(&s));
                        }
                        if !l.regions.is_empty() || !r.regions.is_empty() {
                            return Err(Diagnostic::error(
                                a.span,
                                "a normal-ordered region can only be multiplied by a scalar",
                            ));
                        }
                        let d = l.plain.degree() + r.plain.degree();
                        if d > MAX_DEGREE {
                            return Err(Diagnostic::error(a.span, format!("degree {d} exceeds the cap of {MAX_DEGREE}")));
                        }
                        Ok(Val { plain: &l.plain * &r.plain, regions: BTreeMap::new() })
                    }
                    BinOp::Div => {
                        let s = r
                            .as_scalar()
                            .ok_or_else(|| Diagnostic::error(y.span, "can only divide by a scalar"))?;
                        let inv = s.inverse().map_err(|_| {
                            Diagnostic::error(y.span, format!("cannot divide by `{}`", s.render()))
                        })?;
                        Ok(l.scale(&inv))
                    }
                }
            }
            AstKind::Pow(x, k) => {
                let b = self.lower(x)?;
                if let Some(s) = b.as_scalar() {
                    let v = s.powi(*k as i32).map_err(|_| {
                        Diagnostic::error(a.span, format!("`{}` has no inverse", s.render()))
                    })?;
                    return Ok(Val::scalar(v));
                }
                if !b.regions.is_empty() {
                    return Err(Diagnostic::error(a.span, "a normal-ordered region cannot be raised to a power"));
                }
                if *k < 0 {
                    return Err(Diagnostic::error(a.span, "operators cannot be raised to negative powers"));
                }
                let d = b.plain.degree() * *k as usize;
                if d > MAX_DEGREE {
                    return Err(Diagnostic::error(a.span, format!("degree {d} exceeds the cap of {MAX_DEGREE}")));
                }
                Ok(Val { plain: b.plain.pow(*k as u32), regions: BTreeMap::new() })
            }
            AstKind::Region(x, frame) => {
                if !self.frames.contains(frame) {
                    return Err(Diagnostic::error(a.span, format!("unknown frame `{frame}`")));
                }
                let inner = self.lower(x)?;
                if !inner.regions.is_empty() {
                    return Err(Diagnostic::error(a.span, "normal-ordered regions cannot be nested"));
                }
                let mut regions = BTreeMap::new();
                if !inner.plain.is_zero() {
                    regions.insert(frame.clone(), inner.plain);
                }
                Ok(Val { plain: OperatorExpr::zero(), regions })
            }
        }
    }

    fn lower_plain(&self, a: &Ast) -> Result<OperatorExpr, Diagnostic> {
        let v = self.lower(a)?;
        if !v.regions.is_empty() {
            return Err(Diagnostic::error(a.span, "normal-ordered regions are only allowed in `H`"));
        }
        Ok(v.plain)
    }
}

fn check_name(name: &str, span: Span, what: &str, diags: &mut Vec<Diagnostic>) -> bool {
    if name == "i" || name == "H" || KEYWORDS.contains(&name) {
        diags.push(Diagnostic::error(span, format!("`{name}` is reserved and cannot name a {what}")));
        return false;
    }
    true
}

pub(super) fn parse(text: &str) -> Result<ModelSpec, Vec<Diagnostic>> {
    let mut p = Parser::new(text);
    let stmts = p.statements();
    let mut diags = std::mem::take(&mut p.diags);
    let eof = LineIndex::new(text).span(text, text.len(), 0);

    let mut params: BTreeMap<String, Option<Rational>> = BTreeMap::new();
    let mut sets: Vec<(SetId, u32)> = Vec::new();
    let mut frame_names = BTreeSet::new();
    let mut fiducial = None;
    let mut shifted_raw: Option<Vec<(String, Span)>> = None;
    let mut truncation = None;
    let mut h_ast: Option<&Ast> = None;
    let mut frame_asts: Vec<(&str, &[Ast])> = Vec::new();

    let dup = |span: Span, what: String, diags: &mut Vec<Diagnostic>| {
        diags.push(Diagnostic::error(span, format!("duplicate declaration of {what}")));
    };

    for s in &stmts {
        match s {
            Stmt::Param(items) => {
                for (name, v, span) in items {
                    if name != "hbar" && !check_name(name, *span, "parameter", &mut diags) {
                        continue;
                    }
                    if params.contains_key(name) {
                        dup(*span, format!("parameter `{name}`"), &mut diags);
                    } else {
                        params.insert(name.clone(), v.clone());
                    }
                }
            }
            Stmt::Set(name, n, span) => match SetId::new(name) {
                Ok(id) => {
                    let letters = [id.position_letter(), id.momentum_letter()];
                    if sets.iter().any(|(o, _)| *o == id) {
                        dup(*span, format!("set `{name}`"), &mut diags);
                    } else if sets
                        .iter()
                        .any(|(o, _)| letters.contains(&o.position_letter()) || letters.contains(&o.momentum_letter()))
                    {
                        diags.push(Diagnostic::error(*span, format!("set `{name}` reuses a letter of an earlier set")));
                    } else {
                        sets.push((id, *n));
                    }
                }
                Err(e) => diags.push(Diagnostic::error(*span, e.to_string())),
            },
            Stmt::Frame(name, conds, span) => {
                if !check_name(name, *span, "frame", &mut diags) {
                    continue;
                }
                if !frame_names.insert(name.clone()) {
                    dup(*span, format!("frame `{name}`"), &mut diags);
                } else {
                    frame_asts.push((name, conds));
                }
            }
            Stmt::Fiducial(name, span) => {
                if fiducial.is_some() {
                    dup(*span, "the fiducial frame".into(), &mut diags);
                } else {
                    fiducial = Some((name.clone(), *span));
                }
            }
            Stmt::Shifted(items, span) => {
                if shifted_raw.is_some() {
                    dup(*span, "the shifted sets".into(), &mut diags);
                } else {
                    shifted_raw = Some(items.clone());
                }
            }
            Stmt::Truncation(d, basis, span) => {
                if truncation.is_some() {
                    dup(*span, "the truncation".into(), &mut diags);
                } else {
                    truncation = Some(Truncation { dim: *d, basis: basis.clone() });
                }
            }
            Stmt::Hamiltonian(e, span) => {
                if h_ast.is_some() {
                    dup(*span, "`H`".into(), &mut diags);
                } else {
                    h_ast = Some(e);
                }
            }
        }
    }

    if sets.is_empty() && diags.is_empty() {
        diags.push(Diagnostic::error(eof, "no operator set declared (e.g. `set pq modes 1`)"));
    }
    let scope = Scope { params: &params, sets: &sets, frames: &frame_names };

    let mut frames = Vec::new();
    for (name, conds) in frame_asts {
        let mut lowered = Vec::new();
        for c in conds {
            match scope.lower_plain(c) {
                Ok(e) => lowered.push(e),
                Err(d) => diags.push(d),
            }
        }
        frames.push(FrameDecl { name: name.to_string(), conditions: lowered });
    }

    if let Some((name, span)) = &fiducial {
        if !frame_names.contains(name) {
            diags.push(Diagnostic::error(*span, format!("unknown frame `{name}`")));
        }
    }

    let shifted = shifted_raw.map(|items| {
        let mut out = BTreeSet::new();
        for (name, span) in items {
            match sets.iter().find(|(s, _)| s.to_string() == name) {
                Some((s, _)) => {
                    out.insert(*s);
                }
                None => diags.push(Diagnostic::error(span, format!("unknown operator set `{name}`"))),
            }
        }
        out
    });

    let hamiltonian = match h_ast {
        None => {
            if diags.is_empty() {
                diags.push(Diagnostic::error(eof, "missing Hamiltonian (`H = ...`)"));
            }
            Hamiltonian::default()
        }
        Some(a) => match scope.lower(a) {
            Ok(v) => Hamiltonian { plain: v.plain, regions: v.regions },
            Err(d) => {
                diags.push(d);
                Hamiltonian::default()
            }
        },
    };

    if !diags.is_empty() {
        return Err(diags);
    }
    Ok(ModelSpec {
        params,
        sets,
        frames,
        fiducial: fiducial.map(|(n, _)| n),
        shifted,
        truncation,
        hamiltonian,
    })
}

/// Looks up the atom a parameter name lowers to.
pub(super) fn param_atom(name: &str) -> Atom {
    if name == "hbar" {
        Atom::Hbar
    } else {
        Atom::param(name)
    }
}
