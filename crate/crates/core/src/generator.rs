//! Canonical generators `Q[n]`, `P[n]` and their companions in further
//! operator sets.
//!
//! An operator set is named by two lowercase letters: the first is the
//! momentum letter, the second the position letter. The set `pq` holds
//! `P[n]`, `Q[n]`; the set `rs` holds `R[n]`, `S[n]`. Within a set and mode
//! the only non-trivial commutator is `[position, momentum] = i·hbar`.

use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SetIdError {
    #[error("operator set name `{0}` must be two distinct lowercase letters")]
    Malformed(String),
    #[error("operator set name `{0}` uses the reserved letter `i`")]
    Reserved(String),
}

/// Two-letter operator set name, momentum letter first.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SetId(u16);

impl SetId {
    pub fn new(name: &str) -> Result<Self, SetIdError> {
        let bytes = name.as_bytes();
        if bytes.len() != 2
            || !bytes.iter().all(|b| b.is_ascii_lowercase())
            || bytes[0] == bytes[1]
        {
            return Err(SetIdError::Malformed(name.to_string()));
        }
        if bytes.contains(&b'i') {
            return Err(SetIdError::Reserved(name.to_string()));
        }
        Ok(SetId::from_bytes(bytes[0], bytes[1]))
    }

    const fn from_bytes(momentum: u8, position: u8) -> Self {
        SetId(((momentum as u16) << 8) | position as u16)
    }

    fn bytes(self) -> [u8; 2] {
        self.0.to_be_bytes()
    }

    pub fn pq() -> Self {
        SetId::from_bytes(b'p', b'q')
    }

    pub fn rs() -> Self {
        SetId::from_bytes(b'r', b's')
    }

    pub fn momentum_letter(self) -> char {
        self.bytes()[0].to_ascii_uppercase() as char
    }

    pub fn position_letter(self) -> char {
        self.bytes()[1].to_ascii_uppercase() as char
    }

    pub fn letter(self, kind: Kind) -> char {
        match kind {
            Kind::Position => self.position_letter(),
            Kind::Momentum => self.momentum_letter(),
        }
    }

    pub fn as_string(&self) -> String {
        self.bytes().iter().map(|&b| b as char).collect()
    }

    pub fn position(self, mode: u32) -> Generator {
        Generator { set: self, mode, kind: Kind::Position }
    }

    pub fn momentum(self, mode: u32) -> Generator {
        Generator { set: self, mode, kind: Kind::Momentum }
    }
}

impl fmt::Display for SetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.as_string())
    }
}

impl fmt::Debug for SetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SetId({})", self.as_string())
    }
}

impl Serialize for SetId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.as_string())
    }
}

/// Position sorts before momentum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    Position,
    Momentum,
}

/// A single self-adjoint canonical operator.
///
/// The derived order (set, then mode, then position before momentum) is the
/// word order used by commutator canonicalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Generator {
    pub set: SetId,
    pub mode: u32,
    pub kind: Kind,
}

impl Generator {
    pub fn letter(&self) -> char {
        self.set.letter(self.kind)
    }

    /// Canonical partner in the same set and mode.
    pub fn partner(&self) -> Generator {
        let kind = match self.kind {
            Kind::Position => Kind::Momentum,
            Kind::Momentum => Kind::Position,
        };
        Generator { kind, ..*self }
    }

    /// `[self, other] / (i·hbar)`: `+1` for (position, momentum), `-1` for the
    /// reverse, `0` otherwise.
    pub fn ccr_sign(&self, other: &Generator) -> i32 {
        if self.set != other.set || self.mode != other.mode {
            return 0;
        }
        match (self.kind, other.kind) {
            (Kind::Position, Kind::Momentum) => 1,
            (Kind::Momentum, Kind::Position) => -1,
            _ => 0,
        }
    }

    /// Lowercase rendering used for the classical shift symbol of this generator.
    pub fn shift_name(&self) -> String {
        format!("{}[{}]", self.letter().to_ascii_lowercase(), self.mode)
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.letter(), self.mode)
    }
}
