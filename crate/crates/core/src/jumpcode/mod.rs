//! Aerial jump codes.
//!
//! A code such as `bdFFdF` is a direction prefix followed by one flip token
//! per somersault:
//!
//! | token | flip                    |
//! |-------|-------------------------|
//! | `T`   | tuck                    |
//! | `P`   | pike                    |
//! | `L`   | lay                     |
//! | `F`   | lay with one twist      |
//! | `dF`  | lay with two twists     |
//! | `tF`  | lay with three twists   |
//!
//! Only back take-offs (`b`) are modelled. Tokenization is greedy
//! longest-match; `d` and `t` never occur on their own, so the greedy parse
//! is the only parse.

mod catalog;

pub use catalog::{CatalogError, DifficultyCatalog, DifficultyEntry, CATALOG_VERSION, DEFAULT_CATALOG_CSV};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const MAX_FLIPS: usize = 3;
pub const MAX_TWISTS: u8 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("jump code must start with the direction prefix `b`")]
    MissingDirectionPrefix,
    #[error("unknown token at position {0}")]
    UnknownToken(usize),
    #[error("jump code has {0} flips; expected 1 to 3")]
    FlipCountOutOfRange(usize),
    #[error("twists are only allowed on lay flips (got {position:?} with {twists} twists)")]
    TwistOnNonLay { position: Position, twists: u8 },
    #[error("at most 3 twists per flip (got {0})")]
    TooManyTwists(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Back,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Position {
    Tuck,
    Pike,
    Lay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Men,
    Women,
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::Men => "men",
            Gender::Women => "women",
        })
    }
}

impl FromStr for Gender {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "men" | "m" | "male" => Ok(Gender::Men),
            "women" | "w" | "female" => Ok(Gender::Women),
            other => Err(format!("unknown gender {other:?}; expected men or women")),
        }
    }
}

/// One somersault of a maneuver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FlipElement {
    position: Position,
    twists: u8,
}

impl FlipElement {
    pub fn new(position: Position, twists: u8) -> Result<Self, CodeError> {
        if twists > MAX_TWISTS {
            return Err(CodeError::TooManyTwists(twists));
        }
        if twists > 0 && position != Position::Lay {
            return Err(CodeError::TwistOnNonLay { position, twists });
        }
        Ok(FlipElement { position, twists })
    }

    pub const fn tuck() -> Self {
        FlipElement {
            position: Position::Tuck,
            twists: 0,
        }
    }

    pub const fn pike() -> Self {
        FlipElement {
            position: Position::Pike,
            twists: 0,
        }
    }

    pub const fn lay(twists: u8) -> Self {
        assert!(twists <= MAX_TWISTS);
        FlipElement {
            position: Position::Lay,
            twists,
        }
    }

    pub fn position(self) -> Position {
        self.position
    }

    pub fn twists(self) -> u8 {
        self.twists
    }

    pub fn token(self) -> &'static str {
        match (self.position, self.twists) {
            (Position::Tuck, _) => "T",
            (Position::Pike, _) => "P",
            (Position::Lay, 0) => "L",
            (Position::Lay, 1) => "F",
            (Position::Lay, 2) => "dF",
            (Position::Lay, _) => "tF",
        }
    }

    pub fn name(self) -> &'static str {
        match (self.position, self.twists) {
            (Position::Tuck, _) => "tuck",
            (Position::Pike, _) => "pike",
            (Position::Lay, 0) => "lay",
            (Position::Lay, 1) => "full",
            (Position::Lay, 2) => "double full",
            (Position::Lay, _) => "triple full",
        }
    }
}

/// A parsed, validated jump code.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JumpCode {
    direction: Direction,
    flips: Vec<FlipElement>,
    canonical: String,
}

impl JumpCode {
    pub fn new(direction: Direction, flips: Vec<FlipElement>) -> Result<Self, CodeError> {
        if flips.is_empty() || flips.len() > MAX_FLIPS {
            return Err(CodeError::FlipCountOutOfRange(flips.len()));
        }
        let canonical = render(direction, &flips);
        Ok(JumpCode {
            direction,
            flips,
            canonical,
        })
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn flips(&self) -> &[FlipElement] {
        &self.flips
    }

    pub fn flip_count(&self) -> usize {
        self.flips.len()
    }

    pub fn canonical_text(&self) -> &str {
        &self.canonical
    }
}

impl fmt::Display for JumpCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical)
    }
}

impl FromStr for JumpCode {
    type Err = CodeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

impl Serialize for JumpCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.canonical)
    }
}

impl<'de> Deserialize<'de> for JumpCode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}

fn render(direction: Direction, flips: &[FlipElement]) -> String {
    let mut out = String::with_capacity(1 + 2 * flips.len());
    out.push(match direction {
        Direction::Back => 'b',
    });
    for flip in flips {
        out.push_str(flip.token());
    }
    out
}

/// Parses a jump code with greedy longest-match tokenization.
pub fn parse(code_text: &str) -> Result<JumpCode, CodeError> {
    let bytes = code_text.as_bytes();
    if bytes.first() != Some(&b'b') {
        return Err(CodeError::MissingDirectionPrefix);
    }
    let mut flips = Vec::with_capacity(MAX_FLIPS);
    let mut pos = 1;
    while pos < bytes.len() {
        let (flip, width) = match (bytes[pos], bytes.get(pos + 1)) {
            (b't', Some(b'F')) => (FlipElement::lay(3), 2),
            (b'd', Some(b'F')) => (FlipElement::lay(2), 2),
            (b'F', _) => (FlipElement::lay(1), 1),
            (b'T', _) => (FlipElement::tuck(), 1),
            (b'P', _) => (FlipElement::pike(), 1),
            (b'L', _) => (FlipElement::lay(0), 1),
            _ => return Err(CodeError::UnknownToken(pos)),
        };
        flips.push(flip);
        pos += width;
    }
    JumpCode::new(Direction::Back, flips)
}

/// Emits the canonical code text.
pub fn format(jump: &JumpCode) -> String {
    render(jump.direction, &jump.flips)
}

/// Hyphenated lowercase description, e.g. `back-double full-full-double full`.
pub fn describe(jump: &JumpCode) -> String {
    let mut out = String::from(match jump.direction {
        Direction::Back => "back",
    });
    for flip in &jump.flips {
        out.push('-');
        out.push_str(flip.name());
    }
    out
}
