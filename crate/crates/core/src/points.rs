//! Fixed-point quantities used throughout the engine.
//!
//! Judge points are integer tenths, degree-of-difficulty values are integer
//! ten-thousandths and final scores are integer hundredths. Every value has
//! a canonical decimal text form, which is also its serde representation, so
//! files written by this crate are byte-stable.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid decimal {text:?}: expected {digits} fractional digit(s)")]
pub struct DecimalFormatError {
    pub text: String,
    pub digits: u32,
}

/// Parses `text` as a non-negative or negative decimal with exactly `digits`
/// fractional digits and returns it scaled by `10^digits`.
fn parse_fixed(text: &str, digits: u32) -> Result<i64, DecimalFormatError> {
    let err = || DecimalFormatError {
        text: text.to_string(),
        digits,
    };
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int_part, frac_part) = body.split_once('.').ok_or_else(err)?;
    let all_digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(int_part) || !all_digits(frac_part) || frac_part.len() != digits as usize {
        return Err(err());
    }
    if int_part.len() > 1 && int_part.starts_with('0') {
        return Err(err());
    }
    let int: i64 = int_part.parse().map_err(|_| err())?;
    let frac: i64 = frac_part.parse().map_err(|_| err())?;
    let scaled = int
        .checked_mul(10_i64.pow(digits))
        .and_then(|v| v.checked_add(frac))
        .ok_or_else(err)?;
    Ok(if negative { -scaled } else { scaled })
}

fn write_fixed(f: &mut fmt::Formatter<'_>, value: i64, digits: u32) -> fmt::Result {
    let scale = 10_i64.pow(digits);
    let sign = if value < 0 { "-" } else { "" };
    let abs = value.unsigned_abs();
    write!(
        f,
        "{sign}{}.{:0width$}",
        abs / scale as u64,
        abs % scale as u64,
        width = digits as usize
    )
}

/// Rounds `num / den` to the nearest integer, ties to even.
pub fn round_half_even(num: i128, den: i128) -> i128 {
    assert!(den != 0, "zero denominator");
    let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
    let q = num.div_euclid(den);
    let r = num.rem_euclid(den);
    match (2 * r).cmp(&den) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => {
            if q % 2 == 0 {
                q
            } else {
                q + 1
            }
        }
    }
}

/// Rounds a rational to the nearest integer, ties to even.
pub fn round_ratio_half_even(r: Ratio<i64>) -> i64 {
    round_half_even(*r.numer() as i128, *r.denom() as i128) as i64
}

/// Rounds a floating-point point value to tenths, ties away from zero.
///
/// The scaled value is first snapped to 1e-9 so that binary representation
/// noise (`0.35 * 10 = 3.4999999999999996`) cannot move a tie.
pub fn tenths_from_points(points: f64) -> Tenths {
    Tenths(round_scaled(points * 10.0))
}

/// Rounds an already tenths-scaled value, ties away from zero.
pub(crate) fn round_scaled(scaled: f64) -> i32 {
    let snapped = (scaled * 1e9).round() / 1e9;
    snapped.round() as i32
}

/// A quantity of judge points in tenths of a point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tenths(pub i32);

impl Tenths {
    pub const ZERO: Tenths = Tenths(0);

    pub const fn new(tenths: i32) -> Self {
        Tenths(tenths)
    }

    pub const fn get(self) -> i32 {
        self.0
    }

    pub fn as_points(self) -> f64 {
        f64::from(self.0) / 10.0
    }

    pub fn clamp(self, lo: Tenths, hi: Tenths) -> Tenths {
        Tenths(self.0.clamp(lo.0, hi.0))
    }

    pub fn saturating_sub_floor(self, rhs: Tenths) -> Tenths {
        Tenths((self.0 - rhs.0).max(0))
    }
}

impl Add for Tenths {
    type Output = Tenths;
    fn add(self, rhs: Tenths) -> Tenths {
        Tenths(self.0 + rhs.0)
    }
}

impl AddAssign for Tenths {
    fn add_assign(&mut self, rhs: Tenths) {
        self.0 += rhs.0;
    }
}

impl Sub for Tenths {
    type Output = Tenths;
    fn sub(self, rhs: Tenths) -> Tenths {
        Tenths(self.0 - rhs.0)
    }
}

impl std::iter::Sum for Tenths {
    fn sum<I: Iterator<Item = Tenths>>(iter: I) -> Tenths {
        Tenths(iter.map(|t| t.0).sum())
    }
}

impl fmt::Display for Tenths {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_fixed(f, i64::from(self.0), 1)
    }
}

impl FromStr for Tenths {
    type Err = DecimalFormatError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v = parse_fixed(s, 1)?;
        i32::try_from(v).map(Tenths).map_err(|_| DecimalFormatError {
            text: s.to_string(),
            digits: 1,
        })
    }
}

/// A degree-of-difficulty multiplier in ten-thousandths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dd(pub u32);

impl Dd {
    pub const fn from_ten_thousandths(v: u32) -> Self {
        Dd(v)
    }

    pub const fn ten_thousandths(self) -> u32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 10_000.0
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_fixed(f, i64::from(self.0), 4)
    }
}

impl FromStr for Dd {
    type Err = DecimalFormatError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v = parse_fixed(s, 4)?;
        u32::try_from(v).map(Dd).map_err(|_| DecimalFormatError {
            text: s.to_string(),
            digits: 4,
        })
    }
}

/// A DD-multiplied final score in hundredths.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FinalScore(pub i64);

impl FinalScore {
    pub const fn hundredths(self) -> i64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl fmt::Display for FinalScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_fixed(f, self.0, 2)
    }
}

impl FromStr for FinalScore {
    type Err = DecimalFormatError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_fixed(s, 2).map(FinalScore)
    }
}

macro_rules! string_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let text = String::deserialize(deserializer)?;
                text.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(Tenths);
string_serde!(Dd);
string_serde!(FinalScore);
