use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A half-integer spin quantum number, stored as twice its value.
///
/// Magnitudes (`j`, `k`) are nonnegative; projections (`m`) may be negative.
/// All triangle and parity logic runs on the integer `twice` field so no
/// floating representation of a spin ever exists.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInt {
    twice: i32,
}

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt { twice: 0 };
    pub const HALF: HalfInt = HalfInt { twice: 1 };
    pub const ONE: HalfInt = HalfInt { twice: 2 };

    #[inline]
    pub const fn from_twice(twice: i32) -> Self {
        HalfInt { twice }
    }

    #[inline]
    pub const fn from_int(n: i32) -> Self {
        HalfInt { twice: 2 * n }
    }

    /// The stored value 2j.
    #[inline]
    pub const fn twice(self) -> i32 {
        self.twice
    }

    #[inline]
    pub const fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }

    #[inline]
    pub const fn is_negative(self) -> bool {
        self.twice < 0
    }

    #[inline]
    pub const fn is_zero(self) -> bool {
        self.twice == 0
    }

    /// Multiplicity 2j + 1.
    #[inline]
    pub const fn dim(self) -> i64 {
        self.twice as i64 + 1
    }

    #[inline]
    pub fn abs(self) -> Self {
        HalfInt { twice: self.twice.abs() }
    }

    #[inline]
    pub fn scale(self, factor: i32) -> Self {
        HalfInt { twice: self.twice * factor }
    }

    /// Projections m = -j ..= j in integer steps.
    pub fn projections(self) -> impl Iterator<Item = HalfInt> {
        let j = self.twice;
        (-j..=j).step_by(2).map(HalfInt::from_twice)
    }

    /// Coupling range |a-b| ..= a+b in integer steps.
    pub fn couplings(self, other: HalfInt) -> impl Iterator<Item = HalfInt> {
        let lo = (self.twice - other.twice).abs();
        let hi = self.twice + other.twice;
        (lo..=hi).step_by(2).map(HalfInt::from_twice)
    }
}

/// Triangle rule: |a-b| <= c <= a+b with a+b+c an integer.
///
/// Negative magnitudes never form a triad.
#[inline]
pub fn triangle_ok(a: HalfInt, b: HalfInt, c: HalfInt) -> bool {
    if a.twice < 0 || b.twice < 0 || c.twice < 0 {
        return false;
    }
    (a.twice + b.twice + c.twice) % 2 == 0
        && (a.twice - b.twice).abs() <= c.twice
        && c.twice <= a.twice + b.twice
}

/// (-1)^e where the exponent is supplied as 2e.
///
/// Panics if 2e is odd; admissible spin combinations always produce integer
/// exponents, so an odd argument is a caller bug.
#[inline]
pub fn phase_from_twice(twice_exponent: i32) -> i32 {
    assert!(
        twice_exponent % 2 == 0,
        "phase exponent {}/2 is not an integer",
        twice_exponent
    );
    if (twice_exponent / 2) % 2 == 0 {
        1
    } else {
        -1
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    #[inline]
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt { twice: self.twice + rhs.twice }
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    #[inline]
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt { twice: self.twice - rhs.twice }
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    #[inline]
    fn neg(self) -> HalfInt {
        HalfInt { twice: -self.twice }
    }
}

impl Sum for HalfInt {
    fn sum<I: Iterator<Item = HalfInt>>(iter: I) -> HalfInt {
        iter.fold(HalfInt::ZERO, Add::add)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

impl fmt::Debug for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpinParseError {
    #[error("empty spin token")]
    Empty,
    #[error("invalid spin {0:?}: expected an integer like \"2\" or a half-odd fraction like \"3/2\"")]
    Malformed(String),
    #[error("invalid spin {0:?}: decimal notation is not accepted, write \"3/2\" instead")]
    Decimal(String),
    #[error("invalid spin {0:?}: denominator must be 2")]
    BadDenominator(String),
    #[error("spin {0:?} out of range")]
    OutOfRange(String),
}

impl FromStr for HalfInt {
    type Err = SpinParseError;

    /// Accepts `"2"`, `"-2"`, `"3/2"`, `"-3/2"`. Rejects decimals like `"1.5"`.
    fn from_str(s: &str) -> Result<Self, SpinParseError> {
        let s = s.trim();
        if s.is_empty() {
            return Err(SpinParseError::Empty);
        }
        if s.contains('.') {
            return Err(SpinParseError::Decimal(s.to_string()));
        }
        const LIMIT: i64 = 1_000_000;
        match s.split_once('/') {
            None => {
                let n: i64 = s
                    .parse()
                    .map_err(|_| SpinParseError::Malformed(s.to_string()))?;
                if n.abs() > LIMIT / 2 {
                    return Err(SpinParseError::OutOfRange(s.to_string()));
                }
                Ok(HalfInt::from_int(n as i32))
            }
            Some((num, den)) => {
                if den.trim() != "2" {
                    return Err(SpinParseError::BadDenominator(s.to_string()));
                }
                let n: i64 = num
                    .trim()
                    .parse()
                    .map_err(|_| SpinParseError::Malformed(s.to_string()))?;
                if n.abs() > LIMIT {
                    return Err(SpinParseError::OutOfRange(s.to_string()));
                }
                Ok(HalfInt::from_twice(n as i32))
            }
        }
    }
}

impl Serialize for HalfInt {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for HalfInt {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(s: &str) -> HalfInt {
        s.parse().unwrap()
    }

    #[test]
    fn triangle_examples() {
        assert!(triangle_ok(h("1/2"), h("1/2"), h("1")));
        assert!(!triangle_ok(h("1/2"), h("1/2"), h("1/2")));
        assert!(!triangle_ok(h("1"), h("3"), h("1")));
        assert!(triangle_ok(HalfInt::ZERO, h("1"), h("1")));
        assert!(!triangle_ok(h("-1/2"), h("1/2"), HalfInt::ZERO));
    }

    #[test]
    fn parse_and_print() {
        assert_eq!(h("3/2").twice(), 3);
        assert_eq!(h("-3/2").twice(), -3);
        assert_eq!(h("2").twice(), 4);
        assert_eq!(h("4/2"), h("2"));
        assert_eq!(h("3/2").to_string(), "3/2");
        assert_eq!(h("4/2").to_string(), "2");
        assert_eq!(h("-1/2").to_string(), "-1/2");
        assert!(matches!(
            "1.5".parse::<HalfInt>(),
            Err(SpinParseError::Decimal(_))
        ));
        assert!("3/4".parse::<HalfInt>().is_err());
        assert!("".parse::<HalfInt>().is_err());
    }

    #[test]
    fn ranges() {
        let ms: Vec<_> = h("3/2").projections().map(|m| m.twice()).collect();
        assert_eq!(ms, vec![-3, -1, 1, 3]);
        let cs: Vec<_> = h("1/2").couplings(h("1")).map(|c| c.twice()).collect();
        assert_eq!(cs, vec![1, 3]);
    }

    #[test]
    fn phase() {
        assert_eq!(phase_from_twice(0), 1);
        assert_eq!(phase_from_twice(2), -1);
        assert_eq!(phase_from_twice(-2), -1);
        assert_eq!(phase_from_twice(4), 1);
    }
}
