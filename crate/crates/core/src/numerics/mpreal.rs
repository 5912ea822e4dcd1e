use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Default working precision, in decimal digits.
pub const DEFAULT_PRECISION: u32 = 64;

/// Default precision for identity verification.
pub const VERIFY_PRECISION: u32 = 50;

/// Floating-point number with a configurable number of significant decimal
/// digits: `mant * 10^exp` with `|mant| < 10^prec`.
///
/// Every operation rounds the result back to the working precision, so the
/// relative error per operation stays below `10^(1-prec)`. Binary operations
/// on mixed precisions carry the larger one.
#[derive(Clone)]
pub struct MPReal {
    mant: BigInt,
    exp: i64,
    prec: u32,
}

fn pow10(k: u32) -> BigInt {
    BigInt::from(10u8).pow(k)
}

/// Number of decimal digits of |n|, with digits(0) = 0.
fn digit_count(n: &BigInt) -> u32 {
    if n.is_zero() {
        return 0;
    }
    // Estimate from bit length, then correct by at most one.
    let bits = n.bits();
    let mut est = ((bits as f64) * std::f64::consts::LOG10_2) as u32;
    if est == 0 {
        est = 1;
    }
    let mut p = pow10(est);
    let abs = n.abs();
    while p <= abs {
        est += 1;
        p *= 10;
    }
    est
}

impl MPReal {
    pub fn zero(prec: u32) -> Self {
        MPReal { mant: BigInt::zero(), exp: 0, prec }
    }

    pub fn from_bigint(n: BigInt, prec: u32) -> Self {
        MPReal { mant: n, exp: 0, prec }.normalized()
    }

    pub fn from_i64(n: i64, prec: u32) -> Self {
        Self::from_bigint(BigInt::from(n), prec)
    }

    pub fn from_rational(r: &BigRational, prec: u32) -> Self {
        let num = Self::from_bigint(r.numer().clone(), prec + 2);
        let den = Self::from_bigint(r.denom().clone(), prec + 2);
        num.div(&den).with_prec(prec)
    }

    pub fn from_f64(x: f64, prec: u32) -> Self {
        match BigRational::from_float(x) {
            Some(r) => Self::from_rational(&r, prec),
            None => panic!("cannot convert non-finite {} to MPReal", x),
        }
    }

    /// sqrt(r) for a nonnegative rational, correct to the working precision.
    pub fn sqrt_rational(r: &BigRational, prec: u32) -> Self {
        assert!(!r.is_negative(), "sqrt of negative rational");
        Self::from_rational(r, prec + 2).sqrt().with_prec(prec)
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn signum(&self) -> i8 {
        match self.mant.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    /// Round (half-even) to `prec` significant digits and strip trailing zeros.
    fn normalized(mut self) -> Self {
        if self.mant.is_zero() {
            self.exp = 0;
            return self;
        }
        let digits = digit_count(&self.mant);
        if digits > self.prec {
            let cut = digits - self.prec;
            let scale = pow10(cut);
            let (mut q, r) = num_integer::Integer::div_rem(&self.mant, &scale);
            let twice_rem = r.abs() * 2u8;
            let round_up = match twice_rem.cmp(&scale) {
                Ordering::Greater => true,
                Ordering::Equal => num_integer::Integer::is_odd(&q),
                Ordering::Less => false,
            };
            if round_up {
                if self.mant.is_negative() {
                    q -= 1;
                } else {
                    q += 1;
                }
            }
            self.mant = q;
            self.exp += cut as i64;
        }
        while !self.mant.is_zero() && (&self.mant % 10u8).is_zero() {
            self.mant /= 10u8;
            self.exp += 1;
        }
        self
    }

    pub fn with_prec(mut self, prec: u32) -> Self {
        self.prec = prec;
        self.normalized()
    }

    /// Decimal exponent of the leading digit (value magnitude ~ 10^order).
    fn order(&self) -> i64 {
        self.exp + digit_count(&self.mant) as i64
    }

    pub fn neg(&self) -> Self {
        MPReal { mant: -&self.mant, exp: self.exp, prec: self.prec }
    }

    pub fn abs(&self) -> Self {
        MPReal { mant: self.mant.abs(), exp: self.exp, prec: self.prec }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let prec = self.prec.max(rhs.prec);
        if self.is_zero() {
            return rhs.clone().with_prec(prec);
        }
        if rhs.is_zero() {
            return self.clone().with_prec(prec);
        }
        let (hi, lo) = if self.exp >= rhs.exp { (self, rhs) } else { (rhs, self) };
        // If the small operand sits entirely below the result's last guard
        // digit it cannot move the rounded result.
        if hi.order() - lo.order() > prec as i64 + 2 {
            return hi.clone().with_prec(prec);
        }
        let shift = (hi.exp - lo.exp) as u32;
        let mant = &hi.mant * pow10(shift) + &lo.mant;
        MPReal { mant, exp: lo.exp, prec }.normalized()
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let prec = self.prec.max(rhs.prec);
        MPReal {
            mant: &self.mant * &rhs.mant,
            exp: self.exp + rhs.exp,
            prec,
        }
        .normalized()
    }

    pub fn div(&self, rhs: &Self) -> Self {
        assert!(!rhs.is_zero(), "division by zero");
        let prec = self.prec.max(rhs.prec);
        if self.is_zero() {
            return Self::zero(prec);
        }
        let d_self = digit_count(&self.mant);
        let d_rhs = digit_count(&rhs.mant);
        let scale = prec + 3 + d_rhs.saturating_sub(d_self);
        let num = &self.mant * pow10(scale);
        let q = num / &rhs.mant;
        MPReal { mant: q, exp: self.exp - rhs.exp - scale as i64, prec }.normalized()
    }

    /// Square root; panics on negative input.
    pub fn sqrt(&self) -> Self {
        assert!(!self.mant.is_negative(), "sqrt of negative MPReal");
        if self.is_zero() {
            return Self::zero(self.prec);
        }
        let mut mant = self.mant.clone();
        let mut exp = self.exp;
        if exp % 2 != 0 {
            mant *= 10u8;
            exp -= 1;
        }
        let have = digit_count(&mant).div_ceil(2);
        let want = self.prec + 2;
        let g = want.saturating_sub(have);
        mant *= pow10(2 * g);
        let root = mant.sqrt();
        MPReal { mant: root, exp: exp / 2 - g as i64, prec: self.prec }.normalized()
    }

    pub fn cmp_value(&self, rhs: &Self) -> Ordering {
        match (self.signum(), rhs.signum()) {
            (a, b) if a != b => a.cmp(&b),
            (0, 0) => Ordering::Equal,
            _ => {
                let diff = self.sub(rhs);
                diff.signum().cmp(&0)
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let digits = digit_count(&self.mant);
        let (top, extra) = if digits > 17 {
            let cut = digits - 17;
            (&self.mant / pow10(cut), cut as i64)
        } else {
            (self.mant.clone(), 0)
        };
        let t = top.to_f64().unwrap_or(f64::NAN);
        let e = self.exp + extra;
        if e > 350 {
            return if t > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
        }
        if e < -400 {
            return 0.0;
        }
        t * 10f64.powi(e as i32)
    }

    /// Plain decimal rendering; switches to `<mant>e<exp>` notation when the
    /// magnitude is extreme.
    pub fn to_decimal_string(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let neg = self.mant.is_negative();
        let digits = self.mant.abs().to_string();
        let order = self.exp + digits.len() as i64; // value = 0.digits * 10^order
        let body = if order > 40 || order < -40 {
            let mut s = digits.clone();
            if s.len() > 1 {
                s.insert(1, '.');
            }
            format!("{}e{}", s, order - 1)
        } else if self.exp >= 0 {
            format!("{}{}", digits, "0".repeat(self.exp as usize))
        } else if order > 0 {
            let point = order as usize;
            format!("{}.{}", &digits[..point], &digits[point..])
        } else {
            format!("0.{}{}", "0".repeat((-order) as usize), digits)
        };
        if neg {
            format!("-{}", body)
        } else {
            body
        }
    }

    /// Parse a decimal string such as `-1.25e-3`; the stored precision is at
    /// least the number of supplied digits.
    pub fn parse(s: &str, min_prec: u32) -> Result<Self, MPRealParseError> {
        let s = s.trim();
        let (body, exp_part) = match s.find(['e', 'E']) {
            Some(i) => {
                let e: i64 = s[i + 1..]
                    .parse()
                    .map_err(|_| MPRealParseError(s.to_string()))?;
                (&s[..i], e)
            }
            None => (s, 0),
        };
        let (sign, body) = match body.strip_prefix('-') {
            Some(rest) => (-1, rest),
            None => (1, body.strip_prefix('+').unwrap_or(body)),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(MPRealParseError(s.to_string()));
        }
        let digits: String = format!("{}{}", int_part, frac_part);
        if !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(MPRealParseError(s.to_string()));
        }
        let mant: BigInt = digits.parse().map_err(|_| MPRealParseError(s.to_string()))?;
        let prec = min_prec.max(digits.trim_start_matches('0').len() as u32).max(1);
        Ok(MPReal {
            mant: mant * sign,
            exp: exp_part - frac_part.len() as i64,
            prec,
        }
        .normalized())
    }
}

#[derive(Debug, Clone, Error)]
#[error("cannot parse {0:?} as a decimal number")]
pub struct MPRealParseError(pub String);

impl FromStr for MPReal {
    type Err = MPRealParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s, DEFAULT_PRECISION)
    }
}

impl PartialEq for MPReal {
    fn eq(&self, other: &Self) -> bool {
        // Normalized form is canonical: equal values have equal fields.
        self.mant == other.mant && self.exp == other.exp
    }
}

impl Eq for MPReal {}

impl PartialOrd for MPReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_value(other))
    }
}

impl fmt::Display for MPReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

impl fmt::Debug for MPReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MPReal({} @ {} digits)", self.to_decimal_string(), self.prec)
    }
}
