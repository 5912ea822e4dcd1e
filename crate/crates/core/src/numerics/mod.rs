//! Exact scalar foundation: half-integer spins, memoized big factorials,
//! signed square roots of rationals, and configurable-precision reals.
//!
//! All types here are immutable values; the factorial memo table allows
//! concurrent reads with serialized writes, so results are bit-identical
//! regardless of thread count.

mod factorial;
mod halfint;
mod mpreal;
mod qroot;

pub use factorial::{factorial, factorial_ratio, factorial_twice};
pub use halfint::{phase_from_twice, triangle_ok, HalfInt, SpinParseError};
pub use mpreal::{MPReal, MPRealParseError, DEFAULT_PRECISION, VERIFY_PRECISION};
pub use qroot::{Incommensurate, QRoot};

use num_rational::BigRational;
use num_traits::ToPrimitive;

/// A scalar that is either exact or a rounded multiprecision real.
///
/// Sums of exact values stay exact while their radicals are commensurate and
/// degrade to `MPReal` otherwise; the degradation is one-way.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(QRoot),
    Real(MPReal),
}

impl Scalar {
    pub fn zero_exact() -> Self {
        Scalar::Exact(QRoot::zero())
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn to_mpreal(&self, prec: u32) -> MPReal {
        match self {
            Scalar::Exact(q) => q.to_mpreal(prec),
            Scalar::Real(x) => x.clone(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(q) => q.to_f64(),
            Scalar::Real(x) => x.to_f64(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(q) => q.is_zero(),
            Scalar::Real(x) => x.is_zero(),
        }
    }

    /// Add, staying exact when possible and falling back to `prec` digits.
    pub fn add_with_fallback(&self, rhs: &Scalar, prec: u32) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => match a.sum_if_commensurate(b) {
                Ok(sum) => Scalar::Exact(sum),
                Err(Incommensurate) => {
                    Scalar::Real(a.to_mpreal(prec).add(&b.to_mpreal(prec)))
                }
            },
            _ => Scalar::Real(self.to_mpreal(prec).add(&rhs.to_mpreal(prec))),
        }
    }

    pub fn mul(&self, rhs: &Scalar, prec: u32) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a * b),
            _ => Scalar::Real(self.to_mpreal(prec).mul(&rhs.to_mpreal(prec))),
        }
    }
}

/// `BigRational -> f64` that survives numerators and denominators far outside
/// the f64 range by cancelling a common power of two first.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    let num = r.numer();
    let den = r.denom();
    if let (Some(n), Some(d)) = (num.to_f64(), den.to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let shift = (num.bits().max(den.bits()) as i64 - 500).max(0) as u64;
    let n = (num >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (den >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}
