use std::cmp::Ordering;
use std::fmt;
use std::ops::{Mul, Neg};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

use super::mpreal::MPReal;

/// Exact signed square root of a nonnegative rational: `sign * sqrt(square)`.
///
/// This is the value domain of single Wigner symbols: the Racah and
/// Van der Waerden single-sum forms make every 6j and Clebsch-Gordan
/// coefficient a rational multiple of one square root. Products stay exact;
/// sums stay exact only when the radicals are commensurate.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QRoot {
    sign: i8,
    square: BigRational,
}

/// Signal that two radicals cannot be combined exactly. Not a failure: the
/// caller is expected to fall back to `MPReal`.
#[derive(Debug, Clone, Error)]
#[error("incommensurate radicals: exact sum unavailable")]
pub struct Incommensurate;

fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    // r is stored reduced; it is a perfect square iff both parts are.
    let num = r.numer();
    let den = r.denom();
    let sn = num.sqrt();
    if &(&sn * &sn) != num {
        return None;
    }
    let sd = den.sqrt();
    if &(&sd * &sd) != den {
        return None;
    }
    Some(BigRational::new(sn, sd))
}

impl QRoot {
    pub fn zero() -> Self {
        QRoot { sign: 0, square: BigRational::zero() }
    }

    pub fn one() -> Self {
        QRoot::from_int(1)
    }

    /// `sign * sqrt(square)`; sign is normalized against a zero square.
    pub fn new(sign: i8, square: BigRational) -> Self {
        assert!(!square.is_negative(), "QRoot square must be nonnegative");
        if square.is_zero() || sign == 0 {
            QRoot::zero()
        } else {
            QRoot { sign: sign.signum(), square }
        }
    }

    /// The exact rational value `r`, i.e. `sign(r) * sqrt(r^2)`.
    pub fn from_rational(r: &BigRational) -> Self {
        QRoot::new(
            match r.cmp(&BigRational::zero()) {
                Ordering::Less => -1,
                Ordering::Equal => 0,
                Ordering::Greater => 1,
            },
            r * r,
        )
    }

    pub fn from_int(n: i64) -> Self {
        QRoot::from_rational(&BigRational::from(BigInt::from(n)))
    }

    /// `+sqrt(r)` for nonnegative `r`.
    pub fn sqrt_of(r: BigRational) -> Self {
        QRoot::new(1, r)
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn square(&self) -> &BigRational {
        &self.square
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Exact rational content if the radical is a perfect square.
    pub fn as_rational(&self) -> Option<BigRational> {
        rational_sqrt(&self.square).map(|root| match self.sign {
            -1 => -root,
            _ => root,
        })
    }

    pub fn mul_rational(&self, r: &BigRational) -> Self {
        let s = match r.cmp(&BigRational::zero()) {
            Ordering::Less => -self.sign,
            Ordering::Equal => 0,
            Ordering::Greater => self.sign,
        };
        QRoot::new(s, &self.square * r * r)
    }

    /// Exact sum when `other/self` is rational; `Incommensurate` otherwise.
    pub fn sum_if_commensurate(&self, other: &QRoot) -> Result<QRoot, Incommensurate> {
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        let ratio = &other.square / &self.square;
        let root = rational_sqrt(&ratio).ok_or(Incommensurate)?;
        // self + other = (sign_s + sign_o * root) * sqrt(square_s)
        let mut coeff = BigRational::from(BigInt::from(self.sign));
        if other.sign > 0 {
            coeff += &root;
        } else {
            coeff -= &root;
        }
        let s = match coeff.cmp(&BigRational::zero()) {
            Ordering::Less => -1,
            Ordering::Equal => 0,
            Ordering::Greater => 1,
        };
        Ok(QRoot::new(s, &coeff * &coeff * &self.square))
    }

    pub fn to_mpreal(&self, prec: u32) -> MPReal {
        if self.is_zero() {
            return MPReal::zero(prec);
        }
        let root = MPReal::sqrt_rational(&self.square, prec);
        if self.sign < 0 {
            root.neg()
        } else {
            root
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        self.to_mpreal(20).to_f64()
    }

    /// Total order consistent with the real values.
    pub fn cmp_value(&self, other: &QRoot) -> Ordering {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => {}
            ord => return ord,
        }
        match self.sign {
            0 => Ordering::Equal,
            1 => self.square.cmp(&other.square),
            _ => other.square.cmp(&self.square),
        }
    }
}

impl Mul for &QRoot {
    type Output = QRoot;
    fn mul(self, rhs: &QRoot) -> QRoot {
        QRoot::new(self.sign * rhs.sign, &self.square * &rhs.square)
    }
}

impl Mul for QRoot {
    type Output = QRoot;
    fn mul(self, rhs: QRoot) -> QRoot {
        &self * &rhs
    }
}

impl Neg for QRoot {
    type Output = QRoot;
    fn neg(self) -> QRoot {
        QRoot { sign: -self.sign, square: self.square }
    }
}

impl Neg for &QRoot {
    type Output = QRoot;
    fn neg(self) -> QRoot {
        QRoot { sign: -self.sign, square: self.square.clone() }
    }
}

impl PartialOrd for QRoot {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_value(other))
    }
}

impl Ord for QRoot {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_value(other)
    }
}

impl fmt::Display for QRoot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            1 => write!(f, "sqrt({})", self.square),
            _ => write!(f, "-sqrt({})", self.square),
        }
    }
}

impl fmt::Debug for QRoot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn product_is_exact() {
        // sqrt(1/2) * sqrt(1/2) = +1/2
        let h = QRoot::sqrt_of(rat(1, 2));
        let p = &h * &h;
        assert_eq!(p.sign(), 1);
        assert_eq!(p.square(), &rat(1, 4));
    }

    #[test]
    fn commensurate_sum() {
        // sqrt(2) + sqrt(8) = 3 sqrt(2) = sqrt(18)
        let a = QRoot::sqrt_of(rat(2, 1));
        let b = QRoot::sqrt_of(rat(8, 1));
        let s = a.sum_if_commensurate(&b).unwrap();
        assert_eq!(s.square(), &rat(18, 1));
        assert_eq!(s.sign(), 1);
        // sqrt(2) - sqrt(2) = 0
        let z = a.sum_if_commensurate(&a.clone().neg()).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn incommensurate_sum_signals() {
        let a = QRoot::sqrt_of(rat(2, 1));
        let b = QRoot::sqrt_of(rat(3, 1));
        assert!(a.sum_if_commensurate(&b).is_err());
    }

    #[test]
    fn zero_normalization() {
        assert!(QRoot::new(1, rat(0, 1)).is_zero());
        assert!(QRoot::new(0, rat(5, 1)).is_zero());
        assert_eq!(QRoot::zero(), QRoot::from_int(0));
    }

    #[test]
    fn rational_content() {
        assert_eq!(QRoot::from_rational(&rat(-3, 4)).as_rational(), Some(rat(-3, 4)));
        assert_eq!(QRoot::sqrt_of(rat(2, 1)).as_rational(), None);
    }

    #[test]
    fn ordering_matches_reals() {
        let vals = [
            QRoot::from_int(-2),
            QRoot::sqrt_of(rat(2, 1)).neg(),
            QRoot::zero(),
            QRoot::sqrt_of(rat(1, 2)),
            QRoot::from_int(1),
            QRoot::sqrt_of(rat(2, 1)),
        ];
        for w in vals.windows(2) {
            assert_eq!(w[0].cmp_value(&w[1]), Ordering::Less);
            assert!(w[0].to_f64() < w[1].to_f64());
        }
    }

    #[test]
    fn to_real_agrees_with_square() {
        // |to_real|^2 - square within the precision contract
        let q = QRoot::new(-1, rat(7, 3));
        let p = 40;
        let x = q.to_mpreal(p);
        let sq = x.mul(&x);
        let target = MPReal::from_rational(&rat(7, 3), p);
        let rel = sq.sub(&target).abs().div(&target);
        assert!(rel.to_f64() <= 10f64.powi(1 - p as i32));
        assert!(x.signum() < 0);
    }
}
