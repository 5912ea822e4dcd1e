//! Exact Clebsch-Gordan, 6j and 9j symbols, plus the two 6j identities that
//! generate the pentagon and triangle plaquettes of the rotation graph,
//! packaged as executable verifiers.
//!
//! Conventions: Condon-Shortley phases throughout; 6j symbols evaluated with
//! the Racah single-sum formula, which keeps every individual symbol an exact
//! signed square root of a rational.

use std::collections::HashMap;
use std::fmt;
use std::sync::RwLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use once_cell::sync::Lazy;
use thiserror::Error;

use crate::numerics::{
    factorial_twice, phase_from_twice, triangle_ok, HalfInt, MPReal, QRoot, Scalar,
    VERIFY_PRECISION,
};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum WignerError {
    #[error("triad ({0}, {1}, {2}) violates the triangle rule")]
    TriadViolation(HalfInt, HalfInt, HalfInt),
}

/// Arguments of a 6j symbol in the `{a b x / c d p}` layout.
///
/// Admissibility is the evaluator's business: a symbol with a violated triad
/// evaluates to exactly zero rather than failing to construct.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SixJArgs {
    pub row1: [HalfInt; 3],
    pub row2: [HalfInt; 3],
}

impl SixJArgs {
    pub fn new(row1: [HalfInt; 3], row2: [HalfInt; 3]) -> Self {
        SixJArgs { row1, row2 }
    }

    pub fn from_slice(v: &[HalfInt; 6]) -> Self {
        SixJArgs { row1: [v[0], v[1], v[2]], row2: [v[3], v[4], v[5]] }
    }

    fn twices(&self) -> [i32; 6] {
        [
            self.row1[0].twice(),
            self.row1[1].twice(),
            self.row1[2].twice(),
            self.row2[0].twice(),
            self.row2[1].twice(),
            self.row2[2].twice(),
        ]
    }

    /// The four triads of the symbol.
    pub fn triads(&self) -> [[HalfInt; 3]; 4] {
        let [a, b, x] = self.row1;
        let [c, d, p] = self.row2;
        [[a, b, x], [a, d, p], [c, b, p], [c, d, x]]
    }

    pub fn is_admissible(&self) -> bool {
        self.triads().iter().all(|t| triangle_ok(t[0], t[1], t[2]))
    }
}

impl fmt::Display for SixJArgs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{{{} {} {} / {} {} {}}}",
            self.row1[0], self.row1[1], self.row1[2], self.row2[0], self.row2[1], self.row2[2]
        )
    }
}

/// Arguments of a 9j symbol, row-major 3x3 layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NineJArgs(pub [[HalfInt; 3]; 3]);

impl NineJArgs {
    pub fn rows(&self) -> &[[HalfInt; 3]; 3] {
        &self.0
    }

    pub fn is_admissible(&self) -> bool {
        let m = &self.0;
        (0..3).all(|r| triangle_ok(m[r][0], m[r][1], m[r][2]))
            && (0..3).all(|c| triangle_ok(m[0][c], m[1][c], m[2][c]))
    }
}

/// Racah triangle coefficient
/// `Delta(a,b,c) = (a+b-c)! (a-b+c)! (-a+b+c)! / (a+b+c+1)!`
/// as an exact rational.
pub fn triangle_coeff(a: HalfInt, b: HalfInt, c: HalfInt) -> Result<BigRational, WignerError> {
    if !triangle_ok(a, b, c) {
        return Err(WignerError::TriadViolation(a, b, c));
    }
    Ok(delta_squared(a.twice(), b.twice(), c.twice()))
}

fn delta_squared(ta: i32, tb: i32, tc: i32) -> BigRational {
    let n = factorial_twice(ta + tb - tc) * factorial_twice(ta - tb + tc)
        * factorial_twice(-ta + tb + tc);
    let d = factorial_twice(ta + tb + tc + 2);
    BigRational::new(n, d)
}

/// Clebsch-Gordan coefficient `<j1 m1 j2 m2 | j m>` in the Condon-Shortley
/// convention, via the Van der Waerden single-sum form. Returns exact zero
/// whenever a selection rule fails.
pub fn clebsch_gordan(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    j: HalfInt,
    m: HalfInt,
) -> QRoot {
    let (tj1, tm1, tj2, tm2, tj, tm) =
        (j1.twice(), m1.twice(), j2.twice(), m2.twice(), j.twice(), m.twice());
    if tm1 + tm2 != tm
        || tm1.abs() > tj1
        || tm2.abs() > tj2
        || tm.abs() > tj
        || (tj1 - tm1) % 2 != 0
        || (tj2 - tm2) % 2 != 0
        || (tj - tm) % 2 != 0
        || !triangle_ok(j1, j2, j)
    {
        return QRoot::zero();
    }

    // prefactor: (2j+1) * Delta^2(j1,j2,j) * product of projection factorials
    let mut pre = delta_squared(tj1, tj2, tj) * BigRational::from(BigInt::from(tj as i64 + 1));
    for t in [tj + tm, tj - tm, tj1 - tm1, tj1 + tm1, tj2 - tm2, tj2 + tm2] {
        pre *= BigRational::from(factorial_twice(t));
    }

    // sum over z: all factorial arguments must stay nonnegative
    let z_lo = 0.max(-(tj - tj2 + tm1) / 2).max(-(tj - tj1 - tm2) / 2);
    let z_hi = ((tj1 + tj2 - tj) / 2)
        .min((tj1 - tm1) / 2)
        .min((tj2 + tm2) / 2);
    let mut sum = BigRational::zero();
    for z in z_lo..=z_hi {
        let tz = 2 * z;
        let mut den = factorial_twice(tz);
        den *= factorial_twice(tj1 + tj2 - tj - tz);
        den *= factorial_twice(tj1 - tm1 - tz);
        den *= factorial_twice(tj2 + tm2 - tz);
        den *= factorial_twice(tj - tj2 + tm1 + tz);
        den *= factorial_twice(tj - tj1 - tm2 + tz);
        let term = BigRational::new(BigInt::from(phase_from_twice(tz)), den);
        sum += term;
    }
    qroot_from_prefactor_and_sum(pre, sum)
}

fn qroot_from_prefactor_and_sum(prefactor_square: BigRational, sum: BigRational) -> QRoot {
    if sum.is_zero() {
        return QRoot::zero();
    }
    let sign = if sum.is_negative() { -1 } else { 1 };
    QRoot::new(sign, prefactor_square * &sum * &sum)
}

// Memo for 6j values, keyed by the canonical representative under the 24
// classical symmetries (column permutations and pairwise upper/lower flips).
static SIXJ_CACHE: Lazy<RwLock<HashMap<[i32; 6], QRoot>>> =
    Lazy::new(|| RwLock::new(HashMap::new()));

fn sixj_canonical_key(t: [i32; 6]) -> [i32; 6] {
    // columns of {a b x / c d p}: (a,c) (b,d) (x,p)
    let cols = [[t[0], t[3]], [t[1], t[4]], [t[2], t[5]]];
    const PERMS: [[usize; 3]; 6] =
        [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    // flips swap upper and lower entries in exactly two columns
    const FLIPS: [[bool; 3]; 4] = [
        [false, false, false],
        [true, true, false],
        [true, false, true],
        [false, true, true],
    ];
    let mut best: Option<[i32; 6]> = None;
    for perm in PERMS {
        for flip in FLIPS {
            let mut cand = [0i32; 6];
            for (slot, (&src, &fl)) in perm.iter().zip(flip.iter()).enumerate() {
                let col = cols[src];
                let (up, dn) = if fl { (col[1], col[0]) } else { (col[0], col[1]) };
                cand[slot] = up;
                cand[slot + 3] = dn;
            }
            if best.map_or(true, |b| cand < b) {
                best = Some(cand);
            }
        }
    }
    best.unwrap()
}

/// Racah-Wigner 6j symbol, exact. Zero when any triad fails.
pub fn wigner6j(args: SixJArgs) -> QRoot {
    if !args.is_admissible() {
        return QRoot::zero();
    }
    let key = sixj_canonical_key(args.twices());
    {
        let cache = SIXJ_CACHE.read().unwrap();
        if let Some(v) = cache.get(&key) {
            return v.clone();
        }
    }
    let value = wigner6j_uncached(args);
    SIXJ_CACHE.write().unwrap().insert(key, value.clone());
    value
}

fn wigner6j_uncached(args: SixJArgs) -> QRoot {
    let [a, b, x] = args.row1;
    let [c, d, p] = args.row2;
    let (ta, tb, tx, tc, td, tp) =
        (a.twice(), b.twice(), x.twice(), c.twice(), d.twice(), p.twice());

    let mut pre = BigRational::one();
    for [u, v, w] in args.triads() {
        pre *= delta_squared(u.twice(), v.twice(), w.twice());
    }

    // Racah sum: T's are triad perimeters, Q's are opposite-pair sums.
    let t_sums = [ta + tb + tx, ta + td + tp, tc + tb + tp, tc + td + tx];
    let q_sums = [ta + tb + tc + td, tb + tx + td + tp, tx + ta + tp + tc];
    let t_lo = *t_sums.iter().max().unwrap();
    let t_hi = *q_sums.iter().min().unwrap();
    let mut sum = BigRational::zero();
    let mut tt = t_lo;
    while tt <= t_hi {
        let mut den = BigInt::one();
        for ts in t_sums {
            den *= factorial_twice(tt - ts);
        }
        for qs in q_sums {
            den *= factorial_twice(qs - tt);
        }
        let num = BigInt::from(phase_from_twice(tt)) * factorial_twice(tt + 2);
        sum += BigRational::new(num, den);
        tt += 2;
    }
    qroot_from_prefactor_and_sum(pre, sum)
}

/// 9j symbol as the single sum over `x` of `(-1)^(2x) (2x+1)` times three 6j
/// symbols. Every `x`-dependent triad appears in exactly two factors, so all
/// terms share one radical and the result is normally an exact `QRoot`; an
/// `MPReal` at the default precision is returned in the (unexpected) fallback.
pub fn wigner9j(args: NineJArgs) -> Scalar {
    let m = args.rows();
    if !args.is_admissible() {
        return Scalar::Exact(QRoot::zero());
    }
    let [[a, b, c], [d, e, f], [g, h, i]] = *m;
    let lo = (a.twice() - i.twice())
        .abs()
        .max((d.twice() - h.twice()).abs())
        .max((b.twice() - f.twice()).abs());
    let hi = (a.twice() + i.twice())
        .min(d.twice() + h.twice())
        .min(b.twice() + f.twice());
    let mut acc = Scalar::zero_exact();
    let mut tx = lo;
    while tx <= hi {
        let x = HalfInt::from_twice(tx);
        let s1 = wigner6j(SixJArgs::new([a, d, g], [h, i, x]));
        let s2 = wigner6j(SixJArgs::new([b, e, h], [d, x, f]));
        let s3 = wigner6j(SixJArgs::new([c, f, i], [x, a, b]));
        let weight = BigRational::from(BigInt::from(phase_from_twice(2 * tx) * (tx + 1)));
        let term = (&(&s1 * &s2) * &s3).mul_rational(&weight);
        acc = acc.add_with_fallback(&Scalar::Exact(term), crate::numerics::DEFAULT_PRECISION);
        tx += 2;
    }
    acc
}

/// Evaluation mode for the identity verifiers: try the exact path, or force
/// a fixed-precision real evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyMode {
    /// Exact where the radicals allow it, with a real fallback at the
    /// verification default of 50 digits.
    Exact,
    /// Fixed-precision real arithmetic with `p` decimal digits.
    Real(u32),
}

impl VerifyMode {
    fn fallback_prec(self) -> u32 {
        match self {
            VerifyMode::Exact => VERIFY_PRECISION,
            VerifyMode::Real(p) => p,
        }
    }
}

/// Outcome of one identity check.
#[derive(Clone, Debug)]
pub struct IdentityReport {
    pub lhs: Scalar,
    pub rhs: Scalar,
    pub deviation: MPReal,
    /// Both sides empty/zero by triad exclusion: satisfied trivially.
    pub vacuous: bool,
    /// Whether the whole evaluation stayed on the exact path.
    pub exact: bool,
}

impl IdentityReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.deviation.to_f64().abs() <= tol
    }
}

fn finish_report(lhs: Scalar, rhs: Scalar, vacuous: bool, prec: u32) -> IdentityReport {
    let exact = lhs.is_exact() && rhs.is_exact();
    let deviation = match (&lhs, &rhs) {
        (Scalar::Exact(a), Scalar::Exact(b)) => match a.sum_if_commensurate(&(-b)) {
            Ok(diff) => diff.to_mpreal(prec).abs(),
            Err(_) => a.to_mpreal(prec).sub(&b.to_mpreal(prec)).abs(),
        },
        _ => lhs.to_mpreal(prec).sub(&rhs.to_mpreal(prec)).abs(),
    };
    IdentityReport { lhs, rhs, deviation, vacuous, exact }
}

/// Pentagon identity:
/// `sum_x (-1)^(R+x) (2x+1) {a b x/c d p}{c d x/e f q}{e f x/b a r}
///  = {p q r/e a d}{p q r/f b c}` with `R` the sum of all nine spins.
pub fn verify_pentagon(spins: [HalfInt; 9], mode: VerifyMode) -> IdentityReport {
    let [a, b, c, d, e, f, p, q, r] = spins;
    let prec = mode.fallback_prec();
    let t_r: i32 = spins.iter().map(|s| s.twice()).sum();

    let lo = (a.twice() - b.twice())
        .abs()
        .max((c.twice() - d.twice()).abs())
        .max((e.twice() - f.twice()).abs());
    let hi = (a.twice() + b.twice())
        .min(c.twice() + d.twice())
        .min(e.twice() + f.twice());

    let mut lhs = Scalar::zero_exact();
    let mut terms = 0usize;
    let mut tx = lo;
    while tx <= hi {
        let x = HalfInt::from_twice(tx);
        let s1 = wigner6j(SixJArgs::new([a, b, x], [c, d, p]));
        let s2 = wigner6j(SixJArgs::new([c, d, x], [e, f, q]));
        let s3 = wigner6j(SixJArgs::new([e, f, x], [b, a, r]));
        let prod = &(&s1 * &s2) * &s3;
        if !prod.is_zero() {
            terms += 1;
            let weight =
                BigRational::from(BigInt::from(phase_from_twice(t_r + tx) * (tx + 1)));
            lhs = lhs.add_with_fallback(&Scalar::Exact(prod.mul_rational(&weight)), prec);
        }
        tx += 2;
    }

    let rhs_q = &wigner6j(SixJArgs::new([p, q, r], [e, a, d]))
        * &wigner6j(SixJArgs::new([p, q, r], [f, b, c]));
    let vacuous = terms == 0 && rhs_q.is_zero();
    let (lhs, rhs) = match mode {
        VerifyMode::Exact => (lhs, Scalar::Exact(rhs_q)),
        VerifyMode::Real(p) => (
            Scalar::Real(lhs.to_mpreal(p)),
            Scalar::Real(rhs_q.to_mpreal(p)),
        ),
    };
    finish_report(lhs, rhs, vacuous, prec)
}

/// Racah identity:
/// `sum_x (-1)^(p+q+x) (2x+1) {a b x/c d p}{a b x/d c q} = {a c q/b d p}`.
pub fn verify_racah_triangle(
    a: HalfInt,
    b: HalfInt,
    c: HalfInt,
    d: HalfInt,
    p: HalfInt,
    q: HalfInt,
    mode: VerifyMode,
) -> IdentityReport {
    let prec = mode.fallback_prec();
    let tpq = p.twice() + q.twice();
    let mut lhs = Scalar::zero_exact();
    let mut terms = 0usize;
    let mut tx = (a.twice() - b.twice()).abs();
    while tx <= a.twice() + b.twice() {
        let x = HalfInt::from_twice(tx);
        let s1 = wigner6j(SixJArgs::new([a, b, x], [c, d, p]));
        let s2 = wigner6j(SixJArgs::new([a, b, x], [d, c, q]));
        let prod = &s1 * &s2;
        if !prod.is_zero() {
            terms += 1;
            let weight =
                BigRational::from(BigInt::from(phase_from_twice(tpq + tx) * (tx + 1)));
            lhs = lhs.add_with_fallback(&Scalar::Exact(prod.mul_rational(&weight)), prec);
        }
        tx += 2;
    }
    let rhs_q = wigner6j(SixJArgs::new([a, c, q], [b, d, p]));
    let vacuous = terms == 0 && rhs_q.is_zero();
    let (lhs, rhs) = match mode {
        VerifyMode::Exact => (lhs, Scalar::Exact(rhs_q)),
        VerifyMode::Real(p) => (
            Scalar::Real(lhs.to_mpreal(p)),
            Scalar::Real(rhs_q.to_mpreal(p)),
        ),
    };
    finish_report(lhs, rhs, vacuous, prec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn h(s: &str) -> HalfInt {
        s.parse().unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn sixj(v: [&str; 6]) -> QRoot {
        wigner6j(SixJArgs::from_slice(&[
            h(v[0]),
            h(v[1]),
            h(v[2]),
            h(v[3]),
            h(v[4]),
            h(v[5]),
        ]))
    }

    // Brute-force 6j from Clebsch-Gordan contraction; the independent oracle
    // for the Racah-sum implementation.
    //
    // {j1 j2 j12 / j3 j j23} appears in
    //   <(j1 j2) j12, j3; j m | j1, (j2 j3) j23; j m>
    //     = (-1)^(j1+j2+j3+j) sqrt((2 j12+1)(2 j23+1)) {j1 j2 j12 / j3 j j23}
    fn sixj_cg_oracle(v: [HalfInt; 6]) -> f64 {
        let [j1, j2, j12, j3, j, j23] = v;
        if !triangle_ok(j1, j2, j12)
            || !triangle_ok(j12, j3, j)
            || !triangle_ok(j2, j3, j23)
            || !triangle_ok(j1, j23, j)
        {
            return 0.0;
        }
        let m = if j.is_integer() { HalfInt::ZERO } else { HalfInt::HALF };
        let mut overlap = 0.0;
        for m1 in j1.projections() {
            for m2 in j2.projections() {
                let m12 = m1 + m2;
                if m12.abs().twice() > j12.twice() {
                    continue;
                }
                let m3 = m - m12;
                if m3.abs().twice() > j3.twice() {
                    continue;
                }
                let m23 = m2 + m3;
                if m23.abs().twice() > j23.twice() {
                    continue;
                }
                overlap += clebsch_gordan(j1, m1, j2, m2, j12, m12).to_f64()
                    * clebsch_gordan(j12, m12, j3, m3, j, m).to_f64()
                    * clebsch_gordan(j2, m2, j3, m3, j23, m23).to_f64()
                    * clebsch_gordan(j1, m1, j23, m23, j, m).to_f64();
            }
        }
        let phase = phase_from_twice(j1.twice() + j2.twice() + j3.twice() + j.twice()) as f64;
        let norm = ((j12.dim() * j23.dim()) as f64).sqrt();
        phase * overlap / norm
    }

    #[test]
    fn triangle_coeff_examples() {
        assert_eq!(triangle_coeff(h("1/2"), h("1/2"), h("1")).unwrap(), rat(1, 6));
        assert_eq!(triangle_coeff(h("0"), h("1"), h("1")).unwrap(), rat(1, 3));
        assert_eq!(triangle_coeff(h("1"), h("1"), h("1")).unwrap(), rat(1, 24));
        assert!(matches!(
            triangle_coeff(h("1"), h("3"), h("1")),
            Err(WignerError::TriadViolation(..))
        ));
    }

    #[test]
    fn cg_examples() {
        // singlet coefficient
        let q = clebsch_gordan(h("1/2"), h("1/2"), h("1/2"), h("-1/2"), h("0"), h("0"));
        assert_eq!(q.sign(), 1);
        assert_eq!(q.square(), &rat(1, 2));
        // coupling with spin zero is the identity
        for (j, m) in [("1/2", "1/2"), ("2", "-1"), ("3/2", "-3/2")] {
            let q = clebsch_gordan(h(j), h(m), h("0"), h("0"), h(j), h(m));
            assert_eq!(q, QRoot::one());
        }
        // m-selection failure
        let q = clebsch_gordan(h("1/2"), h("1/2"), h("1/2"), h("1/2"), h("1"), h("0"));
        assert!(q.is_zero());
        // exchange symmetry phase on the singlet
        let swapped = clebsch_gordan(h("1/2"), h("-1/2"), h("1/2"), h("1/2"), h("0"), h("0"));
        assert_eq!(swapped.sign(), -1);
        assert_eq!(swapped.square(), &rat(1, 2));
    }

    #[test]
    fn sixj_frozen_values() {
        let q = sixj(["1/2", "1/2", "1", "1/2", "1/2", "1"]);
        assert_eq!(q.sign(), 1);
        assert_eq!(q.square(), &rat(1, 36));
        // spin-0 coupling fixes the closed form: {a a 0 / b b c}
        let q = sixj(["1/2", "1/2", "0", "1/2", "1/2", "1"]);
        assert_eq!(q.sign(), 1);
        assert_eq!(q.square(), &rat(1, 4));
        // violated triad gives exact zero
        assert!(sixj(["1", "3", "1", "1", "1", "1"]).is_zero());
        // larger frozen values
        let q = sixj(["1", "1", "1", "1", "1", "1"]);
        assert_eq!(q.as_rational(), Some(rat(1, 6)));
        let q = sixj(["2", "2", "2", "2", "2", "2"]);
        assert_eq!(q.as_rational(), Some(rat(-3, 70)));
        let q = sixj(["4", "4", "4", "4", "4", "4"]);
        assert_eq!(q.as_rational(), Some(rat(-467, 18018)));
    }

    #[test]
    fn sixj_symmetries_hold_exactly() {
        let base = [h("1"), h("3/2"), h("1/2"), h("1"), h("1/2"), h("3/2")];
        let reference = wigner6j(SixJArgs::from_slice(&base));
        // column swap
        let v = [base[1], base[0], base[2], base[4], base[3], base[5]];
        assert_eq!(wigner6j(SixJArgs::from_slice(&v)), reference);
        // upper/lower flip in two columns
        let v = [base[3], base[4], base[2], base[0], base[1], base[5]];
        assert_eq!(wigner6j(SixJArgs::from_slice(&v)), reference);
    }

    #[test]
    fn sixj_matches_cg_contraction_oracle() {
        // exhaustive over spins <= 3/2 is the acceptance gate; spot-check a
        // representative set here to keep unit tests quick
        let spins = ["0", "1/2", "1", "3/2"];
        let mut checked = 0;
        for a in spins {
            for b in spins {
                for x in spins {
                    for c in spins {
                        for dd in spins {
                            let p = "1/2";
                            let args = [h(a), h(b), h(x), h(c), h(dd), h(p)];
                            let exact = wigner6j(SixJArgs::from_slice(&args)).to_f64();
                            let brute = sixj_cg_oracle(args);
                            assert!(
                                (exact - brute).abs() < 1e-12,
                                "{:?}: {} vs {}",
                                args,
                                exact,
                                brute
                            );
                            checked += 1;
                        }
                    }
                }
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn sixj_orthogonality() {
        // sum_x (2x+1)(2p+1) {a b x/c d p}{a b x/c d q} = delta_pq
        let spins = ["0", "1/2", "1", "3/2", "2"];
        for a in spins.iter().map(|s| h(s)) {
            for b in spins.iter().map(|s| h(s)) {
                for c in spins.iter().map(|s| h(s)) {
                    for d in spins.iter().map(|s| h(s)) {
                        for p in spins.iter().map(|s| h(s)) {
                            for q in spins.iter().map(|s| h(s)) {
                                if !triangle_ok(a, d, p) || !triangle_ok(c, b, p) {
                                    continue;
                                }
                                if !triangle_ok(a, d, q) || !triangle_ok(c, b, q) {
                                    continue;
                                }
                                let mut sum = 0.0;
                                for x in a.couplings(b) {
                                    let s1 = wigner6j(SixJArgs::new([a, b, x], [c, d, p]));
                                    let s2 = wigner6j(SixJArgs::new([a, b, x], [c, d, q]));
                                    sum += (x.dim() as f64) * s1.to_f64() * s2.to_f64();
                                }
                                sum *= p.dim() as f64;
                                let expected = if p == q { 1.0 } else { 0.0 };
                                assert!(
                                    (sum - expected).abs() < 1e-12,
                                    "({} {} {} {} | {} {}) -> {}",
                                    a, b, c, d, p, q, sum
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn ninej_special_cases() {
        // all spins zero
        let z = HalfInt::ZERO;
        let v = wigner9j(NineJArgs([[z; 3]; 3]));
        assert_eq!(v.to_f64(), 1.0);
        assert!(v.is_exact());
        // violated row triad
        let v = wigner9j(NineJArgs([
            [h("1"), h("3"), h("1")],
            [h("1"), h("1"), h("1")],
            [h("1"), h("1"), h("1")],
        ]));
        assert!(v.is_zero());
        // frozen value from the x-sum checked against an independent source
        let v = wigner9j(NineJArgs([
            [h("1"), h("1/2"), h("3/2")],
            [h("1/2"), h("1"), h("3/2")],
            [h("3/2"), h("3/2"), h("1")],
        ]));
        match v {
            Scalar::Exact(q) => assert_eq!(q.as_rational(), Some(rat(-1, 144))),
            Scalar::Real(_) => panic!("expected exact 9j"),
        }
    }

    #[test]
    fn ninej_zero_row_reduces_to_sixj() {
        // {j1 j2 j / 0 0 0 / j1 j2 j} = 1/sqrt((2j+1)(2j1+1)(2j2+1))
        for (j1, j2, j) in [("1/2", "1/2", "0"), ("1/2", "1/2", "1"), ("1", "1", "2")] {
            let (j1, j2, j) = (h(j1), h(j2), h(j));
            let z = HalfInt::ZERO;
            let v = wigner9j(NineJArgs([[j1, j2, j], [z, z, z], [j1, j2, j]]));
            let expected = 1.0 / ((j.dim() * j1.dim() * j2.dim()) as f64).sqrt();
            assert!((v.to_f64() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn pentagon_instances() {
        let one = h("1");
        let report = verify_pentagon([one; 9], VerifyMode::Exact);
        assert!(report.passes(1e-25), "deviation {}", report.deviation);
        assert!(!report.vacuous);

        let report = verify_pentagon([one; 9], VerifyMode::Real(50));
        assert!(report.passes(1e-25));

        // empty x-range on the left and vanishing right side
        let spins = [h("1"), h("1/2"), h("1/2"), h("1"), h("1/2"), h("1/2"),
                     h("3/2"), h("1"), h("1/2")];
        let report = verify_pentagon(spins, VerifyMode::Exact);
        assert!(report.passes(1e-25));
    }

    #[test]
    fn racah_triangle_instances() {
        let report = verify_racah_triangle(
            h("1/2"), h("1/2"), h("1/2"), h("1/2"), h("0"), h("1"),
            VerifyMode::Exact,
        );
        assert!(report.passes(1e-25), "deviation {}", report.deviation);

        let report = verify_racah_triangle(
            h("2"), h("1"), h("2"), h("1"), h("2"), h("2"),
            VerifyMode::Real(50),
        );
        assert!(report.passes(1e-25));
    }

    #[test]
    fn vacuous_identities_are_flagged() {
        // spins chosen so no x satisfies all lhs triads and the rhs vanishes
        let spins = [h("5"), h("0"), h("0"), h("5"), h("0"), h("0"), h("1/2"), h("1/2"), h("5")];
        let report = verify_pentagon(spins, VerifyMode::Exact);
        assert!(report.vacuous);
        assert!(report.passes(0.0));
        // a genuinely vacuous triangle case: a+b cannot reach any admissible x
        let report = verify_racah_triangle(
            h("0"), h("0"), h("1"), h("2"), h("3"), h("3"),
            VerifyMode::Exact,
        );
        assert!(report.vacuous);
        assert!(report.passes(0.0));
    }
}
