use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use once_cell::sync::Lazy;
use std::sync::RwLock;

// Concurrency contract: readers share the lock, the occasional extension
// serializes on the writer side. Values never change once published.
static TABLE: Lazy<RwLock<Vec<BigInt>>> = Lazy::new(|| RwLock::new(vec![BigInt::one()]));

/// n! as an exact big integer, memoized per process.
pub fn factorial(n: u32) -> BigInt {
    let n = n as usize;
    {
        let table = TABLE.read().unwrap();
        if n < table.len() {
            return table[n].clone();
        }
    }
    let mut table = TABLE.write().unwrap();
    while table.len() <= n {
        let next = table.last().unwrap() * BigInt::from(table.len());
        table.push(next);
    }
    table[n].clone()
}

/// n! where n is supplied as 2n; panics if 2n is odd or negative.
///
/// Triad-admissible spin combinations always yield nonnegative integers here.
pub fn factorial_twice(twice_n: i32) -> BigInt {
    assert!(
        twice_n >= 0 && twice_n % 2 == 0,
        "factorial of non-integer or negative half-integer: {}/2",
        twice_n
    );
    factorial((twice_n / 2) as u32)
}

pub fn factorial_ratio(num: &[u32], den: &[u32]) -> BigRational {
    let mut n = BigInt::one();
    for &k in num {
        n *= factorial(k);
    }
    let mut d = BigInt::one();
    for &k in den {
        d *= factorial(k);
    }
    BigRational::new(n, d)
}
