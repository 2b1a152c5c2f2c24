//! Fixed-point power series for `j_n(p/q)` and `y_n(p/q)` with 140 decimal
//! digits. Shares nothing with the recurrences under test.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

const DIGITS: u32 = 140;

fn scale() -> BigInt {
    BigInt::from(10u32).pow(DIGITS)
}

fn double_factorial(mut k: i64) -> BigInt {
    let mut acc = BigInt::one();
    while k > 1 {
        acc *= k;
        k -= 2;
    }
    acc
}

fn to_f64(v: &BigInt) -> f64 {
    // keep 17 significant digits before dividing by the scale
    let s = v.abs().to_string();
    let sign = if v.is_negative() { -1.0 } else { 1.0 };
    let head_len = s.len().min(18);
    let head: f64 = s[..head_len].parse().unwrap();
    let exp = s.len() as i32 - head_len as i32 - DIGITS as i32;
    sign * head * 10f64.powi(exp)
}

/// Sums terms until they vanish at the working precision.
fn sum_terms(mut term: BigInt, ratio: impl Fn(i64) -> (BigInt, BigInt)) -> BigInt {
    let mut total = BigInt::zero();
    let mut k = 0i64;
    loop {
        total += &term;
        let (num, den) = ratio(k);
        term = term * num / den;
        k += 1;
        if term.is_zero() && k > 2 {
            break;
        }
    }
    total
}

/// x = p / q
pub fn j(n: i64, p: i64, q: i64) -> f64 {
    // x^n / (2n+1)!!  ·  Σ (-x²/2)^k / (k! (2n+3)(2n+5)…(2n+2k+1))
    let t0 = scale() * BigInt::from(p).pow(n as u32)
        / (BigInt::from(q).pow(n as u32) * double_factorial(2 * n + 1));
    let total = sum_terms(t0, |k| {
        (
            -BigInt::from(p * p),
            BigInt::from(2 * q * q) * (k + 1) * (2 * n + 2 * k + 3),
        )
    });
    to_f64(&total)
}

pub fn y(n: i64, p: i64, q: i64) -> f64 {
    // -(2n-1)!! / x^(n+1) · Σ (-x²/2)^k / (k! (1-2n)(3-2n)…(2k-1-2n))
    let t0 = scale() * double_factorial(2 * n - 1) * BigInt::from(q).pow(n as u32 + 1)
        / BigInt::from(p).pow(n as u32 + 1);
    let total = sum_terms(t0, |k| {
        (
            -BigInt::from(p * p),
            BigInt::from(2 * q * q) * (k + 1) * (2 * k + 1 - 2 * n),
        )
    });
    -to_f64(&total)
}
