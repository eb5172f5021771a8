//! Test-only oracles, written without reference to the library internals.
#![allow(dead_code)]

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Decimal digits carried by the oracle.
pub const DIGITS: u32 = 60;

pub fn scale() -> BigInt {
    num_traits::pow(BigInt::from(10), DIGITS as usize)
}

fn arctan_recip(x: u64) -> BigInt {
    let s = scale();
    let x = BigInt::from(x);
    let x2 = &x * &x;
    let mut power = &s / &x;
    let mut sum = BigInt::zero();
    let mut k = 0u64;
    while !power.is_zero() {
        let term = &power / BigInt::from(2 * k + 1);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        power /= &x2;
        k += 1;
    }
    sum
}

/// π·10^DIGITS from Euler's `π/4 = arctan(1/2) + arctan(1/3)`.
pub fn pi_scaled() -> BigInt {
    static PI: OnceLock<BigInt> = OnceLock::new();
    PI.get_or_init(|| (arctan_recip(2) + arctan_recip(3)) * 4).clone()
}

/// `cos(2π·j/n)·10^DIGITS`.
pub fn cos_scaled(j: i64, n: i64) -> BigInt {
    let s = scale();
    let j = j.rem_euclid(n);
    // cos is symmetric about half a turn
    let j = j.min(n - j);
    let x = pi_scaled() * 2 * BigInt::from(j) / BigInt::from(n);
    let x2 = &x * &x / &s;
    let mut term = s.clone();
    let mut sum = s.clone();
    let mut k = 1i64;
    loop {
        let prod: BigInt = &term * &x2 / &s;
        term = -prod / BigInt::from((2 * k - 1) * (2 * k));
        if term.is_zero() {
            break;
        }
        sum += &term;
        k += 1;
    }
    sum
}

/// `sqrt(r)·10^DIGITS` for a non-negative rational.
pub fn sqrt_scaled(r: &BigRational) -> BigInt {
    let s = scale();
    (r.numer() * &s * &s / r.denom()).sqrt()
}

pub fn ratio_scaled(r: &BigRational) -> BigInt {
    r.numer() * scale() / r.denom()
}

/// A rational `h/k` with `k ≤ max_den` within `10^-tol_digits` of `v/10^DIGITS`,
/// found from the continued-fraction convergents of `v/10^DIGITS`.
pub fn recognise_rational(v: &BigInt, max_den: u64, tol_digits: u32) -> Option<BigRational> {
    let x = BigRational::new(v.clone(), scale());
    let tol = BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(10), tol_digits as usize));
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut rest = x.clone();
    for _ in 0..200 {
        let a = rest.floor().to_integer();
        let h2 = &a * &h1 + &h0;
        let k2 = &a * &k1 + &k0;
        if k2 > BigInt::from(max_den) {
            return None;
        }
        let conv = BigRational::new(h2.clone(), k2.clone());
        if (&conv - &x).abs() < tol {
            return Some(conv);
        }
        let frac = &rest - BigRational::from_integer(a);
        if frac.is_zero() {
            return None;
        }
        rest = frac.recip();
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
    }
    None
}

/// Whether two scaled values agree to `digits` decimal places.
pub fn close(a: &BigInt, b: &BigInt, digits: u32) -> bool {
    let tol = num_traits::pow(BigInt::from(10), (DIGITS - digits) as usize);
    (a - b).abs() < tol
}

pub fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

pub fn gcd(a: i64, b: i64) -> i64 {
    a.gcd(&b)
}

/// Value of an exact real from the library, re-evaluated with the oracle.
pub fn exact_real_scaled(v: &istlab::cp::ExactReal) -> Option<BigInt> {
    use istlab::cp::ExactReal;
    match v {
        ExactReal::Rational { value } => Some(ratio_scaled(value)),
        ExactReal::Surd { value } => {
            let root = sqrt_scaled(&BigRational::from_integer(BigInt::from(value.radicand)));
            Some(ratio_scaled(&value.rational) + root * value.coeff.numer() / value.coeff.denom())
        }
        ExactReal::Algebraic { .. } => None,
    }
}

/// `(X, Y, Z) ↦ (−X, −Y, Z)` applied to a lobe string.
pub fn swap_lobes(s: &str) -> String {
    s.chars().map(|c| match c {
        'L' => 'R',
        'R' => 'L',
        other => other,
    }).collect()
}
