//! Binary fixed-point reals on top of `BigInt`.
//!
//! Only what the exact labs need for numeric witnesses: π, cosine and sine of
//! rational turns, square roots, and decimal rendering to a fixed number of
//! significant digits. Nothing here feeds a membership decision.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Working precision that leaves a comfortable margin over 50 decimal digits.
pub const DEFAULT_BITS: u32 = 256;

/// A real number `raw / 2^bits`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixed {
    raw: BigInt,
    bits: u32,
}

impl Fixed {
    pub fn zero(bits: u32) -> Self {
        Fixed { raw: BigInt::zero(), bits }
    }

    pub fn from_int(n: i64, bits: u32) -> Self {
        Fixed { raw: BigInt::from(n) << bits, bits }
    }

    /// Nearest-below representation of a rational.
    pub fn from_ratio(r: &BigRational, bits: u32) -> Self {
        let raw = (r.numer() << bits).div_floor(r.denom());
        Fixed { raw, bits }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn raw(&self) -> &BigInt {
        &self.raw
    }

    pub fn is_negative(&self) -> bool {
        self.raw.is_negative()
    }

    pub fn abs(&self) -> Self {
        Fixed { raw: self.raw.abs(), bits: self.bits }
    }

    pub fn div_int(&self, d: i64) -> Self {
        Fixed { raw: self.raw.div_floor(&BigInt::from(d)), bits: self.bits }
    }

    /// Square root; negative inputs are clamped to zero.
    pub fn sqrt(&self) -> Self {
        if !self.raw.is_positive() {
            return Fixed::zero(self.bits);
        }
        let raw = (&self.raw << self.bits).sqrt();
        Fixed { raw, bits: self.bits }
    }

    pub fn to_f64(&self) -> f64 {
        // keep 64 bits of mantissa material before converting
        let shift = self.bits.saturating_sub(64);
        let head = (&self.raw >> shift).to_f64().unwrap_or(f64::NAN);
        head / 2f64.powi((self.bits - shift) as i32)
    }

    /// Converts to an exact rational (the dyadic value stored).
    pub fn to_ratio(&self) -> BigRational {
        BigRational::new(self.raw.clone(), BigInt::one() << self.bits)
    }

    /// Scientific notation with `digits` significant digits (truncated).
    pub fn to_sci_string(&self, digits: usize) -> String {
        if self.raw.is_zero() {
            return "0".to_string();
        }
        let extra = digits as u32 + 40;
        let ten = BigInt::from(10);
        let scaled: BigInt = (self.raw.abs() * num_traits::pow(ten, extra as usize)) >> self.bits;
        let text = scaled.to_string();
        if scaled.is_zero() {
            return "0".to_string();
        }
        let exponent = text.len() as i64 - extra as i64 - 1;
        let mantissa: String = text.chars().chain(std::iter::repeat('0')).take(digits).collect();
        let sign = if self.raw.sign() == Sign::Minus { "-" } else { "" };
        let (lead, rest) = mantissa.split_at(1);
        if rest.is_empty() {
            format!("{sign}{lead}e{exponent}")
        } else {
            format!("{sign}{lead}.{rest}e{exponent}")
        }
    }
}

impl PartialOrd for Fixed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fixed {
    fn cmp(&self, other: &Self) -> Ordering {
        debug_assert_eq!(self.bits, other.bits);
        self.raw.cmp(&other.raw)
    }
}

impl Add for &Fixed {
    type Output = Fixed;
    fn add(self, rhs: &Fixed) -> Fixed {
        Fixed { raw: &self.raw + &rhs.raw, bits: self.bits }
    }
}

impl Sub for &Fixed {
    type Output = Fixed;
    fn sub(self, rhs: &Fixed) -> Fixed {
        Fixed { raw: &self.raw - &rhs.raw, bits: self.bits }
    }
}

impl Mul for &Fixed {
    type Output = Fixed;
    fn mul(self, rhs: &Fixed) -> Fixed {
        Fixed { raw: (&self.raw * &rhs.raw) >> self.bits, bits: self.bits }
    }
}

impl Neg for &Fixed {
    type Output = Fixed;
    fn neg(self) -> Fixed {
        Fixed { raw: -&self.raw, bits: self.bits }
    }
}

/// `arctan(1/x)` by its alternating series.
fn arctan_inv(x: i64, bits: u32) -> BigInt {
    let x = BigInt::from(x);
    let x2 = &x * &x;
    let mut power = (BigInt::one() << bits) / &x;
    let mut sum = BigInt::zero();
    let mut k: u64 = 0;
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

/// π to `bits` binary places (Machin's formula, with guard bits).
pub fn pi(bits: u32) -> Fixed {
    let guard = 32;
    let w = bits + guard;
    let raw = arctan_inv(5, w) * 16 - arctan_inv(239, w) * 4;
    Fixed { raw: raw >> guard, bits }
}

/// Reduces a turn to the representative in `[-1/2, 1/2)`.
fn centre_turn(turn: &BigRational) -> BigRational {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let shifted = turn + &half;
    let frac = &shifted - shifted.floor();
    frac - half
}

/// `cos(2π·turn)`.
pub fn cos_turn(turn: &BigRational, bits: u32) -> Fixed {
    let guard = 32;
    let w = bits + guard;
    let t = centre_turn(turn);
    let two_pi = &pi(w) * &Fixed::from_int(2, w);
    let x = &two_pi * &Fixed::from_ratio(&t, w);
    let x2 = &x * &x;
    let mut term = Fixed::from_int(1, w);
    let mut sum = term.clone();
    let mut k: i64 = 1;
    loop {
        term = (&term * &x2).div_int((2 * k - 1) * (2 * k));
        if term.raw.is_zero() {
            break;
        }
        if k % 2 == 1 {
            sum = &sum - &term;
        } else {
            sum = &sum + &term;
        }
        k += 1;
    }
    Fixed { raw: sum.raw >> guard, bits }
}

/// `sin(2π·turn)`.
pub fn sin_turn(turn: &BigRational, bits: u32) -> Fixed {
    let quarter = BigRational::new(BigInt::one(), BigInt::from(4));
    cos_turn(&(turn - quarter), bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn pi_digits() {
        let s = pi(DEFAULT_BITS).to_sci_string(50);
        assert_eq!(s, "3.1415926535897932384626433832795028841971693993751e0");
    }

    #[test]
    fn cosine_special_values() {
        let eps = Fixed::from_ratio(&q(1, 1), DEFAULT_BITS);
        let tol = |a: &Fixed, b: &Fixed| (a - b).abs() < eps.div_int(1_000_000_000);
        let half = Fixed::from_ratio(&q(1, 2), DEFAULT_BITS);
        assert!(tol(&cos_turn(&q(1, 6), DEFAULT_BITS), &half));
        assert!(tol(&cos_turn(&q(-1, 6), DEFAULT_BITS), &half));
        assert!(tol(&cos_turn(&q(7, 6), DEFAULT_BITS), &half));
        assert!(cos_turn(&q(1, 4), DEFAULT_BITS).abs() < Fixed::from_ratio(&q(1, 1 << 40), DEFAULT_BITS));
        assert!(tol(&sin_turn(&q(1, 12), DEFAULT_BITS), &half));
        let r2 = cos_turn(&q(1, 8), DEFAULT_BITS);
        let sq = &r2 * &r2;
        assert!((&sq - &half).abs() < Fixed::from_ratio(&q(1, 1), DEFAULT_BITS).div_int(1 << 50));
    }

    #[test]
    fn sqrt_and_rendering() {
        let two = Fixed::from_int(2, DEFAULT_BITS);
        assert_eq!(two.sqrt().to_sci_string(20), "1.4142135623730950488e0");
        assert_eq!(Fixed::from_ratio(&q(-3, 4000), DEFAULT_BITS).to_sci_string(3), "-7.50e-4");
        assert!((two.sqrt().to_f64() - std::f64::consts::SQRT_2).abs() < 1e-15);
    }
}
