use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// `{num, den}` wire form of an exact rational.
///
/// Integers that fit in an `i64` are written as JSON numbers, larger ones as
/// decimal strings so that no precision is lost in transit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatioJson {
    pub num: Value,
    pub den: Value,
}

impl RatioJson {
    pub fn from_ratio(r: &BigRational) -> Self {
        RatioJson {
            num: int_to_json(r.numer()),
            den: int_to_json(r.denom()),
        }
    }

    pub fn to_ratio(&self) -> Option<BigRational> {
        let num = int_from_json(&self.num)?;
        let den = int_from_json(&self.den)?;
        if den == BigInt::from(0) {
            return None;
        }
        Some(BigRational::new(num, den))
    }
}

pub(crate) fn int_to_json(n: &BigInt) -> Value {
    match n.to_i64() {
        Some(v) => Value::from(v),
        None => Value::from(n.to_string()),
    }
}

pub(crate) fn int_from_json(v: &Value) -> Option<BigInt> {
    match v {
        Value::Number(n) => n.as_i64().map(BigInt::from).or_else(|| n.as_u64().map(BigInt::from)),
        Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

/// Parses `a/b`, `a`, or a finite decimal such as `2.6667` into an exact rational.
pub fn parse_ratio(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let num: BigInt = a.trim().parse().ok()?;
        let den: BigInt = b.trim().parse().ok()?;
        if den == BigInt::from(0) {
            return None;
        }
        return Some(BigRational::new(num, den));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = int_part.starts_with('-');
        let int_digits = int_part.trim_start_matches(['-', '+']);
        let digits = format!("{}{}", int_digits, frac_part);
        let mut num: BigInt = digits.parse().ok()?;
        if negative {
            num = -num;
        }
        let den = num_traits::pow(BigInt::from(10), frac_part.len());
        return Some(BigRational::new(num, den));
    }
    let n: BigInt = s.parse().ok()?;
    Some(BigRational::from_integer(n))
}

/// `#[serde(with = ...)]` adapter writing a `BigRational` as `{num, den}`.
pub(crate) mod ratio_serde {
    use super::RatioJson;
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        RatioJson::from_ratio(r).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        RatioJson::deserialize(d)?.to_ratio().ok_or_else(|| serde::de::Error::custom("invalid rational"))
    }
}

/// `#[serde(with = ...)]` adapter writing a `BigInt` as a number or decimal string.
pub(crate) mod int_serde {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::Value;

    pub fn serialize<S: Serializer>(n: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        super::int_to_json(n).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let v = Value::deserialize(d)?;
        super::int_from_json(&v).ok_or_else(|| serde::de::Error::custom("invalid integer"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn parses_fraction_integer_and_decimal() {
        assert_eq!(parse_ratio("3/6"), Some(q(1, 2)));
        assert_eq!(parse_ratio("-7"), Some(q(-7, 1)));
        assert_eq!(parse_ratio("2.5"), Some(q(5, 2)));
        assert_eq!(parse_ratio("-0.25"), Some(q(-1, 4)));
        assert_eq!(parse_ratio("1/0"), None);
        assert_eq!(parse_ratio("x"), None);
    }

    #[test]
    fn large_integers_survive_json() {
        let big = BigRational::from_integer(num_traits::pow(BigInt::from(10), 30));
        let j = RatioJson::from_ratio(&big);
        assert!(j.num.is_string());
        let text = serde_json::to_string(&j).unwrap();
        let back: RatioJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_ratio(), Some(big));
    }
}
