//! Bit strings over `{+1, −1}` and the root-of-unity operator acting on them.
//!
//! For `p = 2^k` the operator `Ω_p` is defined recursively on half-strings:
//! `Ω_p{S1, S2} = {Ω_{p/2}(S2), S1}` with `Ω_1(a) = −a`. For `p = 4` this is
//! `{a1, a2, a3, a4} ↦ {−a4, a3, a1, a2}`. `Ω_p` has order `2p`, so it realises
//! `e^{iπ/p}`. Operators are kept as signed permutations, never as matrices.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BitsError {
    #[error("bit string entries must be +1 or -1, found {0}")]
    InvalidEntry(i64),
    #[error("bit string must not be empty")]
    Empty,
    #[error("length {0} is not a power of 2")]
    NotPowerOfTwo(usize),
    #[error("length mismatch: operator acts on {expected} entries, string has {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("malformed encoding: {0}")]
    Decode(String),
}

/// A length-`p` sequence over `{+1, −1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    entries: Vec<i8>,
}

impl BitString {
    pub fn new(entries: Vec<i8>) -> Result<Self, BitsError> {
        if entries.is_empty() {
            return Err(BitsError::Empty);
        }
        if let Some(&bad) = entries.iter().find(|&&e| e != 1 && e != -1) {
            return Err(BitsError::InvalidEntry(bad as i64));
        }
        Ok(BitString { entries })
    }

    /// `p` copies of `value`.
    pub fn constant(p: usize, value: i8) -> Result<Self, BitsError> {
        BitString::new(vec![value; p])
    }

    /// Decodes the `index`-th string of length `p` in binary order
    /// (bit `j` set means entry `j` is `−1`). Used for exhaustive enumeration.
    pub fn from_index(p: usize, index: u64) -> Self {
        let entries = (0..p).map(|j| if j < 64 && (index >> j) & 1 == 1 { -1 } else { 1 }).collect();
        BitString { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[i8] {
        &self.entries
    }

    /// Number of entries equal to `outcome`.
    pub fn count(&self, outcome: i8) -> usize {
        self.entries.iter().filter(|&&e| e == outcome).count()
    }

    /// Compact form: 8-byte little-endian length, then one sign bit per entry
    /// (set means `−1`), least significant bit first.
    pub fn to_compact(&self) -> Vec<u8> {
        let mut out = (self.entries.len() as u64).to_le_bytes().to_vec();
        let mut bytes = vec![0u8; self.entries.len().div_ceil(8)];
        for (i, &e) in self.entries.iter().enumerate() {
            if e < 0 {
                bytes[i / 8] |= 1 << (i % 8);
            }
        }
        out.extend(bytes);
        out
    }

    pub fn from_compact(data: &[u8]) -> Result<Self, BitsError> {
        let header: [u8; 8] = data
            .get(..8)
            .and_then(|h| h.try_into().ok())
            .ok_or_else(|| BitsError::Decode("missing length header".into()))?;
        let len = u64::from_le_bytes(header) as usize;
        let body = &data[8..];
        if body.len() != len.div_ceil(8) {
            return Err(BitsError::Decode(format!("expected {} payload bytes, found {}", len.div_ceil(8), body.len())));
        }
        if len % 8 != 0 && body[len / 8] >> (len % 8) != 0 {
            return Err(BitsError::Decode("padding bits set".into()));
        }
        let entries = (0..len).map(|i| if body[i / 8] >> (i % 8) & 1 == 1 { -1 } else { 1 }).collect();
        BitString::new(entries)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &e in &self.entries {
            f.write_str(if e > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = BitsError;

    /// Accepts `+-+-` or comma-separated `1,-1,1,-1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.contains(',') {
            let entries = s
                .split(',')
                .map(|t| match t.trim() {
                    "1" | "+1" => Ok(1),
                    "-1" => Ok(-1),
                    other => other.parse::<i64>().map_err(|_| BitsError::Decode(other.into())).and_then(|v| Err(BitsError::InvalidEntry(v))),
                })
                .collect::<Result<Vec<i8>, _>>()?;
            return BitString::new(entries);
        }
        let entries = s
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(BitsError::Decode(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<i8>, _>>()?;
        BitString::new(entries)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Entrywise negation.
pub fn negate(s: &BitString) -> BitString {
    BitString { entries: s.entries.iter().map(|&e| -e).collect() }
}

/// `out[i] = (−1)^{flip[i]} · in[source[i]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedPermutation {
    source: Vec<usize>,
    flip: Vec<bool>,
}

impl SignedPermutation {
    pub fn identity(n: usize) -> Self {
        SignedPermutation { source: (0..n).collect(), flip: vec![false; n] }
    }

    pub fn negation(n: usize) -> Self {
        SignedPermutation { source: (0..n).collect(), flip: vec![true; n] }
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &SignedPermutation) -> SignedPermutation {
        let source = self.source.iter().map(|&s| other.source[s]).collect();
        let flip = self.source.iter().zip(&self.flip).map(|(&s, &f)| f ^ other.flip[s]).collect();
        SignedPermutation { source, flip }
    }

    pub fn pow(&self, mut k: u64) -> SignedPermutation {
        let mut base = self.clone();
        let mut acc = SignedPermutation::identity(self.len());
        while k > 0 {
            if k & 1 == 1 {
                acc = base.compose(&acc);
            }
            base = base.compose(&base);
            k >>= 1;
        }
        acc
    }

    pub fn apply(&self, s: &BitString) -> Result<BitString, BitsError> {
        if s.len() != self.len() {
            return Err(BitsError::LengthMismatch { expected: self.len(), found: s.len() });
        }
        let entries = self
            .source
            .iter()
            .zip(&self.flip)
            .map(|(&src, &f)| if f { -s.entries[src] } else { s.entries[src] })
            .collect();
        Ok(BitString { entries })
    }

    /// Least `k > 0` with `self^k = I`, from the cycle structure: a cycle of
    /// length `L` contributes `L`, or `2L` if it carries an odd number of flips.
    pub fn order(&self) -> u64 {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut order = 1u64;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let (mut len, mut flips, mut i) = (0u64, false, start);
            while !seen[i] {
                seen[i] = true;
                flips ^= self.flip[i];
                i = self.source[i];
                len += 1;
            }
            order = order.lcm(&if flips { 2 * len } else { len });
        }
        order
    }
}

fn check_power_of_two(p: usize) -> Result<(), BitsError> {
    if p.is_power_of_two() {
        Ok(())
    } else {
        Err(BitsError::NotPowerOfTwo(p))
    }
}

/// The signed permutation of `Ω_p`.
pub fn omega_permutation(p: usize) -> Result<SignedPermutation, BitsError> {
    check_power_of_two(p)?;
    let mut op = SignedPermutation { source: vec![0], flip: vec![true] };
    let mut size = 1;
    while size < p {
        // Ω_{2h}{S1, S2} = {Ω_h(S2), S1}
        let h = size;
        let mut source = Vec::with_capacity(2 * h);
        let mut flip = Vec::with_capacity(2 * h);
        source.extend(op.source.iter().map(|&s| h + s));
        flip.extend_from_slice(&op.flip);
        source.extend(0..h);
        flip.extend(std::iter::repeat(false).take(h));
        op = SignedPermutation { source, flip };
        size *= 2;
    }
    Ok(op)
}

/// One application of `Ω_p`, `p = len(s)`.
pub fn omega_apply(s: &BitString) -> Result<BitString, BitsError> {
    omega_permutation(s.len())?.apply(s)
}

/// Multiplicative order of `Ω_p`; equals `2p`.
pub fn order_of(p: usize) -> Result<u64, BitsError> {
    Ok(omega_permutation(p)?.order())
}

/// The power `Ω_p^exponent`, with the exponent reduced mod `2p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhaseOperator {
    p: usize,
    exponent: u64,
}

impl PhaseOperator {
    pub fn new(p: usize, exponent: i64) -> Result<Self, BitsError> {
        check_power_of_two(p)?;
        let exponent = exponent.rem_euclid(2 * p as i64) as u64;
        Ok(PhaseOperator { p, exponent })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    /// Composition adds exponents.
    pub fn then(&self, other: &PhaseOperator) -> Result<PhaseOperator, BitsError> {
        if self.p != other.p {
            return Err(BitsError::LengthMismatch { expected: self.p, found: other.p });
        }
        PhaseOperator::new(self.p, (self.exponent + other.exponent) as i64)
    }

    pub fn permutation(&self) -> SignedPermutation {
        omega_permutation(self.p).expect("p checked at construction").pow(self.exponent)
    }

    pub fn apply(&self, s: &BitString) -> Result<BitString, BitsError> {
        self.permutation().apply(s)
    }
}

/// `Ω_p^n · S`, realising the phase `e^{iπn/p}`.
pub fn apply_phase(s: &BitString, n: i64) -> Result<BitString, BitsError> {
    PhaseOperator::new(s.len(), n)?.apply(s)
}
