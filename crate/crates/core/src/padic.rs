//! Truncated p-adic integers as addresses in a nested-disk fractal.
//!
//! Digit 0 is the coarsest level of the hierarchy and also the least
//! significant base-`p` digit, so two points that part ways at level `v`
//! are `p^{-v}` apart. Arithmetic is ordinary carry arithmetic mod `p^depth`.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PadicError {
    #[error("base p must be at least 2, got {0}")]
    InvalidBase(u64),
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("digit {digit} at level {level} is out of range for p = {p}")]
    DigitOutOfRange { level: usize, digit: u64, p: u64 },
    #[error("mismatched bases: {0} vs {1}")]
    BaseMismatch(u64, u64),
    #[error("mismatched depths: {0} vs {1}")]
    DepthMismatch(usize, usize),
    #[error("level {level} is out of range for depth {depth}")]
    LevelOutOfRange { level: usize, depth: usize },
    #[error("label {0:?} is not in the cluster alphabet")]
    UnknownLabel(String),
    #[error("coloring must assign a label to each of the {0} digits")]
    BadColoring(u64),
    #[error("p^depth = {0}^{1} is too large to enumerate")]
    TooLarge(u64, usize),
    #[error("address level {found} is out of order (expected {expected})")]
    LevelOrder { expected: usize, found: usize },
}

/// A base-`p` digit sequence truncated at `depth` levels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "PadicWire", into = "PadicWire")]
pub struct PadicInt {
    p: u64,
    digits: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct PadicWire {
    p: u64,
    depth: usize,
    digits: Vec<u64>,
}

impl From<PadicInt> for PadicWire {
    fn from(x: PadicInt) -> Self {
        PadicWire { p: x.p, depth: x.digits.len(), digits: x.digits }
    }
}

impl TryFrom<PadicWire> for PadicInt {
    type Error = PadicError;
    fn try_from(w: PadicWire) -> Result<Self, PadicError> {
        if w.depth != w.digits.len() {
            return Err(PadicError::DepthMismatch(w.depth, w.digits.len()));
        }
        PadicInt::new(w.p, w.digits)
    }
}

impl PadicInt {
    pub fn new(p: u64, digits: Vec<u64>) -> Result<Self, PadicError> {
        if p < 2 {
            return Err(PadicError::InvalidBase(p));
        }
        if digits.is_empty() {
            return Err(PadicError::ZeroDepth);
        }
        if let Some((level, &digit)) = digits.iter().enumerate().find(|(_, &d)| d >= p) {
            return Err(PadicError::DigitOutOfRange { level, digit, p });
        }
        Ok(PadicInt { p, digits })
    }

    /// `value mod p^depth`.
    pub fn from_u64(p: u64, mut value: u64, depth: usize) -> Result<Self, PadicError> {
        if p < 2 {
            return Err(PadicError::InvalidBase(p));
        }
        let digits = (0..depth)
            .map(|_| {
                let d = value % p;
                value /= p;
                d
            })
            .collect();
        PadicInt::new(p, digits)
    }

    pub fn zero(p: u64, depth: usize) -> Result<Self, PadicError> {
        PadicInt::new(p, vec![0; depth])
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn depth(&self) -> usize {
        self.digits.len()
    }

    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    pub fn digit(&self, level: usize) -> Result<u64, PadicError> {
        self.digits.get(level).copied().ok_or(PadicError::LevelOutOfRange { level, depth: self.depth() })
    }

    pub fn truncate(&self, depth: usize) -> Result<Self, PadicError> {
        PadicInt::new(self.p, self.digits.iter().take(depth).copied().collect())
    }

    /// The represented residue `Σ d_k p^k`.
    pub fn value(&self) -> BigInt {
        self.digits.iter().rev().fold(BigInt::zero(), |acc, &d| acc * self.p + d)
    }

    /// Index of the first differing level, `None` if equal.
    pub fn valuation_of_difference(&self, other: &PadicInt) -> Option<usize> {
        self.digits.iter().zip(&other.digits).position(|(a, b)| a != b)
    }

    /// Every point of `Z_p / p^depth`, in increasing residue order.
    pub fn enumerate(p: u64, depth: usize) -> Result<Vec<PadicInt>, PadicError> {
        let total = (p as u128).checked_pow(depth as u32).filter(|&t| t <= 1 << 24).ok_or(PadicError::TooLarge(p, depth))?;
        (0..total as u64).map(|v| PadicInt::from_u64(p, v, depth)).collect()
    }
}

impl fmt::Display for PadicInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits: Vec<String> = self.digits.iter().map(u64::to_string).collect();
        write!(f, "({})_{}", digits.join(","), self.p)
    }
}

/// Which ultrametric to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MetricConvention {
    /// `p^{-v}`.
    #[default]
    Standard,
    /// `p^{1-v}`: points off a shared coarsest disk are exactly `p` apart.
    Shifted,
}

fn same_shape(x: &PadicInt, y: &PadicInt) -> Result<(), PadicError> {
    if x.p != y.p {
        return Err(PadicError::BaseMismatch(x.p, y.p));
    }
    if x.depth() != y.depth() {
        return Err(PadicError::DepthMismatch(x.depth(), y.depth()));
    }
    Ok(())
}

/// Ultrametric distance under the chosen convention; 0 iff all digits agree.
pub fn distance(x: &PadicInt, y: &PadicInt, conv: MetricConvention) -> Result<BigRational, PadicError> {
    same_shape(x, y)?;
    let Some(v) = x.valuation_of_difference(y) else {
        return Ok(BigRational::zero());
    };
    let p = BigInt::from(x.p);
    let exponent = match conv {
        MetricConvention::Standard => -(v as i32),
        MetricConvention::Shifted => 1 - v as i32,
    };
    Ok(if exponent >= 0 {
        BigRational::from_integer(num_traits::pow(p, exponent as usize))
    } else {
        BigRational::new(BigInt::one(), num_traits::pow(p, (-exponent) as usize))
    })
}

fn common(x: &PadicInt, y: &PadicInt) -> Result<usize, PadicError> {
    if x.p != y.p {
        return Err(PadicError::BaseMismatch(x.p, y.p));
    }
    Ok(x.depth().min(y.depth()))
}

/// Sum mod `p^depth`, depth being the smaller of the two.
pub fn add(x: &PadicInt, y: &PadicInt) -> Result<PadicInt, PadicError> {
    let depth = common(x, y)?;
    let p = x.p as u128;
    let mut carry = 0u128;
    let digits = (0..depth)
        .map(|k| {
            let s = x.digits[k] as u128 + y.digits[k] as u128 + carry;
            carry = s / p;
            (s % p) as u64
        })
        .collect();
    PadicInt::new(x.p, digits)
}

/// Product mod `p^depth`, depth being the smaller of the two.
pub fn mul(x: &PadicInt, y: &PadicInt) -> Result<PadicInt, PadicError> {
    let depth = common(x, y)?;
    let p = x.p as u128;
    let mut acc = vec![0u128; depth];
    for i in 0..depth {
        let mut carry = 0u128;
        for j in 0..depth - i {
            let t = acc[i + j] + x.digits[i] as u128 * y.digits[j] as u128 + carry;
            acc[i + j] = t % p;
            carry = t / p;
        }
    }
    PadicInt::new(x.p, acc.into_iter().map(|d| d as u64).collect())
}

/// Additive inverse mod `p^depth`.
pub fn neg(x: &PadicInt) -> PadicInt {
    let p = x.p;
    // complement every digit, then add one
    let comp = PadicInt { p, digits: x.digits.iter().map(|d| p - 1 - d).collect() };
    let one = PadicInt::from_u64(p, 1, x.depth()).expect("valid base");
    add(&comp, &one).expect("same base")
}

/// Assigns a cluster label to each digit value `0..p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coloring {
    labels: Vec<String>,
}

impl Coloring {
    pub fn new(labels: Vec<String>) -> Self {
        Coloring { labels }
    }

    /// Even digits get `even`, odd digits get `odd`.
    pub fn parity(p: u64, even: &str, odd: &str) -> Self {
        Coloring { labels: (0..p).map(|d| if d % 2 == 0 { even } else { odd }.to_string()).collect() }
    }

    pub fn constant(p: u64, label: &str) -> Self {
        Coloring { labels: vec![label.to_string(); p as usize] }
    }

    pub fn label(&self, digit: u64) -> Option<&str> {
        self.labels.get(digit as usize).map(String::as_str)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    fn check(&self, p: u64) -> Result<(), PadicError> {
        if self.labels.len() as u64 != p {
            return Err(PadicError::BadColoring(p));
        }
        Ok(())
    }
}

/// The cluster label of `x` at `level`.
pub fn cluster_label<'a>(x: &PadicInt, level: usize, coloring: &'a Coloring) -> Result<&'a str, PadicError> {
    coloring.check(x.p)?;
    let d = x.digit(level)?;
    Ok(coloring.label(d).expect("coloring covers every digit"))
}

/// Alphabet plus one coloring per level (cycled when the address is deeper).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelScheme {
    pub p: u64,
    pub alphabet: BTreeSet<String>,
    pub levels: Vec<Coloring>,
}

impl LabelScheme {
    pub fn new(p: u64, levels: Vec<Coloring>) -> Result<Self, PadicError> {
        if p < 2 {
            return Err(PadicError::InvalidBase(p));
        }
        if levels.is_empty() {
            return Err(PadicError::BadColoring(p));
        }
        for c in &levels {
            c.check(p)?;
        }
        let alphabet = levels.iter().flat_map(|c| c.labels.iter().cloned()).collect();
        Ok(LabelScheme { p, alphabet, levels })
    }

    /// Level 0 colored `a/¬a`, level 1 `b/¬b` by digit parity.
    pub fn two_cluster(p: u64) -> Result<Self, PadicError> {
        LabelScheme::new(p, vec![Coloring::parity(p, "a", "¬a"), Coloring::parity(p, "b", "¬b")])
    }

    pub fn coloring(&self, level: usize) -> &Coloring {
        &self.levels[level % self.levels.len()]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiskEntry {
    pub level: usize,
    pub disk: u64,
    pub label: String,
}

/// The chain of nested disks a trajectory passes through, coarsest first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiskAddress {
    pub entries: Vec<DiskEntry>,
}

impl DiskAddress {
    /// Labels every level of `x` with the scheme.
    pub fn from_padic(x: &PadicInt, scheme: &LabelScheme) -> Result<Self, PadicError> {
        if x.p != scheme.p {
            return Err(PadicError::BaseMismatch(x.p, scheme.p));
        }
        let entries = x
            .digits
            .iter()
            .enumerate()
            .map(|(level, &disk)| DiskEntry { level, disk, label: scheme.coloring(level).labels[disk as usize].clone() })
            .collect();
        Ok(DiskAddress { entries })
    }
}

/// Level-`k` disk index becomes digit `k`.
pub fn address_to_padic(addr: &DiskAddress, scheme: &LabelScheme) -> Result<PadicInt, PadicError> {
    let mut digits = Vec::with_capacity(addr.entries.len());
    for (expected, e) in addr.entries.iter().enumerate() {
        if e.level != expected {
            return Err(PadicError::LevelOrder { expected, found: e.level });
        }
        if e.disk >= scheme.p {
            return Err(PadicError::DigitOutOfRange { level: e.level, digit: e.disk, p: scheme.p });
        }
        if !scheme.alphabet.contains(&e.label) {
            return Err(PadicError::UnknownLabel(e.label.clone()));
        }
        digits.push(e.disk);
    }
    PadicInt::new(scheme.p, digits)
}

/// Pairwise distance matrix as CSV, rows and columns in input order.
pub fn distance_matrix_csv(points: &[PadicInt], conv: MetricConvention) -> Result<String, PadicError> {
    let mut out = String::from("point");
    for pt in points {
        out.push_str(&format!(",{}", pt.value()));
    }
    out.push('\n');
    for a in points {
        out.push_str(&a.value().to_string());
        for b in points {
            out.push_str(&format!(",{}", distance(a, b, conv)?));
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn distance_examples() {
        let x = PadicInt::new(7, vec![1, 2, 3]).unwrap();
        assert_eq!(distance(&x, &x, MetricConvention::Shifted).unwrap(), q(0, 1));
        let y = PadicInt::new(7, vec![4, 2, 3]).unwrap();
        assert_eq!(distance(&x, &y, MetricConvention::Shifted).unwrap(), q(7, 1));
        assert_eq!(distance(&x, &y, MetricConvention::Standard).unwrap(), q(1, 1));
        let z = PadicInt::new(7, vec![1, 2, 5]).unwrap();
        assert_eq!(distance(&x, &z, MetricConvention::Standard).unwrap(), q(1, 49));
        assert_eq!(distance(&x, &z, MetricConvention::Shifted).unwrap(), q(1, 7));
    }

    #[test]
    fn distance_rejects_mismatch() {
        let x = PadicInt::new(5, vec![1, 2]).unwrap();
        let y = PadicInt::new(7, vec![1, 2]).unwrap();
        let z = PadicInt::new(5, vec![1, 2, 0]).unwrap();
        assert_eq!(distance(&x, &y, MetricConvention::Standard), Err(PadicError::BaseMismatch(5, 7)));
        assert_eq!(distance(&x, &z, MetricConvention::Standard), Err(PadicError::DepthMismatch(2, 3)));
    }

    #[test]
    fn arithmetic_examples() {
        let x = PadicInt::from_u64(5, 3, 2).unwrap();
        let y = PadicInt::from_u64(5, 4, 2).unwrap();
        assert_eq!(add(&x, &y).unwrap().digits(), &[2, 1]);
        assert_eq!(add(&x, &PadicInt::zero(5, 2).unwrap()).unwrap(), x);
        let a = PadicInt::from_u64(5, 2, 2).unwrap();
        let b = PadicInt::from_u64(5, 3, 2).unwrap();
        assert_eq!(mul(&a, &b).unwrap().digits(), &[1, 1]);
        // truncation to the common depth
        let short = PadicInt::new(5, vec![3]).unwrap();
        assert_eq!(add(&short, &y).unwrap().digits(), &[2]);
        assert!(add(&x, &PadicInt::zero(7, 2).unwrap()).is_err());
    }

    #[test]
    fn negation_is_additive_inverse() {
        let x = PadicInt::new(3, vec![2, 0, 1, 1]).unwrap();
        assert_eq!(add(&x, &neg(&x)).unwrap(), PadicInt::zero(3, 4).unwrap());
    }

    #[test]
    fn constructor_checks() {
        assert_eq!(PadicInt::new(1, vec![0]), Err(PadicError::InvalidBase(1)));
        assert_eq!(PadicInt::new(5, vec![]), Err(PadicError::ZeroDepth));
        assert!(matches!(PadicInt::new(5, vec![0, 5]), Err(PadicError::DigitOutOfRange { level: 1, .. })));
    }

    #[test]
    fn address_examples() {
        let scheme = LabelScheme::two_cluster(16).unwrap();
        let addr = DiskAddress { entries: vec![DiskEntry { level: 0, disk: 3, label: "¬a".into() }] };
        let x = address_to_padic(&addr, &scheme).unwrap();
        assert_eq!((x.p(), x.digits()), (16, &[3u64][..]));
        assert_eq!(DiskAddress::from_padic(&x, &scheme).unwrap(), addr);

        let bad = DiskAddress { entries: vec![DiskEntry { level: 0, disk: 16, label: "a".into() }] };
        assert!(matches!(address_to_padic(&bad, &scheme), Err(PadicError::DigitOutOfRange { .. })));
        let bad = DiskAddress { entries: vec![DiskEntry { level: 0, disk: 2, label: "c".into() }] };
        assert_eq!(address_to_padic(&bad, &scheme), Err(PadicError::UnknownLabel("c".into())));
    }

    #[test]
    fn cluster_labels() {
        let x = PadicInt::new(16, vec![4, 7]).unwrap();
        let scheme = LabelScheme::two_cluster(16).unwrap();
        assert_eq!(cluster_label(&x, 0, scheme.coloring(0)).unwrap(), "a");
        assert_eq!(cluster_label(&x, 1, scheme.coloring(1)).unwrap(), "¬b");
        let constant = Coloring::constant(16, "a");
        assert!((0..2).all(|l| cluster_label(&x, l, &constant).unwrap() == "a"));
        assert!(matches!(cluster_label(&x, 2, &constant), Err(PadicError::LevelOutOfRange { .. })));
        assert_eq!(cluster_label(&x, 0, &Coloring::constant(3, "a")), Err(PadicError::BadColoring(16)));
    }

    #[test]
    fn json_schema() {
        let x = PadicInt::new(5, vec![1, 0, 4]).unwrap();
        let v = serde_json::to_value(&x).unwrap();
        assert_eq!(v, serde_json::json!({"p": 5, "depth": 3, "digits": [1, 0, 4]}));
        assert_eq!(serde_json::from_value::<PadicInt>(v).unwrap(), x);
        assert!(serde_json::from_value::<PadicInt>(serde_json::json!({"p": 5, "depth": 2, "digits": [1, 0, 4]})).is_err());
    }

    #[test]
    fn csv_matrix() {
        let pts = PadicInt::enumerate(2, 2).unwrap();
        let csv = distance_matrix_csv(&pts, MetricConvention::Standard).unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "point,0,1,2,3");
        assert_eq!(lines[1], "0,0,1,1/2,1");
    }

    fn arb_triple() -> impl Strategy<Value = (PadicInt, PadicInt, PadicInt)> {
        (2u64..12, 1usize..6).prop_flat_map(|(p, depth)| {
            let d = proptest::collection::vec(0..p, depth);
            (d.clone(), d.clone(), d).prop_map(move |(a, b, c)| {
                (PadicInt::new(p, a).unwrap(), PadicInt::new(p, b).unwrap(), PadicInt::new(p, c).unwrap())
            })
        })
    }

    proptest! {
        #[test]
        fn ultrametric_inequality((x, y, z) in arb_triple()) {
            for conv in [MetricConvention::Standard, MetricConvention::Shifted] {
                let dxz = distance(&x, &z, conv).unwrap();
                let dxy = distance(&x, &y, conv).unwrap();
                let dyz = distance(&y, &z, conv).unwrap();
                prop_assert!(dxz <= dxy.max(dyz));
                prop_assert_eq!(distance(&x, &y, conv).unwrap(), distance(&y, &x, conv).unwrap());
            }
        }

        #[test]
        fn arithmetic_agrees_with_integers((x, y, _z) in arb_triple()) {
            let modulus = num_traits::pow(BigInt::from(x.p()), x.depth());
            let s = add(&x, &y).unwrap();
            let m = mul(&x, &y).unwrap();
            prop_assert_eq!(s.value(), (x.value() + y.value()) % &modulus);
            prop_assert_eq!(m.value(), (x.value() * y.value()) % &modulus);
            prop_assert!(s.digits().iter().chain(m.digits()).all(|&d| d < x.p()));
        }

        #[test]
        fn address_roundtrip(digits in proptest::collection::vec(0u64..16, 1..8)) {
            let scheme = LabelScheme::two_cluster(16).unwrap();
            let x = PadicInt::new(16, digits).unwrap();
            let addr = DiskAddress::from_padic(&x, &scheme).unwrap();
            prop_assert_eq!(address_to_padic(&addr, &scheme).unwrap(), x);
        }
    }
}
