//! Exact arithmetic over the rational-complex grid sets `C_p`.
//!
//! A value `A·e^{iφ}` is stored as the pair `(A², φ/2π)`, both exact
//! rationals. It lies in `C_p` when both reduce to denominators dividing `p`.
//! Products stay exact. Sums generally leave every `C_p`; whether they do is
//! decided from the algebraic degree of `cos(2πj/n)`, which is `φ(n)/2` for
//! `n ≥ 3`, so the only rational cosines of rational turns are `0, ±1/2, ±1`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::precise::{self, Fixed};
use crate::ratio::{int_from_json, int_to_json};

/// Significant digits carried by numeric witnesses.
pub const WITNESS_DIGITS: usize = 50;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CpError {
    #[error("grid size p must be at least 1, got {0}")]
    InvalidGrid(String),
    #[error("squared amplitude must be non-negative, got {0}")]
    NegativeAmplitude(String),
    #[error("grid spacing dx must be positive, got {0}")]
    NonPositiveStep(String),
}

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn frac_part(r: &BigRational) -> BigRational {
    r - r.floor()
}

/// An exact complex value held as squared amplitude and turn.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "PolarWire", into = "PolarWire")]
pub struct ExactPolar {
    amp2: BigRational,
    turn: BigRational,
}

impl ExactPolar {
    /// Builds a value, reducing the turn into `[0, 1)`. Zero gets turn 0.
    pub fn new(amp2: BigRational, turn: BigRational) -> Result<Self, CpError> {
        if amp2.is_negative() {
            return Err(CpError::NegativeAmplitude(amp2.to_string()));
        }
        let turn = if amp2.is_zero() { BigRational::zero() } else { frac_part(&turn) };
        Ok(ExactPolar { amp2, turn })
    }

    pub fn zero() -> Self {
        ExactPolar { amp2: BigRational::zero(), turn: BigRational::zero() }
    }

    pub fn one() -> Self {
        ExactPolar { amp2: BigRational::one(), turn: BigRational::zero() }
    }

    /// `e^{2πi·turn}`.
    pub fn unit(turn: BigRational) -> Self {
        ExactPolar { amp2: BigRational::one(), turn: frac_part(&turn) }
    }

    pub fn amp2(&self) -> &BigRational {
        &self.amp2
    }

    pub fn turn(&self) -> &BigRational {
        &self.turn
    }

    pub fn is_zero(&self) -> bool {
        self.amp2.is_zero()
    }

    /// Smallest `p` with `self ∈ C_p`.
    pub fn min_grid(&self) -> BigInt {
        self.amp2.denom().lcm(self.turn.denom())
    }

    /// Floating-point rectangular form, for display only.
    pub fn to_complex_f64(&self) -> (f64, f64) {
        let a = self.amp2.to_f64().unwrap_or(f64::NAN).sqrt();
        let phi = 2.0 * std::f64::consts::PI * self.turn.to_f64().unwrap_or(f64::NAN);
        (a * phi.cos(), a * phi.sin())
    }
}

impl fmt::Display for ExactPolar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sqrt({})·e^(2πi·{})", self.amp2, self.turn)
    }
}

#[derive(Serialize, Deserialize)]
struct PolarWire {
    amp2_num: serde_json::Value,
    amp2_den: serde_json::Value,
    turn_num: serde_json::Value,
    turn_den: serde_json::Value,
}

impl From<ExactPolar> for PolarWire {
    fn from(x: ExactPolar) -> Self {
        PolarWire {
            amp2_num: int_to_json(x.amp2.numer()),
            amp2_den: int_to_json(x.amp2.denom()),
            turn_num: int_to_json(x.turn.numer()),
            turn_den: int_to_json(x.turn.denom()),
        }
    }
}

impl TryFrom<PolarWire> for ExactPolar {
    type Error = String;
    fn try_from(w: PolarWire) -> Result<Self, String> {
        let get = |v: &serde_json::Value, name: &str| {
            int_from_json(v).ok_or_else(|| format!("{name} is not an integer"))
        };
        let (an, ad) = (get(&w.amp2_num, "amp2_num")?, get(&w.amp2_den, "amp2_den")?);
        let (tn, td) = (get(&w.turn_num, "turn_num")?, get(&w.turn_den, "turn_den")?);
        if ad.is_zero() || td.is_zero() {
            return Err("zero denominator".into());
        }
        ExactPolar::new(BigRational::new(an, ad), BigRational::new(tn, td)).map_err(|e| e.to_string())
    }
}

/// `sqrt(m/p)·e^{2πi n/p}`.
pub fn make_cp(m: i64, n: i64, p: i64) -> Result<ExactPolar, CpError> {
    if p < 1 {
        return Err(CpError::InvalidGrid(p.to_string()));
    }
    if m < 0 {
        return Err(CpError::NegativeAmplitude(m.to_string()));
    }
    ExactPolar::new(q(m, p), q(n.rem_euclid(p), p))
}

/// Whether `x ∈ C_p`.
pub fn is_member(x: &ExactPolar, p: &BigInt) -> bool {
    p.is_positive() && (p % x.min_grid()).is_zero()
}

/// Exact product: squared amplitudes multiply, turns add.
pub fn mul(a: &ExactPolar, b: &ExactPolar) -> ExactPolar {
    if a.is_zero() || b.is_zero() {
        return ExactPolar::zero();
    }
    ExactPolar { amp2: &a.amp2 * &b.amp2, turn: frac_part(&(&a.turn + &b.turn)) }
}

/// `rational + coeff·√radicand` with squarefree `radicand > 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadraticSurd {
    #[serde(with = "crate::ratio::ratio_serde")]
    pub rational: BigRational,
    #[serde(with = "crate::ratio::ratio_serde")]
    pub coeff: BigRational,
    pub radicand: u32,
}

impl QuadraticSurd {
    fn new(rational: BigRational, coeff: BigRational, radicand: u32) -> Self {
        QuadraticSurd { rational, coeff, radicand }
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        QuadraticSurd::new(&self.rational * k, &self.coeff * k, self.radicand)
    }

    pub fn add_rational(&self, k: &BigRational) -> Self {
        QuadraticSurd::new(&self.rational + k, self.coeff.clone(), self.radicand)
    }

    /// Exact sign, by comparing `rational²` with `coeff²·radicand`.
    pub fn signum(&self) -> i32 {
        let sr = sign_of(&self.rational);
        let sc = sign_of(&self.coeff);
        if sr == sc || sc == 0 {
            return sr;
        }
        if sr == 0 {
            return sc;
        }
        let lhs = &self.rational * &self.rational;
        let rhs = &self.coeff * &self.coeff * BigRational::from_integer(self.radicand.into());
        if lhs > rhs {
            sr
        } else {
            sc
        }
    }

    pub fn to_fixed(&self, bits: u32) -> Fixed {
        let root = Fixed::from_int(self.radicand as i64, bits).sqrt();
        &Fixed::from_ratio(&self.rational, bits) + &(&Fixed::from_ratio(&self.coeff, bits) * &root)
    }
}

impl fmt::Display for QuadraticSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rational.is_zero() {
            write!(f, "({})·√{}", self.coeff, self.radicand)
        } else {
            write!(f, "{} + ({})·√{}", self.rational, self.coeff, self.radicand)
        }
    }
}

fn sign_of(r: &BigRational) -> i32 {
    if r.is_positive() {
        1
    } else if r.is_negative() {
        -1
    } else {
        0
    }
}

/// An exactly known real, or just its algebraic degree when it is larger than 2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExactReal {
    Rational {
        #[serde(with = "crate::ratio::ratio_serde")]
        value: BigRational,
    },
    Surd { value: QuadraticSurd },
    /// Degree over Q; `None` when the denominator was too large to factor.
    Algebraic { degree: Option<u64> },
}

impl ExactReal {
    pub fn is_rational(&self) -> bool {
        matches!(self, ExactReal::Rational { .. })
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            ExactReal::Rational { value } => Some(value),
            _ => None,
        }
    }

    /// `k·self + c`.
    fn affine(&self, k: &BigRational, c: &BigRational) -> ExactReal {
        match self {
            ExactReal::Rational { value } => ExactReal::Rational { value: value * k + c },
            ExactReal::Surd { value } => ExactReal::Surd { value: value.scale(k).add_rational(c) },
            ExactReal::Algebraic { degree } => ExactReal::Algebraic { degree: *degree },
        }
    }
}

impl fmt::Display for ExactReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactReal::Rational { value } => write!(f, "{value}"),
            ExactReal::Surd { value } => write!(f, "{value}"),
            ExactReal::Algebraic { degree: Some(d) } => write!(f, "algebraic of degree {d}"),
            ExactReal::Algebraic { degree: None } => write!(f, "algebraic of degree > 2"),
        }
    }
}

/// Classification of `cos(2π·turn)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosineClass {
    /// The turn reduced into `[0, 1)`.
    #[serde(with = "crate::ratio::ratio_serde")]
    pub turn: BigRational,
    /// Reduced denominator `n`.
    #[serde(with = "crate::ratio::int_serde")]
    pub denominator: BigInt,
    /// Degree of the cosine over Q.
    pub degree: Option<u64>,
    pub value: ExactReal,
}

impl CosineClass {
    pub fn is_rational(&self) -> bool {
        self.value.is_rational()
    }
}

/// Factoring limit for the totient; beyond it the degree is reported unknown.
const TOTIENT_LIMIT: u64 = 1 << 48;

fn totient(mut n: u64) -> u64 {
    let mut result = n;
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            while n % d == 0 {
                n /= d;
            }
            result -= result / d;
        }
        d += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

fn cosine_table(n: u64, j: u64) -> Option<ExactReal> {
    let rat = |a, b| Some(ExactReal::Rational { value: q(a, b) });
    let surd = |r: (i64, i64), c: (i64, i64), d| {
        Some(ExactReal::Surd { value: QuadraticSurd::new(q(r.0, r.1), q(c.0, c.1), d) })
    };
    match (n, j) {
        (1, _) => rat(1, 1),
        (2, _) => rat(-1, 1),
        (3, _) => rat(-1, 2),
        (4, _) => rat(0, 1),
        (6, _) => rat(1, 2),
        (5, 1 | 4) => surd((-1, 4), (1, 4), 5),
        (5, _) => surd((-1, 4), (-1, 4), 5),
        (8, 1 | 7) => surd((0, 1), (1, 2), 2),
        (8, _) => surd((0, 1), (-1, 2), 2),
        (10, 1 | 9) => surd((1, 4), (1, 4), 5),
        (10, _) => surd((1, 4), (-1, 4), 5),
        (12, 1 | 11) => surd((0, 1), (1, 2), 3),
        (12, _) => surd((0, 1), (-1, 2), 3),
        _ => None,
    }
}

/// Classifies `cos(2π·turn)` for a rational turn.
///
/// Rational exactly for reduced denominators `{1, 2, 3, 4, 6}`, a quadratic
/// surd for `{5, 8, 10, 12}`, and of degree `φ(n)/2 ≥ 3` otherwise.
pub fn niven_classify(turn: &BigRational) -> CosineClass {
    let turn = frac_part(turn);
    let n = turn.denom().clone();
    let small = n.to_u64().filter(|&v| v <= TOTIENT_LIMIT);
    let degree = small.map(|v| if v <= 2 { 1 } else { totient(v) / 2 });
    let value = small
        .and_then(|v| cosine_table(v, turn.numer().to_u64().unwrap_or(0)))
        .unwrap_or(ExactReal::Algebraic { degree });
    CosineClass { turn, denominator: n, degree, value }
}

/// Why a result falls outside every `C_p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonClosureProof {
    /// The squared amplitude carries `cos(2πj/n)` of degree > 1.
    IrrationalCosine {
        #[serde(with = "crate::ratio::int_serde")]
        denominator: BigInt,
        degree: Option<u64>,
    },
    /// The squared amplitude carries `√product · c` with `product` not a
    /// rational square and `c` a non-zero rational.
    IrrationalCrossTerm {
        #[serde(with = "crate::ratio::ratio_serde")]
        product: BigRational,
    },
    /// The squared amplitude is rational but the phase is not a rational turn:
    /// `cos 2ψ` is rational and not one of `0, ±1/2, ±1`.
    IrrationalPhase {
        #[serde(with = "crate::ratio::ratio_serde")]
        cos_double: BigRational,
    },
}

impl fmt::Display for NonClosureProof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NonClosureProof::IrrationalCosine { denominator, degree: Some(d) } => {
                write!(f, "cosine of turn denominator {denominator} has degree {d} > 1")
            }
            NonClosureProof::IrrationalCosine { denominator, degree: None } => {
                write!(f, "cosine of turn denominator {denominator} has degree > 2")
            }
            NonClosureProof::IrrationalCrossTerm { product } => {
                write!(f, "cross term carries sqrt({product}), which is irrational")
            }
            NonClosureProof::IrrationalPhase { cos_double } => {
                write!(f, "phase has cos(2ψ) = {cos_double}, not a rational turn")
            }
        }
    }
}

/// Whether a value lies in some `C_p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum ClosureVerdict {
    /// In `C_p` with `A² = m/p` and `turn = n/p`; `p` is the smallest such grid.
    Member {
        #[serde(with = "crate::ratio::int_serde")]
        p: BigInt,
        #[serde(with = "crate::ratio::int_serde")]
        m: BigInt,
        #[serde(with = "crate::ratio::int_serde")]
        n: BigInt,
    },
    NonMember { proof: NonClosureProof },
    /// Undecided; carries the squared amplitude to [`WITNESS_DIGITS`] digits.
    Indeterminate { amp2_digits: String },
}

impl ClosureVerdict {
    fn member_of(x: &ExactPolar) -> Self {
        let p = x.min_grid();
        let m = (x.amp2.numer() * &p) / x.amp2.denom();
        let n = (x.turn.numer() * &p) / x.turn.denom();
        ClosureVerdict::Member { p, m, n }
    }

    pub fn is_member(&self) -> bool {
        matches!(self, ClosureVerdict::Member { .. })
    }

    pub fn is_non_member(&self) -> bool {
        matches!(self, ClosureVerdict::NonMember { .. })
    }
}

impl fmt::Display for ClosureVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClosureVerdict::Member { p, m, n } => write!(f, "Member of C_{p} (m={m}, n={n})"),
            ClosureVerdict::NonMember { proof } => write!(f, "NonMember: {proof}"),
            ClosureVerdict::Indeterminate { amp2_digits } => write!(f, "Indeterminate: |a+b|² ≈ {amp2_digits}"),
        }
    }
}

/// Outcome of [`try_add`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumResult {
    /// The exact sum, present iff the verdict is `Member`.
    pub exact: Option<ExactPolar>,
    /// Exact form of `|a+b|²` when it could be determined.
    pub amp2: Option<ExactReal>,
    /// `|a+b|²` to [`WITNESS_DIGITS`] significant digits.
    pub amp2_digits: String,
    /// Phase of the sum as a turn in `[0, 1)` (floating point).
    pub turn_approx: f64,
    pub verdict: ClosureVerdict,
}

fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let (n, d) = (r.numer(), r.denom());
    let (sn, sd) = (n.sqrt(), d.sqrt());
    (&sn * &sn == *n && &sd * &sd == *d).then(|| BigRational::new(sn, sd))
}

/// Numeric `|a+b|²` and phase turn, computed directly from the rectangular form.
fn numeric_sum(a: &ExactPolar, b: &ExactPolar) -> (Fixed, f64) {
    let bits = precise::DEFAULT_BITS;
    let ra = Fixed::from_ratio(&a.amp2, bits).sqrt();
    let rb = Fixed::from_ratio(&b.amp2, bits).sqrt();
    let re = &(&ra * &precise::cos_turn(&a.turn, bits)) + &(&rb * &precise::cos_turn(&b.turn, bits));
    let im = &(&ra * &precise::sin_turn(&a.turn, bits)) + &(&rb * &precise::sin_turn(&b.turn, bits));
    let amp2 = &(&re * &re) + &(&im * &im);
    let turn = im.to_f64().atan2(re.to_f64()) / std::f64::consts::TAU;
    (amp2, turn.rem_euclid(1.0))
}

fn circular_gap(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// The turn `α ∈ [0, 1/2]` with `cos 2πα = c`, for Niven values of `c`.
fn niven_arccos(c: &BigRational) -> Option<BigRational> {
    let table = [(q(1, 1), q(0, 1)), (q(1, 2), q(1, 6)), (q(0, 1), q(1, 4)), (q(-1, 2), q(1, 3)), (q(-1, 1), q(1, 2))];
    table.into_iter().find(|(v, _)| v == c).map(|(_, t)| t)
}

/// Adds two exact values and decides whether the sum stays in some `C_p`.
///
/// Equal amplitudes follow `e^{iφa} + e^{iφb} = 2cos((φa−φb)/2)·e^{i(φa+φb)/2}`,
/// so `|a+b|² = 2A²(1 + cos Δ)`. Unequal amplitudes are decided when
/// `A²B²` is a rational square or `cos Δ = 0`; otherwise the verdict is
/// `Indeterminate` unless irrationality is already forced.
pub fn try_add(a: &ExactPolar, b: &ExactPolar) -> SumResult {
    let (num_amp2, turn_approx) = numeric_sum(a, b);
    let amp2_digits = num_amp2.to_sci_string(WITNESS_DIGITS);
    let finish = |exact: Option<ExactPolar>, amp2: Option<ExactReal>, verdict: ClosureVerdict| SumResult {
        exact,
        amp2,
        amp2_digits: amp2_digits.clone(),
        turn_approx,
        verdict,
    };
    let member = |x: ExactPolar| {
        let verdict = ClosureVerdict::member_of(&x);
        let amp2 = Some(ExactReal::Rational { value: x.amp2.clone() });
        finish(Some(x), amp2, verdict)
    };

    if a.is_zero() {
        return member(b.clone());
    }
    if b.is_zero() {
        return member(a.clone());
    }

    let delta = &a.turn - &b.turn;
    let cos = niven_classify(&delta);

    if a.amp2 == b.amp2 {
        let two_a2 = &a.amp2 * BigRational::from_integer(2.into());
        let amp2 = cos.value.affine(&two_a2, &two_a2);
        return match amp2 {
            ExactReal::Rational { value } => {
                if value.is_zero() {
                    return member(ExactPolar::zero());
                }
                // 2cos(πΔ) < 0 flips the phase by a half turn
                let half = q(1, 2);
                let mut turn = (&a.turn + &b.turn) * &half;
                if delta.abs() > half {
                    turn += half;
                }
                member(ExactPolar { amp2: value, turn: frac_part(&turn) })
            }
            other => {
                let proof = NonClosureProof::IrrationalCosine { denominator: cos.denominator.clone(), degree: cos.degree };
                finish(None, Some(other), ClosureVerdict::NonMember { proof })
            }
        };
    }

    let product = &a.amp2 * &b.amp2;
    let root = rational_sqrt(&product);
    let amp2 = match (&cos.value, &root) {
        (ExactReal::Rational { value: c }, _) if c.is_zero() => &a.amp2 + &b.amp2,
        (ExactReal::Rational { value: c }, Some(s)) => &a.amp2 + &b.amp2 + BigRational::from_integer(2.into()) * s * c,
        (ExactReal::Rational { .. }, None) => {
            let proof = NonClosureProof::IrrationalCrossTerm { product };
            return finish(None, None, ClosureVerdict::NonMember { proof });
        }
        (irrational, Some(s)) => {
            let two_s = BigRational::from_integer(2.into()) * s;
            let amp2 = irrational.affine(&two_s, &(&a.amp2 + &b.amp2));
            let proof = NonClosureProof::IrrationalCosine { denominator: cos.denominator.clone(), degree: cos.degree };
            return finish(None, Some(amp2), ClosureVerdict::NonMember { proof });
        }
        (_, None) => {
            return finish(None, None, ClosureVerdict::Indeterminate { amp2_digits: amp2_digits.clone() });
        }
    };

    // Phase relative to a: z·e^{-iφa} = A + B·e^{-2πiΔ}, so
    // cos²ψ = (A + B cos Δ)² / |z|² = (A² + 2AB cos Δ + B² cos² Δ) / |z|².
    let c = cos.value.as_rational().cloned().unwrap_or_default();
    let ab_c = match &root {
        Some(s) => s * &c,
        None => BigRational::zero(),
    };
    let two = BigRational::from_integer(2.into());
    let cos2_psi = (&a.amp2 + &two * &ab_c + &b.amp2 * &c * &c) / &amp2;
    let cos_double = &two * cos2_psi - BigRational::one();
    let exact_amp2 = Some(ExactReal::Rational { value: amp2.clone() });
    let Some(alpha) = niven_arccos(&cos_double) else {
        let proof = NonClosureProof::IrrationalPhase { cos_double };
        return finish(None, exact_amp2, ClosureVerdict::NonMember { proof });
    };
    // 2ψ ≡ ±α, so ψ is one of four candidates; the numeric phase picks it
    let half_alpha = &alpha / &two;
    let candidates = [half_alpha.clone(), -half_alpha.clone(), &half_alpha + q(1, 2), q(1, 2) - &half_alpha];
    let rel_approx = (turn_approx - a.turn.to_f64().unwrap_or(0.0)).rem_euclid(1.0);
    let psi = candidates
        .iter()
        .min_by(|x, y| {
            let gx = circular_gap(x.to_f64().unwrap_or(0.0), rel_approx);
            let gy = circular_gap(y.to_f64().unwrap_or(0.0), rel_approx);
            gx.total_cmp(&gy)
        })
        .cloned()
        .unwrap_or_default();
    member(ExactPolar { amp2, turn: frac_part(&(&a.turn + psi)) })
}

/// Outcome of [`momentum_difference`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumResult {
    /// `sin(k·Δx) / Δx`, signed.
    pub amplitude: ExactReal,
    /// Its square.
    pub amp2: ExactReal,
    /// The amplitude as an exact polar value when its square is rational.
    pub factor: Option<ExactPolar>,
    pub verdict: ClosureVerdict,
}

/// Amplitude of the central difference `−i(e^{ik(x+Δx)} − e^{ik(x−Δx)})/2Δx
/// = (sin(kΔx)/Δx)·e^{ikx}`, with `kΔx = 2π·k_dx_turn`.
pub fn momentum_difference(k_dx_turn: &BigRational, dx: &BigRational) -> Result<MomentumResult, CpError> {
    if !dx.is_positive() {
        return Err(CpError::NonPositiveStep(dx.to_string()));
    }
    let inv_dx = dx.recip();
    let sine = niven_classify(&(k_dx_turn - q(1, 4)));
    let amplitude = sine.value.affine(&inv_dx, &BigRational::zero());
    // sin²θ = (1 − cos 2θ)/2
    let double = niven_classify(&(k_dx_turn * BigRational::from_integer(2.into())));
    let inv_dx2 = &inv_dx * &inv_dx;
    let amp2 = double.value.affine(&(q(-1, 2) * &inv_dx2), &(q(1, 2) * &inv_dx2));
    let (factor, verdict) = match &amp2 {
        ExactReal::Rational { value } => {
            let sign = match &sine.value {
                ExactReal::Rational { value } => sign_of(value),
                ExactReal::Surd { value } => value.signum(),
                ExactReal::Algebraic { .. } => 1,
            };
            let turn = if sign < 0 { q(1, 2) } else { q(0, 1) };
            let x = ExactPolar::new(value.clone(), turn).expect("square is non-negative");
            let verdict = ClosureVerdict::member_of(&x);
            (Some(x), verdict)
        }
        _ => {
            let proof = NonClosureProof::IrrationalCosine { denominator: double.denominator.clone(), degree: double.degree };
            (None, ClosureVerdict::NonMember { proof })
        }
    };
    Ok(MomentumResult { amplitude, amp2, factor, verdict })
}

/// A pair in `C_p × C_p` whose sum leaves every grid.
///
/// With `8 | p` the pair is `1 + e^{iπ/4}`; for other `p` outside
/// `{1, 2, 3, 4, 6}` it is `1 + e^{2πi/p}`; for those five it is
/// `1 + √2`, built from unequal amplitudes.
pub fn gap_witness(p: i64) -> Result<(ExactPolar, ExactPolar), CpError> {
    let a = make_cp(p, 0, p)?;
    let b = if p % 8 == 0 {
        make_cp(p, p / 8, p)?
    } else if matches!(p, 1 | 2 | 3 | 4 | 6) {
        make_cp(2 * p, 0, p)?
    } else {
        make_cp(p, 1, p)?
    };
    Ok((a, b))
}

/// Tally of the half-grid product claim `C_{p/2} × C_{p/2} → C_p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalfGridReport {
    pub p: i64,
    pub pairs: u64,
    pub products_in_cp: u64,
    pub products_in_cp_squared: u64,
    pub counterexample: Option<(ExactPolar, ExactPolar)>,
}

/// Checks which products of `C_{p/2}` elements (with `A² ≤ 1`) land in `C_p`.
///
/// Every product lands in `C_{(p/2)²}`; landing in `C_p` is the exception.
pub fn check_half_grid_products(p: i64) -> Result<HalfGridReport, CpError> {
    if p < 2 || p % 2 != 0 {
        return Err(CpError::InvalidGrid(p.to_string()));
    }
    let h = p / 2;
    let elems: Vec<ExactPolar> = (0..=h)
        .flat_map(|m| (0..h).map(move |n| (m, n)))
        .map(|(m, n)| make_cp(m, n, h))
        .collect::<Result<_, _>>()?;
    let (pb, hb) = (BigInt::from(p), BigInt::from(h * h));
    let mut report = HalfGridReport { p, pairs: 0, products_in_cp: 0, products_in_cp_squared: 0, counterexample: None };
    for a in &elems {
        for b in &elems {
            let c = mul(a, b);
            report.pairs += 1;
            if is_member(&c, &pb) {
                report.products_in_cp += 1;
            } else if report.counterexample.is_none() {
                report.counterexample = Some((a.clone(), b.clone()));
            }
            if is_member(&c, &hb) {
                report.products_in_cp_squared += 1;
            }
        }
    }
    Ok(report)
}
