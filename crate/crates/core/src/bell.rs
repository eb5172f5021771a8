//! CHSH experiments on the singlet grid and the supermeasured audit.
//!
//! A hidden variable `λ` is a truncated p-adic integer. Its two coarsest
//! digits are colored into the world tag `(X, Y)`; what is left (the rank of
//! each tag digit inside its color class, plus all finer digits) is the
//! payload. The measure `μ` is positive only on the tagged setting pair and
//! only when the chosen settings sit on the `1 − 2m/p` cosine grid. `ρ` sees
//! the payload alone, so `ρ(λ|XY)` cannot depend on the settings while `μ`
//! always does.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::cp::niven_classify;
use crate::ensemble::{correlation, singlet_ensemble, EnsembleError};
use crate::padic::{Coloring, PadicError, PadicInt};
use crate::precise::{cos_turn, Fixed, DEFAULT_BITS};
use crate::ratio::RatioJson;

/// `2√2`, kept only as a numeric annotation.
pub const TSIRELSON: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Largest `p^depth` the exhaustive audits will enumerate.
pub const AUDIT_LIMIT: u64 = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BellError {
    #[error("relative angle {turn} turn for setting pair (X={x}, Y={y}) is off the p={p} grid; nearest grid angle is {nearest_degrees:.6} degrees (m = {nearest_m})")]
    OffGrid { x: u8, y: u8, turn: String, p: u64, nearest_m: u64, nearest_degrees: f64 },
    #[error("correlation {0} is outside [-1, 1]")]
    CorrelationOutOfRange(String),
    #[error("grid index m = {m} exceeds p = {p}")]
    IndexOutOfRange { m: u64, p: u64 },
    #[error("p must be at least 2, got {0}")]
    InvalidGrid(u64),
    #[error("sub-ensemble for tag (X={0}, Y={1}) is empty")]
    EmptySubEnsemble(u8, u8),
    #[error("hidden variables need depth at least 2, got {0}")]
    TooShallow(usize),
    #[error("coloring label {0:?} is not a setting bit")]
    BadTagLabel(String),
    #[error("audit grid p^depth = {p}^{depth} exceeds the exhaustive limit")]
    AuditTooLarge { p: u64, depth: usize },
    #[error("sample count must be positive")]
    NoSamples,
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
}

pub type Result<T> = std::result::Result<T, BellError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

/// One party's measurement choice and its orientation in turns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Setting {
    pub party: Party,
    pub choice: u8,
    pub turn: RatioJson,
}

/// Absolute orientations `a_X` and `b_Y` as rational turns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BellSettings {
    pub a: [BigRational; 2],
    pub b: [BigRational; 2],
}

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

impl BellSettings {
    pub fn new(a: [BigRational; 2], b: [BigRational; 2]) -> Self {
        BellSettings { a, b }
    }

    /// `b_Y − a_X`.
    pub fn relative(&self, x: u8, y: u8) -> BigRational {
        &self.b[y as usize] - &self.a[x as usize]
    }

    pub fn to_settings(&self) -> Vec<Setting> {
        let mut out = Vec::with_capacity(4);
        for (i, t) in self.a.iter().enumerate() {
            out.push(Setting { party: Party::Alice, choice: i as u8, turn: RatioJson::from_ratio(t) });
        }
        for (i, t) in self.b.iter().enumerate() {
            out.push(Setting { party: Party::Bob, choice: i as u8, turn: RatioJson::from_ratio(t) });
        }
        out
    }
}

/// Orientations whose relative angles are 45°, 45°, 45° and 135°.
pub fn tsirelson_settings() -> BellSettings {
    BellSettings::new([q(0, 1), q(1, 4)], [q(1, 8), q(-1, 8)])
}

/// The four setting pairs in CHSH order.
pub const PAIRS: [(u8, u8); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// `m` with `cos(2π·turn) = 1 − 2m/p` exactly, if one exists.
pub fn grid_index(turn: &BigRational, p: u64) -> Option<u64> {
    let class = niven_classify(turn);
    let c = class.value.as_rational()?;
    let x = (BigRational::one() - c) * BigRational::from_integer(BigInt::from(p)) / BigRational::from_integer(2.into());
    if x.is_integer() {
        x.to_integer().to_u64()
    } else {
        None
    }
}

/// Nearest `m` to `p(1 − cos θ)/2`, ties to even.
pub fn nearest_grid_index(turn: &BigRational, p: u64) -> u64 {
    let class = niven_classify(turn);
    let pr = BigRational::from_integer(BigInt::from(p));
    let half = q(1, 2);
    if let Some(c) = class.value.as_rational() {
        let x = (BigRational::one() - c) * &pr * &half;
        let fl = x.floor();
        let frac = &x - &fl;
        let base = fl.to_integer();
        let up = frac > half || (frac == half && base.is_odd());
        return (base + BigInt::from(up as u8)).to_u64().unwrap_or(0);
    }
    // irrational cosine: no exact half, plain rounding of a precise value
    let c = cos_turn(turn, DEFAULT_BITS);
    let one = Fixed::from_int(1, DEFAULT_BITS);
    let x = &(&one - &c) * &Fixed::from_ratio(&(&pr * &half), DEFAULT_BITS);
    let bits = x.bits();
    let floor = x.raw() >> bits;
    let frac = x.raw() - (&floor << bits);
    let up = frac > (BigInt::one() << (bits - 1));
    (floor + BigInt::from(up as u8)).to_u64().unwrap_or(0)
}

/// Angle in degrees with `cos = 1 − 2m/p`.
pub fn grid_degrees(m: u64, p: u64) -> f64 {
    (1.0 - 2.0 * m as f64 / p as f64).clamp(-1.0, 1.0).acos().to_degrees()
}

/// How off-grid relative angles are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffGridPolicy {
    Reject,
    Nearest,
}

/// Grid indices for the four setting pairs.
pub fn resolve_indices(p: u64, settings: &BellSettings, policy: OffGridPolicy) -> Result<[u64; 4]> {
    if p < 2 {
        return Err(BellError::InvalidGrid(p));
    }
    let mut out = [0u64; 4];
    for (slot, &(x, y)) in out.iter_mut().zip(PAIRS.iter()) {
        let rel = settings.relative(x, y);
        *slot = match (grid_index(&rel, p), policy) {
            (Some(m), _) => m,
            (None, OffGridPolicy::Nearest) => nearest_grid_index(&rel, p),
            (None, OffGridPolicy::Reject) => {
                let m = nearest_grid_index(&rel, p);
                return Err(BellError::OffGrid {
                    x,
                    y,
                    turn: rel.to_string(),
                    p,
                    nearest_m: m,
                    nearest_degrees: grid_degrees(m, p),
                });
            }
        };
    }
    Ok(out)
}

/// Exact CHSH outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ChshResult {
    pub correlations: [BigRational; 4],
    pub s: BigRational,
}

/// Serializable view of a CHSH outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshSummary {
    pub correlations: Vec<RatioJson>,
    #[serde(rename = "S")]
    pub s: RatioJson,
    pub abs_s: f64,
    pub exceeds_local_bound: bool,
    pub tsirelson: f64,
    pub gap_to_tsirelson: f64,
}

impl ChshResult {
    pub fn abs_s(&self) -> BigRational {
        self.s.abs()
    }

    pub fn abs_s_f64(&self) -> f64 {
        self.abs_s().to_f64().unwrap_or(f64::NAN)
    }

    pub fn exceeds_local_bound(&self) -> bool {
        self.abs_s() > BigRational::from_integer(2.into())
    }

    pub fn summary(&self) -> ChshSummary {
        let abs_s = self.abs_s_f64();
        ChshSummary {
            correlations: self.correlations.iter().map(RatioJson::from_ratio).collect(),
            s: RatioJson::from_ratio(&self.s),
            abs_s,
            exceeds_local_bound: self.exceeds_local_bound(),
            tsirelson: TSIRELSON,
            gap_to_tsirelson: TSIRELSON - abs_s,
        }
    }
}

/// `S = C(0,0) + C(0,1) + C(1,0) − C(1,1)`.
pub fn chsh_value(corrs: &[BigRational; 4]) -> Result<ChshResult> {
    let one = BigRational::one();
    for c in corrs {
        if c.abs() > one {
            return Err(BellError::CorrelationOutOfRange(c.to_string()));
        }
    }
    let s = &corrs[0] + &corrs[1] + &corrs[2] - &corrs[3];
    Ok(ChshResult { correlations: corrs.clone(), s })
}

/// Correlations from singlet ensembles with the given grid indices.
pub fn run_grid_experiment(p: u64, m: [u64; 4]) -> Result<ChshResult> {
    if p < 2 {
        return Err(BellError::InvalidGrid(p));
    }
    if let Some(&bad) = m.iter().find(|&&v| v > p) {
        return Err(BellError::IndexOutOfRange { m: bad, p });
    }
    let corrs: Vec<BigRational> = m
        .par_iter()
        .map(|&mi| singlet_ensemble(p, mi).map(|e| correlation(&e)))
        .collect::<std::result::Result<_, _>>()?;
    chsh_value(&[corrs[0].clone(), corrs[1].clone(), corrs[2].clone(), corrs[3].clone()])
}

/// Runs the four singlet experiments for the given orientations.
pub fn run_bell_experiment(p: u64, settings: &BellSettings, policy: OffGridPolicy) -> Result<ChshResult> {
    let m = resolve_indices(p, settings, policy)?;
    run_grid_experiment(p, m)
}

/// A λ-independent assignment of outcomes `A(X)`, `B(Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalStrategy {
    pub a: [i8; 2],
    pub b: [i8; 2],
}

impl LocalStrategy {
    pub fn chsh(&self) -> ChshResult {
        let corrs = PAIRS.map(|(x, y)| BigRational::from_integer(BigInt::from(self.a[x as usize] * self.b[y as usize])));
        chsh_value(&corrs).expect("products of signs")
    }
}

/// All 16 deterministic local strategies.
pub fn local_deterministic_strategies() -> Vec<LocalStrategy> {
    let sign = |bit: u32| if bit == 0 { 1 } else { -1 };
    (0u32..16)
        .map(|k| LocalStrategy { a: [sign(k & 1), sign(k >> 1 & 1)], b: [sign(k >> 2 & 1), sign(k >> 3 & 1)] })
        .collect()
}

/// Largest `|S|` over the deterministic local strategies.
pub fn max_local_abs_s() -> BigRational {
    local_deterministic_strategies().iter().map(|s| s.chsh().abs_s()).max().unwrap_or_else(BigRational::zero)
}

/// A decoded hidden variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HiddenVariable {
    pub lambda: PadicInt,
    pub world_tag: (u8, u8),
    pub payload: Vec<u64>,
}

fn tag_bit(coloring: &Coloring, digit: u64) -> Result<u8> {
    match coloring.label(digit) {
        Some("0") => Ok(0),
        Some("1") => Ok(1),
        Some(other) => Err(BellError::BadTagLabel(other.to_string())),
        None => Err(BellError::BadTagLabel(format!("<digit {digit}>"))),
    }
}

fn rank_in_class(coloring: &Coloring, digit: u64) -> u64 {
    let label = coloring.label(digit);
    (0..digit).filter(|&d| coloring.label(d) == label).count() as u64
}

impl HiddenVariable {
    /// Reads the world tag from the two coarsest digits under `coloring`
    /// (labels `"0"` and `"1"`).
    pub fn decode(lambda: PadicInt, coloring: &Coloring) -> Result<Self> {
        if lambda.depth() < 2 {
            return Err(BellError::TooShallow(lambda.depth()));
        }
        let d = lambda.digits();
        let world_tag = (tag_bit(coloring, d[0])?, tag_bit(coloring, d[1])?);
        let mut payload = vec![rank_in_class(coloring, d[0]), rank_in_class(coloring, d[1])];
        payload.extend_from_slice(&d[2..]);
        Ok(HiddenVariable { lambda, world_tag, payload })
    }
}

/// Parity coloring: even digits tag `0`, odd digits tag `1`.
pub fn parity_tags(p: u64) -> Coloring {
    Coloring::parity(p, "0", "1")
}

/// Every digit tags `bit`.
pub fn constant_tags(p: u64, bit: u8) -> Coloring {
    Coloring::constant(p, if bit == 0 { "0" } else { "1" })
}

/// A measure on hidden variables conditioned on the setting pair.
pub trait Measure {
    fn mu(&self, hv: &HiddenVariable, x: u8, y: u8) -> BigRational;
}

/// Positive only on the tagged setting pair with both settings on the grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupermeasuredMu {
    pub p: u64,
    pub settings: BellSettings,
    /// Orientation of the source frame, in turns.
    pub frame: BigRational,
}

impl SupermeasuredMu {
    pub fn new(p: u64, settings: BellSettings) -> Self {
        SupermeasuredMu { p, settings, frame: BigRational::zero() }
    }

    fn on_grid(&self, turn: &BigRational) -> bool {
        grid_index(&(turn - &self.frame), self.p).is_some()
    }
}

impl Measure for SupermeasuredMu {
    fn mu(&self, hv: &HiddenVariable, x: u8, y: u8) -> BigRational {
        let admissible = hv.world_tag == (x, y)
            && self.on_grid(&self.settings.a[x as usize])
            && self.on_grid(&self.settings.b[y as usize]);
        if admissible {
            BigRational::one()
        } else {
            BigRational::zero()
        }
    }
}

/// `μ ≡ 1`, the control for which SI3 holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrivialMu;

impl Measure for TrivialMu {
    fn mu(&self, _hv: &HiddenVariable, _x: u8, _y: u8) -> BigRational {
        BigRational::one()
    }
}

/// How hidden variables are generated for the audits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    /// Every digit uniform and independent.
    Uniform,
    /// Keeps only λ whose first payload entry equals the X tag (negative control).
    Adversarial,
}

impl Generator {
    fn accepts(&self, hv: &HiddenVariable) -> bool {
        match self {
            Generator::Uniform => true,
            Generator::Adversarial => hv.payload[0] == hv.world_tag.0 as u64,
        }
    }
}

/// The exhaustive λ grid used by the audits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditGrid {
    pub p: u64,
    pub depth: usize,
    pub coloring: Coloring,
    pub generator: Generator,
}

impl AuditGrid {
    pub fn new(p: u64, depth: usize) -> Self {
        AuditGrid { p, depth, coloring: parity_tags(p), generator: Generator::Uniform }
    }

    pub fn hidden_variables(&self) -> Result<Vec<HiddenVariable>> {
        if self.depth < 2 {
            return Err(BellError::TooShallow(self.depth));
        }
        let too_large = || BellError::AuditTooLarge { p: self.p, depth: self.depth };
        let size = self.p.checked_pow(self.depth as u32).ok_or_else(too_large)?;
        if size > AUDIT_LIMIT {
            return Err(too_large());
        }
        let mut out = Vec::new();
        for lambda in PadicInt::enumerate(self.p, self.depth)? {
            let hv = HiddenVariable::decode(lambda, &self.coloring)?;
            if self.generator.accepts(&hv) {
                out.push(hv);
            }
        }
        Ok(out)
    }
}

/// μ and ρ over an exhaustive grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureTable {
    pub hidden: Vec<HiddenVariable>,
    /// `mu[i][k]` for λ `i` and setting pair `PAIRS[k]`.
    pub mu: Vec<[BigRational; 4]>,
    pub rho: Vec<BigRational>,
}

impl MeasureTable {
    pub fn build<M: Measure>(hidden: Vec<HiddenVariable>, measure: &M) -> Self {
        let n = hidden.len().max(1) as i64;
        let mu = hidden.iter().map(|hv| PAIRS.map(|(x, y)| measure.mu(hv, x, y))).collect();
        let rho = vec![q(1, n); hidden.len()];
        MeasureTable { hidden, mu, rho }
    }

    /// `ρ × μ` normalized over λ for the pair `PAIRS[k]`; `None` if that pair has no support.
    pub fn rho_bell(&self, k: usize) -> Option<Vec<BigRational>> {
        let raw: Vec<BigRational> = self.rho.iter().zip(&self.mu).map(|(r, m)| r * &m[k]).collect();
        let total: BigRational = raw.iter().sum();
        if total.is_zero() {
            return None;
        }
        Some(raw.into_iter().map(|v| v / &total).collect())
    }

    /// Setting pairs carrying positive μ somewhere.
    pub fn admissible_pairs(&self) -> Vec<usize> {
        (0..4).filter(|&k| self.mu.iter().any(|m| m[k].is_positive())).collect()
    }
}

/// Outcome of the counterfactual exclusion audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualReport {
    pub lambdas: usize,
    pub triples: usize,
    pub admissible_triples: usize,
    pub violations: usize,
    pub compliance: f64,
    /// Number of λ admissible at exactly one setting pair.
    pub single_pair_lambdas: usize,
}

/// Checks that `μ(λ|XY) > 0` forces `μ = 0` at `X′Y`, `XY′` and `X′Y′`.
pub fn counterfactual_audit<M: Measure>(grid: &AuditGrid, measure: &M) -> Result<CounterfactualReport> {
    let table = MeasureTable::build(grid.hidden_variables()?, measure);
    let mut admissible_triples = 0;
    let mut violations = 0;
    let mut single_pair_lambdas = 0;
    for mu in &table.mu {
        let positive: Vec<usize> = (0..4).filter(|&k| mu[k].is_positive()).collect();
        if positive.len() == 1 {
            single_pair_lambdas += 1;
        }
        for &k in &positive {
            admissible_triples += 1;
            // pairs are indexed 2X + Y, so XOR flips X, Y or both
            if [k ^ 2, k ^ 1, k ^ 3].iter().any(|&f| !mu[f].is_zero()) {
                violations += 1;
            }
        }
    }
    let compliance = if admissible_triples == 0 { 1.0 } else { 1.0 - violations as f64 / admissible_triples as f64 };
    Ok(CounterfactualReport {
        lambdas: table.hidden.len(),
        triples: table.hidden.len() * 4,
        admissible_triples,
        violations,
        compliance,
        single_pair_lambdas,
    })
}

/// Statistical independence of `ρ` from the realized settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiRhoReport {
    pub mode: String,
    pub sub_ensemble_sizes: [usize; 4],
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi_square: Option<ChiSquareSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareSummary {
    pub seed: u64,
    pub samples: usize,
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub alpha: f64,
}

fn partition(hidden: &[HiddenVariable]) -> [Vec<&HiddenVariable>; 4] {
    let mut parts: [Vec<&HiddenVariable>; 4] = Default::default();
    for hv in hidden {
        parts[(2 * hv.world_tag.0 + hv.world_tag.1) as usize].push(hv);
    }
    parts
}

fn payload_marginal(part: &[&HiddenVariable]) -> BTreeMap<Vec<u64>, BigRational> {
    let mut counts: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
    for hv in part {
        *counts.entry(hv.payload.clone()).or_default() += 1;
    }
    let n = part.len() as i64;
    counts.into_iter().map(|(k, c)| (k, q(c as i64, n))).collect()
}

/// Exact mode: the four payload marginals must be identical rational distributions.
pub fn check_si_rho_exact(hidden: &[HiddenVariable]) -> Result<SiRhoReport> {
    let parts = partition(hidden);
    for (k, part) in parts.iter().enumerate() {
        if part.is_empty() {
            let (x, y) = PAIRS[k];
            return Err(BellError::EmptySubEnsemble(x, y));
        }
    }
    let marginals: Vec<_> = parts.iter().map(|p| payload_marginal(p)).collect();
    let passed = marginals.windows(2).all(|w| w[0] == w[1]);
    Ok(SiRhoReport {
        mode: "exact".into(),
        sub_ensemble_sizes: [parts[0].len(), parts[1].len(), parts[2].len(), parts[3].len()],
        passed,
        chi_square: None,
    })
}

/// Payload class used for the contingency table: the two tag-digit ranks.
fn payload_class(hv: &HiddenVariable, p: u64) -> u64 {
    hv.payload[0] * p + hv.payload[1]
}

/// Sampling mode: `samples` draws from the generator with a fixed seed and a
/// chi-square test of independence between world tag and payload class.
pub fn check_si_rho_sampled(grid: &AuditGrid, samples: usize, seed: u64, alpha: f64) -> Result<SiRhoReport> {
    if samples == 0 {
        return Err(BellError::NoSamples);
    }
    if grid.depth < 2 {
        return Err(BellError::TooShallow(grid.depth));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hidden = Vec::with_capacity(samples);
    while hidden.len() < samples {
        let digits: Vec<u64> = (0..grid.depth).map(|_| rng.gen_range(0..grid.p)).collect();
        let hv = HiddenVariable::decode(PadicInt::new(grid.p, digits)?, &grid.coloring)?;
        if grid.generator.accepts(&hv) {
            hidden.push(hv);
        }
    }
    let parts = partition(&hidden);
    for (k, part) in parts.iter().enumerate() {
        if part.is_empty() {
            let (x, y) = PAIRS[k];
            return Err(BellError::EmptySubEnsemble(x, y));
        }
    }
    let mut classes: BTreeMap<u64, [u64; 4]> = BTreeMap::new();
    for (k, part) in parts.iter().enumerate() {
        for hv in part {
            classes.entry(payload_class(hv, grid.p)).or_default()[k] += 1;
        }
    }
    let n = samples as f64;
    let row_totals: Vec<f64> = parts.iter().map(|p| p.len() as f64).collect();
    let mut statistic = 0.0;
    for counts in classes.values() {
        let col: f64 = counts.iter().sum::<u64>() as f64;
        for k in 0..4 {
            let expected = row_totals[k] * col / n;
            let diff = counts[k] as f64 - expected;
            statistic += diff * diff / expected;
        }
    }
    let dof = 3 * classes.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
        1.0 - dist.cdf(statistic)
    };
    Ok(SiRhoReport {
        mode: "sampled".into(),
        sub_ensemble_sizes: [parts[0].len(), parts[1].len(), parts[2].len(), parts[3].len()],
        passed: p_value > alpha,
        chi_square: Some(ChiSquareSummary { seed, samples, statistic, dof, p_value, alpha }),
    })
}

/// A λ where μ changes under a one-sided setting flip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiMuWitness {
    pub lambda: Vec<u64>,
    pub setting: (u8, u8),
    pub flipped: (u8, u8),
    pub mu: RatioJson,
    pub mu_flipped: RatioJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiMuReport {
    pub lambdas: usize,
    pub dependent: usize,
    pub dependence_fraction: f64,
    pub satisfied: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<SiMuWitness>,
}

/// Fraction of λ for which `μ(λ|XY)` varies with `(X, Y)`.
pub fn check_si_mu<M: Measure>(grid: &AuditGrid, measure: &M) -> Result<SiMuReport> {
    let table = MeasureTable::build(grid.hidden_variables()?, measure);
    let mut dependent = 0;
    let mut witness = None;
    for (hv, mu) in table.hidden.iter().zip(&table.mu) {
        if mu.iter().any(|v| v != &mu[0]) {
            dependent += 1;
        }
        if witness.is_none() {
            if let Some(k) = (0..4).find(|&k| mu[k] != mu[k ^ 2]) {
                witness = Some(SiMuWitness {
                    lambda: hv.lambda.digits().to_vec(),
                    setting: PAIRS[k],
                    flipped: PAIRS[k ^ 2],
                    mu: RatioJson::from_ratio(&mu[k]),
                    mu_flipped: RatioJson::from_ratio(&mu[k ^ 2]),
                });
            }
        }
    }
    let lambdas = table.hidden.len();
    let dependence_fraction = if lambdas == 0 { 0.0 } else { dependent as f64 / lambdas as f64 };
    Ok(SiMuReport { lambdas, dependent, dependence_fraction, satisfied: dependent == 0, witness })
}

/// Audit parameters embedded in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditParams {
    pub p: u64,
    pub depth: usize,
    pub generator: Generator,
    pub seed: u64,
    pub samples: usize,
    pub alpha: f64,
}

impl Default for AuditParams {
    fn default() -> Self {
        AuditParams { p: 4, depth: 2, generator: Generator::Uniform, seed: 0, samples: 100_000, alpha: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditBundle {
    pub params: AuditParams,
    pub si_rho: SiRhoReport,
    pub si_rho_sampled: SiRhoReport,
    pub si_mu: SiMuReport,
    pub counterfactual: CounterfactualReport,
}

/// Orientations for the audit grid: every setting on the `p`-turn grid.
pub fn audit_settings(p: u64) -> BellSettings {
    let step = q(1, p as i64);
    BellSettings::new([q(0, 1), step.clone()], [q(0, 1), step])
}

/// Runs all three audits on one grid.
pub fn run_audits(params: &AuditParams) -> Result<AuditBundle> {
    let grid = AuditGrid { generator: params.generator, ..AuditGrid::new(params.p, params.depth) };
    let measure = SupermeasuredMu::new(params.p, audit_settings(params.p));
    let hidden = grid.hidden_variables()?;
    Ok(AuditBundle {
        params: params.clone(),
        si_rho: check_si_rho_exact(&hidden)?,
        si_rho_sampled: check_si_rho_sampled(&grid, params.samples, params.seed, params.alpha)?,
        si_mu: check_si_mu(&grid, &measure)?,
        counterfactual: counterfactual_audit(&grid, &measure)?,
    })
}

/// Full report for a CHSH run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellReport {
    pub p: u64,
    pub settings: Vec<Setting>,
    pub grid_indices: Vec<u64>,
    pub relative_degrees: Vec<f64>,
    #[serde(flatten)]
    pub chsh: ChshSummary,
    pub local_bound_max: RatioJson,
    pub audits: AuditBundle,
}

pub fn bell_report(p: u64, settings: &BellSettings, policy: OffGridPolicy, audit: &AuditParams) -> Result<BellReport> {
    let m = resolve_indices(p, settings, policy)?;
    let result = run_grid_experiment(p, m)?;
    Ok(BellReport {
        p,
        settings: settings.to_settings(),
        grid_indices: m.to_vec(),
        relative_degrees: m.iter().map(|&mi| grid_degrees(mi, p)).collect(),
        chsh: result.summary(),
        local_bound_max: RatioJson::from_ratio(&max_local_abs_s()),
        audits: run_audits(audit)?,
    })
}

/// Per-pair outcomes of the four singlet ensembles as CSV.
pub fn outcomes_csv(p: u64, m: [u64; 4]) -> Result<String> {
    let mut out = String::from("X,Y,index,A,B\n");
    for (&(x, y), &mi) in PAIRS.iter().zip(m.iter()) {
        let e = singlet_ensemble(p, mi)?;
        for (i, (a, b)) in e.rows().iter().enumerate() {
            out.push_str(&format!("{x},{y},{i},{a},{b}\n"));
        }
    }
    Ok(out)
}
