//! Finite Hilbert states as counting ensembles.
//!
//! A qubit over `C_p` is a length-`p` bit string of outcome labels; the Born
//! frequency of `+1` is the exact count ratio `m/p`. Tensor products are
//! Cartesian products of bit strings, and a singlet pair at relative angle
//! `θ` with `cos θ = 1 − 2m/p` is a list of `p` outcome pairs of which exactly
//! `m` agree, giving the correlation `2m/p − 1 = −cos θ` with no rounding.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{self, BitString, BitsError, PhaseOperator};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnsembleError {
    #[error("count m = {m} is outside 0..={p}")]
    CountOutOfRange { m: u64, p: u64 },
    #[error("ensemble size p must be positive")]
    EmptyEnsemble,
    #[error("outcome must be +1 or -1, got {0}")]
    InvalidOutcome(i8),
    #[error("expected {expected} outcomes, got {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Bits(#[from] BitsError),
}

fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn check_outcome(o: i8) -> Result<(), EnsembleError> {
    if o == 1 || o == -1 {
        Ok(())
    } else {
        Err(EnsembleError::InvalidOutcome(o))
    }
}

/// A single-qubit ensemble of `p` trajectories.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitEnsemble {
    bits: BitString,
    phase_exponent: u64,
}

/// JSON form of a qubit ensemble.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitSummary {
    pub p: u64,
    pub m: u64,
    pub phase_exponent: u64,
}

impl QubitEnsemble {
    pub fn p(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    /// Exponent `n` of the phase `e^{iπn/p}`, reduced mod `2p`.
    pub fn phase_exponent(&self) -> u64 {
        self.phase_exponent
    }

    /// Number of `+1` labels.
    pub fn m(&self) -> u64 {
        self.bits.count(1) as u64
    }

    /// Multiplies the state by `e^{iπn/p}`; outcome labels are untouched.
    pub fn apply_phase(&self, n: i64) -> Result<QubitEnsemble, EnsembleError> {
        let op = PhaseOperator::new(self.p(), self.phase_exponent as i64 + n)?;
        Ok(QubitEnsemble { bits: self.bits.clone(), phase_exponent: op.exponent() })
    }

    /// The bit string acted on by the phase operator `Ω_p^n`.
    pub fn phased_bits(&self) -> Result<BitString, EnsembleError> {
        Ok(bits::apply_phase(&self.bits, self.phase_exponent as i64)?)
    }

    pub fn summary(&self) -> QubitSummary {
        QubitSummary { p: self.p() as u64, m: self.m(), phase_exponent: self.phase_exponent }
    }

    /// Outcome frequency table as CSV.
    pub fn frequency_csv(&self) -> String {
        let mut out = String::from("outcome,count,frequency\n");
        for o in [1i8, -1] {
            out.push_str(&format!("{},{},{}\n", o, self.bits.count(o), born_frequency(self, o).expect("valid outcome")));
        }
        out
    }
}

/// Canonical ensemble: first `m` labels `+1`, the rest `−1`, phase `n mod 2p`.
pub fn make_qubit(m: u64, n: i64, p: u64) -> Result<QubitEnsemble, EnsembleError> {
    if p == 0 {
        return Err(EnsembleError::EmptyEnsemble);
    }
    if m > p {
        return Err(EnsembleError::CountOutOfRange { m, p });
    }
    let op = PhaseOperator::new(p as usize, n)?;
    let entries = (0..p).map(|i| if i < m { 1 } else { -1 }).collect();
    Ok(QubitEnsemble { bits: BitString::new(entries)?, phase_exponent: op.exponent() })
}

/// `count(outcome)/p`, exact.
pub fn born_frequency(q: &QubitEnsemble, outcome: i8) -> Result<BigRational, EnsembleError> {
    check_outcome(outcome)?;
    Ok(ratio(q.bits.count(outcome) as u64, q.p() as u64))
}

/// Product ensemble whose joint table is the Cartesian product of components.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiQubitEnsemble {
    components: Vec<QubitEnsemble>,
}

impl MultiQubitEnsemble {
    pub fn components(&self) -> &[QubitEnsemble] {
        &self.components
    }

    /// Number of rows of the joint table.
    pub fn size(&self) -> u64 {
        self.components.iter().map(|c| c.p() as u64).product()
    }

    /// The joint table row at `index`, in lexicographic order (last factor fastest).
    pub fn row(&self, mut index: u64) -> Vec<i8> {
        let mut out = vec![0i8; self.components.len()];
        for (slot, c) in out.iter_mut().zip(&self.components).rev() {
            let p = c.p() as u64;
            *slot = c.bits.entries()[(index % p) as usize];
            index /= p;
        }
        out
    }

    /// Lazily enumerates the joint table.
    pub fn rows(&self) -> impl Iterator<Item = Vec<i8>> + '_ {
        (0..self.size()).map(move |i| self.row(i))
    }

    /// Rows of the joint table matching `outcomes`, counted by enumeration.
    pub fn joint_count(&self, outcomes: &[i8]) -> Result<u64, EnsembleError> {
        if outcomes.len() != self.components.len() {
            return Err(EnsembleError::ArityMismatch { expected: self.components.len(), found: outcomes.len() });
        }
        for &o in outcomes {
            check_outcome(o)?;
        }
        Ok((0..self.size()).into_par_iter().filter(|&i| self.row(i) == outcomes).count() as u64)
    }

    pub fn joint_frequency(&self, outcomes: &[i8]) -> Result<BigRational, EnsembleError> {
        Ok(ratio(self.joint_count(outcomes)?, self.size()))
    }

    /// Counts of `outcome` in factor `k`, obtained by summing the joint table.
    pub fn marginal_count(&self, k: usize, outcome: i8) -> Result<u64, EnsembleError> {
        check_outcome(outcome)?;
        if k >= self.components.len() {
            return Err(EnsembleError::ArityMismatch { expected: self.components.len(), found: k + 1 });
        }
        let rows = self.rows().filter(|r| r[k] == outcome).count() as u64;
        let others: u64 = self.size() / self.components[k].p() as u64;
        Ok(rows / others)
    }

    /// Joint frequency table over all `2^k` outcome patterns, as CSV.
    pub fn frequency_csv(&self) -> Result<String, EnsembleError> {
        let k = self.components.len();
        let mut out = String::new();
        for i in 0..k {
            out.push_str(&format!("o{},", i + 1));
        }
        out.push_str("count,frequency\n");
        for pattern in 0..(1u64 << k) {
            let outcomes: Vec<i8> = (0..k).map(|j| if pattern >> (k - 1 - j) & 1 == 0 { 1 } else { -1 }).collect();
            let count = self.joint_count(&outcomes)?;
            for o in &outcomes {
                out.push_str(&format!("{o},"));
            }
            out.push_str(&format!("{},{}\n", count, ratio(count, self.size())));
        }
        Ok(out)
    }
}

pub fn tensor(a: &QubitEnsemble, b: &QubitEnsemble) -> MultiQubitEnsemble {
    MultiQubitEnsemble { components: vec![a.clone(), b.clone()] }
}

/// Appends another factor to a product ensemble.
pub fn tensor_with(a: &MultiQubitEnsemble, b: &QubitEnsemble) -> MultiQubitEnsemble {
    let mut components = a.components.clone();
    components.push(b.clone());
    MultiQubitEnsemble { components }
}

/// `p` outcome pairs of which exactly `m` agree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingletPairEnsemble {
    p: u64,
    m: u64,
    rows: Vec<(i8, i8)>,
}

impl SingletPairEnsemble {
    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn rows(&self) -> &[(i8, i8)] {
        &self.rows
    }

    /// Builds an ensemble from arbitrary rows (for permutation checks).
    pub fn from_rows(rows: Vec<(i8, i8)>) -> Result<Self, EnsembleError> {
        if rows.is_empty() {
            return Err(EnsembleError::EmptyEnsemble);
        }
        for &(a, b) in &rows {
            check_outcome(a)?;
            check_outcome(b)?;
        }
        let m = rows.iter().filter(|(a, b)| a == b).count() as u64;
        Ok(SingletPairEnsemble { p: rows.len() as u64, m, rows })
    }

    /// `cos θ = 1 − 2m/p` for this ensemble's relative angle.
    pub fn cos_theta(&self) -> BigRational {
        BigRational::from_integer(1.into()) - ratio(2 * self.m, self.p)
    }

    /// Per-pair outcome table as CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 8 + 16);
        out.push_str("index,A,B\n");
        for (i, (a, b)) in self.rows.iter().enumerate() {
            out.push_str(&format!("{i},{a},{b}\n"));
        }
        out
    }
}

/// Canonical singlet ensemble: `A_i` alternates `+1, −1, …`; the first `m`
/// rows have `B_i = A_i`, the rest `B_i = −A_i`.
pub fn singlet_ensemble(p: u64, m: u64) -> Result<SingletPairEnsemble, EnsembleError> {
    if p == 0 {
        return Err(EnsembleError::EmptyEnsemble);
    }
    if m > p {
        return Err(EnsembleError::CountOutOfRange { m, p });
    }
    let rows = (0..p)
        .map(|i| {
            let a: i8 = if i % 2 == 0 { 1 } else { -1 };
            (a, if i < m { a } else { -a })
        })
        .collect();
    Ok(SingletPairEnsemble { p, m, rows })
}

/// `(Σ A_i B_i)/p`, summed over the rows.
pub fn correlation(pairs: &SingletPairEnsemble) -> BigRational {
    let sum: i64 = pairs.rows.iter().map(|&(a, b)| (a * b) as i64).sum();
    BigRational::new(BigInt::from(sum), BigInt::from(pairs.p))
}

/// Average of one side's outcomes.
pub fn marginal_mean(pairs: &SingletPairEnsemble, side_a: bool) -> BigRational {
    let sum: i64 = pairs.rows.iter().map(|&(a, b)| if side_a { a as i64 } else { b as i64 }).sum();
    if pairs.p == 0 {
        return BigRational::zero();
    }
    BigRational::new(BigInt::from(sum), BigInt::from(pairs.p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn make_qubit_examples() {
        let all_up = make_qubit(8, 0, 8).unwrap();
        assert_eq!(born_frequency(&all_up, 1).unwrap(), q(1, 1));
        let all_down = make_qubit(0, 0, 8).unwrap();
        assert_eq!(born_frequency(&all_down, 1).unwrap(), q(0, 1));
        let half = make_qubit(4, 0, 8).unwrap();
        assert_eq!(born_frequency(&half, 1).unwrap(), q(1, 2));
        assert_eq!(make_qubit(9, 0, 8), Err(EnsembleError::CountOutOfRange { m: 9, p: 8 }));
        assert!(matches!(make_qubit(1, 0, 6), Err(EnsembleError::Bits(BitsError::NotPowerOfTwo(6)))));
        assert_eq!(make_qubit(1, -1, 4).unwrap().phase_exponent(), 7);
    }

    #[test]
    fn born_examples() {
        let x = make_qubit(3, 0, 4).unwrap();
        assert_eq!(born_frequency(&x, 1).unwrap(), q(3, 4));
        assert_eq!(born_frequency(&x, -1).unwrap(), q(1, 4));
        assert_eq!(born_frequency(&x, 0), Err(EnsembleError::InvalidOutcome(0)));
    }

    #[test]
    fn tensor_examples() {
        let t = tensor(&make_qubit(2, 0, 4).unwrap(), &make_qubit(1, 0, 4).unwrap());
        assert_eq!(t.size(), 16);
        assert_eq!(t.joint_count(&[1, 1]).unwrap(), 2);
        assert_eq!(t.joint_frequency(&[1, 1]).unwrap(), q(1, 8));
        let total: BigRational = [[1, 1], [1, -1], [-1, 1], [-1, -1]].iter().map(|o| t.joint_frequency(o).unwrap()).sum();
        assert_eq!(total, q(1, 1));

        let x = make_qubit(3, 0, 8).unwrap();
        let t = tensor(&make_qubit(4, 0, 4).unwrap(), &x);
        assert_eq!(t.marginal_count(1, 1).unwrap(), 3);
        assert_eq!(t.marginal_count(1, -1).unwrap(), 5);
        assert!(t.joint_count(&[1]).is_err());
    }

    #[test]
    fn three_factor_table() {
        let a = make_qubit(1, 0, 2).unwrap();
        let t = tensor_with(&tensor(&a, &make_qubit(3, 0, 4).unwrap()), &make_qubit(1, 0, 2).unwrap());
        assert_eq!(t.size(), 16);
        assert_eq!(t.joint_frequency(&[1, 1, 1]).unwrap(), q(3, 16));
        let csv = t.frequency_csv().unwrap();
        assert!(csv.starts_with("o1,o2,o3,count,frequency\n1,1,1,3,3/16\n"));
    }

    #[test]
    fn singlet_examples() {
        assert_eq!(correlation(&singlet_ensemble(8, 0).unwrap()), q(-1, 1));
        assert_eq!(correlation(&singlet_ensemble(8, 8).unwrap()), q(1, 1));
        let s = singlet_ensemble(4, 1).unwrap();
        assert_eq!(correlation(&s), q(-1, 2));
        assert_eq!(s.cos_theta(), q(1, 2));
        assert_eq!(correlation(&singlet_ensemble(16, 8).unwrap()), q(0, 1));
        assert_eq!(marginal_mean(&singlet_ensemble(12, 5).unwrap(), true), q(0, 1));
        assert!(singlet_ensemble(4, 5).is_err());
        assert!(singlet_ensemble(0, 0).is_err());
    }

    #[test]
    fn pair_csv() {
        let csv = singlet_ensemble(4, 1).unwrap().to_csv();
        assert_eq!(csv, "index,A,B\n0,1,1\n1,-1,1\n2,1,-1\n3,-1,1\n");
    }

    proptest! {
        #[test]
        fn frequencies_partition(k in 0u32..8, frac in 0.0f64..=1.0, n in -40i64..40) {
            let p = 1u64 << k;
            let m = (frac * p as f64).floor() as u64;
            let x = make_qubit(m, n, p).unwrap();
            prop_assert_eq!(born_frequency(&x, 1).unwrap() + born_frequency(&x, -1).unwrap(), q(1, 1));
        }

        #[test]
        fn phase_keeps_born_frequency(k in 0u32..8, frac in 0.0f64..=1.0, n in -40i64..40) {
            let p = 1u64 << k;
            let m = (frac * p as f64).floor() as u64;
            let x = make_qubit(m, 0, p).unwrap();
            let y = x.apply_phase(n).unwrap();
            prop_assert_eq!(born_frequency(&y, 1).unwrap(), born_frequency(&x, 1).unwrap());
            let phased = y.phased_bits().unwrap();
            prop_assert_eq!(phased.len(), x.p());
            prop_assert!(phased.entries().iter().all(|e| e.abs() == 1));
        }

        #[test]
        fn correlation_ignores_row_order(p in 1u64..64, frac in 0.0f64..=1.0, seed in any::<u64>()) {
            let m = (frac * p as f64).floor() as u64;
            let s = singlet_ensemble(p, m).unwrap();
            let mut rows = s.rows().to_vec();
            let mut state = seed;
            for i in (1..rows.len()).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                rows.swap(i, (state >> 33) as usize % (i + 1));
            }
            let shuffled = SingletPairEnsemble::from_rows(rows).unwrap();
            prop_assert_eq!(correlation(&shuffled), correlation(&s));
            prop_assert_eq!(shuffled.m(), m);
        }

        #[test]
        fn tensor_marginals(ka in 0u32..4, kb in 0u32..4, fa in 0.0f64..=1.0, fb in 0.0f64..=1.0) {
            let (pa, pb) = (1u64 << ka, 1u64 << kb);
            let a = make_qubit((fa * pa as f64).floor() as u64, 0, pa).unwrap();
            let b = make_qubit((fb * pb as f64).floor() as u64, 0, pb).unwrap();
            let t = tensor(&a, &b);
            prop_assert_eq!(t.marginal_count(0, 1).unwrap(), a.m());
            prop_assert_eq!(t.marginal_count(1, 1).unwrap(), b.m());
            let joint = t.joint_frequency(&[1, 1]).unwrap();
            prop_assert_eq!(joint, born_frequency(&a, 1).unwrap() * born_frequency(&b, 1).unwrap());
        }
    }
}
