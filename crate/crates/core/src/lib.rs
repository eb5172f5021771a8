//! Exact-arithmetic laboratory for gappy number systems and the dynamics
//! they are meant to describe.
//!
//! The crate is organised as a set of small labs, each usable on its own:
//!
//! - [`cp`]: exact complex values `A·e^{iφ}` with rational `A²` and rational
//!   turn `φ/2π`, membership in the grid sets `C_p`, exact products, and
//!   Niven-classified addition (where closure fails).
//! - [`bits`]: bit strings over `{+1, −1}` and the recursive signed-permutation
//!   operator that realises a primitive `2p`-th root of unity on them.
//! - [`padic`]: truncated p-adic integers as addresses in a nested-disk
//!   fractal, with both ultrametric conventions.
//! - [`ensemble`]: counting ensembles with exact Born frequencies, tensor
//!   products as Cartesian products, and exact singlet-pair ensembles.
//! - [`bell`]: the exact CHSH engine and the statistical-independence audit
//!   of a supermeasured toy model.
//! - [`attractor`]: fixed-point and limit-cycle flows, the Lorenz system,
//!   tangent-space volume contraction, lobe symbolization and
//!   Grassberger–Procaccia correlation dimension.
//! - [`cli`]: the batch front end behind the `istlab` binary.
//!
//! Every lab is deterministic. Anything random takes an explicit 64-bit seed.

pub mod attractor;
pub mod bell;
pub mod bits;
pub mod cli;
pub mod cp;
pub mod ensemble;
pub mod padic;
pub mod precise;
mod ratio;

pub use ratio::{parse_ratio, RatioJson};
