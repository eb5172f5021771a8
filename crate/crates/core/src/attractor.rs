//! Dissipative flows and their limit sets.
//!
//! - `ṙ = r(1 − r)`: `r = 1` is a fixed-point attractor.
//! - `ṙ = r(1 − r), φ̇ = 1`: the unit circle is a limit cycle.
//! - The Lorenz system `Ẋ = σ(Y − X), Ẏ = X(ρ − Z) − Y, Ż = XY − βZ`, whose
//!   constant divergence `−(σ + 1 + β)` shrinks every volume to zero.
//!
//! Integration is fixed-step classical RK4 so runs are bit-reproducible.

use std::f64::consts::TAU;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_DT: f64 = 1e-3;
/// Time skipped before attractor statistics are gathered.
pub const DEFAULT_TRANSIENT: f64 = 20.0;
/// Lobe events with `|X|` below this are dropped.
pub const LOBE_EPSILON: f64 = 1e-6;
/// Minimum sample size for [`correlation_dimension`].
pub const MIN_DIMENSION_POINTS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttractorError {
    #[error("initial radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("state became non-finite at step {0}")]
    NonFinite(usize),
    #[error("simplex is degenerate (need 4 affinely independent points)")]
    DegenerateSimplex,
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("need at least {required} points, got {found}")]
    TooFewPoints { found: usize, required: usize },
    #[error("radius range is degenerate: {0}")]
    DegenerateRadii(String),
}

pub type Result<T> = std::result::Result<T, AttractorError>;

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(AttractorError::InvalidStep(dt))
    }
}

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step<const N: usize>(f: impl Fn(&[f64; N]) -> [f64; N], y: &[f64; N], dt: f64) -> [f64; N] {
    let shift = |base: &[f64; N], k: &[f64; N], h: f64| {
        let mut out = *base;
        for i in 0..N {
            out[i] += h * k[i];
        }
        out
    };
    let k1 = f(y);
    let k2 = f(&shift(y, &k1, 0.5 * dt));
    let k3 = f(&shift(y, &k2, 0.5 * dt));
    let k4 = f(&shift(y, &k3, dt));
    let mut out = *y;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrates `f` for time `t` in steps of `dt`, ending with a partial step if needed.
fn integrate_for<const N: usize>(f: impl Fn(&[f64; N]) -> [f64; N], y0: [f64; N], t: f64, dt: f64) -> [f64; N] {
    let full = (t / dt).floor() as usize;
    let mut y = y0;
    for _ in 0..full {
        y = rk4_step(&f, &y, dt);
    }
    let rest = t - full as f64 * dt;
    if rest > 1e-15 * dt.max(1.0) {
        y = rk4_step(&f, &y, rest);
    }
    y
}

/// Analytic and RK4 values of `ṙ = r(1 − r)` at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticSolution {
    pub t: f64,
    pub analytic: f64,
    pub numeric: f64,
}

impl LogisticSolution {
    pub fn discrepancy(&self) -> f64 {
        (self.analytic - self.numeric).abs()
    }
}

/// `r(t) = r0·e^t / (1 + r0(e^t − 1))`, alongside an RK4 solution.
pub fn logistic_flow(r0: f64, t: f64, dt: f64) -> Result<LogisticSolution> {
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(AttractorError::NonPositiveRadius(r0));
    }
    check_dt(dt)?;
    let et = t.exp();
    let analytic = r0 * et / (1.0 + r0 * (et - 1.0));
    let [numeric] = integrate_for(|&[r]| [r * (1.0 - r)], [r0], t, dt);
    Ok(LogisticSolution { t, analytic, numeric })
}

/// Polar state `(r, φ)` of the planar limit-cycle flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub r: f64,
    pub phi: f64,
}

/// Evolves `ṙ = r(1 − r), φ̇ = 1` for time `t`.
pub fn limit_cycle_flow(state: FlowState, t: f64, dt: f64) -> Result<FlowState> {
    let r = logistic_flow(state.r, t, dt)?.numeric;
    Ok(FlowState { r, phi: (state.phi + t).rem_euclid(TAU) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorenzParams {
    pub sigma: f64,
    /// The Lorenz `ρ`; named apart from the density ρ used in the Bell lab.
    pub rho_l: f64,
    pub beta: f64,
}

impl Default for LorenzParams {
    fn default() -> Self {
        LorenzParams { sigma: 10.0, rho_l: 28.0, beta: 8.0 / 3.0 }
    }
}

impl LorenzParams {
    /// The two non-trivial equilibria `C±` (present for `ρ > 1`).
    pub fn equilibria(&self) -> Option<[LorenzState; 2]> {
        if self.rho_l <= 1.0 {
            return None;
        }
        let c = (self.beta * (self.rho_l - 1.0)).sqrt();
        let z = self.rho_l - 1.0;
        Some([LorenzState::new(c, c, z), LorenzState::new(-c, -c, z)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorenzState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl LorenzState {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        LorenzState { x, y, z }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array([x, y, z]: [f64; 3]) -> Self {
        LorenzState { x, y, z }
    }

    /// Image under the symmetry `(X, Y, Z) ↦ (−X, −Y, Z)`.
    pub fn mirrored(&self) -> Self {
        LorenzState { x: -self.x, y: -self.y, z: self.z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

pub fn lorenz_field(params: &LorenzParams, s: &[f64; 3]) -> [f64; 3] {
    let [x, y, z] = *s;
    [params.sigma * (y - x), x * (params.rho_l - z) - y, x * y - params.beta * z]
}

/// Jacobian of the Lorenz field, row-major.
pub fn lorenz_jacobian(params: &LorenzParams, s: &[f64; 3]) -> [[f64; 3]; 3] {
    let [x, y, z] = *s;
    [[-params.sigma, params.sigma, 0.0], [params.rho_l - z, -1.0, -x], [y, x, -params.beta]]
}

pub fn step_lorenz(state: &LorenzState, params: &LorenzParams, dt: f64) -> Result<LorenzState> {
    check_dt(dt)?;
    if !state.is_finite() {
        return Err(AttractorError::NonFinite(0));
    }
    let next = LorenzState::from_array(rk4_step(|s| lorenz_field(params, s), &state.as_array(), dt));
    if !next.is_finite() {
        return Err(AttractorError::NonFinite(1));
    }
    Ok(next)
}

/// Samples of a trajectory at uniform spacing `dt`, starting at `t0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySegment {
    pub t0: f64,
    pub dt: f64,
    pub states: Vec<LorenzState>,
}

impl TrajectorySegment {
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn mirrored(&self) -> Self {
        TrajectorySegment { t0: self.t0, dt: self.dt, states: self.states.iter().map(LorenzState::mirrored).collect() }
    }

    /// `t,X,Y,Z` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,X,Y,Z\n");
        for (i, s) in self.states.iter().enumerate() {
            out.push_str(&format!("{},{},{},{}\n", self.time(i), s.x, s.y, s.z));
        }
        out
    }
}

/// `steps` RK4 steps from `start`; the segment holds `steps + 1` states.
pub fn integrate(start: &LorenzState, params: &LorenzParams, dt: f64, steps: usize) -> Result<TrajectorySegment> {
    check_dt(dt)?;
    if !start.is_finite() {
        return Err(AttractorError::NonFinite(0));
    }
    let mut states = Vec::with_capacity(steps + 1);
    let mut s = start.as_array();
    states.push(*start);
    for i in 0..steps {
        s = rk4_step(|v| lorenz_field(params, v), &s, dt);
        let next = LorenzState::from_array(s);
        if !next.is_finite() {
            return Err(AttractorError::NonFinite(i + 1));
        }
        states.push(next);
    }
    Ok(TrajectorySegment { t0: 0.0, dt, states })
}

/// Trace of the Jacobian, `−(σ + 1 + β)`; the same at every state.
pub fn divergence(params: &LorenzParams) -> f64 {
    -(params.sigma + 1.0 + params.beta)
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Measured `d(log V)/dt` of the simplex spanned by the first four points.
///
/// The edge vectors are carried in tangent space by the variational
/// equations `Ė = J(x(t))·E` along the trajectory of the first point.
pub fn volume_contraction(cloud: &[LorenzState], params: &LorenzParams, t: f64, dt: f64) -> Result<f64> {
    check_dt(dt)?;
    if cloud.len() < 4 {
        return Err(AttractorError::TooFewPoints { found: cloud.len(), required: 4 });
    }
    if !(t > 0.0) {
        return Err(AttractorError::InvalidStep(t));
    }
    let base = cloud[0].as_array();
    // column j of the edge matrix is cloud[j+1] − base
    let mut edges = [[0.0; 3]; 3];
    for j in 0..3 {
        let p = cloud[j + 1].as_array();
        for i in 0..3 {
            edges[i][j] = p[i] - base[i];
        }
    }
    let scale: f64 = (0..3).map(|j| (0..3).map(|i| edges[i][j] * edges[i][j]).sum::<f64>().sqrt()).product();
    let det0 = det3(&edges);
    if !(scale > 0.0) || det0.abs() <= 1e-12 * scale {
        return Err(AttractorError::DegenerateSimplex);
    }

    let mut y = [0.0; 12];
    y[..3].copy_from_slice(&base);
    for i in 0..3 {
        y[3 + 3 * i..6 + 3 * i].copy_from_slice(&edges[i]);
    }
    let field = |y: &[f64; 12]| {
        let s = [y[0], y[1], y[2]];
        let f = lorenz_field(params, &s);
        let jac = lorenz_jacobian(params, &s);
        let mut out = [0.0; 12];
        out[..3].copy_from_slice(&f);
        for i in 0..3 {
            for j in 0..3 {
                out[3 + 3 * i + j] = (0..3).map(|k| jac[i][k] * y[3 + 3 * k + j]).sum();
            }
        }
        out
    };
    let y = integrate_for(field, y, t, dt);
    if y.iter().any(|v| !v.is_finite()) {
        return Err(AttractorError::NonFinite((t / dt) as usize));
    }
    let mut evolved = [[0.0; 3]; 3];
    for i in 0..3 {
        evolved[i].copy_from_slice(&y[3 + 3 * i..6 + 3 * i]);
    }
    Ok((det3(&evolved).abs().ln() - det0.abs().ln()) / t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Lobe {
    L,
    R,
}

impl Lobe {
    pub fn swapped(self) -> Lobe {
        match self {
            Lobe::L => Lobe::R,
            Lobe::R => Lobe::L,
        }
    }
}

/// Lobe labels emitted at the local maxima of `Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolString {
    pub symbols: Vec<Lobe>,
    pub times: Vec<f64>,
}

impl SymbolString {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn swapped(&self) -> SymbolString {
        SymbolString { symbols: self.symbols.iter().map(|s| s.swapped()).collect(), times: self.times.clone() }
    }
}

impl fmt::Display for SymbolString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.symbols {
            f.write_str(match s {
                Lobe::L => "L",
                Lobe::R => "R",
            })?;
        }
        Ok(())
    }
}

/// Labels each local maximum of `Z` at or after `transient` by the sign of `X`.
pub fn symbolize(traj: &TrajectorySegment, transient: f64) -> Result<SymbolString> {
    if traj.is_empty() {
        return Err(AttractorError::EmptyTrajectory);
    }
    let mut out = SymbolString { symbols: Vec::new(), times: Vec::new() };
    let s = &traj.states;
    for i in 1..s.len().saturating_sub(1) {
        let t = traj.time(i);
        if t < transient {
            continue;
        }
        if s[i].z > s[i - 1].z && s[i].z >= s[i + 1].z {
            if s[i].x.abs() < LOBE_EPSILON {
                continue;
            }
            out.symbols.push(if s[i].x < 0.0 { Lobe::L } else { Lobe::R });
            out.times.push(t);
        }
    }
    Ok(out)
}

/// `count` logarithmically spaced radii from `min` to `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl RadiusRange {
    pub fn radii(&self) -> Result<Vec<f64>> {
        if !(self.min > 0.0 && self.max > self.min && self.max.is_finite()) || self.count < 2 {
            return Err(AttractorError::DegenerateRadii(format!("{:?}", self)));
        }
        let (lo, hi) = (self.min.ln(), self.max.ln());
        Ok((0..self.count).map(|k| (lo + (hi - lo) * k as f64 / (self.count - 1) as f64).exp()).collect())
    }
}

/// Least-squares slope of `ln C(r)` against `ln r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub dimension: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub max_residual: f64,
    pub points: usize,
    pub radii: Vec<f64>,
    /// Correlation sums `C(r)`: fraction of pairs closer than `r`.
    pub sums: Vec<f64>,
}

impl DimensionEstimate {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("radius,C(r)\n");
        for (r, c) in self.radii.iter().zip(&self.sums) {
            out.push_str(&format!("{r},{c}\n"));
        }
        out
    }
}

/// Pair counts below each radius. Integer counts make the parallel
/// reduction independent of scheduling.
fn pair_counts<P: AsRef<[f64]> + Sync>(points: &[P], radii: &[f64]) -> Vec<u64> {
    let r2: Vec<f64> = radii.iter().map(|r| r * r).collect();
    let max2 = *r2.last().expect("at least two radii");
    let k = r2.len();
    let hist = (0..points.len())
        .into_par_iter()
        .fold(
            || vec![0u64; k],
            |mut hist, i| {
                let a = points[i].as_ref();
                for b in &points[i + 1..] {
                    let d2: f64 = a.iter().zip(b.as_ref()).map(|(u, v)| (u - v) * (u - v)).sum();
                    if d2 < max2 {
                        // first radius with d < r
                        let bin = r2.partition_point(|&rr| rr <= d2);
                        hist[bin] += 1;
                    }
                }
                hist
            },
        )
        .reduce(|| vec![0u64; k], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    hist.iter()
        .scan(0u64, |acc, &h| {
            *acc += h;
            Some(*acc)
        })
        .collect()
}

/// Grassberger–Procaccia correlation dimension over a radius range.
pub fn correlation_dimension<P: AsRef<[f64]> + Sync>(points: &[P], range: &RadiusRange) -> Result<DimensionEstimate> {
    if points.len() < MIN_DIMENSION_POINTS {
        return Err(AttractorError::TooFewPoints { found: points.len(), required: MIN_DIMENSION_POINTS });
    }
    let radii = range.radii()?;
    let counts = pair_counts(points, &radii);
    let n = points.len() as f64;
    let total = n * (n - 1.0) / 2.0;
    let sums: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    if let Some(pos) = counts.iter().position(|&c| c == 0) {
        return Err(AttractorError::DegenerateRadii(format!("no pairs closer than r = {}", radii[pos])));
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = sums.iter().map(|c| c.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).abs()).fold(0.0, f64::max);
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(DimensionEstimate { dimension: slope, intercept, r_squared, max_residual, points: points.len(), radii, sums })
}

/// Attractor samples taken every `stride` steps after `transient` time units.
pub fn sample_attractor(
    start: &LorenzState,
    params: &LorenzParams,
    dt: f64,
    transient: f64,
    stride: usize,
    count: usize,
) -> Result<Vec<[f64; 3]>> {
    check_dt(dt)?;
    let mut s = start.as_array();
    let skip = (transient / dt).round() as usize;
    for _ in 0..skip {
        s = rk4_step(|v| lorenz_field(params, v), &s, dt);
    }
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        for _ in 0..stride.max(1) {
            s = rk4_step(|v| lorenz_field(params, v), &s, dt);
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(AttractorError::NonFinite(skip + i * stride));
        }
        out.push(s);
    }
    Ok(out)
}
