//! Batch front end: one subcommand per lab, JSON or CSV reports.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 I/O error.
//! `--config FILE` supplies `key = value` lines that fill in any flag not
//! given on the command line.

use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::{json, Value};

use crate::attractor::{self, FlowState, LorenzParams, LorenzState, RadiusRange};
use crate::bell::{self, AuditParams, BellSettings, Generator, OffGridPolicy};
use crate::bits::{self, BitString};
use crate::cp::{self, ExactPolar};
use crate::padic::{self, DiskAddress, LabelScheme, MetricConvention, PadicInt};
use crate::ratio::{parse_ratio, RatioJson};

pub const TOOL: &str = "istlab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "istlab", version, about = "Exact-arithmetic invariant-set laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Finite rational-complex arithmetic.
    #[command(subcommand)]
    Cp(CpCommand),
    /// Bit-string phase operators.
    #[command(subcommand)]
    Bits(BitsCommand),
    /// Truncated p-adic integers and disk labels.
    #[command(subcommand)]
    Padic(PadicCommand),
    /// CHSH experiments and the statistical-independence audit.
    #[command(subcommand)]
    Bell(BellCommand),
    /// Lorenz system.
    #[command(subcommand)]
    Lorenz(LorenzCommand),
    /// Fixed-point and limit-cycle flows.
    #[command(subcommand)]
    Flow(FlowCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Output {
    /// Report path; standard output when omitted.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Key-value file whose entries fill in flags not given explicitly.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum CpCommand {
    /// Exact product of two values `m,n,p` (amplitude² m/p, phase turn n/p).
    Mul(CpPair),
    /// Exact sum with a closure verdict.
    Add(CpPair),
    /// Membership of `amp2·e^{2πi·turn}` in `C_p`.
    Member(CpMember),
    /// Central-difference momentum factor.
    Momentum(CpMomentum),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CpPair {
    /// First operand as `m,n,p`.
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,
    /// Second operand as `m,n,p`.
    #[arg(long, allow_hyphen_values = true)]
    pub b: String,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CpMember {
    /// Squared amplitude, e.g. `3/8`.
    #[arg(long)]
    pub amp2: String,
    /// Phase in turns, e.g. `1/4`.
    #[arg(long, allow_hyphen_values = true)]
    pub turn: String,
    /// Grid size.
    #[arg(long)]
    pub p: String,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CpMomentum {
    /// `k·Δx` in turns.
    #[arg(long, allow_hyphen_values = true)]
    pub turn: String,
    /// Step `Δx`.
    #[arg(long, default_value = "1")]
    pub dx: String,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Subcommand)]
pub enum BitsCommand {
    /// Applies `Ω_p^n` to a bit string.
    Apply(BitsApply),
    /// Order of `Ω_p`, by repeated composition.
    Order(BitsOrder),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BitsApply {
    /// Bit string as `+-+-` or `1,-1,1,-1`.
    #[arg(long, allow_hyphen_values = true)]
    pub bits: String,
    /// Exponent `n` of `Ω_p^n`.
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    pub n: i64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BitsOrder {
    #[arg(long)]
    pub p: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Standard,
    Shifted,
}

impl From<Metric> for MetricConvention {
    fn from(m: Metric) -> Self {
        match m {
            Metric::Standard => MetricConvention::Standard,
            Metric::Shifted => MetricConvention::Shifted,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum PadicCommand {
    /// Ultrametric distance between two truncated p-adic integers.
    Dist(PadicPair),
    /// Digit-wise sum with carries.
    Add(PadicPair),
    /// Truncated product.
    Mul(PadicPair),
    /// Nested-disk address under the two-cluster coloring.
    Label(PadicLabel),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PadicPair {
    #[arg(long)]
    pub p: u64,
    /// Digits of the first operand, coarsest first, e.g. `1,0,2`.
    #[arg(long)]
    pub x: String,
    /// Digits of the second operand.
    #[arg(long)]
    pub y: String,
    #[arg(long, value_enum, default_value_t = Metric::Standard)]
    pub metric: Metric,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PadicLabel {
    #[arg(long)]
    pub p: u64,
    /// Digits, coarsest first.
    #[arg(long)]
    pub x: String,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Subcommand)]
pub enum BellCommand {
    /// Exact CHSH value on the singlet grid, with audits.
    Chsh(BellChsh),
    /// Counterfactual, ρ-independence and μ-independence audits.
    Audit(BellAudit),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorArg {
    Uniform,
    Adversarial,
}

impl From<GeneratorArg> for Generator {
    fn from(g: GeneratorArg) -> Self {
        match g {
            GeneratorArg::Uniform => Generator::Uniform,
            GeneratorArg::Adversarial => Generator::Adversarial,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AuditArgs {
    /// Grid size of the exhaustive audit.
    #[arg(long, default_value_t = 4)]
    pub audit_p: u64,
    /// Depth of the exhaustive audit.
    #[arg(long, default_value_t = 2)]
    pub audit_depth: usize,
    /// Seed for the sampled ρ check.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Significance threshold for the sampled ρ check.
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = GeneratorArg::Uniform)]
    pub generator: GeneratorArg,
}

impl AuditArgs {
    fn params(&self, p: u64, depth: usize) -> AuditParams {
        AuditParams {
            p,
            depth,
            generator: self.generator.into(),
            seed: self.seed,
            samples: self.samples,
            alpha: self.alpha,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BellChsh {
    #[arg(long, default_value_t = 1 << 20)]
    pub p: u64,
    /// Orientations `a0,a1,b0,b1` in turns; defaults to the 45°/135° configuration.
    #[arg(long, allow_hyphen_values = true)]
    pub turns: Option<String>,
    /// Snap off-grid relative angles to the nearest grid angle instead of failing.
    #[arg(long)]
    pub snap: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub audit: AuditArgs,
    /// Also write per-pair outcomes as CSV here.
    #[arg(long)]
    #[serde(skip)]
    pub pairs_csv: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BellAudit {
    #[arg(long, default_value_t = 4)]
    pub p: u64,
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub audit: AuditArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LorenzArgs {
    #[arg(long, default_value = "10")]
    pub sigma: String,
    #[arg(long, default_value = "28")]
    pub rho: String,
    #[arg(long, default_value = "8/3")]
    pub beta: String,
}

impl LorenzArgs {
    fn exact(&self) -> Result<[BigRational; 3], CliError> {
        Ok([ratio_flag("--sigma", &self.sigma)?, ratio_flag("--rho", &self.rho)?, ratio_flag("--beta", &self.beta)?])
    }

    fn params(&self) -> Result<LorenzParams, CliError> {
        let [s, r, b] = self.exact()?;
        let f = |v: &BigRational| v.to_f64().unwrap_or(f64::NAN);
        Ok(LorenzParams { sigma: f(&s), rho_l: f(&r), beta: f(&b) })
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StartArgs {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub x0: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub y0: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub z0: f64,
}

impl StartArgs {
    fn state(&self) -> LorenzState {
        LorenzState::new(self.x0, self.y0, self.z0)
    }
}

#[derive(Debug, Subcommand)]
pub enum LorenzCommand {
    /// RK4 trajectory.
    Integrate(LorenzIntegrate),
    /// Analytic divergence `−(σ + 1 + β)` and, optionally, the measured rate.
    Divergence(LorenzDivergence),
    /// L/R lobe symbols at the maxima of Z.
    Symbolize(LorenzSymbolize),
    /// Correlation dimension of the attractor.
    Dimension(LorenzDimension),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LorenzIntegrate {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: LorenzArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub start: StartArgs,
    #[arg(long, default_value_t = attractor::DEFAULT_DT)]
    pub dt: f64,
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LorenzDivergence {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: LorenzArgs,
    /// Also measure the tangent-space log-volume rate over this time.
    #[arg(long)]
    pub measure_t: Option<f64>,
    #[arg(long, default_value_t = attractor::DEFAULT_DT)]
    pub dt: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LorenzSymbolize {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: LorenzArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub start: StartArgs,
    #[arg(long, default_value_t = attractor::DEFAULT_DT)]
    pub dt: f64,
    #[arg(long, default_value_t = attractor::DEFAULT_TRANSIENT)]
    pub transient: f64,
    /// Final time.
    #[arg(long, default_value_t = 60.0)]
    pub t_end: f64,
    /// Symbolize the mirrored trajectory instead.
    #[arg(long)]
    pub mirror: bool,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LorenzDimension {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: LorenzArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub start: StartArgs,
    #[arg(long, default_value_t = attractor::DEFAULT_DT)]
    pub dt: f64,
    #[arg(long, default_value_t = attractor::DEFAULT_TRANSIENT)]
    pub transient: f64,
    /// Integration steps between samples.
    #[arg(long, default_value_t = 50)]
    pub stride: usize,
    #[arg(long, default_value_t = 20_000)]
    pub points: usize,
    #[arg(long, default_value_t = 0.5)]
    pub rmin: f64,
    #[arg(long, default_value_t = 4.0)]
    pub rmax: f64,
    #[arg(long, default_value_t = 12)]
    pub radii: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Subcommand)]
pub enum FlowCommand {
    /// `ṙ = r(1 − r)`: RK4 against the closed form.
    Logistic(FlowLogistic),
    /// Planar limit cycle `ṙ = r(1 − r), φ̇ = 1`.
    Cycle(FlowCycle),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FlowLogistic {
    #[arg(long)]
    pub r0: f64,
    #[arg(long, default_value_t = 10.0)]
    pub t: f64,
    #[arg(long, default_value_t = attractor::DEFAULT_DT)]
    pub dt: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FlowCycle {
    #[arg(long)]
    pub r0: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub phi0: f64,
    #[arg(long, default_value_t = 10.0)]
    pub t: f64,
    #[arg(long, default_value_t = attractor::DEFAULT_DT)]
    pub dt: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug)]
pub enum CliError {
    /// Invalid value; the message names the flag.
    Usage(String),
    Io(String),
}

fn usage(flag: &str, err: impl Display) -> CliError {
    CliError::Usage(format!("invalid value for {flag}: {err}"))
}

fn ratio_flag(flag: &str, s: &str) -> Result<BigRational, CliError> {
    parse_ratio(s).ok_or_else(|| usage(flag, format!("{s:?} is not a rational number")))
}

fn int_list(flag: &str, s: &str) -> Result<Vec<i64>, CliError> {
    s.split(',').map(|t| t.trim().parse::<i64>().map_err(|e| usage(flag, format!("{t:?}: {e}")))).collect()
}

fn digits_flag(flag: &str, s: &str) -> Result<Vec<u64>, CliError> {
    s.split(',').map(|t| t.trim().parse::<u64>().map_err(|e| usage(flag, format!("{t:?}: {e}")))).collect()
}

fn cp_flag(flag: &str, s: &str) -> Result<ExactPolar, CliError> {
    match int_list(flag, s)?[..] {
        [m, n, p] => cp::make_cp(m, n, p).map_err(|e| usage(flag, e)),
        _ => Err(usage(flag, "expected three integers m,n,p")),
    }
}

fn padic_flag(flag: &str, p: u64, s: &str) -> Result<PadicInt, CliError> {
    PadicInt::new(p, digits_flag(flag, s)?).map_err(|e| usage(flag, e))
}

fn positive(flag: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(usage(flag, format!("{v} must be positive")))
    }
}

/// A finished report: either JSON or CSV text.
enum Artifact {
    Json(Value),
    Csv(String),
}

fn envelope(command: &str, params: &impl Serialize, result: impl Serialize) -> Artifact {
    Artifact::Json(json!({
        "tool": TOOL,
        "version": VERSION,
        "command": command,
        "params": params,
        "result": result,
    }))
}

fn csv_with_header(command: &str, params: &impl Serialize, body: String) -> Artifact {
    let params = serde_json::to_string(params).unwrap_or_default();
    Artifact::Csv(format!("# {TOOL} {VERSION} {command}\n# params {params}\n{body}"))
}

fn render(artifact: &Artifact) -> String {
    match artifact {
        Artifact::Json(v) => {
            let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
            s.push('\n');
            s
        }
        Artifact::Csv(s) => s.clone(),
    }
}

fn write_path(path: &PathBuf, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn emit(output: &Output, artifact: Artifact, stdout: &mut dyn Write) -> Result<(), CliError> {
    let text = render(&artifact);
    match &output.out {
        Some(path) => write_path(path, &text),
        None => stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io(format!("cannot write to stdout: {e}"))),
    }
}

fn run_cp(cmd: &CpCommand, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        CpCommand::Mul(args) => {
            let (a, b) = (cp_flag("--a", &args.a)?, cp_flag("--b", &args.b)?);
            let product = cp::mul(&a, &b);
            let result = json!({
                "product": product,
                "display": product.to_string(),
                "min_grid": product.min_grid().to_string(),
            });
            emit(&args.output, envelope("cp mul", args, result), stdout)
        }
        CpCommand::Add(args) => {
            let (a, b) = (cp_flag("--a", &args.a)?, cp_flag("--b", &args.b)?);
            let sum = cp::try_add(&a, &b);
            let result = json!({
                "delta_turn": RatioJson::from_ratio(&delta_turn(&a, &b)),
                "sum": sum,
            });
            emit(&args.output, envelope("cp add", args, result), stdout)
        }
        CpCommand::Member(args) => {
            let amp2 = ratio_flag("--amp2", &args.amp2)?;
            let turn = ratio_flag("--turn", &args.turn)?;
            let p: BigInt = args.p.trim().parse().map_err(|e| usage("--p", e))?;
            if p <= BigInt::from(0) {
                return Err(usage("--p", "grid size must be positive"));
            }
            let x = ExactPolar::new(amp2, turn).map_err(|e| usage("--amp2", e))?;
            let result = json!({
                "value": x,
                "member": cp::is_member(&x, &p),
                "min_grid": x.min_grid().to_string(),
            });
            emit(&args.output, envelope("cp member", args, result), stdout)
        }
        CpCommand::Momentum(args) => {
            let turn = ratio_flag("--turn", &args.turn)?;
            let dx = ratio_flag("--dx", &args.dx)?;
            let result = cp::momentum_difference(&turn, &dx).map_err(|e| usage("--dx", e))?;
            emit(&args.output, envelope("cp momentum", args, result), stdout)
        }
    }
}

fn delta_turn(a: &ExactPolar, b: &ExactPolar) -> BigRational {
    let d = b.turn() - a.turn();
    &d - d.floor()
}

fn run_bits(cmd: &BitsCommand, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        BitsCommand::Apply(args) => {
            let s: BitString = args.bits.parse().map_err(|e| usage("--bits", e))?;
            let out = bits::apply_phase(&s, args.n).map_err(|e| usage("--bits", e))?;
            let result = json!({ "p": s.len(), "n": args.n, "input": s, "output": out });
            emit(&args.output, envelope("bits apply", args, result), stdout)
        }
        BitsCommand::Order(args) => {
            let omega = bits::omega_permutation(args.p).map_err(|e| usage("--p", e))?;
            // walk powers until the identity comes back
            let identity = bits::SignedPermutation::identity(args.p);
            let mut power = omega.clone();
            let mut k: u64 = 1;
            while power != identity {
                power = power.compose(&omega);
                k += 1;
            }
            let result = json!({ "p": args.p, "order": k, "cycle_order": omega.order() });
            emit(&args.output, envelope("bits order", args, result), stdout)
        }
    }
}

fn run_padic(cmd: &PadicCommand, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        PadicCommand::Dist(args) | PadicCommand::Add(args) | PadicCommand::Mul(args) => {
            let x = padic_flag("--x", args.p, &args.x)?;
            let y = padic_flag("--y", args.p, &args.y)?;
            let (name, result) = match cmd {
                PadicCommand::Dist(_) => {
                    let d = padic::distance(&x, &y, args.metric.into()).map_err(|e| usage("--y", e))?;
                    ("padic dist", json!({ "distance": RatioJson::from_ratio(&d), "valuation": x.valuation_of_difference(&y) }))
                }
                PadicCommand::Add(_) => {
                    let s = padic::add(&x, &y).map_err(|e| usage("--y", e))?;
                    ("padic add", json!({ "sum": s, "value": s.value().to_string() }))
                }
                _ => {
                    let s = padic::mul(&x, &y).map_err(|e| usage("--y", e))?;
                    ("padic mul", json!({ "product": s, "value": s.value().to_string() }))
                }
            };
            emit(&args.output, envelope(name, args, result), stdout)
        }
        PadicCommand::Label(args) => {
            let x = padic_flag("--x", args.p, &args.x)?;
            let scheme = LabelScheme::two_cluster(args.p).map_err(|e| usage("--p", e))?;
            let addr = DiskAddress::from_padic(&x, &scheme).map_err(|e| usage("--x", e))?;
            emit(&args.output, envelope("padic label", args, json!({ "address": addr })), stdout)
        }
    }
}

fn turns_flag(s: &str) -> Result<BellSettings, CliError> {
    let parts: Vec<BigRational> = s.split(',').map(|t| ratio_flag("--turns", t)).collect::<Result<_, _>>()?;
    match <[BigRational; 4]>::try_from(parts) {
        Ok([a0, a1, b0, b1]) => Ok(BellSettings::new([a0, a1], [b0, b1])),
        Err(_) => Err(usage("--turns", "expected four turns a0,a1,b0,b1")),
    }
}

fn bell_usage(e: bell::BellError) -> CliError {
    match &e {
        bell::BellError::OffGrid { .. } => usage("--turns", e),
        bell::BellError::InvalidGrid(_) | bell::BellError::IndexOutOfRange { .. } | bell::BellError::Ensemble(_) => {
            usage("--p", e)
        }
        bell::BellError::NoSamples => usage("--samples", e),
        _ => usage("--audit-p/--audit-depth", e),
    }
}

fn run_bell(cmd: &BellCommand, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        BellCommand::Chsh(args) => {
            let (settings, policy) = match &args.turns {
                Some(t) => (turns_flag(t)?, if args.snap { OffGridPolicy::Nearest } else { OffGridPolicy::Reject }),
                None => (bell::tsirelson_settings(), OffGridPolicy::Nearest),
            };
            let audit = args.audit.params(args.audit.audit_p, args.audit.audit_depth);
            let report = bell::bell_report(args.p, &settings, policy, &audit).map_err(bell_usage)?;
            if let Some(path) = &args.pairs_csv {
                let m: [u64; 4] = report.grid_indices.clone().try_into().expect("four setting pairs");
                let body = bell::outcomes_csv(args.p, m).map_err(bell_usage)?;
                let text = render(&csv_with_header("bell chsh", args, body));
                write_path(path, &text)?;
            }
            emit(&args.output, envelope("bell chsh", args, report), stdout)
        }
        BellCommand::Audit(args) => {
            let bundle = bell::run_audits(&args.audit.params(args.p, args.depth)).map_err(|e| match e {
                bell::BellError::NoSamples => usage("--samples", e),
                _ => usage("--p/--depth", e),
            })?;
            emit(&args.output, envelope("bell audit", args, bundle), stdout)
        }
    }
}

fn attractor_usage(flag: &str) -> impl Fn(attractor::AttractorError) -> CliError + '_ {
    move |e| usage(flag, e)
}

fn run_lorenz(cmd: &LorenzCommand, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        LorenzCommand::Integrate(args) => {
            let params = args.params.params()?;
            positive("--dt", args.dt)?;
            let traj = attractor::integrate(&args.start.state(), &params, args.dt, args.steps)
                .map_err(attractor_usage("--x0/--y0/--z0"))?;
            let artifact = match args.format {
                Format::Csv => csv_with_header("lorenz integrate", args, traj.to_csv()),
                Format::Json => {
                    let last = traj.states.last().copied();
                    envelope("lorenz integrate", args, json!({ "final": last, "trajectory": traj }))
                }
            };
            emit(&args.output, artifact, stdout)
        }
        LorenzCommand::Divergence(args) => {
            let [s, _, b] = args.params.exact()?;
            let exact = -(s + BigRational::from_integer(1.into()) + b);
            let divergence = exact.to_f64().unwrap_or(f64::NAN);
            let mut result = json!({ "divergence": divergence, "exact": RatioJson::from_ratio(&exact) });
            if let Some(t) = args.measure_t {
                positive("--measure-t", t)?;
                positive("--dt", args.dt)?;
                let params = args.params.params()?;
                let base = LorenzState::new(1.0, 1.0, 20.0);
                let h = 1e-6;
                let cloud = [
                    base,
                    LorenzState::new(base.x + h, base.y, base.z),
                    LorenzState::new(base.x, base.y + h, base.z),
                    LorenzState::new(base.x, base.y, base.z + h),
                ];
                let rate = attractor::volume_contraction(&cloud, &params, t, args.dt).map_err(attractor_usage("--measure-t"))?;
                result["measured_rate"] = json!(rate);
            }
            emit(&args.output, envelope("lorenz divergence", args, result), stdout)
        }
        LorenzCommand::Symbolize(args) => {
            let params = args.params.params()?;
            positive("--dt", args.dt)?;
            positive("--t-end", args.t_end)?;
            let steps = (args.t_end / args.dt).round() as usize;
            let mut traj = attractor::integrate(&args.start.state(), &params, args.dt, steps)
                .map_err(attractor_usage("--x0/--y0/--z0"))?;
            if args.mirror {
                traj = traj.mirrored();
            }
            let symbols = attractor::symbolize(&traj, args.transient).map_err(attractor_usage("--transient"))?;
            let result = json!({ "symbols": symbols.to_string(), "count": symbols.len(), "times": symbols.times });
            emit(&args.output, envelope("lorenz symbolize", args, result), stdout)
        }
        LorenzCommand::Dimension(args) => {
            let params = args.params.params()?;
            positive("--dt", args.dt)?;
            let pts = attractor::sample_attractor(&args.start.state(), &params, args.dt, args.transient, args.stride, args.points)
                .map_err(attractor_usage("--x0/--y0/--z0"))?;
            let range = RadiusRange { min: args.rmin, max: args.rmax, count: args.radii };
            let est = attractor::correlation_dimension(&pts, &range).map_err(|e| match e {
                attractor::AttractorError::TooFewPoints { .. } => usage("--points", e),
                _ => usage("--rmin/--rmax/--radii", e),
            })?;
            let artifact = match args.format {
                Format::Csv => csv_with_header("lorenz dimension", args, est.to_csv()),
                Format::Json => envelope("lorenz dimension", args, est),
            };
            emit(&args.output, artifact, stdout)
        }
    }
}

fn run_flow(cmd: &FlowCommand, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        FlowCommand::Logistic(args) => {
            positive("--dt", args.dt)?;
            let s = attractor::logistic_flow(args.r0, args.t, args.dt).map_err(attractor_usage("--r0"))?;
            let result = json!({ "solution": s, "discrepancy": s.discrepancy() });
            emit(&args.output, envelope("flow logistic", args, result), stdout)
        }
        FlowCommand::Cycle(args) => {
            positive("--dt", args.dt)?;
            let s = attractor::limit_cycle_flow(FlowState { r: args.r0, phi: args.phi0 }, args.t, args.dt)
                .map_err(attractor_usage("--r0"))?;
            let result = json!({ "state": s, "distance_to_cycle": (s.r - 1.0).abs() });
            emit(&args.output, envelope("flow cycle", args, result), stdout)
        }
    }
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Cp(c) => run_cp(c, stdout),
        Command::Bits(c) => run_bits(c, stdout),
        Command::Padic(c) => run_padic(c, stdout),
        Command::Bell(c) => run_bell(c, stdout),
        Command::Lorenz(c) => run_lorenz(c, stdout),
        Command::Flow(c) => run_flow(c, stdout),
    }
}

/// Appends `--key value` for every config entry whose flag is absent from `argv`.
pub fn merge_config(argv: &[String]) -> Result<Vec<String>, CliError> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        if a == "--config" {
            path = Some(argv.get(i + 1).ok_or_else(|| usage("--config", "missing path"))?.clone());
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else {
        return Ok(argv.to_vec());
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Io(format!("cannot read {path}: {e}")))?;
    let present = |flag: &str| argv.iter().any(|a| a == flag || a.starts_with(&format!("{flag}=")));
    let mut out = argv.to_vec();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage("--config", format!("{path}:{}: expected key = value", lineno + 1)))?;
        let flag = format!("--{}", key.trim().trim_start_matches("--").replace('_', "-"));
        if present(&flag) {
            continue;
        }
        match value.trim() {
            "true" => out.push(flag),
            "false" => {}
            v => out.push(format!("{flag}={v}")),
        }
    }
    Ok(out)
}

/// Parses `argv` (including the program name), runs, and returns the exit code.
pub fn dispatch_with(argv: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let argv = match merge_config(argv) {
        Ok(a) => a,
        Err(e) => return report_error(e, stderr),
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if code == EXIT_OK {
                let _ = stdout.write_all(rendered.as_bytes());
            } else {
                let _ = stderr.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    match run(&cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => report_error(e, stderr),
    }
}

fn report_error(e: CliError, stderr: &mut dyn Write) -> i32 {
    let (code, msg) = match e {
        CliError::Usage(m) => (EXIT_USAGE, m),
        CliError::Io(m) => (EXIT_IO, m),
    };
    let _ = writeln!(stderr, "error: {msg}");
    code
}

pub fn dispatch(argv: impl IntoIterator<Item = String>) -> i32 {
    let argv: Vec<String> = argv.into_iter().collect();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    dispatch_with(&argv, &mut stdout.lock(), &mut stderr.lock())
}
