//! Built-in test problems and their operator configurations.
//!
//! Every problem can be paired with any [`LConfig`]; random operators are
//! drawn from ChaCha8 streams keyed by the recorded seed, so a
//! [`ProblemSpec`] rebuilds the same problem bit for bit.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::Matrix;
use crate::integrators::{IvProblem, OperatorSource, RightHandSide, StageContext};
use crate::linop::{
    AmfOperator, Axis, AxisPart, BandedPart, Boundary, DensePart, DiagonalPart, LinearPart,
    TridiagonalPart,
};
use crate::{Error, Result};

/// How the linear operator handed to the integrator relates to the
/// Jacobian of the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LConfig {
    /// The Jacobian at the start of each step.
    ExactL,
    /// Two factors whose sum is the (linear) Jacobian.
    Amf2Part,
    /// A fixed seeded random operator unrelated to the Jacobian.
    ArbitraryL,
    /// Exact `L`; stage `i` gets `J + eps·E_i` with fixed random `E_i`.
    PerStagePerturbed { eps: f64 },
    /// `L = 0`.
    Zero,
}

impl LConfig {
    pub const NAMES: [&'static str; 5] = [
        "exact-L",
        "amf-2part",
        "arbitrary-L",
        "per-stage-perturbed",
        "zero",
    ];
}

impl fmt::Display for LConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LConfig::ExactL => f.write_str("exact-L"),
            LConfig::Amf2Part => f.write_str("amf-2part"),
            LConfig::ArbitraryL => f.write_str("arbitrary-L"),
            LConfig::PerStagePerturbed { eps } if *eps == 1.0 => f.write_str("per-stage-perturbed"),
            LConfig::PerStagePerturbed { eps } => write!(f, "per-stage-perturbed:{eps}"),
            LConfig::Zero => f.write_str("zero"),
        }
    }
}

impl FromStr for LConfig {
    type Err = Error;

    /// Accepts the names in [`LConfig::NAMES`]; `per-stage-perturbed:<eps>`
    /// overrides the default `eps = 1`.
    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let config = match head {
            "exact-L" => LConfig::ExactL,
            "amf-2part" => LConfig::Amf2Part,
            "arbitrary-L" => LConfig::ArbitraryL,
            "zero" => LConfig::Zero,
            "per-stage-perturbed" => {
                let eps = match arg {
                    Some(a) => a
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad perturbation size '{a}'")))?,
                    None => 1.0,
                };
                return Ok(LConfig::PerStagePerturbed { eps });
            }
            _ => return Err(Error::invalid(format!("unknown L configuration '{s}'"))),
        };
        if arg.is_some() {
            return Err(Error::invalid(format!("'{head}' takes no argument")));
        }
        Ok(config)
    }
}

/// Random stream tags; one per independent use of the seed.
mod stream {
    pub const MATRIX: u64 = 1;
    pub const ARBITRARY: u64 = 2;
    pub const PERTURB: u64 = 3;
    pub const INITIAL: u64 = 4;
}

fn rng_for(seed: u64, tag: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_fn(n, n, |_, _| rng.gen_range(lo..hi))
}

/// Splits `m` into a lower and an upper part sharing the diagonal equally.
fn triangular_split(m: &Matrix) -> [Matrix; 2] {
    let n = m.rows();
    let pick = |keep: fn(usize, usize) -> bool| {
        Matrix::from_fn(n, n, |i, j| {
            if i == j {
                0.5 * m[(i, i)]
            } else if keep(i, j) {
                m[(i, j)]
            } else {
                0.0
            }
        })
    };
    [pick(|i, j| j < i), pick(|i, j| j > i)]
}

fn dense_op(m: Matrix) -> AmfOperator {
    AmfOperator::single(Arc::new(DensePart::new(m).expect("square")))
}

fn dense_parts(ms: [Matrix; 2]) -> AmfOperator {
    AmfOperator::new(
        ms.into_iter()
            .map(|m| Arc::new(DensePart::new(m).expect("square")) as Arc<dyn LinearPart>)
            .collect(),
    )
    .expect("equal dimensions")
}

type JacobianFn = dyn Fn(&[f64]) -> Matrix + Send + Sync;

/// Operator source for small dense problems with Jacobian `jac`.
fn dense_source(
    jac: Arc<JacobianFn>,
    config: LConfig,
    n: usize,
    s_max: usize,
    seed: u64,
) -> Arc<dyn OperatorSource> {
    match config {
        LConfig::Zero => Arc::new(move |_: &StageContext<'_>| Ok(AmfOperator::zero(n))),
        LConfig::ExactL => Arc::new(move |ctx: &StageContext<'_>| Ok(dense_op(jac(ctx.state)))),
        LConfig::Amf2Part => Arc::new(move |ctx: &StageContext<'_>| {
            Ok(dense_parts(triangular_split(&jac(ctx.state))))
        }),
        LConfig::ArbitraryL => {
            let mut rng = rng_for(seed, stream::ARBITRARY);
            let mut l = random_matrix(&mut rng, n, -1.0, 1.0);
            for i in 0..n {
                l[(i, i)] -= 2.0;
            }
            let op = dense_op(l);
            Arc::new(move |_: &StageContext<'_>| Ok(op.clone()))
        }
        LConfig::PerStagePerturbed { eps } => {
            let mut rng = rng_for(seed, stream::PERTURB);
            let pert: Vec<Matrix> = (0..s_max)
                .map(|_| random_matrix(&mut rng, n, -1.0, 1.0).scaled(eps))
                .collect();
            Arc::new(move |ctx: &StageContext<'_>| {
                let j = jac(ctx.state);
                Ok(dense_op(match ctx.stage {
                    Some(i) => j.add_scaled(1.0, &pert[i % pert.len()]),
                    None => j,
                }))
            })
        }
    }
}

/// Upper bound on stage counts for per-stage perturbations.
pub const MAX_STAGES: usize = 16;

struct LinearRhs(Matrix);

impl RightHandSide for LinearRhs {
    fn dim(&self) -> usize {
        self.0.rows()
    }
    fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        self.0.mul_vec_into(y, out);
    }
}

/// A random `n × n` matrix whose symmetric part is negative definite.
pub fn random_stable_matrix(n: usize, seed: u64) -> Matrix {
    let mut rng = rng_for(seed, stream::MATRIX);
    let b = random_matrix(&mut rng, n, -1.0, 1.0);
    let k = random_matrix(&mut rng, n, -1.0, 1.0);
    let spd = b.matmul(&b.transpose()).scaled(1.0 / n as f64);
    let skew = k.add_scaled(-1.0, &k.transpose()).scaled(0.5);
    let mut j = spd.scaled(-1.0).add_scaled(1.0, &skew);
    for i in 0..n {
        j[(i, i)] -= 0.5;
    }
    j
}

/// `y' = J y` with a random stable `J`, written `Ly + (J - L)y` for the
/// chosen `L`. The ODE is the same for every configuration.
pub fn make_linear_split(n: usize, seed: u64, config: LConfig) -> Result<IvProblem> {
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let j = random_stable_matrix(n, seed);
    let mut rng = rng_for(seed, stream::INITIAL);
    let y0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let jj = j.clone();
    let jac: Arc<JacobianFn> = Arc::new(move |_| jj.clone());
    Ok(IvProblem {
        name: "linear-split".into(),
        rhs: Arc::new(LinearRhs(j)),
        operators: dense_source(jac, config, n, MAX_STAGES, seed),
        y0,
        t0: 0.0,
        tf: 1.0,
        exact: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reaction {
    None,
    /// `k u² (1 - u)`
    Cubic {
        k: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialField {
    /// `16 x(1-x) y(1-y)`
    Bump,
    /// `sin(πx) sin(πy)`
    FourierMode,
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adr2dParams {
    pub nx: usize,
    pub ny: usize,
    pub nu: f64,
    pub advection: (f64, f64),
    pub reaction: Reaction,
    pub initial: InitialField,
    pub tf: f64,
}

impl Default for Adr2dParams {
    fn default() -> Self {
        Adr2dParams {
            nx: 24,
            ny: 24,
            nu: 0.01,
            advection: (1.0, 0.5),
            reaction: Reaction::Cubic { k: 1.0 },
            initial: InitialField::Bump,
            tf: 0.5,
        }
    }
}

struct Adr2dRhs {
    lx: AxisPart,
    ly: AxisPart,
    reaction: Reaction,
}

impl RightHandSide for Adr2dRhs {
    fn dim(&self) -> usize {
        self.lx.dim()
    }

    fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        self.lx.apply_into(y, out);
        let mut tmp = vec![0.0; y.len()];
        self.ly.apply_into(y, &mut tmp);
        for ((o, t), u) in out.iter_mut().zip(&tmp).zip(y) {
            *o += t;
            if let Reaction::Cubic { k } = self.reaction {
                *o += k * u * u * (1.0 - u);
            }
        }
    }
}

/// Central-difference `ν D2 - a D1` on `n` interior points with spacing `d`.
fn advection_diffusion_line(n: usize, d: f64, nu: f64, a: f64) -> Result<TridiagonalPart> {
    let diff = nu / (d * d);
    let adv = a / (2.0 * d);
    TridiagonalPart::constant(n, diff + adv, -2.0 * diff, diff - adv, Boundary::Dirichlet)
}

/// Method-of-lines advection-diffusion-reaction on the unit square with
/// homogeneous Dirichlet boundaries; unknown `(i, j)` at `x = (i+1)Δx`,
/// `y = (j+1)Δy` is stored at `j·nx + i`.
pub fn make_adr2d(params: Adr2dParams, config: LConfig, seed: u64) -> Result<IvProblem> {
    let Adr2dParams {
        nx,
        ny,
        nu,
        advection: (ax, ay),
        reaction,
        initial,
        tf,
    } = params;
    if nx < 4 || ny < 4 {
        return Err(Error::invalid("adr2d needs nx, ny >= 4"));
    }
    let n = nx * ny;
    let dx = 1.0 / (nx + 1) as f64;
    let dy = 1.0 / (ny + 1) as f64;
    let lx = AxisPart::new(nx, ny, Axis::X, advection_diffusion_line(nx, dx, nu, ax)?)?;
    let ly = AxisPart::new(nx, ny, Axis::Y, advection_diffusion_line(ny, dy, nu, ay)?)?;
    let mut linear_band = BandedPart::zeros(n, nx, nx);
    linear_band.accumulate(&lx);
    linear_band.accumulate(&ly);

    let y0: Vec<f64> = (0..n)
        .map(|k| {
            let x = ((k % nx) + 1) as f64 * dx;
            let y = ((k / nx) + 1) as f64 * dy;
            match initial {
                InitialField::Bump => 16.0 * x * (1.0 - x) * y * (1.0 - y),
                InitialField::FourierMode => libm::sin(PI * x) * libm::sin(PI * y),
                InitialField::Constant(c) => c,
            }
        })
        .collect();

    // sin(πx)sin(πy) is an eigenvector of the discrete Laplacian.
    let exact = match (initial, reaction, ax == 0.0 && ay == 0.0) {
        (InitialField::FourierMode, Reaction::None, true) => {
            let lam = adr2d_fourier_eigenvalue(nx, ny, nu);
            let base = y0.clone();
            Some(Arc::new(move |t: f64| {
                let f = libm::exp(lam * t);
                base.iter().map(|v| v * f).collect()
            }) as crate::integrators::ExactSolution)
        }
        _ => None,
    };

    let reaction_slope = move |u: f64| match reaction {
        Reaction::None => 0.0,
        Reaction::Cubic { k } => k * (2.0 * u - 3.0 * u * u),
    };
    let jacobian = {
        let band = linear_band.clone();
        move |state: &[f64]| {
            let mut b = band.clone();
            for (i, u) in state.iter().enumerate() {
                b.add(i, i, reaction_slope(*u));
            }
            b
        }
    };

    let operators: Arc<dyn OperatorSource> = match config {
        LConfig::Zero => Arc::new(move |_: &StageContext<'_>| Ok(AmfOperator::zero(n))),
        LConfig::ExactL => Arc::new(move |ctx: &StageContext<'_>| {
            Ok(AmfOperator::single(Arc::new(jacobian(ctx.state))))
        }),
        LConfig::Amf2Part => {
            let op = AmfOperator::new(vec![
                Arc::new(lx.clone()) as Arc<dyn LinearPart>,
                Arc::new(ly.clone()),
            ])?;
            Arc::new(move |_: &StageContext<'_>| Ok(op.clone()))
        }
        LConfig::ArbitraryL => {
            let mut rng = rng_for(seed, stream::ARBITRARY);
            let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..-2.5)).collect();
            let op = AmfOperator::single(Arc::new(DiagonalPart::new(diag)));
            Arc::new(move |_: &StageContext<'_>| Ok(op.clone()))
        }
        LConfig::PerStagePerturbed { eps } => {
            let mut rng = rng_for(seed, stream::PERTURB);
            let pert: Vec<Vec<f64>> = (0..MAX_STAGES)
                .map(|_| (0..n).map(|_| eps * rng.gen_range(-1.0..1.0)).collect())
                .collect();
            Arc::new(move |ctx: &StageContext<'_>| {
                let mut b = jacobian(ctx.state);
                if let Some(i) = ctx.stage {
                    for (k, e) in pert[i % MAX_STAGES].iter().enumerate() {
                        b.add(k, k, *e);
                    }
                }
                Ok(AmfOperator::single(Arc::new(b)))
            })
        }
    };

    Ok(IvProblem {
        name: "adr2d".into(),
        rhs: Arc::new(Adr2dRhs { lx, ly, reaction }),
        operators,
        y0,
        t0: 0.0,
        tf,
        exact,
    })
}

/// Eigenvalue of the pure-diffusion operator for the lowest Fourier mode.
pub fn adr2d_fourier_eigenvalue(nx: usize, ny: usize, nu: f64) -> f64 {
    let dx = 1.0 / (nx + 1) as f64;
    let dy = 1.0 / (ny + 1) as f64;
    let sx = libm::sin(PI * dx / 2.0);
    let sy = libm::sin(PI * dy / 2.0);
    -4.0 * nu * (sx * sx / (dx * dx) + sy * sy / (dy * dy))
}

struct SmallRhs {
    n: usize,
    f: fn(&[f64], &mut [f64]),
}

impl RightHandSide for SmallRhs {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        (self.f)(y, out)
    }
}

const BRUSS_A: f64 = 1.0;
const BRUSS_B: f64 = 3.0;
const VDPOL_MU: f64 = 1.0;

fn brusselator(y: &[f64], out: &mut [f64]) {
    let (u, v) = (y[0], y[1]);
    out[0] = BRUSS_A + u * u * v - (BRUSS_B + 1.0) * u;
    out[1] = BRUSS_B * u - u * u * v;
}

fn brusselator_jac(y: &[f64]) -> Matrix {
    let (u, v) = (y[0], y[1]);
    Matrix::from_rows(&[
        [2.0 * u * v - (BRUSS_B + 1.0), u * u],
        [BRUSS_B - 2.0 * u * v, -u * u],
    ])
}

fn vdpol(y: &[f64], out: &mut [f64]) {
    out[0] = y[1];
    out[1] = VDPOL_MU * (1.0 - y[0] * y[0]) * y[1] - y[0];
}

fn vdpol_jac(y: &[f64]) -> Matrix {
    Matrix::from_rows(&[
        [0.0, 1.0],
        [
            -2.0 * VDPOL_MU * y[0] * y[1] - 1.0,
            VDPOL_MU * (1.0 - y[0] * y[0]),
        ],
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmallParams {
    /// Overrides the default initial state.
    pub y0: Option<Vec<f64>>,
    pub tf: f64,
}

impl Default for SmallParams {
    fn default() -> Self {
        SmallParams { y0: None, tf: 1.0 }
    }
}

pub const SMALL_PROBLEMS: [&str; 2] = ["brusselator", "vdpol-mild"];

/// Equilibrium of a small problem.
pub fn small_equilibrium(name: &str) -> Result<Vec<f64>> {
    match name {
        "brusselator" => Ok(vec![BRUSS_A, BRUSS_B / BRUSS_A]),
        "vdpol-mild" => Ok(vec![0.0, 0.0]),
        _ => Err(Error::UnknownProblem(name.to_string())),
    }
}

/// Two-dimensional smooth autonomous systems: the Brusselator
/// (`a = 1, b = 3`) and a mildly nonlinear van der Pol oscillator (`μ = 1`).
/// Right-hand side, Jacobian and default initial state of a 2-D system.
type SmallSystem = (fn(&[f64], &mut [f64]), fn(&[f64]) -> Matrix, [f64; 2]);

pub fn make_nonlinear_small(
    name: &str,
    params: &SmallParams,
    config: LConfig,
    seed: u64,
) -> Result<IvProblem> {
    let (f, jac, default_y0): SmallSystem = match name {
        "brusselator" => (brusselator, brusselator_jac, [1.5, 3.0]),
        "vdpol-mild" => (vdpol, vdpol_jac, [2.0, 0.0]),
        _ => return Err(Error::UnknownProblem(name.to_string())),
    };
    let y0 = params.y0.clone().unwrap_or_else(|| default_y0.to_vec());
    if y0.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: y0.len(),
        });
    }
    let jac: Arc<JacobianFn> = Arc::new(jac);
    Ok(IvProblem {
        name: name.to_string(),
        rhs: Arc::new(SmallRhs { n: 2, f }),
        operators: dense_source(jac, config, 2, MAX_STAGES, seed),
        y0,
        t0: 0.0,
        tf: params.tf,
        exact: None,
    })
}

/// Every name [`ProblemSpec::build`] understands.
pub const PROBLEM_NAMES: [&str; 4] = ["adr2d", "brusselator", "vdpol-mild", "linear-split"];

/// A reproducible problem instance: name, configuration, seed and the
/// size parameters in effect.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub name: String,
    pub config: LConfig,
    pub seed: u64,
    /// Grid size for `adr2d`, dimension for `linear-split`; ignored otherwise.
    pub size: Option<usize>,
}

impl ProblemSpec {
    pub fn new(name: &str, config: LConfig, seed: u64) -> Result<Self> {
        if !PROBLEM_NAMES.contains(&name) {
            return Err(Error::UnknownProblem(name.to_string()));
        }
        Ok(ProblemSpec {
            name: name.to_string(),
            config,
            seed,
            size: None,
        })
    }

    pub fn with_size(mut self, size: usize) -> Self {
        self.size = Some(size);
        self
    }

    pub fn build(&self) -> Result<IvProblem> {
        match self.name.as_str() {
            "adr2d" => {
                let n = self.size.unwrap_or(24);
                make_adr2d(
                    Adr2dParams {
                        nx: n,
                        ny: n,
                        ..Adr2dParams::default()
                    },
                    self.config,
                    self.seed,
                )
            }
            "linear-split" => make_linear_split(self.size.unwrap_or(4), self.seed, self.config),
            name => make_nonlinear_small(name, &SmallParams::default(), self.config, self.seed),
        }
    }

    /// `key=value` pairs describing the instance.
    pub fn describe(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("problem".to_string(), self.name.clone()),
            ("l_config".to_string(), self.config.to_string()),
            ("seed".to_string(), self.seed.to_string()),
        ];
        if let Some(n) = self.size {
            out.push(("size".to_string(), n.to_string()));
        }
        out
    }
}
