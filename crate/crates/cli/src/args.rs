use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lirkw_core::convergence::{DEFAULT_REFERENCE_STEPS, DEFAULT_TAIL};
use lirkw_core::problems::LConfig;
use lirkw_core::stability::ScalarConfig;
use lirkw_core::trees::Family;

#[derive(Debug, Parser)]
#[command(
    name = "lirkw",
    version,
    about = "LIRK-W order conditions, convergence sweeps and stability scans"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate order-condition residuals of a tableau.
    Verify(VerifyArgs),
    /// List LW-trees of a family up to a given order.
    Trees(TreesArgs),
    /// Step-halving sweep against a fine reference and an order fit.
    Converge(ConvergeArgs),
    /// Tabulate |R(hλ)| for a scalar test configuration.
    Stability(StabilityArgs),
    /// Check the factored-operator algebra on random parts.
    AmfCheck(AmfCheckArgs),
    /// Print a tableau in the plain-text file format.
    Tableau(TableauCmdArgs),
    /// Rerun the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Pretty,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Write the CSV table here and a manifest to `<out>.manifest`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Format of standard output.
    #[arg(long, value_enum, default_value_t = Format::Pretty)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NamedTableau {
    /// Third-order type-1 method.
    Table1,
    /// `table1` with weights `b` scaled by 1.1.
    Table1Broken,
    /// Third-order type-2 family, parameterised by `--gamma`, `--gamma54`, `--a43`.
    Table2,
}

/// Gamma entry shift `row,col,delta` with one-based indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaShift {
    pub row: usize,
    pub col: usize,
    pub delta: f64,
}

impl std::str::FromStr for GammaShift {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').collect();
        let [r, c, d] = parts.as_slice() else {
            return Err(format!("expected row,col,delta; got '{s}'"));
        };
        let index = |x: &str| x.trim().parse::<usize>().ok().filter(|&k| k >= 1);
        match (index(r), index(c), d.trim().parse::<f64>()) {
            (Some(row), Some(col), Ok(delta)) => Ok(GammaShift { row, col, delta }),
            _ => Err(format!(
                "expected one-based row,col and a number; got '{s}'"
            )),
        }
    }
}

impl std::fmt::Display for GammaShift {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{},{}", self.row, self.col, self.delta)
    }
}

#[derive(Debug, Clone, Args)]
pub struct TableauArgs {
    #[arg(long, value_enum, default_value_t = NamedTableau::Table1)]
    pub tableau: NamedTableau,
    /// Read the tableau from a file instead (overrides `--tableau`).
    #[arg(long)]
    pub file: Option<PathBuf>,
    #[arg(long, default_value_t = 0.25, allow_negative_numbers = true)]
    pub gamma: f64,
    #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
    pub gamma54: f64,
    #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
    pub a43: f64,
    /// Free entry of the type-2 family; defaults to the value that makes
    /// the stiff limit vanish.
    #[arg(long, allow_negative_numbers = true)]
    pub gamma43: Option<f64>,
    /// Add `delta` to one gamma entry, e.g. `5,2,0.1`.
    #[arg(long, allow_negative_numbers = true)]
    pub perturb_gamma: Option<GammaShift>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConditionSet {
    /// Every tree of the family up to the order.
    Full,
    /// The independent third-order subset.
    Reduced,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub tableau: TableauArgs,
    /// Method type 1, 2 or 3; defaults to the tableau's own.
    #[arg(long = "type", value_parser = clap::value_parser!(u8).range(1..=3))]
    pub method: Option<u8>,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..=6))]
    pub order: u32,
    #[arg(long, value_enum, default_value_t = ConditionSet::Full)]
    pub set: ConditionSet,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct TreesArgs {
    #[arg(long, default_value_t = Family::LW1)]
    pub family: Family,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..=6))]
    pub order: u32,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergeArgs {
    #[arg(long, default_value = "adr2d")]
    pub problem: String,
    #[command(flatten)]
    pub tableau: TableauArgs,
    #[arg(long = "type", value_parser = clap::value_parser!(u8).range(1..=3))]
    pub method: Option<u8>,
    #[arg(long = "l-config", default_value_t = LConfig::ArbitraryL)]
    pub l_config: LConfig,
    /// Step counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    /// Number of smallest step sizes in the order fit.
    #[arg(long, default_value_t = DEFAULT_TAIL)]
    pub tail: usize,
    /// RK4 steps for the reference solution.
    #[arg(long, default_value_t = DEFAULT_REFERENCE_STEPS)]
    pub reference_steps: usize,
    /// Grid points per side (adr2d) or dimension (linear-split).
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long, default_value_t = 3.0)]
    pub expect_order: f64,
    /// Accepted distance of the fitted order from `--expect-order`.
    #[arg(long, default_value_t = 0.25)]
    pub band: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub tableau: TableauArgs,
    #[arg(long = "type", value_parser = clap::value_parser!(u8).range(1..=2))]
    pub method: Option<u8>,
    /// exact-L, fast-stage[:c] or scaled-L:<ratio>.
    #[arg(long, default_value_t = ScalarConfig::ExactL)]
    pub config: ScalarConfig,
    /// Explicit hλ values, comma separated (overrides the decade grid).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub grid: Option<Vec<f64>>,
    /// Decade grid `0, -10^lo, ..., -10^hi`.
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub decade_min: i32,
    #[arg(long, default_value_t = 8, allow_negative_numbers = true)]
    pub decade_max: i32,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct AmfCheckArgs {
    /// Number of factored parts.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..=8))]
    pub parts: u32,
    /// Dimension of each part.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..=64))]
    pub dim: u32,
    #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
    pub sigma: f64,
    /// Random vectors per check.
    #[arg(long, default_value_t = 16)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tolerance: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct TableauCmdArgs {
    #[command(flatten)]
    pub tableau: TableauArgs,
    #[arg(long = "type", value_parser = clap::value_parser!(u8).range(1..=3))]
    pub method: Option<u8>,
    /// Write the tableau file here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Where the rerun writes its CSV (and manifest).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}
