//! Transfer matrices on the split linear test problem
//! `y' = L y + (J - L) y`.
//!
//! With `N`-dimensional blocks, stage values `Y = (Y_1, ..., Y_s)` solve
//! `M Y = 𝟙 ⊗ I` where block `(i, j)` of `I - M` is
//!
//! - type 1: `a_ij (hJ - hL_j) + â_ij hL_j`
//! - type 2: `a_ij (hJ - hL) + â_ij hL + δ_ij γ_ii (hL_i - hL)`
//!
//! and `R = I + Σ_j [b_j (hJ - hL_*) + b̂_j hL_*] Y_j` with `L_* = L_j` for
//! type 1 and `L` for type 2.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::dense::Matrix;
use crate::tableau::{validate, Constraint, MethodType, Tableau, ValidationReport};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    /// `R` from the general (output-row) formula.
    pub matrix: Matrix,
    /// `R` from the stiffly accurate shortcut, when the tableau qualifies.
    pub reduced: Option<Matrix>,
    pub method: MethodType,
    pub h_j: Matrix,
    /// Base `hL` (type 2 only).
    pub h_l: Option<Matrix>,
    pub h_l_stages: Vec<Matrix>,
}

impl TransferMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// `‖R_general - R_reduced‖max / max(‖R‖max, 1)`.
    pub fn reduction_gap(&self) -> Option<f64> {
        self.reduced
            .as_ref()
            .map(|r| self.matrix.add_scaled(-1.0, r).norm_max() / self.matrix.norm_max().max(1.0))
    }

    /// `R` for a 1×1 problem.
    pub fn scalar(&self) -> f64 {
        self.matrix[(0, 0)]
    }
}

fn check_inputs(tb: &Tableau, h_j: &Matrix, h_l: &[Matrix]) -> Result<usize> {
    let n = h_j.rows();
    if !h_j.is_square() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: h_j.cols(),
        });
    }
    if h_l.len() != tb.stages() {
        return Err(Error::DimensionMismatch {
            expected: tb.stages(),
            found: h_l.len(),
        });
    }
    for m in h_l {
        if m.rows() != n || m.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.rows(),
            });
        }
    }
    Ok(n)
}

fn stiffly_accurate(tb: &Tableau) -> bool {
    validate(tb, &[Constraint::StiffAccuracy]).passes()
}

/// Coupling blocks `B_ij` of `I - M`, and the output weights blocks.
struct StageSystem {
    n: usize,
    s: usize,
    blocks: Vec<Vec<Matrix>>,
    output: Vec<Matrix>,
}

impl StageSystem {
    fn type1(tb: &Tableau, h_j: &Matrix, h_l: &[Matrix], n: usize) -> Self {
        let s = tb.stages();
        let ah = tb.a_hat();
        let bh = tb.b_hat();
        let mix = |x: f64, xh: f64, l: &Matrix| h_j.add_scaled(-1.0, l).scaled(x).add_scaled(xh, l);
        StageSystem {
            n,
            s,
            blocks: (0..s)
                .map(|i| {
                    (0..s)
                        .map(|j| mix(tb.a(i, j), ah[(i, j)], &h_l[j]))
                        .collect()
                })
                .collect(),
            output: (0..s).map(|j| mix(tb.b()[j], bh[j], &h_l[j])).collect(),
        }
    }

    fn type2(tb: &Tableau, h_j: &Matrix, base: &Matrix, h_l: &[Matrix], n: usize) -> Self {
        let s = tb.stages();
        let ah = tb.a_hat();
        let bh = tb.b_hat();
        let jm = h_j.add_scaled(-1.0, base);
        let mix = |x: f64, xh: f64| jm.scaled(x).add_scaled(xh, base);
        StageSystem {
            n,
            s,
            blocks: (0..s)
                .map(|i| {
                    (0..s)
                        .map(|j| {
                            let m = mix(tb.a(i, j), ah[(i, j)]);
                            if i == j {
                                m.add_scaled(tb.gamma(i, i), &h_l[i].add_scaled(-1.0, base))
                            } else {
                                m
                            }
                        })
                        .collect()
                })
                .collect(),
            output: (0..s).map(|j| mix(tb.b()[j], bh[j])).collect(),
        }
    }

    /// Dense `sN × sN` solve against `𝟙 ⊗ I`, then the output row.
    fn general(&self) -> Result<Matrix> {
        let (n, s) = (self.n, self.s);
        let mut m = Matrix::identity(s * n);
        let mut rhs = Matrix::zeros(s * n, n);
        for i in 0..s {
            for j in 0..s {
                m.add_block(i * n, j * n, -1.0, &self.blocks[i][j]);
            }
            rhs.add_block(i * n, 0, 1.0, &Matrix::identity(n));
        }
        let y = m.lu()?.solve_matrix(&rhs);
        let mut r = Matrix::identity(n);
        for j in 0..s {
            r = r.add_scaled(1.0, &self.output[j].matmul(&y.block(j * n, 0, n, n)));
        }
        Ok(r)
    }

    /// Stage blocks by forward substitution (the coupling is lower
    /// triangular in the stage index).
    fn stage_values(&self) -> Result<Vec<Matrix>> {
        let n = self.n;
        let mut ys: Vec<Matrix> = Vec::with_capacity(self.s);
        for i in 0..self.s {
            let mut rhs = Matrix::identity(n);
            for (j, yj) in ys.iter().enumerate() {
                rhs = rhs.add_scaled(1.0, &self.blocks[i][j].matmul(yj));
            }
            let diag = Matrix::identity(n).add_scaled(-1.0, &self.blocks[i][i]);
            ys.push(diag.lu()?.solve_matrix(&rhs));
        }
        Ok(ys)
    }
}

/// Type-1 transfer matrix; `h_l` holds one `hL_i` per stage.
pub fn transfer_type1(tb: &Tableau, h_j: &Matrix, h_l: &[Matrix]) -> Result<TransferMatrix> {
    let n = check_inputs(tb, h_j, h_l)?;
    let sys = StageSystem::type1(tb, h_j, h_l, n);
    let matrix = sys.general()?;
    let reduced = if stiffly_accurate(tb) {
        sys.stage_values()?.pop()
    } else {
        None
    };
    Ok(TransferMatrix {
        matrix,
        reduced,
        method: MethodType::Type1,
        h_j: h_j.clone(),
        h_l: None,
        h_l_stages: h_l.to_vec(),
    })
}

/// Type-2 transfer matrix with base operator `h_l` and stage operators
/// `h_l_stages`.
pub fn transfer_type2(
    tb: &Tableau,
    h_j: &Matrix,
    h_l: &Matrix,
    h_l_stages: &[Matrix],
) -> Result<TransferMatrix> {
    let n = check_inputs(tb, h_j, h_l_stages)?;
    if h_l.rows() != n || h_l.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: h_l.rows(),
        });
    }
    let sys = StageSystem::type2(tb, h_j, h_l, h_l_stages, n);
    let matrix = sys.general()?;
    let reduced = if stiffly_accurate(tb) {
        let s = tb.stages();
        let ys = sys.stage_values()?;
        let corr = h_l_stages[s - 1]
            .add_scaled(-1.0, h_l)
            .scaled(tb.gamma(s - 1, s - 1));
        Some(
            Matrix::identity(n)
                .add_scaled(-1.0, &corr)
                .matmul(&ys[s - 1]),
        )
    } else {
        None
    };
    Ok(TransferMatrix {
        matrix,
        reduced,
        method: MethodType::Type2,
        h_j: h_j.clone(),
        h_l: Some(h_l.clone()),
        h_l_stages: h_l_stages.to_vec(),
    })
}

/// Scalar operator choices for [`stability_scan`], as functions of `z = hλ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarConfig {
    /// `hJ = hL = hL_i = z`.
    ExactL,
    /// `hJ = hL = z`, `hL_i = c z²`: stage operators outgrowing `L`.
    FastStage { c: f64 },
    /// `hJ = z`, `hL = hL_i = ratio · z`.
    ScaledL { ratio: f64 },
}

impl ScalarConfig {
    pub const NAMES: [&'static str; 3] = ["exact-L", "fast-stage", "scaled-L"];
}

impl fmt::Display for ScalarConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarConfig::ExactL => f.write_str("exact-L"),
            ScalarConfig::FastStage { c } => write!(f, "fast-stage:{c}"),
            ScalarConfig::ScaledL { ratio } => write!(f, "scaled-L:{ratio}"),
        }
    }
}

impl FromStr for ScalarConfig {
    type Err = Error;

    /// `exact-L`, `fast-stage[:c]` (default `c = 1`) or `scaled-L:<ratio>`.
    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let number = |a: &str| {
            a.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::invalid(format!("bad parameter '{a}' in '{s}'")))
        };
        match (head, arg) {
            ("exact-L", None) => Ok(ScalarConfig::ExactL),
            ("fast-stage", None) => Ok(ScalarConfig::FastStage { c: 1.0 }),
            ("fast-stage", Some(a)) => Ok(ScalarConfig::FastStage { c: number(a)? }),
            ("scaled-L", Some(a)) => Ok(ScalarConfig::ScaledL { ratio: number(a)? }),
            _ => Err(Error::invalid(format!(
                "unknown scalar configuration '{s}'"
            ))),
        }
    }
}

/// `R(z)` for a scalar configuration.
pub fn scalar_r(tb: &Tableau, method: MethodType, z: f64, config: ScalarConfig) -> Result<f64> {
    let (j, l, li) = match config {
        ScalarConfig::ExactL => (z, z, z),
        ScalarConfig::FastStage { c } => (z, z, c * z * z),
        ScalarConfig::ScaledL { ratio } => (z, ratio * z, ratio * z),
    };
    let stages = vec![Matrix::scalar(li); tb.stages()];
    let tm = match method {
        MethodType::Type1 => transfer_type1(tb, &Matrix::scalar(j), &stages)?,
        MethodType::Type2 => transfer_type2(tb, &Matrix::scalar(j), &Matrix::scalar(l), &stages)?,
        MethodType::Type3 => {
            return Err(Error::invalid(
                "transfer matrices are defined for types 1 and 2",
            ))
        }
    };
    Ok(tm.scalar())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub h_lambda: f64,
    pub r: f64,
    pub abs_r: f64,
}

/// `|R(hλ)|` over `grid`, in grid order.
pub fn stability_scan(
    tb: &Tableau,
    method: MethodType,
    grid: &[f64],
    config: ScalarConfig,
) -> Result<Vec<ScanRow>> {
    grid.iter()
        .map(|&z| {
            let r = scalar_r(tb, method, z, config)?;
            Ok(ScanRow {
                h_lambda: z,
                r,
                abs_r: r.abs(),
            })
        })
        .collect()
}

/// `-10^k` for `k = lo..=hi`, plus zero first when `with_zero`.
pub fn negative_decades(lo: i32, hi: i32, with_zero: bool) -> Vec<f64> {
    let mut grid = Vec::new();
    if with_zero {
        grid.push(0.0);
    }
    grid.extend((lo..=hi).map(|k| -libm::pow(10.0, f64::from(k))));
    grid
}

/// Structural check used before trusting the reduced formula.
pub fn stiff_accuracy_report(tb: &Tableau) -> ValidationReport {
    validate(tb, &[Constraint::StiffAccuracy])
}
