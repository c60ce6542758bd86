//! LIRK-W coefficient tableaux.
//!
//! A method is stored in its "standard form": the explicit coupling `a`
//! (strictly lower triangular), the implicit correction `gamma = â - a`
//! (lower triangular), the explicit weights `b` and the weight corrections
//! `g = b̂ - b`. All indices in this module are zero based.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dense::Matrix;
use crate::{Error, Result};

/// Which LIRK-W formulation a tableau was built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodType {
    /// Stage operators `L_i` everywhere `L` appears.
    Type1,
    /// Exact sum-form `L` off the diagonal, `L_i` only in the stage solve.
    Type2,
    /// `L_i` multiplies the whole stage combination; output uses `L`.
    Type3,
}

impl MethodType {
    pub fn number(self) -> u8 {
        match self {
            MethodType::Type1 => 1,
            MethodType::Type2 => 2,
            MethodType::Type3 => 3,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(MethodType::Type1),
            2 => Some(MethodType::Type2),
            3 => Some(MethodType::Type3),
            _ => None,
        }
    }
}

impl fmt::Display for MethodType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "type {}", self.number())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tableau {
    a: Matrix,
    gamma: Matrix,
    b: Vec<f64>,
    g: Vec<f64>,
    method_type: MethodType,
}

impl Tableau {
    /// Checks shapes and the triangular structure of `a` and `gamma`.
    pub fn new(
        a: Matrix,
        gamma: Matrix,
        b: Vec<f64>,
        g: Vec<f64>,
        method_type: MethodType,
    ) -> Result<Self> {
        let s = a.rows();
        if s == 0 {
            return Err(Error::invalid("tableau needs at least one stage"));
        }
        for (found, what) in [
            (a.cols(), "a"),
            (gamma.rows(), "gamma"),
            (gamma.cols(), "gamma"),
            (b.len(), "b"),
            (g.len(), "g"),
        ] {
            if found != s {
                let _ = what;
                return Err(Error::DimensionMismatch { expected: s, found });
            }
        }
        for i in 0..s {
            for j in i..s {
                if a[(i, j)] != 0.0 {
                    return Err(Error::invalid(alloc::format!(
                        "a[{i},{j}] must be zero (a is strictly lower triangular)"
                    )));
                }
                if j > i && gamma[(i, j)] != 0.0 {
                    return Err(Error::invalid(alloc::format!(
                        "gamma[{i},{j}] must be zero (gamma is lower triangular)"
                    )));
                }
            }
        }
        let all = a
            .as_slice()
            .iter()
            .chain(gamma.as_slice())
            .chain(&b)
            .chain(&g);
        if !all.into_iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("tableau coefficients must be finite"));
        }
        Ok(Tableau {
            a,
            gamma,
            b,
            g,
            method_type,
        })
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn method_type(&self) -> MethodType {
        self.method_type
    }

    pub fn with_method_type(mut self, method_type: MethodType) -> Self {
        self.method_type = method_type;
        self
    }

    #[inline]
    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[(i, j)]
    }

    #[inline]
    pub fn gamma(&self, i: usize, j: usize) -> f64 {
        self.gamma[(i, j)]
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn a_matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn gamma_matrix(&self) -> &Matrix {
        &self.gamma
    }

    /// `â = a + gamma`
    pub fn a_hat(&self) -> Matrix {
        self.a.add_scaled(1.0, &self.gamma)
    }

    /// `b̂ = b + g`
    pub fn b_hat(&self) -> Vec<f64> {
        self.b.iter().zip(&self.g).map(|(b, g)| b + g).collect()
    }

    /// Stage abscissae `c_i = Σ_j a_ij`.
    pub fn c(&self) -> Vec<f64> {
        (0..self.stages())
            .map(|i| self.a.row(i).iter().sum())
            .collect()
    }

    pub fn gamma_diag(&self) -> Vec<f64> {
        (0..self.stages()).map(|i| self.gamma[(i, i)]).collect()
    }

    /// Same tableau with one `gamma` entry shifted by `delta`. Used for
    /// defect injection; the triangular structure must be kept.
    pub fn perturb_gamma(&self, i: usize, j: usize, delta: f64) -> Result<Self> {
        let mut gamma = self.gamma.clone();
        gamma[(i, j)] += delta;
        Tableau::new(
            self.a.clone(),
            gamma,
            self.b.clone(),
            self.g.clone(),
            self.method_type,
        )
    }

    pub fn scale_b(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.b.iter_mut().for_each(|x| *x *= factor);
        out
    }
}

fn lower(rows: &[&[f64]]) -> Matrix {
    let s = rows.len();
    Matrix::from_fn(s, s, |i, j| rows[i].get(j).copied().unwrap_or(0.0))
}

/// The five-stage third-order type-1 method, coefficients as published.
pub fn third_order_type1() -> Tableau {
    let a = lower(&[
        &[],
        &[0.520300000000000],
        &[0.026500000000000, 0.938000000000000],
        &[0.122175553766880, 0.105600000000000, 0.018300000000000],
        &[
            -0.033950868284890,
            0.218016324016351,
            0.258600000000000,
            0.557334544268539,
        ],
    ]);
    let gamma = lower(&[
        &[0.0],
        &[-0.520300000000000, 0.520300000000000],
        &[0.911500000000000, -1.876, 0.964500000000000],
        &[
            -0.401069249711528,
            0.663393695944647,
            -0.508400000000000,
            0.246075553766880,
        ],
        &[
            -0.155925222099085,
            -0.084089256959580,
            -1.070724285228281,
            0.310738764286946,
            1.0,
        ],
    ]);
    let b = vec![
        -0.033950868284890,
        0.218016324016351,
        0.258600000000000,
        0.557334544268539,
        0.0,
    ];
    let g = vec![
        -0.155925222099085,
        -0.084089256959580,
        -1.070724285228281,
        0.310738764286946,
        1.0,
    ];
    Tableau::new(a, gamma, b, g, MethodType::Type1).expect("published tableau is well formed")
}

fn type2_denominator_ok(gam: f64, gam54: f64) -> Result<()> {
    if gam == 0.0 || !gam.is_finite() {
        return Err(Error::DegenerateParameters("gamma must be non-zero"));
    }
    let scale = gam.abs().max(gam54.abs()).max(1.0);
    if (5.0 * gam + 2.0 * gam54).abs() < 1e-14 * scale {
        return Err(Error::DegenerateParameters("5*gamma + 2*gamma54 vanishes"));
    }
    Ok(())
}

/// The `gamma[4,3]` (one based) that makes the exact-`L` stability
/// function of the type-2 family vanish at infinity.
///
/// The limit depends on `a43` and `gamma43` only through `â43 = a43 +
/// gamma43` and is affine in it:
/// `K(γ, γ54)·â43 + 6γ(5γ + 2γ54)(6γ³ - 18γ² + 9γ - 1) = 0` with
/// `K = -(2γ54 + 3)(18γ² + 6γγ54 - 9γ - 2γ54)`.
/// Returns `None` when `K` vanishes (no choice of `gamma43` helps).
pub fn type2_stiff_decay_gamma43(gam: f64, gam54: f64, a43: f64) -> Option<f64> {
    let k = -(2.0 * gam54 + 3.0) * (18.0 * gam * gam + 6.0 * gam * gam54 - 9.0 * gam - 2.0 * gam54);
    let p = 6.0 * gam * (5.0 * gam + 2.0 * gam54) * (((6.0 * gam - 18.0) * gam + 9.0) * gam - 1.0);
    let scale = gam.abs().max(gam54.abs()).max(1.0);
    if k.abs() < 1e-12 * scale * scale * scale {
        return None;
    }
    Some(-p / k - a43)
}

/// The parameterized five-stage third-order type-2 family with `gamma43`
/// chosen by [`type2_stiff_decay_gamma43`] (zero if that has no solution).
pub fn third_order_type2(gam: f64, gam54: f64, a43: f64) -> Result<Tableau> {
    type2_denominator_ok(gam, gam54)?;
    let gam43 = type2_stiff_decay_gamma43(gam, gam54, a43).unwrap_or(0.0);
    third_order_type2_with_gamma43(gam, gam54, a43, gam43)
}

/// The type-2 family with every free parameter explicit.
///
/// `a[4,2]` (one based) is `(2/3)(1 - 3 a43)`: with this sign the order
/// conditions hold for every `a43`.
pub fn third_order_type2_with_gamma43(
    gam: f64,
    gam54: f64,
    a43: f64,
    gam43: f64,
) -> Result<Tableau> {
    type2_denominator_ok(gam, gam54)?;
    let den = 5.0 * gam + 2.0 * gam54;
    let x = (9.0 * gam + 2.0 * gam54) / (3.0 * den);
    let a42 = 2.0 / 3.0 * (1.0 - 3.0 * a43);
    let a = lower(&[
        &[],
        &[1.0 / 6.0],
        &[1.0 / 3.0 - x, x],
        &[0.5 - a42 - a43, a42, a43],
        &[1.0, -1.5, 0.0, 1.5],
    ]);
    let y = 2.0 * (3.0 * gam * gam + gam * gam54) / den;
    let last = [0.0, 4.0 * gam + gam54, -5.0 * gam - 2.0 * gam54, gam54, gam];
    let gamma = lower(&[
        &[0.0],
        &[-gam, gam],
        &[y - gam, -y, gam],
        &[
            2.0 * (gam + gam43) - gam - gam43,
            -2.0 * (gam + gam43),
            gam43,
            gam,
        ],
        &last,
    ]);
    Tableau::new(
        a,
        gamma,
        vec![1.0, -1.5, 0.0, 1.5, 0.0],
        last.to_vec(),
        MethodType::Type2,
    )
}

/// Structural properties a tableau can be checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constraint {
    /// `b = a[s,:]` and `g = gamma[s,:]`.
    StiffAccuracy,
    /// Every row of `gamma` sums to zero and `Σ g = 0`.
    RowSum,
    /// `gamma[i,i] = c_i`.
    Type1Diagonal,
    /// `gamma[1,1] = 0` and `gamma[i,i]` constant for `i ≥ 2`.
    Type2Diagonal,
    /// `a[s,1] = 1` and `gamma[s,1] = 0`.
    FirstColumnChoice,
}

impl Constraint {
    pub const TYPE1: [Constraint; 3] = [
        Constraint::StiffAccuracy,
        Constraint::RowSum,
        Constraint::Type1Diagonal,
    ];
    pub const TYPE2: [Constraint; 4] = [
        Constraint::StiffAccuracy,
        Constraint::RowSum,
        Constraint::Type2Diagonal,
        Constraint::FirstColumnChoice,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Constraint::StiffAccuracy => "stiff-accuracy",
            Constraint::RowSum => "row-sum",
            Constraint::Type1Diagonal => "type1-diagonal",
            Constraint::Type2Diagonal => "type2-diagonal",
            Constraint::FirstColumnChoice => "first-column-choice",
        }
    }

    fn violation(self, tb: &Tableau) -> f64 {
        let s = tb.stages();
        let last = s - 1;
        match self {
            Constraint::StiffAccuracy => (0..s)
                .map(|j| {
                    (tb.b[j] - tb.a(last, j))
                        .abs()
                        .max((tb.g[j] - tb.gamma(last, j)).abs())
                })
                .fold(0.0, f64::max),
            Constraint::RowSum => {
                let rows = (0..s)
                    .map(|i| tb.gamma.row(i).iter().sum::<f64>().abs())
                    .fold(0.0, f64::max);
                rows.max(tb.g.iter().sum::<f64>().abs())
            }
            Constraint::Type1Diagonal => tb
                .c()
                .iter()
                .enumerate()
                .map(|(i, c)| (tb.gamma(i, i) - c).abs())
                .fold(0.0, f64::max),
            Constraint::Type2Diagonal => {
                let first = tb.gamma(0, 0).abs();
                if s < 2 {
                    return first;
                }
                let common = tb.gamma(1, 1);
                (2..s)
                    .map(|i| (tb.gamma(i, i) - common).abs())
                    .fold(first, f64::max)
            }
            Constraint::FirstColumnChoice => {
                (tb.a(last, 0) - 1.0).abs().max(tb.gamma(last, 0).abs())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationEntry {
    pub constraint: Constraint,
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub entries: Vec<ValidationEntry>,
}

impl ValidationReport {
    /// Coefficients are printed to 15 digits; residuals near `1e-15` are
    /// expected.
    pub const TOLERANCE: f64 = 1e-12;

    pub fn passes(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.max_violation <= Self::TOLERANCE)
    }

    pub fn violation(&self, constraint: Constraint) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.constraint == constraint)
            .map(|e| e.max_violation)
    }
}

pub fn validate(tb: &Tableau, constraints: &[Constraint]) -> ValidationReport {
    ValidationReport {
        entries: constraints
            .iter()
            .map(|&constraint| ValidationEntry {
                constraint,
                max_violation: constraint.violation(tb),
            })
            .collect(),
    }
}
