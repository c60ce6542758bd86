//! Step-halving sweeps and observed-order fits.

use alloc::vec::Vec;

use crate::dense::max_abs_diff;
use crate::integrators::{integrate, rk4_reference, IvProblem, OperatorSource, Retention};
use crate::tableau::Tableau;
use crate::{Error, Result};

pub const DEFAULT_STEPS: [usize; 6] = [16, 32, 64, 128, 256, 512];
pub const DEFAULT_REFERENCE_STEPS: usize = 1 << 14;
/// Number of smallest step sizes used by the order fit.
pub const DEFAULT_TAIL: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub n_steps: usize,
    pub h: f64,
    /// Max-norm error at the final time.
    pub error: f64,
    /// Order observed against the previous (coarser) point.
    pub local_slope: Option<f64>,
}

/// The exact final state if the problem has one, else a classical RK4 run
/// with `n_ref` steps.
pub fn reference_solution(p: &IvProblem, n_ref: usize) -> Result<Vec<f64>> {
    match &p.exact {
        Some(exact) => Ok(exact(p.tf)),
        None => rk4_reference(p.rhs.as_ref(), &p.y0, p.t0, p.tf, n_ref),
    }
}

/// `‖y_n(t_F) - reference‖∞` for one step count.
pub fn final_error(
    p: &IvProblem,
    tb: &Tableau,
    n_steps: usize,
    reference: &[f64],
    type3_ops: Option<&dyn OperatorSource>,
) -> Result<f64> {
    let tr = integrate(p, tb, p.t0, p.tf, n_steps, type3_ops, Retention::Final)?;
    Ok(max_abs_diff(&tr.y_final, reference))
}

/// Turns `(n_steps, error)` pairs into sweep points sorted by `n_steps`,
/// with local slopes.
pub fn assemble(p: &IvProblem, mut errors: Vec<(usize, f64)>) -> Vec<SweepPoint> {
    errors.sort_by_key(|e| e.0);
    let span = p.tf - p.t0;
    let mut out: Vec<SweepPoint> = Vec::with_capacity(errors.len());
    for (n, e) in errors {
        let h = span / n as f64;
        let local_slope = out.last().map(|prev| slope(prev.h, prev.error, h, e));
        out.push(SweepPoint {
            n_steps: n,
            h,
            error: e,
            local_slope,
        });
    }
    out
}

fn slope(h0: f64, e0: f64, h1: f64, e1: f64) -> f64 {
    libm::log(e0 / e1) / libm::log(h0 / h1)
}

/// Sequential sweep over `n_list`.
pub fn sweep(
    p: &IvProblem,
    tb: &Tableau,
    n_list: &[usize],
    reference: &[f64],
    type3_ops: Option<&dyn OperatorSource>,
) -> Result<Vec<SweepPoint>> {
    let errors = n_list
        .iter()
        .map(|&n| final_error(p, tb, n, reference, type3_ops).map(|e| (n, e)))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(p, errors))
}

/// Least-squares slope of `log error` against `log h` over the `tail`
/// smallest step sizes.
pub fn fit_order(points: &[SweepPoint], tail: usize) -> Result<f64> {
    if tail < 2 || points.len() < tail {
        return Err(Error::invalid(
            "order fit needs at least two points in the tail",
        ));
    }
    let mut sorted: Vec<&SweepPoint> = points.iter().collect();
    sorted.sort_by(|a, b| b.h.total_cmp(&a.h));
    let pts = &sorted[sorted.len() - tail..];
    if pts.iter().any(|p| p.error <= 0.0 || !p.error.is_finite()) {
        return Err(Error::invalid("order fit needs positive finite errors"));
    }
    let xs: Vec<f64> = pts.iter().map(|p| libm::log(p.h)).collect();
    let ys: Vec<f64> = pts.iter().map(|p| libm::log(p.error)).collect();
    let m = tail as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}
