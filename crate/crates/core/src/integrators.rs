//! One-step maps of the three LIRK-W types and a fixed-step driver.
//!
//! Every stepper evaluates stage values `Y_i` in order and returns
//! `y_{n+1}`. Stages with `γ_ii = 0` are explicit and skip the solve.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dense::{all_finite, axpy};
use crate::linop::AmfOperator;
use crate::tableau::{MethodType, Tableau};
use crate::{Error, Result};

/// Autonomous right-hand side `F(y)`.
pub trait RightHandSide: Send + Sync {
    fn dim(&self) -> usize;

    fn eval_into(&self, y: &[f64], out: &mut [f64]);

    fn eval(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(y, &mut out);
        out
    }
}

/// What a stepper asks an [`OperatorSource`] for.
#[derive(Debug, Clone, Copy)]
pub struct StageContext<'a> {
    /// Start of the step.
    pub t: f64,
    pub h: f64,
    /// Diagonal coefficient of the requesting stage; zero for the base
    /// operator `L`.
    pub gamma_ii: f64,
    /// Zero-based stage index, `None` for the base operator.
    pub stage: Option<usize>,
    /// State at the start of the step.
    pub state: &'a [f64],
}

/// Supplies the linear operator for a stage (or the base operator).
pub trait OperatorSource: Send + Sync {
    fn operator(&self, ctx: &StageContext<'_>) -> Result<AmfOperator>;
}

impl<F> OperatorSource for F
where
    F: Fn(&StageContext<'_>) -> Result<AmfOperator> + Send + Sync,
{
    fn operator(&self, ctx: &StageContext<'_>) -> Result<AmfOperator> {
        self(ctx)
    }
}

/// The same operator for every request.
#[derive(Debug, Clone)]
pub struct FixedOperator(pub AmfOperator);

impl OperatorSource for FixedOperator {
    fn operator(&self, _ctx: &StageContext<'_>) -> Result<AmfOperator> {
        Ok(self.0.clone())
    }
}

pub type ExactSolution = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct IvProblem {
    pub name: String,
    pub rhs: Arc<dyn RightHandSide>,
    pub operators: Arc<dyn OperatorSource>,
    pub y0: Vec<f64>,
    pub t0: f64,
    pub tf: f64,
    pub exact: Option<ExactSolution>,
}

impl IvProblem {
    pub fn dim(&self) -> usize {
        self.y0.len()
    }

    /// Same problem with a different operator configuration.
    pub fn with_operators(&self, operators: Arc<dyn OperatorSource>) -> Self {
        IvProblem {
            operators,
            ..self.clone()
        }
    }
}

impl fmt::Debug for IvProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IvProblem")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("t0", &self.t0)
            .field("tf", &self.tf)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn finite(stage: usize, v: &[f64]) -> Result<()> {
    if all_finite(v) {
        Ok(())
    } else {
        Err(Error::NonfiniteState { stage })
    }
}

/// `y + h Σ_{j<i} a_ij F_j`
fn explicit_part(tb: &Tableau, i: usize, y: &[f64], h: f64, f: &[Vec<f64>]) -> Vec<f64> {
    let mut rhs = y.to_vec();
    for (j, fj) in f.iter().enumerate().take(i) {
        axpy(h * tb.a(i, j), fj, &mut rhs);
    }
    rhs
}

/// Stage values and the new state.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub y_next: Vec<f64>,
    pub stages: Vec<Vec<f64>>,
}

fn stage_ctx<'a>(t: f64, h: f64, tb: &Tableau, i: usize, y: &'a [f64]) -> StageContext<'a> {
    StageContext {
        t,
        h,
        gamma_ii: tb.gamma(i, i),
        stage: Some(i),
        state: y,
    }
}

fn base_ctx(t: f64, h: f64, y: &[f64]) -> StageContext<'_> {
    StageContext {
        t,
        h,
        gamma_ii: 0.0,
        stage: None,
        state: y,
    }
}

/// Type 1: stage `i` uses `L_i = L̃(hγ_ii)` from `ops` everywhere; `L_j Y_j`
/// is cached once per stage.
pub fn step_type1_with(
    rhs: &dyn RightHandSide,
    ops: &dyn OperatorSource,
    tb: &Tableau,
    t: f64,
    y: &[f64],
    h: f64,
) -> Result<StepOutput> {
    check_dim(rhs.dim(), y.len())?;
    let s = tb.stages();
    let mut stages = Vec::with_capacity(s);
    let mut f = Vec::with_capacity(s);
    let mut z: Vec<Vec<f64>> = Vec::with_capacity(s);
    for i in 0..s {
        let op = ops.operator(&stage_ctx(t, h, tb, i, y))?;
        check_dim(y.len(), op.dim())?;
        let mut b = explicit_part(tb, i, y, h, &f);
        for (j, zj) in z.iter().enumerate() {
            axpy(h * tb.gamma(i, j), zj, &mut b);
        }
        let sigma = h * tb.gamma(i, i);
        let yi = if tb.gamma(i, i) != 0.0 {
            op.product_solve(sigma, &b)?
        } else {
            b
        };
        finite(i, &yi)?;
        f.push(rhs.eval(&yi));
        z.push(op.tilde_apply(sigma, &yi)?);
        stages.push(yi);
    }
    let mut y_next = y.to_vec();
    for j in 0..s {
        axpy(h * tb.b()[j], &f[j], &mut y_next);
        axpy(h * tb.g()[j], &z[j], &mut y_next);
    }
    finite(s, &y_next)?;
    Ok(StepOutput { y_next, stages })
}

/// Type 2: the exact base operator `L` off the diagonal and in the output;
/// the stage operator only in the diagonal solve.
pub fn step_type2_with(
    rhs: &dyn RightHandSide,
    ops: &dyn OperatorSource,
    tb: &Tableau,
    t: f64,
    y: &[f64],
    h: f64,
) -> Result<StepOutput> {
    check_dim(rhs.dim(), y.len())?;
    let s = tb.stages();
    let base = ops.operator(&base_ctx(t, h, y))?;
    check_dim(y.len(), base.dim())?;
    let mut stages: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut f = Vec::with_capacity(s);
    for i in 0..s {
        let mut b = explicit_part(tb, i, y, h, &f);
        let combo = gamma_combination(tb, i, &stages, y.len());
        if let Some(c) = combo {
            axpy(h, &base.sum_apply(&c)?, &mut b);
        }
        let yi = if tb.gamma(i, i) != 0.0 {
            let op = ops.operator(&stage_ctx(t, h, tb, i, y))?;
            check_dim(y.len(), op.dim())?;
            op.product_solve(h * tb.gamma(i, i), &b)?
        } else {
            b
        };
        finite(i, &yi)?;
        f.push(rhs.eval(&yi));
        stages.push(yi);
    }
    finish_with_base(tb, &base, y, h, &f, &stages)
}

/// Type 3: stage `i` solves `(I - hγ_ii L_i) Y_i = y + hΣ a_ij F_j +
/// h L_i Σ_{j<i} γ_ij Y_j` with `L_i` from `stage_ops`; the output uses the
/// base operator of `base_ops`.
pub fn step_type3_with(
    rhs: &dyn RightHandSide,
    base_ops: &dyn OperatorSource,
    stage_ops: &dyn OperatorSource,
    tb: &Tableau,
    t: f64,
    y: &[f64],
    h: f64,
) -> Result<StepOutput> {
    check_dim(rhs.dim(), y.len())?;
    let s = tb.stages();
    let base = base_ops.operator(&base_ctx(t, h, y))?;
    check_dim(y.len(), base.dim())?;
    let mut stages: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut f = Vec::with_capacity(s);
    for i in 0..s {
        let op = stage_ops.operator(&stage_ctx(t, h, tb, i, y))?;
        check_dim(y.len(), op.dim())?;
        let sigma = h * tb.gamma(i, i);
        let mut b = explicit_part(tb, i, y, h, &f);
        if let Some(c) = gamma_combination(tb, i, &stages, y.len()) {
            axpy(h, &op.tilde_apply(sigma, &c)?, &mut b);
        }
        let yi = if tb.gamma(i, i) != 0.0 {
            op.product_solve(sigma, &b)?
        } else {
            b
        };
        finite(i, &yi)?;
        f.push(rhs.eval(&yi));
        stages.push(yi);
    }
    finish_with_base(tb, &base, y, h, &f, &stages)
}

/// `Σ_{j<i} γ_ij Y_j`, or `None` when every coefficient is zero.
fn gamma_combination(tb: &Tableau, i: usize, stages: &[Vec<f64>], n: usize) -> Option<Vec<f64>> {
    if (0..i).all(|j| tb.gamma(i, j) == 0.0) {
        return None;
    }
    let mut c = vec![0.0; n];
    for (j, yj) in stages.iter().enumerate().take(i) {
        axpy(tb.gamma(i, j), yj, &mut c);
    }
    Some(c)
}

/// `y + hΣ b_j F_j + h L Σ g_j Y_j`
fn finish_with_base(
    tb: &Tableau,
    base: &AmfOperator,
    y: &[f64],
    h: f64,
    f: &[Vec<f64>],
    stages: &[Vec<f64>],
) -> Result<StepOutput> {
    let s = tb.stages();
    let mut y_next = y.to_vec();
    let mut combo = vec![0.0; y.len()];
    for j in 0..s {
        axpy(h * tb.b()[j], &f[j], &mut y_next);
        axpy(tb.g()[j], &stages[j], &mut combo);
    }
    axpy(h, &base.sum_apply(&combo)?, &mut y_next);
    finite(s, &y_next)?;
    Ok(StepOutput {
        y_next,
        stages: stages.to_vec(),
    })
}

pub fn step_type1(p: &IvProblem, tb: &Tableau, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>> {
    step_type1_with(p.rhs.as_ref(), p.operators.as_ref(), tb, t, y, h).map(|o| o.y_next)
}

pub fn step_type2(p: &IvProblem, tb: &Tableau, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>> {
    step_type2_with(p.rhs.as_ref(), p.operators.as_ref(), tb, t, y, h).map(|o| o.y_next)
}

/// `stage_ops` provides `L_i`; the problem's own source provides `L`.
pub fn step_type3(
    p: &IvProblem,
    tb: &Tableau,
    t: f64,
    y: &[f64],
    h: f64,
    stage_ops: &dyn OperatorSource,
) -> Result<Vec<f64>> {
    step_type3_with(p.rhs.as_ref(), p.operators.as_ref(), stage_ops, tb, t, y, h).map(|o| o.y_next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub h: f64,
    pub y: Vec<f64>,
    pub y_next: Vec<f64>,
    pub stages: Option<Vec<Vec<f64>>>,
}

/// How much of the trajectory [`integrate`] keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Retention {
    #[default]
    Final,
    Steps,
    Stages,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t_final: f64,
    pub y_final: Vec<f64>,
    pub records: Vec<StepRecord>,
}

/// `n_steps` equal steps from `t0` to `tf` with the stepper matching the
/// tableau's type. Type 3 takes its stage operators from `type3_ops`, or
/// from the problem's source when none is given.
pub fn integrate(
    p: &IvProblem,
    tb: &Tableau,
    t0: f64,
    tf: f64,
    n_steps: usize,
    type3_ops: Option<&dyn OperatorSource>,
    retention: Retention,
) -> Result<Trajectory> {
    if n_steps == 0 {
        return Err(Error::invalid("n_steps must be at least 1"));
    }
    if tf.is_nan() || t0.is_nan() || tf <= t0 {
        return Err(Error::invalid("tf must exceed t0"));
    }
    let h = (tf - t0) / n_steps as f64;
    let mut y = p.y0.clone();
    let mut records = Vec::new();
    for n in 0..n_steps {
        let t = t0 + n as f64 * h;
        let out = match tb.method_type() {
            MethodType::Type1 => {
                step_type1_with(p.rhs.as_ref(), p.operators.as_ref(), tb, t, &y, h)
            }
            MethodType::Type2 => {
                step_type2_with(p.rhs.as_ref(), p.operators.as_ref(), tb, t, &y, h)
            }
            MethodType::Type3 => step_type3_with(
                p.rhs.as_ref(),
                p.operators.as_ref(),
                type3_ops.unwrap_or(p.operators.as_ref()),
                tb,
                t,
                &y,
                h,
            ),
        }
        .map_err(|e| Error::StepFailed {
            step: n,
            source: alloc::boxed::Box::new(e),
        })?;
        if retention != Retention::Final {
            records.push(StepRecord {
                t,
                h,
                y: y.clone(),
                y_next: out.y_next.clone(),
                stages: (retention == Retention::Stages).then_some(out.stages),
            });
        }
        y = out.y_next;
    }
    Ok(Trajectory {
        t_final: tf,
        y_final: y,
        records,
    })
}

/// Classical fourth-order Runge-Kutta with `n_steps` equal steps; the
/// fine-step reference for convergence sweeps.
pub fn rk4_reference(
    rhs: &dyn RightHandSide,
    y0: &[f64],
    t0: f64,
    tf: f64,
    n_steps: usize,
) -> Result<Vec<f64>> {
    if n_steps == 0 || tf.is_nan() || t0.is_nan() || tf <= t0 {
        return Err(Error::invalid("reference needs n_steps >= 1 and tf > t0"));
    }
    check_dim(rhs.dim(), y0.len())?;
    let h = (tf - t0) / n_steps as f64;
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut tmp = vec![0.0; n];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let stage = |base: &[f64], c: f64, k: &[f64], tmp: &mut Vec<f64>, out: &mut [f64]| {
        tmp.copy_from_slice(base);
        axpy(c * h, k, tmp);
        rhs.eval_into(tmp, out);
    };
    for step in 0..n_steps {
        rhs.eval_into(&y, &mut k1);
        stage(&y, 0.5, &k1, &mut tmp, &mut k2);
        stage(&y, 0.5, &k2, &mut tmp, &mut k3);
        stage(&y, 1.0, &k3, &mut tmp, &mut k4);
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if !all_finite(&y) {
            return Err(Error::StepFailed {
                step,
                source: alloc::boxed::Box::new(Error::NonfiniteState { stage: 4 }),
            });
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{rel_diff, Matrix};
    use crate::tableau::{third_order_type1, third_order_type2};

    struct Linear(Matrix);

    impl RightHandSide for Linear {
        fn dim(&self) -> usize {
            self.0.rows()
        }
        fn eval_into(&self, y: &[f64], out: &mut [f64]) {
            self.0.mul_vec_into(y, out);
        }
    }

    fn problem(j: Matrix, l: Matrix) -> IvProblem {
        let n = j.rows();
        IvProblem {
            name: "linear".into(),
            rhs: Arc::new(Linear(j)),
            operators: Arc::new(FixedOperator(AmfOperator::dense(l).unwrap())),
            y0: vec![1.0; n],
            t0: 0.0,
            tf: 1.0,
            exact: None,
        }
    }

    #[test]
    fn zero_step_returns_state() {
        let p = problem(Matrix::scalar(-3.0), Matrix::scalar(-3.0));
        let y = [0.7];
        assert_eq!(
            step_type1(&p, &third_order_type1(), 0.0, &y, 0.0).unwrap(),
            y
        );
        let tb2 = third_order_type2(0.25, -0.5, 0.3).unwrap();
        assert_eq!(step_type2(&p, &tb2, 0.0, &y, 0.0).unwrap(), y);
    }

    #[test]
    fn type2_first_stage_is_the_state() {
        let p = problem(Matrix::scalar(-3.0), Matrix::scalar(-2.0));
        let tb = third_order_type2(0.25, -0.5, 0.3).unwrap();
        let out =
            step_type2_with(p.rhs.as_ref(), p.operators.as_ref(), &tb, 0.0, &[0.4], 0.1).unwrap();
        assert_eq!(out.stages[0], vec![0.4]);
    }

    #[test]
    fn type3_with_exact_stage_operators_is_type1() {
        let j = Matrix::from_rows(&[[-2.0, 1.0], [0.5, -3.0]]);
        let p = problem(j.clone(), j);
        let tb = third_order_type1();
        let y = [0.3, -1.2];
        let y1 = step_type1(&p, &tb, 0.0, &y, 0.2).unwrap();
        let y3 = step_type3(&p, &tb, 0.0, &y, 0.2, p.operators.as_ref()).unwrap();
        assert!(rel_diff(&y1, &y3, 1e-300) < 1e-13);
    }

    #[test]
    fn nonfinite_stage_is_reported() {
        let p = problem(Matrix::scalar(f64::INFINITY), Matrix::scalar(0.0));
        let err = integrate(
            &p,
            &third_order_type1(),
            0.0,
            1.0,
            2,
            None,
            Retention::Final,
        )
        .unwrap_err();
        assert_eq!(
            err,
            Error::StepFailed {
                step: 0,
                source: alloc::boxed::Box::new(Error::NonfiniteState { stage: 1 })
            }
        );
    }

    #[test]
    fn rk4_exponential() {
        let p = problem(Matrix::scalar(-1.0), Matrix::scalar(0.0));
        let y = rk4_reference(p.rhs.as_ref(), &[1.0], 0.0, 1.0, 1 << 10).unwrap();
        assert!((y[0] - libm::exp(-1.0)).abs() < 1e-13);
    }

    #[test]
    fn driver_keeps_requested_records() {
        let p = problem(Matrix::scalar(-1.0), Matrix::scalar(-1.0));
        let tr = integrate(
            &p,
            &third_order_type1(),
            0.0,
            1.0,
            4,
            None,
            Retention::Stages,
        )
        .unwrap();
        assert_eq!(tr.records.len(), 4);
        assert_eq!(tr.records[3].y_next, tr.y_final);
        assert_eq!(tr.records[0].stages.as_ref().unwrap().len(), 5);
        assert!(integrate(
            &p,
            &third_order_type1(),
            1.0,
            1.0,
            4,
            None,
            Retention::Final
        )
        .is_err());
    }
}
