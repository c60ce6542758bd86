use std::sync::Arc;

use lirkw_core::dense::{rel_diff, Matrix};
use lirkw_core::integrators::{
    step_type1, step_type2, step_type3, FixedOperator, IvProblem, OperatorSource, RightHandSide,
    StageContext,
};
use lirkw_core::linop::{AmfOperator, DensePart, LinearPart};
use lirkw_core::stability::{transfer_type1, transfer_type2};
use lirkw_core::tableau::{third_order_type1, third_order_type2, MethodType, Tableau};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Nonlinear;

impl RightHandSide for Nonlinear {
    fn dim(&self) -> usize {
        3
    }
    fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        out[0] = -y[0] + y[1] * y[2];
        out[1] = y[0].sin() - 0.5 * y[1];
        out[2] = y[0] * y[1] - y[2] * y[2];
    }
}

struct Linear(Matrix);

impl RightHandSide for Linear {
    fn dim(&self) -> usize {
        self.0.rows()
    }
    fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        self.0.mul_vec_into(y, out);
    }
}

/// Plain explicit Runge-Kutta with the strictly lower `a` and weights `b`.
fn explicit_rk(f: &dyn RightHandSide, a: &Matrix, b: &[f64], y: &[f64], h: f64) -> Vec<f64> {
    let s = b.len();
    let mut k: Vec<Vec<f64>> = Vec::new();
    for i in 0..s {
        let mut yi = y.to_vec();
        for (j, kj) in k.iter().enumerate() {
            for (v, kv) in yi.iter_mut().zip(kj) {
                *v += h * a[(i, j)] * kv;
            }
        }
        k.push(f.eval(&yi));
    }
    let mut out = y.to_vec();
    for (j, kj) in k.iter().enumerate() {
        for (v, kv) in out.iter_mut().zip(kj) {
            *v += h * b[j] * kv;
        }
    }
    out
}

fn problem(rhs: Arc<dyn RightHandSide>, op: AmfOperator, y0: Vec<f64>) -> IvProblem {
    IvProblem {
        name: "test".into(),
        rhs,
        operators: Arc::new(FixedOperator(op)),
        y0,
        t0: 0.0,
        tf: 1.0,
        exact: None,
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Matrix {
    Matrix::from_fn(n, n, |_, _| scale * rng.gen_range(-1.0..1.0))
}

fn tableaux() -> [Tableau; 2] {
    [
        third_order_type1(),
        third_order_type2(0.25, -0.5, 0.3).unwrap(),
    ]
}

#[test]
fn zero_operator_reduces_to_explicit_rk() {
    let p = problem(Arc::new(Nonlinear), AmfOperator::zero(3), vec![0.0; 3]);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for tb in tableaux() {
        for _ in 0..100 {
            let y: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let h = rng.gen_range(0.01..0.3);
            let want = explicit_rk(&Nonlinear, tb.a_matrix(), tb.b(), &y, h);
            let s1 = step_type1(&p, &tb, 0.0, &y, h).unwrap();
            let s2 = step_type2(&p, &tb, 0.0, &y, h).unwrap();
            let s3 = step_type3(&p, &tb, 0.0, &y, h, p.operators.as_ref()).unwrap();
            for got in [s1, s2, s3] {
                assert!(rel_diff(&got, &want, 1e-300) <= 1e-14);
            }
        }
    }
}

#[test]
fn scalar_step_is_stability_function() {
    for lam in [-0.3, -4.0, -50.0] {
        let h = 0.2;
        let p = problem(
            Arc::new(Linear(Matrix::scalar(lam))),
            AmfOperator::dense(Matrix::scalar(lam)).unwrap(),
            vec![1.0],
        );
        let tb = third_order_type1();
        let y1 = step_type1(&p, &tb, 0.0, &[1.0], h).unwrap()[0];
        let stages = vec![Matrix::scalar(h * lam); 5];
        let r = transfer_type1(&tb, &Matrix::scalar(h * lam), &stages)
            .unwrap()
            .scalar();
        assert!((y1 - r).abs() <= 1e-13 * r.abs().max(1e-300), "{lam}");
    }
}

#[test]
fn transfer_matrices_match_steppers_on_random_problems() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 4;
    let h = 0.3;
    for _ in 0..20 {
        let j = random_matrix(&mut rng, n, 1.0);
        let l = random_matrix(&mut rng, n, 1.0);
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = problem(
            Arc::new(Linear(j.clone())),
            AmfOperator::dense(l.clone()).unwrap(),
            y.clone(),
        );
        let hl = l.scaled(h);
        let stages = vec![hl.clone(); 5];
        for tb in tableaux() {
            let r1 = transfer_type1(&tb, &j.scaled(h), &stages).unwrap().matrix;
            let s1 = step_type1(&p, &tb, 0.0, &y, h).unwrap();
            assert!(rel_diff(&s1, &r1.mul_vec(&y), 1e-300) <= 1e-12);
            let r2 = transfer_type2(&tb, &j.scaled(h), &hl, &stages)
                .unwrap()
                .matrix;
            let s2 = step_type2(&p, &tb, 0.0, &y, h).unwrap();
            assert!(rel_diff(&s2, &r2.mul_vec(&y), 1e-300) <= 1e-12);
        }
    }
}

/// Per-stage operators `L + E_i` with the base `L` for `None`.
struct PerStage {
    base: Matrix,
    pert: Vec<Matrix>,
}

impl OperatorSource for PerStage {
    fn operator(&self, ctx: &StageContext<'_>) -> lirkw_core::Result<AmfOperator> {
        let m = match ctx.stage {
            Some(i) => self.base.add_scaled(1.0, &self.pert[i]),
            None => self.base.clone(),
        };
        AmfOperator::dense(m)
    }
}

#[test]
fn stage_dependent_transfer_matches_steppers() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let n = 3;
    let h = 0.25;
    let j = random_matrix(&mut rng, n, 1.0);
    let l = random_matrix(&mut rng, n, 1.0);
    let pert: Vec<Matrix> = (0..5).map(|_| random_matrix(&mut rng, n, 0.5)).collect();
    let src = PerStage {
        base: l.clone(),
        pert: pert.clone(),
    };
    let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut p = problem(
        Arc::new(Linear(j.clone())),
        AmfOperator::dense(l.clone()).unwrap(),
        y.clone(),
    );
    p.operators = Arc::new(src);
    let stages: Vec<Matrix> = pert
        .iter()
        .map(|e| l.add_scaled(1.0, e).scaled(h))
        .collect();
    for tb in tableaux() {
        let r1 = transfer_type1(&tb, &j.scaled(h), &stages).unwrap();
        let s1 = step_type1(&p, &tb, 0.0, &y, h).unwrap();
        assert!(rel_diff(&s1, &r1.matrix.mul_vec(&y), 1e-300) <= 1e-12);
        let r2 = transfer_type2(&tb, &j.scaled(h), &l.scaled(h), &stages).unwrap();
        let s2 = step_type2(&p, &tb, 0.0, &y, h).unwrap();
        assert!(rel_diff(&s2, &r2.matrix.mul_vec(&y), 1e-300) <= 1e-12);
        assert!(r1.reduction_gap().unwrap() <= 1e-12);
        assert!(r2.reduction_gap().unwrap() <= 1e-12);
    }
}

#[test]
fn single_exact_part_makes_type1_and_type2_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let j = random_matrix(&mut rng, 4, 2.0);
    let y: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let p = problem(
        Arc::new(Linear(j.clone())),
        AmfOperator::dense(j).unwrap(),
        y.clone(),
    );
    for tb in tableaux() {
        let a = step_type1(&p, &tb, 0.0, &y, 0.1).unwrap();
        let b = step_type2(&p, &tb, 0.0, &y, 0.1).unwrap();
        assert!(rel_diff(&a, &b, 1e-300) <= 1e-13);
    }
}

#[test]
fn type3_with_stage_perturbations_is_first_order_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let n = 3;
    let j = random_matrix(&mut rng, n, 1.0);
    let pert: Vec<Matrix> = (0..5).map(|_| random_matrix(&mut rng, n, 1.0)).collect();
    let src = PerStage {
        base: j.clone(),
        pert,
    };
    let y: Vec<f64> = vec![0.5, -0.2, 0.9];
    let p = problem(
        Arc::new(Nonlinear),
        AmfOperator::dense(j).unwrap(),
        y.clone(),
    );
    let tb = third_order_type1().with_method_type(MethodType::Type3);
    // Local error against a fine explicit reference; halving h should cut it
    // by at least 2² (one-step error O(h²)).
    let local_error = |h: f64| {
        let step = step_type3(&p, &tb, 0.0, &y, h, &src).unwrap();
        assert!(step.iter().all(|v| v.is_finite()));
        let fine = lirkw_core::integrators::rk4_reference(&Nonlinear, &y, 0.0, h, 256).unwrap();
        step.iter()
            .zip(&fine)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let e1 = local_error(0.02);
    let e2 = local_error(0.01);
    let observed = (e1 / e2).log2();
    assert!(observed > 1.8, "local order {observed}");
}

fn arb_state() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 4)
}

proptest! {
    #[test]
    fn steps_are_linear_on_linear_problems(u in arb_state(), v in arb_state(), alpha in -2.0f64..2.0, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let j = random_matrix(&mut rng, 4, 1.0);
        let parts: Vec<Arc<dyn LinearPart>> = (0..2)
            .map(|_| Arc::new(DensePart::new(random_matrix(&mut rng, 4, 1.0)).unwrap()) as Arc<dyn LinearPart>)
            .collect();
        let op = AmfOperator::new(parts).unwrap();
        let p = problem(Arc::new(Linear(j)), op, u.clone());
        let combo: Vec<f64> = u.iter().zip(&v).map(|(a, b)| alpha * a + b).collect();
        for tb in tableaux() {
            for stepper in [step_type1, step_type2] {
                let su = stepper(&p, &tb, 0.0, &u, 0.1).unwrap();
                let sv = stepper(&p, &tb, 0.0, &v, 0.1).unwrap();
                let sc = stepper(&p, &tb, 0.0, &combo, 0.1).unwrap();
                let sup: Vec<f64> = su.iter().zip(&sv).map(|(a, b)| alpha * a + b).collect();
                prop_assert!(rel_diff(&sc, &sup, 1e-12) <= 1e-13);
            }
        }
    }
}
