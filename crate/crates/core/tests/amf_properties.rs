use std::sync::Arc;

use lirkw_core::dense::{axpy, rel_diff, Matrix};
use lirkw_core::linop::{subset_expansion, AmfOperator, DensePart, LinearPart};
use proptest::prelude::*;

fn matrices(r: usize, n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, n * n), r)
}

fn build(raw: &[Vec<f64>], n: usize, diag: f64) -> (Vec<Matrix>, AmfOperator) {
    let ms: Vec<Matrix> = raw
        .iter()
        .map(|v| {
            let mut m = Matrix::from_fn(n, n, |i, j| v[i * n + j]);
            for i in 0..n {
                m[(i, i)] += diag;
            }
            m
        })
        .collect();
    let op = AmfOperator::new(
        ms.iter()
            .map(|m| Arc::new(DensePart::new(m.clone()).unwrap()) as Arc<dyn LinearPart>)
            .collect(),
    )
    .unwrap();
    (ms, op)
}

proptest! {
    #[test]
    fn tilde_matches_subset_expansion(raw in matrices(3, 4), v in prop::collection::vec(-1.0f64..1.0, 4), sigma in -2.0f64..2.0) {
        let (ms, op) = build(&raw, 4, 0.0);
        let got = op.tilde_apply(sigma, &v).unwrap();
        let want = subset_expansion(&ms, sigma, &v);
        let scale = lirkw_core::dense::norm_inf(&want).max(1.0);
        prop_assert!(lirkw_core::dense::max_abs_diff(&got, &want) <= 1e-12 * scale);
    }

    #[test]
    fn tilde_is_linear(raw in matrices(2, 4), u in prop::collection::vec(-1.0f64..1.0, 4), v in prop::collection::vec(-1.0f64..1.0, 4), a in -3.0f64..3.0, sigma in -1.0f64..1.0) {
        let (_, op) = build(&raw, 4, 0.0);
        let combo: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + y).collect();
        let lhs = op.tilde_apply(sigma, &combo).unwrap();
        let mut rhs = op.tilde_apply(sigma, &v).unwrap();
        axpy(a, &op.tilde_apply(sigma, &u).unwrap(), &mut rhs);
        prop_assert!(rel_diff(&lhs, &rhs, 1.0) <= 1e-13);
    }

    #[test]
    fn tilde_reproduces_factored_product(raw in matrices(3, 4), v in prop::collection::vec(-1.0f64..1.0, 4), sigma in 0.01f64..1.0) {
        let (ms, op) = build(&raw, 4, 0.0);
        // (I - σL1)(I - σL2)(I - σL3) v, innermost factor first
        let mut prod = v.clone();
        for m in ms.iter().rev() {
            let mut next = prod.clone();
            axpy(-sigma, &m.mul_vec(&prod), &mut next);
            prod = next;
        }
        let mut got = v.clone();
        axpy(-sigma, &op.tilde_apply(sigma, &v).unwrap(), &mut got);
        let scale = lirkw_core::dense::norm_inf(&prod).max(1.0);
        prop_assert!(lirkw_core::dense::max_abs_diff(&got, &prod) <= 1e-14 * scale);
    }

    #[test]
    fn product_solve_inverts_factored_shift(raw in matrices(2, 5), rhs in prop::collection::vec(-1.0f64..1.0, 5), sigma in 0.01f64..0.5) {
        // diagonal shift keeps each factor well conditioned
        let (_, op) = build(&raw, 5, -6.0);
        let x = op.product_solve(sigma, &rhs).unwrap();
        let mut back = x.clone();
        axpy(-sigma, &op.tilde_apply(sigma, &x).unwrap(), &mut back);
        prop_assert!(rel_diff(&back, &rhs, 1e-300) <= 1e-12);
    }

    #[test]
    fn parts_are_linear(raw in matrices(1, 4), u in prop::collection::vec(-1.0f64..1.0, 4), v in prop::collection::vec(-1.0f64..1.0, 4), a in -3.0f64..3.0) {
        let (_, op) = build(&raw, 4, 0.0);
        let part = &op.parts()[0];
        let combo: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + y).collect();
        let mut want = part.apply(&v);
        axpy(a, &part.apply(&u), &mut want);
        prop_assert!(rel_diff(&part.apply(&combo), &want, 1.0) <= 1e-14);
    }
}

#[test]
fn single_part_composite_is_the_part() {
    let m = Matrix::from_rows(&[[-2.0, 0.5], [1.0, -3.0]]);
    let part = DensePart::new(m.clone()).unwrap();
    let op = AmfOperator::dense(m).unwrap();
    let v = [0.3, -0.7];
    assert_eq!(op.sum_apply(&v).unwrap(), part.apply(&v));
    let mut x = v.to_vec();
    part.shifted_solve_in_place(0.4, &mut x).unwrap();
    assert_eq!(op.product_solve(0.4, &v).unwrap(), x);
    assert_eq!(op.tilde_apply(0.0, &v).unwrap(), op.sum_apply(&v).unwrap());
}

#[test]
fn dimension_mismatch_is_an_error() {
    let op = AmfOperator::zero(3);
    assert!(matches!(
        op.sum_apply(&[1.0, 2.0]),
        Err(lirkw_core::Error::DimensionMismatch {
            expected: 3,
            found: 2
        })
    ));
}
