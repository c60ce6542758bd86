use std::sync::Arc;

use lirkw_core::dense::{axpy, max_abs_diff, norm_inf, Matrix};
use lirkw_core::linop::{subset_expansion, AmfOperator, DensePart, LinearPart};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{emit, Outcome};
use crate::args::AmfCheckArgs;
use crate::csv_out::{float, Table};
use crate::error::CliResult;
use crate::manifest::Manifest;

/// Worst relative deviation over the sample vectors.
fn worst(
    samples: &[Vec<f64>],
    mut f: impl FnMut(&[f64]) -> CliResult<(Vec<f64>, Vec<f64>)>,
) -> CliResult<f64> {
    let mut w = 0.0f64;
    for v in samples {
        let (got, want) = f(v)?;
        w = w.max(max_abs_diff(&got, &want) / norm_inf(&want).max(f64::MIN_POSITIVE));
    }
    Ok(w)
}

pub fn run(args: &AmfCheckArgs) -> CliResult<Outcome> {
    let n = args.dim as usize;
    let r = args.parts as usize;
    let sigma = args.sigma;
    let mut rng = ChaCha8Rng::seed_from_u64(args.common.seed);
    // entries in [-1, 1] shifted by -2I keep every factor I - σL_k invertible
    // for the default σ
    let mats: Vec<Matrix> = (0..r)
        .map(|_| {
            Matrix::from_fn(n, n, |i, j| {
                rng.gen_range(-1.0..1.0) - if i == j { 2.0 } else { 0.0 }
            })
        })
        .collect();
    let samples: Vec<Vec<f64>> = (0..args.samples)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let parts = mats
        .iter()
        .map(|m| DensePart::new(m.clone()).map(|p| Arc::new(p) as Arc<dyn LinearPart>))
        .collect::<Result<Vec<_>, _>>()?;
    let op = AmfOperator::new(parts)?;

    let mut checks: Vec<(&str, f64)> = Vec::new();
    checks.push((
        "tilde_vs_subset_expansion",
        worst(&samples, |v| {
            Ok((op.tilde_apply(sigma, v)?, subset_expansion(&mats, sigma, v)))
        })?,
    ));
    match r {
        1 => checks.push((
            "tilde_equals_single_part",
            worst(&samples, |v| {
                Ok((op.tilde_apply(sigma, v)?, mats[0].mul_vec(v)))
            })?,
        )),
        2 => checks.push((
            "tilde_vs_two_factor_expansion",
            worst(&samples, |v| {
                // (L1 + L2) v - σ L1 L2 v
                let mut want = mats[0].mul_vec(v);
                axpy(1.0, &mats[1].mul_vec(v), &mut want);
                axpy(-sigma, &mats[0].mul_vec(&mats[1].mul_vec(v)), &mut want);
                Ok((op.tilde_apply(sigma, v)?, want))
            })?,
        )),
        _ => {}
    }
    checks.push((
        "product_solve_round_trip",
        worst(&samples, |rhs| {
            let x = op.product_solve(sigma, rhs)?;
            let mut back = x.clone();
            axpy(-sigma, &op.tilde_apply(sigma, &x)?, &mut back);
            Ok((back, rhs.to_vec()))
        })?,
    ));

    let mut table = Table::new(vec!["check", "max_rel_error", "tolerance", "pass"]);
    let mut passed = true;
    for (name, value) in &checks {
        let ok = *value <= args.tolerance;
        passed &= ok;
        table.push(vec![
            name.to_string(),
            float(*value),
            float(args.tolerance),
            ok.to_string(),
        ]);
    }
    let summary = vec![
        format!(
            "{r} parts of size {n}, sigma {sigma}, {} samples",
            args.samples
        ),
        format!("result: {}", if passed { "PASS" } else { "FAIL" }),
    ];

    let mut m = Manifest::new("amf-check");
    m.arg("parts", r)
        .arg("dim", n)
        .arg("sigma", sigma)
        .arg("samples", args.samples)
        .arg("tolerance", args.tolerance);
    emit(&args.common, m, &table, &summary)?;
    Ok(Outcome::from_pass(passed))
}
