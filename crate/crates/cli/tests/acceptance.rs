//! Acceptance criteria 1-8. One test per criterion; the harness prints one
//! ok/FAILED line for each. Run with `--nocapture` to see the measured
//! values. Criteria 7b and 7c are unattainable with the published
//! coefficients and are `#[ignore]`d; `--include-ignored` runs the faithful
//! checks, which fail with the values recorded in the README.

use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use lirkw_core::convergence::{
    fit_order, reference_solution, sweep, DEFAULT_REFERENCE_STEPS, DEFAULT_STEPS, DEFAULT_TAIL,
};
use lirkw_core::dense::{max_abs_diff, norm_inf, rel_diff, Matrix};
use lirkw_core::integrators::{step_type1, step_type2, FixedOperator, IvProblem, RightHandSide};
use lirkw_core::linop::{subset_expansion, AmfOperator, DensePart, LinearPart};
use lirkw_core::problems::{LConfig, ProblemSpec};
use lirkw_core::stability::{scalar_r, transfer_type1, transfer_type2, ScalarConfig};
use lirkw_core::tableau::{third_order_type1, third_order_type2, MethodType, Tableau};
use lirkw_core::trees::{
    enumerate, indexed_tree, max_residual, verify_order, verify_reduced, Family,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SEED: u64 = 42;

fn line(id: &str, pass: bool, detail: impl AsRef<str>) {
    println!(
        "criterion {id}: {} | {}",
        if pass { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
}

fn type2_sample() -> Tableau {
    third_order_type2(0.25, -0.5, 0.3).unwrap()
}

#[test]
fn criterion_1_order_conditions() {
    let start = Instant::now();
    let t1 = third_order_type1();
    let full1 = verify_order(&t1, MethodType::Type1, 3).unwrap();
    let red1 = verify_reduced(&t1, MethodType::Type1).unwrap();
    let t2 = type2_sample();
    let full2 = verify_order(&t2, MethodType::Type2, 3).unwrap();
    let elapsed = start.elapsed();

    let r1 = max_residual(&full1);
    let rr = max_residual(&red1);
    let r2 = max_residual(&full2);
    let pass = full1.len() == 23
        && red1.len() == 9
        && full2.len() == 19
        && r1 < 1e-12
        && rr < 1e-12
        && r2 < 1e-12
        && elapsed < Duration::from_secs(1);
    line(
        "1",
        pass,
        format!(
            "table1 {} conds max {r1:.2e}, reduced {} max {rr:.2e}; table2 {} conds max {r2:.2e}; {elapsed:?}",
            full1.len(),
            red1.len(),
            full2.len()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_2_tree_enumeration() {
    let start = Instant::now();
    let lw1 = enumerate(Family::LW1, 3).unwrap();
    let lw2 = enumerate(Family::LW2, 3).unwrap();
    let t = enumerate(Family::T, 3).unwrap();
    // the indexed listing covers exactly the LW1 enumeration
    let mut indexed: Vec<_> = (1..=23).map(|k| indexed_tree(k).unwrap()).collect();
    indexed.sort();
    let mut sorted = lw1.clone();
    sorted.sort();
    let elapsed = start.elapsed();
    let pass = lw1.len() == 23
        && lw2.len() == 19
        && t.len() == 4
        && indexed == sorted
        && lw2.iter().all(|tree| lw1.contains(tree))
        && elapsed < Duration::from_secs(1);
    line(
        "2",
        pass,
        format!(
            "LW1 {}, LW2 {}, T {}; index table matches: {}; {elapsed:?}",
            lw1.len(),
            lw2.len(),
            t.len(),
            indexed == sorted
        ),
    );
    assert!(pass);
}

struct Run {
    problem: &'static str,
    config: LConfig,
    method: MethodType,
    order: f64,
}

fn convergence_runs(runs: &[(&'static str, LConfig, Tableau)]) -> Vec<Run> {
    let mut references: Vec<(&str, Vec<f64>)> = Vec::new();
    for (name, _, _) in runs {
        if references.iter().all(|(n, _)| n != name) {
            // the right-hand side does not depend on the operator choice
            let p = ProblemSpec::new(name, LConfig::ExactL, SEED)
                .unwrap()
                .build()
                .unwrap();
            references.push((
                name,
                reference_solution(&p, DEFAULT_REFERENCE_STEPS).unwrap(),
            ));
        }
    }
    runs.par_iter()
        .map(|(name, config, tb)| {
            let p = ProblemSpec::new(name, *config, SEED)
                .unwrap()
                .build()
                .unwrap();
            let reference = &references.iter().find(|(n, _)| n == name).unwrap().1;
            let pts = sweep(&p, tb, &DEFAULT_STEPS, reference, None).unwrap();
            Run {
                problem: name,
                config: *config,
                method: tb.method_type(),
                order: fit_order(&pts, DEFAULT_TAIL).unwrap(),
            }
        })
        .collect()
}

#[test]
fn criterion_3_third_order_convergence() {
    let start = Instant::now();
    let mut runs = Vec::new();
    for tb in [third_order_type1(), type2_sample()] {
        for (problem, configs) in [
            (
                "adr2d",
                &[LConfig::ExactL, LConfig::Amf2Part, LConfig::ArbitraryL][..],
            ),
            ("brusselator", &[LConfig::ExactL, LConfig::ArbitraryL][..]),
            ("vdpol-mild", &[LConfig::ExactL, LConfig::ArbitraryL][..]),
        ] {
            for &c in configs {
                runs.push((problem, c, tb.clone()));
            }
        }
    }
    let results = convergence_runs(&runs);
    let elapsed = start.elapsed();
    let mut pass = elapsed < Duration::from_secs(300);
    for r in &results {
        let ok = (r.order - 3.0).abs() <= 0.25;
        pass &= ok;
        println!(
            "  {:<12} {:<12} {}: order {:.3} {}",
            r.problem,
            r.config.to_string(),
            r.method,
            r.order,
            if ok { "ok" } else { "MISS" }
        );
    }
    line(
        "3",
        pass,
        format!("{} sweeps, band 3.0 ± 0.25; {elapsed:?}", results.len()),
    );
    assert!(pass);
}

#[test]
fn criterion_4_negative_control() {
    let start = Instant::now();
    // gamma entry (5, 2), one-based
    let broken = third_order_type1().perturb_gamma(4, 1, 0.1).unwrap();
    let runs: Vec<_> = ["adr2d", "brusselator", "vdpol-mild"]
        .into_iter()
        .map(|p| (p, LConfig::ArbitraryL, broken.clone()))
        .collect();
    let results = convergence_runs(&runs);
    let elapsed = start.elapsed();
    let mut pass = elapsed < Duration::from_secs(60);
    for r in &results {
        pass &= r.order < 2.5;
        println!("  {:<12} arbitrary-L: order {:.3}", r.problem, r.order);
    }
    line(
        "4",
        pass,
        format!("perturbed gamma(5,2) by 0.1, all fitted orders < 2.5; {elapsed:?}"),
    );
    assert!(pass);
}

struct Smooth;

impl RightHandSide for Smooth {
    fn dim(&self) -> usize {
        4
    }
    fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        out[0] = y[1] * y[2] - y[0];
        out[1] = (y[0] - y[3]).cos();
        out[2] = -y[2] * y[2] + 0.5 * y[1];
        out[3] = y[0] * y[1] * y[2];
    }
}

/// Explicit Runge-Kutta step written directly from `(a, b)`.
fn explicit_step(a: &Matrix, b: &[f64], y: &[f64], h: f64) -> Vec<f64> {
    let s = b.len();
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(s);
    for i in 0..s {
        let mut yi = y.to_vec();
        for (j, kj) in k.iter().enumerate() {
            for (v, kv) in yi.iter_mut().zip(kj) {
                *v += h * a[(i, j)] * kv;
            }
        }
        k.push(Smooth.eval(&yi));
    }
    let mut out = y.to_vec();
    for (bj, kj) in b.iter().zip(&k) {
        for (v, kv) in out.iter_mut().zip(kj) {
            *v += h * bj * kv;
        }
    }
    out
}

#[test]
fn criterion_5_explicit_reduction() {
    let p = IvProblem {
        name: "smooth".into(),
        rhs: Arc::new(Smooth),
        operators: Arc::new(FixedOperator(AmfOperator::zero(4))),
        y0: vec![0.0; 4],
        t0: 0.0,
        tf: 1.0,
        exact: None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for tb in [third_order_type1(), type2_sample()] {
        for _ in 0..100 {
            let y: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let h = rng.gen_range(0.01..0.5);
            let want = explicit_step(tb.a_matrix(), tb.b(), &y, h);
            for got in [
                step_type1(&p, &tb, 0.0, &y, h).unwrap(),
                step_type2(&p, &tb, 0.0, &y, h).unwrap(),
            ] {
                worst = worst.max(max_abs_diff(&got, &want) / norm_inf(&want));
            }
        }
    }
    let pass = worst <= 1e-14;
    line(
        "5",
        pass,
        format!("max relative deviation {worst:.2e} over 2 tableaux x 2 steppers x 100 states"),
    );
    assert!(pass);
}

#[test]
fn criterion_6_amf_algebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut tilde = 0.0f64;
    let mut round_trip = 0.0f64;
    for r in [2usize, 3] {
        for _ in 0..50 {
            let mats: Vec<Matrix> = (0..r)
                .map(|_| {
                    Matrix::from_fn(4, 4, |i, j| {
                        rng.gen_range(-1.0..1.0) - if i == j { 2.0 } else { 0.0 }
                    })
                })
                .collect();
            let op = AmfOperator::new(
                mats.iter()
                    .map(|m| Arc::new(DensePart::new(m.clone()).unwrap()) as Arc<dyn LinearPart>)
                    .collect(),
            )
            .unwrap();
            let sigma = rng.gen_range(0.05..0.5);
            let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let want = subset_expansion(&mats, sigma, &v);
            tilde = tilde.max(rel_diff(&op.tilde_apply(sigma, &v).unwrap(), &want, 1e-300));
            let x = op.product_solve(sigma, &v).unwrap();
            let mut back = x.clone();
            lirkw_core::dense::axpy(-sigma, &op.tilde_apply(sigma, &x).unwrap(), &mut back);
            round_trip = round_trip.max(rel_diff(&back, &v, 1e-300));
        }
    }
    let pass = tilde <= 1e-12 && round_trip <= 1e-12;
    line(
        "6",
        pass,
        format!(
            "subset expansion {tilde:.2e}, product_solve round trip {round_trip:.2e} (R in 2, 3)"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7a_transfer_matrices_match_steppers() {
    struct Lin(Matrix);
    impl RightHandSide for Lin {
        fn dim(&self) -> usize {
            self.0.rows()
        }
        fn eval_into(&self, y: &[f64], out: &mut [f64]) {
            self.0.mul_vec_into(y, out);
        }
    }
    // Both sides solve the same stage systems, so their gap scales with
    // the conditioning of I - γ_ii hL. The sample class keeps those
    // factors well conditioned; the worst inverse norm is reported.
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    let mut worst_inverse = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(1..=6);
        let h = rng.gen_range(0.01..0.5);
        let j = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let l = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = IvProblem {
            name: "linear".into(),
            rhs: Arc::new(Lin(j.clone())),
            operators: Arc::new(FixedOperator(AmfOperator::dense(l.clone()).unwrap())),
            y0: y.clone(),
            t0: 0.0,
            tf: 1.0,
            exact: None,
        };
        let hj = j.scaled(h);
        let hl = l.scaled(h);
        let stages = vec![hl.clone(); 5];
        for tb in [third_order_type1(), type2_sample()] {
            for i in 0..tb.stages() {
                let factor = Matrix::identity(n).add_scaled(-tb.gamma(i, i), &hl);
                let inverse = factor.lu().unwrap().solve_matrix(&Matrix::identity(n));
                worst_inverse = worst_inverse.max(inverse.norm_max());
            }
            let r1 = transfer_type1(&tb, &hj, &stages)
                .unwrap()
                .matrix
                .mul_vec(&y);
            worst = worst.max(rel_diff(
                &step_type1(&p, &tb, 0.0, &y, h).unwrap(),
                &r1,
                1e-300,
            ));
            let r2 = transfer_type2(&tb, &hj, &hl, &stages)
                .unwrap()
                .matrix
                .mul_vec(&y);
            worst = worst.max(rel_diff(
                &step_type2(&p, &tb, 0.0, &y, h).unwrap(),
                &r2,
                1e-300,
            ));
        }
    }
    let pass = worst <= 1e-12;
    line(
        "7a",
        pass,
        format!(
            "transfer vs stepper max relative deviation {worst:.2e} over 200 problems (max |(I - γhL)^-1| {worst_inverse:.1})"
        ),
    );
    assert!(pass);
}

#[test]
#[ignore = "unattainable: the published type-1 tableau has |R(-1e8)| = 0.0976 with exact L"]
fn criterion_7b_stiff_decay_type1_method() {
    let r = scalar_r(
        &third_order_type1(),
        MethodType::Type1,
        -1e8,
        ScalarConfig::ExactL,
    )
    .unwrap();
    let pass = r.abs() < 1e-3;
    line(
        "7b",
        pass,
        format!("table1 exact L: |R(-1e8)| = {:.6}", r.abs()),
    );
    assert!(pass);
}

#[test]
#[ignore = "unattainable: with stage operators c(hλ)² the type-2 map grows like |hλ|"]
fn criterion_7c_fast_stage_operators() {
    let r = scalar_r(
        &type2_sample(),
        MethodType::Type2,
        -1e6,
        ScalarConfig::FastStage { c: 1.0 },
    )
    .unwrap();
    let pass = (r.abs() - 1.0).abs() < 1e-3;
    line(
        "7c",
        pass,
        format!("table2 fast stage L: |R(-1e6)| = {:.6e}", r.abs()),
    );
    assert!(pass);
}

fn lirkw(args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_lirkw"))
        .args(args)
        .args(["--format", "csv"])
        .output()
        .expect("binary runs");
    out.status.code().unwrap_or(-1)
}

fn replay(manifest: &Path, out: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_lirkw"))
        .arg("replay")
        .arg(manifest)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
        .status
        .code()
        .unwrap_or(-1)
}

#[test]
fn criterion_8_manifest_replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [(&str, &[&str]); 6] = [
        (
            "verify",
            &[
                "verify",
                "--tableau",
                "table2",
                "--gamma",
                "0.3",
                "--gamma54",
                "-0.25",
            ],
        ),
        ("trees", &["trees", "--family", "LW2", "--order", "4"]),
        (
            "converge",
            &[
                "converge",
                "--problem",
                "brusselator",
                "--tableau",
                "table2",
                "--n-list",
                "16,32,64,128",
                "--reference-steps",
                "4096",
                "--seed",
                "7",
            ],
        ),
        (
            "converge-adr2d",
            &[
                "converge",
                "--problem",
                "adr2d",
                "--size",
                "12",
                "--l-config",
                "per-stage-perturbed:0.01",
                "--n-list",
                "8,16,32",
                "--tail",
                "2",
                "--reference-steps",
                "2048",
                "--expect-order",
                "0",
                "--band",
                "10",
            ],
        ),
        (
            "stability",
            &[
                "stability",
                "--config",
                "scaled-L:0.5",
                "--decade-min",
                "-2",
                "--decade-max",
                "3",
            ],
        ),
        ("amf-check", &["amf-check", "--parts", "3", "--seed", "99"]),
    ];
    let mut pass = true;
    for (name, args) in runs {
        let first = dir.path().join(format!("{name}.csv"));
        let mut argv: Vec<&str> = args.to_vec();
        let first_s = first.to_str().unwrap().to_string();
        argv.extend(["--out", &first_s]);
        let code = lirkw(&argv);
        let manifest = lirkw::manifest::Manifest::path_for(&first);
        let second = dir.path().join(format!("{name}.replay.csv"));
        let third = dir.path().join(format!("{name}.replay2.csv"));
        let codes = (
            code,
            replay(&manifest, &second),
            replay(&lirkw::manifest::Manifest::path_for(&second), &third),
        );
        let a = std::fs::read(&first).unwrap();
        let same = a == std::fs::read(&second).unwrap() && a == std::fs::read(&third).unwrap();
        let ok = same && codes.0 == 0 && codes.1 == 0 && codes.2 == 0;
        println!(
            "  {name:<15} exit codes {codes:?}, {} bytes, identical: {same}",
            a.len()
        );
        pass &= ok;
    }
    line(
        "8",
        pass,
        "six manifests replayed twice with byte-identical CSV",
    );
    assert!(pass);
}
