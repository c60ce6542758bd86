use lirkw_core::convergence::{
    assemble, final_error, fit_order, reference_solution, DEFAULT_STEPS,
};
use lirkw_core::problems::ProblemSpec;
use rayon::prelude::*;

use super::{emit, record_tableau, resolve_tableau, Outcome};
use crate::args::ConvergeArgs;
use crate::csv_out::{float, opt_float, Table};
use crate::error::{CliError, CliResult};
use crate::manifest::Manifest;

pub fn run(args: &ConvergeArgs) -> CliResult<Outcome> {
    let tb = resolve_tableau(&args.tableau, args.method)?;
    let mut spec = ProblemSpec::new(&args.problem, args.l_config, args.common.seed)?;
    if let Some(n) = args.size {
        spec = spec.with_size(n);
    }
    let problem = spec.build()?;
    let n_list = args
        .n_list
        .clone()
        .unwrap_or_else(|| DEFAULT_STEPS.to_vec());
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(CliError::Usage(
            "--n-list needs positive step counts".into(),
        ));
    }
    if args.tail < 2 || args.tail > n_list.len() {
        return Err(CliError::Usage(format!(
            "--tail must lie in 2..={}",
            n_list.len()
        )));
    }

    let reference = reference_solution(&problem, args.reference_steps)?;
    // each point is an independent sequential run, so results do not
    // depend on scheduling; `assemble` restores n order
    let errors = n_list
        .par_iter()
        .map(|&n| final_error(&problem, &tb, n, &reference, None).map(|e| (n, e)))
        .collect::<Result<Vec<_>, _>>()?;
    let points = assemble(&problem, errors);
    let order = fit_order(&points, args.tail)?;
    let passed = (order - args.expect_order).abs() <= args.band;

    let mut table = Table::new(vec!["n_steps", "h", "error", "local_slope"]);
    for p in &points {
        table.push(vec![
            p.n_steps.to_string(),
            float(p.h),
            float(p.error),
            opt_float(p.local_slope),
        ]);
    }
    let reference_kind = if problem.exact.is_some() {
        "exact".to_string()
    } else {
        format!("rk4:{}", args.reference_steps)
    };
    let summary = vec![
        format!(
            "{} / {} / {} on {}, error = max-norm at t = {} vs {reference_kind} reference",
            problem.name,
            tb.method_type(),
            args.l_config,
            problem.dim(),
            problem.tf
        ),
        format!("fitted order {order:.4} over the {} smallest h", args.tail),
        format!(
            "result: {} (band {} ± {})",
            if passed { "PASS" } else { "FAIL" },
            args.expect_order,
            args.band
        ),
    ];

    let mut m = Manifest::new("converge");
    m.arg("problem", &args.problem);
    record_tableau(&mut m, &args.tableau, &tb);
    m.arg("l-config", args.l_config)
        .arg(
            "n-list",
            n_list
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
        )
        .arg("tail", args.tail)
        .arg("reference-steps", args.reference_steps);
    if let Some(n) = args.size {
        m.arg("size", n);
    }
    m.arg("expect-order", args.expect_order)
        .arg("band", args.band);
    m.info("reference", &reference_kind)
        .info("error_norm", "max")
        .info("t_final", problem.tf)
        .info("fitted_order", float(order));
    emit(&args.common, m, &table, &summary)?;
    Ok(Outcome::from_pass(passed))
}
