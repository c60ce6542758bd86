use lirkw_core::trees::{all_hold, max_residual, verify_order, verify_reduced, RESIDUAL_TOL};

use super::{emit, record_tableau, resolve_tableau, Outcome};
use crate::args::{ConditionSet, VerifyArgs};
use crate::csv_out::{float, Table};
use crate::error::{CliError, CliResult};
use crate::manifest::Manifest;

pub fn run(args: &VerifyArgs) -> CliResult<Outcome> {
    let tb = resolve_tableau(&args.tableau, args.method)?;
    let method = tb.method_type();
    let rows = match args.set {
        ConditionSet::Full => verify_order(&tb, method, args.order as usize)?,
        ConditionSet::Reduced => {
            if args.order != 3 {
                return Err(CliError::Usage(
                    "the reduced set is defined for order 3".into(),
                ));
            }
            verify_reduced(&tb, method)?
        }
    };

    let mut table = Table::new(vec!["label", "tree", "order", "target", "phi", "residual"]);
    for r in &rows {
        table.push(vec![
            r.label(),
            r.tree.to_string(),
            r.tree.order().to_string(),
            float(r.target),
            float(r.phi),
            float(r.residual),
        ]);
    }
    let passed = all_hold(&rows);
    let summary = vec![
        format!("{} conditions, {method}, order {}", rows.len(), args.order),
        format!(
            "max |residual| = {:.3e} (tolerance {RESIDUAL_TOL:e})",
            max_residual(&rows)
        ),
        format!("result: {}", if passed { "PASS" } else { "FAIL" }),
    ];

    let mut m = Manifest::new("verify");
    record_tableau(&mut m, &args.tableau, &tb);
    m.arg("order", args.order).arg(
        "set",
        match args.set {
            ConditionSet::Full => "full",
            ConditionSet::Reduced => "reduced",
        },
    );
    emit(&args.common, m, &table, &summary)?;
    Ok(Outcome::from_pass(passed))
}
