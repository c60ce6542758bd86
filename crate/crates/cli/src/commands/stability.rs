use lirkw_core::stability::{negative_decades, stability_scan};

use super::{emit, record_tableau, resolve_tableau, Outcome};
use crate::args::StabilityArgs;
use crate::csv_out::{float, Table};
use crate::error::{CliError, CliResult};
use crate::manifest::Manifest;

pub fn run(args: &StabilityArgs) -> CliResult<Outcome> {
    let tb = resolve_tableau(&args.tableau, args.method)?;
    let grid = match &args.grid {
        Some(g) => g.clone(),
        None => {
            if args.decade_min > args.decade_max {
                return Err(CliError::Usage("--decade-min exceeds --decade-max".into()));
            }
            negative_decades(args.decade_min, args.decade_max, true)
        }
    };
    if grid.iter().any(|z| !z.is_finite()) {
        return Err(CliError::Usage("grid values must be finite".into()));
    }
    let rows = stability_scan(&tb, tb.method_type(), &grid, args.config)?;

    let mut table = Table::new(vec!["h_lambda", "abs_R"]);
    for r in &rows {
        table.push(vec![float(r.h_lambda), float(r.abs_r)]);
    }
    let summary = vec![format!(
        "{} points, {}, config {}",
        rows.len(),
        tb.method_type(),
        args.config
    )];

    let mut m = Manifest::new("stability");
    record_tableau(&mut m, &args.tableau, &tb);
    m.arg("config", args.config).arg(
        "grid",
        grid.iter()
            .map(|z| format!("{z:e}"))
            .collect::<Vec<_>>()
            .join(","),
    );
    emit(&args.common, m, &table, &summary)?;
    Ok(Outcome::Passed)
}
