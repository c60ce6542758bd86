use lirkw_core::trees::{density, enumerate, target, tree_index};

use super::{emit, Outcome};
use crate::args::TreesArgs;
use crate::csv_out::{float, Table};
use crate::error::CliResult;
use crate::manifest::Manifest;

pub fn run(args: &TreesArgs) -> CliResult<Outcome> {
    let trees = enumerate(args.family, args.order as usize)?;
    let mut table = Table::new(vec!["label", "tree", "order", "density", "target"]);
    for t in &trees {
        // trees carrying an L factor have target 0 and no density
        let dens = if t.is_meagre_only() { density(t)? } else { 0 };
        table.push(vec![
            tree_index(t)
                .map(|k| format!("τ{k}"))
                .unwrap_or_else(|| "-".into()),
            t.to_string(),
            t.order().to_string(),
            dens.to_string(),
            float(target(t)),
        ]);
    }
    let summary = vec![format!("count {}", trees.len())];
    let mut m = Manifest::new("trees");
    m.arg("family", args.family).arg("order", args.order);
    emit(&args.common, m, &table, &summary)?;
    Ok(Outcome::Passed)
}
