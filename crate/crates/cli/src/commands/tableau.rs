use std::fs;

use super::{record_tableau, resolve_tableau, Outcome};
use crate::args::TableauCmdArgs;
use crate::error::{CliError, CliResult};
use crate::manifest::Manifest;
use crate::tableau_io::format_tableau;

pub fn run(args: &TableauCmdArgs) -> CliResult<Outcome> {
    let tb = resolve_tableau(&args.tableau, args.method)?;
    let text = format_tableau(&tb);
    match &args.out {
        Some(path) => {
            fs::write(path, &text).map_err(|e| CliError::io(path, e))?;
            let mut m = Manifest::new("tableau");
            record_tableau(&mut m, &args.tableau, &tb);
            m.output = Some(path.clone());
            m.write(&Manifest::path_for(path))?;
        }
        None => print!("{text}"),
    }
    Ok(Outcome::Passed)
}
