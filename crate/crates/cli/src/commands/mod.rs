mod amf_check;
mod converge;
mod stability;
mod tableau;
mod trees;
mod verify;

use std::fs;
use std::io::Write;

use lirkw_core::tableau::{
    third_order_type1, third_order_type2, third_order_type2_with_gamma43, MethodType, Tableau,
};

use crate::args::{Command, Common, Format, NamedTableau, ReplayArgs, TableauArgs};
use crate::csv_out::Table;
use crate::error::{CliError, CliResult};
use crate::manifest::Manifest;

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Passed,
    CheckFailed,
}

impl Outcome {
    pub fn from_pass(passed: bool) -> Self {
        if passed {
            Outcome::Passed
        } else {
            Outcome::CheckFailed
        }
    }

    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Passed => 0,
            Outcome::CheckFailed => crate::error::EXIT_CHECK_FAILED,
        }
    }
}

pub fn run(command: Command) -> CliResult<Outcome> {
    match command {
        Command::Verify(a) => verify::run(&a),
        Command::Trees(a) => trees::run(&a),
        Command::Converge(a) => converge::run(&a),
        Command::Stability(a) => stability::run(&a),
        Command::AmfCheck(a) => amf_check::run(&a),
        Command::Tableau(a) => tableau::run(&a),
        Command::Replay(a) => replay(&a),
    }
}

fn replay(args: &ReplayArgs) -> CliResult<Outcome> {
    use clap::Parser;

    let manifest = Manifest::read(&args.manifest)?;
    if manifest.subcommand == "replay" {
        return Err(CliError::Usage("a manifest cannot record a replay".into()));
    }
    if manifest.tool_version != env!("CARGO_PKG_VERSION") {
        eprintln!(
            "note: manifest written by version {}, replaying with {}",
            manifest.tool_version,
            env!("CARGO_PKG_VERSION")
        );
    }
    let mut argv = vec!["lirkw".to_string()];
    argv.extend(manifest.to_argv());
    argv.push(format!("--out={}", args.out.display()));
    if let Some(f) = args.format {
        let name = match f {
            Format::Csv => "csv",
            Format::Pretty => "pretty",
        };
        argv.push(format!("--format={name}"));
    }
    let cli = crate::args::Cli::try_parse_from(&argv)
        .map_err(|e| CliError::Usage(format!("manifest {}: {e}", args.manifest.display())))?;
    run(cli.command)
}

/// The selected tableau with its method type applied.
pub(crate) fn resolve_tableau(args: &TableauArgs, method: Option<u8>) -> CliResult<Tableau> {
    let mut tb = match &args.file {
        Some(path) => crate::tableau_io::read_tableau(path)?,
        None => match args.tableau {
            NamedTableau::Table1 => third_order_type1(),
            NamedTableau::Table1Broken => third_order_type1().scale_b(1.1),
            NamedTableau::Table2 => match args.gamma43 {
                Some(g43) => {
                    third_order_type2_with_gamma43(args.gamma, args.gamma54, args.a43, g43)?
                }
                None => third_order_type2(args.gamma, args.gamma54, args.a43)?,
            },
        },
    };
    if let Some(shift) = args.perturb_gamma {
        let s = tb.stages();
        if shift.row > s || shift.col > s {
            return Err(CliError::Usage(format!(
                "gamma entry {},{} outside {s} stages",
                shift.row, shift.col
            )));
        }
        tb = tb.perturb_gamma(shift.row - 1, shift.col - 1, shift.delta)?;
    }
    if let Some(m) = method {
        let m = MethodType::from_number(m)
            .ok_or_else(|| CliError::Usage(format!("bad method type {m}")))?;
        tb = tb.with_method_type(m);
    }
    Ok(tb)
}

/// Records the tableau selection as rerunnable arguments.
pub(crate) fn record_tableau(m: &mut Manifest, args: &TableauArgs, tb: &Tableau) {
    match &args.file {
        Some(path) => {
            m.arg("file", path.display());
        }
        None => {
            let name = match args.tableau {
                NamedTableau::Table1 => "table1",
                NamedTableau::Table1Broken => "table1-broken",
                NamedTableau::Table2 => "table2",
            };
            m.arg("tableau", name);
            if args.tableau == NamedTableau::Table2 {
                m.arg("gamma", args.gamma)
                    .arg("gamma54", args.gamma54)
                    .arg("a43", args.a43);
                if let Some(g43) = args.gamma43 {
                    m.arg("gamma43", g43);
                }
            }
        }
    }
    if let Some(shift) = args.perturb_gamma {
        m.arg("perturb-gamma", shift);
    }
    m.arg("type", tb.method_type().number());
}

/// Prints the table in the requested format and, with `--out`, writes the
/// CSV and its manifest. `summary` lines go to stdout in pretty mode and to
/// stderr in CSV mode so the CSV stream stays clean.
pub(crate) fn emit(
    common: &Common,
    mut manifest: Manifest,
    table: &Table,
    summary: &[String],
) -> CliResult<()> {
    manifest.arg("seed", common.seed);
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let io_err = |e| CliError::io("<stdout>", e);
    match common.format {
        Format::Pretty => {
            out.write_all(table.render_pretty().as_bytes())
                .map_err(io_err)?;
            for line in summary {
                writeln!(out, "{line}").map_err(io_err)?;
            }
        }
        Format::Csv => {
            table.write_csv(&mut out)?;
            for line in summary {
                eprintln!("{line}");
            }
        }
    }
    if let Some(path) = &common.out {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
        table.write_csv(std::io::BufWriter::new(file))?;
        manifest.output = Some(path.clone());
        manifest.write(&Manifest::path_for(path))?;
    }
    Ok(())
}
