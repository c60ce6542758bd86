//! Plain-text tableau files.
//!
//! ```text
//! lirkw-tableau v1 type=1 s=5
//! <s rows of a>
//! <s rows of gamma>
//! <b>
//! <g>
//! ```
//!
//! Values are whitespace separated; blank lines and `#` comments are
//! skipped. Writing uses the shortest representation that parses back to
//! the same double.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use lirkw_core::dense::Matrix;
use lirkw_core::tableau::{MethodType, Tableau};

use crate::error::{CliError, CliResult};

const MAGIC: &str = "lirkw-tableau";
const VERSION: &str = "v1";

pub fn format_tableau(tb: &Tableau) -> String {
    let s = tb.stages();
    let mut out = format!(
        "{MAGIC} {VERSION} type={} s={s}\n",
        tb.method_type().number()
    );
    let mut row = |vals: &mut dyn Iterator<Item = f64>| {
        let cells: Vec<String> = vals.map(|v| format!("{v}")).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    };
    for i in 0..s {
        row(&mut (0..s).map(|j| tb.a(i, j)));
    }
    for i in 0..s {
        row(&mut (0..s).map(|j| tb.gamma(i, j)));
    }
    row(&mut tb.b().iter().copied());
    row(&mut tb.g().iter().copied());
    out
}

pub fn parse_tableau(text: &str, path: &Path) -> CliResult<Tableau> {
    let err = |line: usize, message: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines
        .next()
        .ok_or_else(|| err(1, "empty tableau file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != MAGIC || fields[1] != VERSION {
        return Err(err(
            hline,
            format!("expected '{MAGIC} {VERSION} type=<1|2|3> s=<stages>'"),
        ));
    }
    let method = fields[2]
        .strip_prefix("type=")
        .and_then(|t| t.parse::<u8>().ok())
        .and_then(MethodType::from_number)
        .ok_or_else(|| err(hline, format!("bad method type '{}'", fields[2])))?;
    let s: usize = fields[3]
        .strip_prefix("s=")
        .and_then(|t| t.parse().ok())
        .filter(|&s| s > 0)
        .ok_or_else(|| err(hline, format!("bad stage count '{}'", fields[3])))?;

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(2 * s + 2);
    for (n, line) in lines {
        if rows.len() == 2 * s + 2 {
            return Err(err(n, "trailing data after g row".into()));
        }
        let vals = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| err(n, format!("bad number '{tok}'")))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        if vals.len() != s {
            return Err(err(n, format!("expected {s} values, found {}", vals.len())));
        }
        rows.push(vals);
    }
    if rows.len() != 2 * s + 2 {
        return Err(err(
            0,
            format!("expected {} rows, found {}", 2 * s + 2, rows.len()),
        ));
    }
    let a = Matrix::from_fn(s, s, |i, j| rows[i][j]);
    let gamma = Matrix::from_fn(s, s, |i, j| rows[s + i][j]);
    let b = rows[2 * s].clone();
    let g = rows[2 * s + 1].clone();
    Tableau::new(a, gamma, b, g, method).map_err(|e| err(0, e.to_string()))
}

pub fn read_tableau(path: &Path) -> CliResult<Tableau> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_tableau(&text, path)
}
