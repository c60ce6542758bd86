//! Run manifests: line-based `key=value` records written next to every CSV
//! output. Keys under `arg.` are the resolved command-line arguments, so a
//! manifest alone is enough to rerun the command.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

pub const FORMAT_LINE: &str = "lirkw-manifest v1";
const ARG_PREFIX: &str = "arg.";

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub subcommand: String,
    pub tool_version: String,
    /// Resolved arguments in flag order, without the `--`.
    pub args: Vec<(String, String)>,
    /// Informational entries that do not feed back into a rerun.
    pub info: Vec<(String, String)>,
    pub output: Option<PathBuf>,
}

impl Manifest {
    pub fn new(subcommand: &str) -> Self {
        Manifest {
            subcommand: subcommand.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            ..Manifest::default()
        }
    }

    pub fn arg(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.args.push((key.to_string(), value.to_string()));
        self
    }

    pub fn info(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.info.push((key.to_string(), value.to_string()));
        self
    }

    /// `<out>.manifest`.
    pub fn path_for(out: &Path) -> PathBuf {
        let mut s = out.as_os_str().to_owned();
        s.push(".manifest");
        PathBuf::from(s)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{FORMAT_LINE}");
        let _ = writeln!(s, "subcommand={}", self.subcommand);
        let _ = writeln!(s, "tool_version={}", self.tool_version);
        for (k, v) in &self.args {
            let _ = writeln!(s, "{ARG_PREFIX}{k}={v}");
        }
        for (k, v) in &self.info {
            let _ = writeln!(s, "info.{k}={v}");
        }
        if let Some(out) = &self.output {
            let _ = writeln!(s, "output.csv={}", out.display());
        }
        s
    }

    pub fn parse(text: &str, path: &Path) -> CliResult<Self> {
        let err = |line: usize, message: String| CliError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
        match lines.next() {
            Some((_, FORMAT_LINE)) => {}
            _ => return Err(err(1, format!("expected '{FORMAT_LINE}'"))),
        }
        let mut m = Manifest::default();
        for (n, line) in lines {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(n, "expected key=value".into()))?;
            match k {
                "subcommand" => m.subcommand = v.to_string(),
                "tool_version" => m.tool_version = v.to_string(),
                "output.csv" => m.output = Some(PathBuf::from(v)),
                _ => {
                    if let Some(arg) = k.strip_prefix(ARG_PREFIX) {
                        m.args.push((arg.to_string(), v.to_string()));
                    } else if let Some(key) = k.strip_prefix("info.") {
                        m.info.push((key.to_string(), v.to_string()));
                    } else {
                        return Err(err(n, format!("unknown key '{k}'")));
                    }
                }
            }
        }
        if m.subcommand.is_empty() {
            return Err(err(0, "missing subcommand".into()));
        }
        Ok(m)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Manifest::parse(&text, path)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        fs::write(path, self.render()).map_err(|e| CliError::io(path, e))
    }

    /// Command line equivalent to the recorded run, minus the program name.
    pub fn to_argv(&self) -> Vec<String> {
        let mut argv = vec![self.subcommand.clone()];
        for (k, v) in &self.args {
            argv.push(format!("--{k}={v}"));
        }
        argv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_parse_round_trip() {
        let mut m = Manifest::new("converge");
        m.arg("problem", "adr2d")
            .arg("n-list", "16,32")
            .info("reference", "rk4:16384");
        m.output = Some(PathBuf::from("/tmp/x.csv"));
        let back = Manifest::parse(&m.render(), Path::new("m")).unwrap();
        assert_eq!(back, m);
        assert_eq!(
            back.to_argv(),
            ["converge", "--problem=adr2d", "--n-list=16,32"]
        );
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(Manifest::parse("hello\n", Path::new("m")).is_err());
        assert!(Manifest::parse(&format!("{FORMAT_LINE}\nbogus\n"), Path::new("m")).is_err());
    }

    #[test]
    fn manifest_path_appends_suffix() {
        assert_eq!(
            Manifest::path_for(Path::new("out/a.csv")),
            PathBuf::from("out/a.csv.manifest")
        );
    }
}
