//! Serialized writers. Every file is produced in one `write` call from a
//! string built in a fixed order, so reruns are byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::error::{CliError, CliResult};

/// Wrapper carried by every JSON document.
#[derive(Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub schema_version: u32,
    pub command: &'a str,
    pub master_seed: u64,
    pub config: &'a ExperimentConfig,
    pub warnings: &'a [String],
    #[serde(flatten)]
    pub body: T,
}

impl<'a, T: Serialize> Envelope<'a, T> {
    pub fn new(command: &'a str, config: &'a ExperimentConfig, warnings: &'a [String], body: T) -> Self {
        Envelope {
            schema_version: SCHEMA_VERSION,
            command,
            master_seed: config.experiment.master_seed,
            config,
            warnings,
            body,
        }
    }
}

/// Shortest round-trip text of `v`, switching to exponent notation far from 1.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if v != 0.0 && v.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Collects files for one command and records what was written.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutputDir { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> CliResult<PathBuf> {
        let path = self.path(name);
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<PathBuf> {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(format!("serializing {name}: {e}")))?;
        text.push('\n');
        self.write_text(name, &text)
    }

    /// Comma-separated, header row, LF endings.
    pub fn write_csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> CliResult<PathBuf> {
        let mut text = header.join(",");
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write_text(name, &text)
    }

    pub fn into_written(self) -> Vec<PathBuf> {
        self.written
    }
}

/// Commented TOML rendition of the config, for `#`-prefixed headers.
pub fn config_comment(config: &ExperimentConfig) -> String {
    let body = toml::to_string(config).unwrap_or_default();
    let mut out = String::new();
    let _ = writeln!(out, "# schema_version = {SCHEMA_VERSION}");
    for line in body.lines() {
        if line.is_empty() {
            out.push_str("#\n");
        } else {
            let _ = writeln!(out, "# {line}");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, 1.0, -0.25, 1e-7, 123456.789, 3.3e20, f64::MIN_POSITIVE] {
            let s = fmt_num(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(fmt_num(2.0), "2");
        assert_eq!(fmt_num(1e-7), "1e-7");
    }
}
