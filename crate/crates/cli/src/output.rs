//! Output plumbing: manifest comment lines, stdout or file targets, and the
//! timestamped sidecar written next to files.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde_json::json;
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything needed to regenerate an output: the subcommand and its fully
/// resolved parameters, in a fixed order.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub command: &'static str,
    pub params: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &'static str) -> Self {
        Self { command, params: Vec::new() }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    /// Command line that reproduces the output.
    pub fn command_line(&self) -> String {
        let mut line = format!("elemodds {}", self.command);
        for (k, v) in &self.params {
            line.push_str(&format!(" --{} {}", k.replace('_', "-"), v));
        }
        line
    }

    /// `key=value` pairs for CSV comment lines. No timestamp, so reruns
    /// produce identical bytes.
    pub fn comments(&self) -> Vec<(String, String)> {
        let mut out =
            vec![("tool".to_string(), format!("elemodds {VERSION}")), ("command".to_string(), self.command_line())];
        out.extend(self.params.iter().cloned());
        out
    }

    pub fn header(&self) -> String {
        self.comments().iter().map(|(k, v)| format!("# {k}={v}\n")).collect()
    }

    fn sidecar_json(&self, output: &Path) -> String {
        let timestamp = OffsetDateTime::now_utc().format(&Rfc3339).unwrap_or_else(|_| "unknown".into());
        let params: serde_json::Map<String, serde_json::Value> =
            self.params.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let value = json!({
            "tool": "elemodds",
            "version": VERSION,
            "command": self.command,
            "command_line": self.command_line(),
            "params": params,
            "seed": self.params.iter().find(|(k, _)| k == "seed").map(|(_, v)| v.clone()),
            "output": output.display().to_string(),
            "timestamp": timestamp,
        });
        serde_json::to_string_pretty(&value).expect("manifest serializes") + "\n"
    }
}

/// Writes `text` to `path`, or to stdout when no path is given. Files also get
/// a `<path>.manifest.json` sidecar carrying the run timestamp.
pub fn emit(text: &str, path: Option<&Path>, manifest: &Manifest) -> io::Result<()> {
    match path {
        Some(p) => {
            fs::write(p, text)?;
            fs::write(sidecar_path(p), manifest.sidecar_json(p))
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}
