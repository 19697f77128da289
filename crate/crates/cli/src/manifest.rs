//! Sidecar manifest written next to every output file.
//!
//! `parameters` holds resolved flag values keyed by long flag name, so
//! [`RunManifest::argv`] rebuilds a command line that regenerates the same
//! bytes. Output paths live in `outputs` and are not part of the replay.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, Value>,
    pub tool_version: String,
    pub seed: Option<u64>,
    /// ISO-8601 UTC.
    pub timestamp: String,
    #[serde(default)]
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, parameters: BTreeMap<String, Value>, seed: Option<u64>) -> Self {
        Self {
            command: command.to_owned(),
            parameters,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            seed,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            outputs: Vec::new(),
        }
    }

    /// Subcommand and flags that reproduce the run, without output paths.
    ///
    /// `true` becomes a bare flag, `false` and `null` are dropped.
    pub fn argv(&self) -> Vec<String> {
        let mut args = vec![self.command.clone()];
        for (k, v) in &self.parameters {
            match v {
                Value::Null | Value::Bool(false) => {}
                Value::Bool(true) => args.push(format!("--{k}")),
                Value::String(s) => args.extend([format!("--{k}"), s.clone()]),
                other => args.extend([format!("--{k}"), other.to_string()]),
            }
        }
        args
    }

    /// `out.csv` -> `out.csv.manifest.json`
    pub fn sidecar_path(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}
