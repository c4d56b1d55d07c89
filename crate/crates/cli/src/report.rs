//! Report and CSV emission. Every file carries the seed and the full
//! config; JSON numbers are rounded to 12 significant digits and keys are
//! sorted, so seeded reruns are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use bnhqc::table::{round_sig, CsvTable};
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{Format, RunConfig};
use crate::error::{CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct Report {
    name: String,
    command: String,
    seed: u64,
    config: Value,
    results: Map<String, Value>,
    tables: Vec<(String, CsvTable)>,
}

/// Rounds every float in a JSON tree to 12 significant digits.
pub fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64"));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(xs) => Value::Array(xs.into_iter().map(round_floats).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, round_floats(v))).collect()),
        other => other,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// The config as recorded in outputs; where files go is not part of a run.
fn recorded_config(cfg: &RunConfig) -> Value {
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    if let Some(m) = v.as_object_mut() {
        m.remove("output");
    }
    v
}

impl Report {
    /// `name` is the file stem (command, or command-target).
    pub fn new(name: &str, command: &str, cfg: &RunConfig) -> Self {
        Report {
            name: name.into(),
            command: command.into(),
            seed: cfg.seed,
            config: recorded_config(cfg),
            results: Map::new(),
            tables: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("result serializes");
        self.results.insert(key.into(), round_floats(v));
    }

    pub fn table(&mut self, stem: &str, table: CsvTable) {
        self.tables.push((stem.into(), table));
    }

    pub fn result(&self, key: &str) -> Option<&Value> {
        self.results.get(key)
    }

    /// Moves the tables of another report into this one.
    pub fn take_tables(&mut self, other: Report) {
        self.tables.extend(other.tables);
    }

    fn csv_preamble(&self) -> String {
        let cfg = serde_json::to_string(&round_floats(self.config.clone())).expect("json");
        format!(
            "# bnhqc {VERSION} {}\n# seed: {}\n# config: {cfg}\n",
            self.command, self.seed
        )
    }

    /// Writes the report and tables under `dir`; returns the paths written.
    pub fn write(&self, dir: &Path, format: Format) -> CliResult<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut written = Vec::new();
        let mut artifacts = Vec::new();
        for (stem, table) in &self.tables {
            let body = table.to_csv();
            let file = format!("{stem}.csv");
            artifacts.push(serde_json::json!({ "file": file, "sha256": sha256_hex(body.as_bytes()) }));
            if format.csv() {
                let path = dir.join(&file);
                fs::write(&path, format!("{}{body}", self.csv_preamble())).map_err(|e| CliError::io(&path, e))?;
                written.push(path);
            }
        }
        if format.json() {
            let doc = serde_json::json!({
                "command": self.command,
                "version": VERSION,
                "seed": self.seed,
                "config": round_floats(self.config.clone()),
                "results": Value::Object(self.results.clone()),
                "csv_bodies": artifacts,
            });
            let path = dir.join(format!("{}.json", self.name));
            let text = serde_json::to_string_pretty(&doc).expect("json") + "\n";
            fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

/// The CSV body of a written file (everything after the `#` preamble).
pub fn csv_body(text: &str) -> &str {
    let mut rest = text;
    while rest.starts_with('#') {
        rest = rest.split_once('\n').map_or("", |(_, r)| r);
    }
    rest
}
