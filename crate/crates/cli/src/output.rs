use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Everything a command produces: one JSON document and one CSV table.
pub struct Output {
    pub name: &'static str,
    pub json: Value,
    pub csv: String,
    /// Human-readable text printed when no `--format` is given. Commands
    /// without one print their JSON.
    pub text: Option<String>,
    /// Set when the command ran but its result is a data failure, such as a
    /// failed anchor in `reproduce-paper`.
    pub data_failure: bool,
}

impl Output {
    pub fn new(name: &'static str, json: impl Serialize, csv: String) -> CliResult<Self> {
        Ok(Self {
            name,
            json: serde_json::to_value(json).map_err(|e| CliError::data(e.to_string()))?,
            csv,
            text: None,
            data_failure: false,
        })
    }

    pub fn json_text(&self) -> String {
        let mut s =
            serde_json::to_string_pretty(&self.json).expect("a JSON value always serializes");
        s.push('\n');
        s
    }

    /// Writes `<name>.json` and `<name>.csv` into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> CliResult<()> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::config(format!("{}: {e}", dir.display())))?;
        for (ext, body) in [("json", self.json_text()), ("csv", self.csv.clone())] {
            let path = dir.join(format!("{}.{ext}", self.name));
            std::fs::write(&path, body)
                .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }
}

/// CSV with a header row; values are written with Rust's shortest
/// round-trip float formatting.
pub fn table(headers: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(headers)
        .map_err(|e| CliError::data(e.to_string()))?;
    for row in rows {
        w.write_record(&row)
            .map_err(|e| CliError::data(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::data(e.to_string()))
}

/// Two-column `key,value` CSV for results that are not naturally tabular.
pub fn summary(pairs: &[(&str, String)]) -> CliResult<String> {
    table(
        &["key", "value"],
        pairs.iter().map(|(k, v)| vec![k.to_string(), v.clone()]),
    )
}

/// Serializes any list of records with the csv crate's serde support.
pub fn records<T: Serialize>(rows: &[T]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::data(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::data(e.to_string()))
}

pub fn num(x: f64) -> String {
    x.to_string()
}
