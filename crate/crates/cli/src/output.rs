//! `report.csv` and `summary.json`, each stamped with the schema version,
//! the hash of the resolved config and the seed.

use std::fs;
use std::path::Path;

use rough_core::bounds::REPORT_SCHEMA;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const REPORT_FILE: &str = "report.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Identity of one run.
#[derive(Debug, Clone)]
pub struct RunMeta {
    pub command: &'static str,
    pub config: Value,
    pub config_hash: String,
    pub seed: u64,
}

impl RunMeta {
    pub fn new(command: &'static str, config: &impl Serialize, seed: u64) -> Self {
        let config = serde_json::to_value(config).expect("config serializes");
        RunMeta {
            command,
            config_hash: config_hash(&config),
            config,
            seed,
        }
    }
}

/// SHA-256 of the compact JSON form (keys sorted), in hex.
pub fn config_hash(config: &Value) -> String {
    let digest = Sha256::digest(config.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// A CSV table; `schema`, `config_hash` and `seed` columns are prepended.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Shortest round-trip form in scientific notation.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("cannot create {}: {e}", dir.display())))
}

pub fn write_table(dir: &Path, meta: &RunMeta, table: &Table) -> Result<(), CliError> {
    let file = dir.join(REPORT_FILE);
    let out_err = |e: csv::Error| CliError::Output(format!("{}: {e}", file.display()));
    let mut writer = csv::Writer::from_path(&file).map_err(out_err)?;
    let mut header = vec!["schema", "config_hash", "seed"];
    header.extend(&table.header);
    writer.write_record(&header).map_err(out_err)?;
    let (schema, seed) = (REPORT_SCHEMA.to_string(), meta.seed.to_string());
    for row in &table.rows {
        let prefix = [schema.as_str(), meta.config_hash.as_str(), seed.as_str()];
        writer
            .write_record(prefix.into_iter().chain(row.iter().map(String::as_str)))
            .map_err(out_err)?;
    }
    writer.flush().map_err(|e| CliError::Output(format!("{}: {e}", file.display())))
}

/// `summary.json`: run identity, `passed`, and the command's own fields.
pub fn write_summary(dir: &Path, meta: &RunMeta, passed: bool, body: Value) -> Result<(), CliError> {
    let mut map = Map::new();
    map.insert("schema".into(), Value::from(REPORT_SCHEMA));
    map.insert("command".into(), Value::from(meta.command));
    map.insert("config_hash".into(), Value::from(meta.config_hash.clone()));
    map.insert("seed".into(), Value::from(meta.seed));
    map.insert("config".into(), meta.config.clone());
    map.insert("passed".into(), Value::from(passed));
    if let Value::Object(fields) = body {
        for (k, v) in fields {
            map.insert(k, v);
        }
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(map)).expect("summary serializes");
    text.push('\n');
    let file = dir.join(SUMMARY_FILE);
    fs::write(&file, text).map_err(|e| CliError::Output(format!("{}: {e}", file.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_depends_on_content_only() {
        let a = serde_json::json!({"p": 1.0, "seed": 3});
        let b = serde_json::json!({"seed": 3, "p": 1.0});
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_ne!(config_hash(&a), config_hash(&serde_json::json!({"p": 1.0, "seed": 4})));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1e-10, 7.286110281183994e27, -3.0, 0.0] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn files_carry_the_run_identity() {
        let dir = tempfile::tempdir().unwrap();
        let meta = RunMeta::new("test", &serde_json::json!({"k": 1}), 77);
        let mut table = Table::new(&["a", "b"]);
        table.push(vec!["1".into(), "x,y".into()]);
        write_table(dir.path(), &meta, &table).unwrap();
        write_summary(dir.path(), &meta, true, serde_json::json!({"extra": 5})).unwrap();
        let csv_text = fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap();
        assert!(csv_text.starts_with("schema,config_hash,seed,a,b\n"));
        assert!(csv_text.contains(&format!("1,{},77,1,\"x,y\"", meta.config_hash)));
        let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap()).unwrap();
        assert_eq!(summary["schema"], 1);
        assert_eq!(summary["seed"], 77);
        assert_eq!(summary["extra"], 5);
        assert_eq!(summary["config_hash"], meta.config_hash.as_str());
    }
}
