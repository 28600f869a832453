//! Layering of command-line flags over a TOML config file.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::CliError;

pub fn load(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let parsed: toml::Value =
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))?;
    serde_json::to_value(parsed).map_err(CliError::from)
}

/// Fields set on the command line win; unset ones fall back to `section`
/// of the config file. Defaults are applied later by each command.
pub fn merge<T: Serialize + DeserializeOwned>(flags: &T, file: Option<&Value>) -> Result<T, CliError> {
    let mut merged = match file {
        Some(Value::Object(m)) => m.clone(),
        Some(_) | None => serde_json::Map::new(),
    };
    if let Value::Object(f) = serde_json::to_value(flags)? {
        for (k, v) in f {
            if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Usage(format!("bad config value: {e}")))
}
