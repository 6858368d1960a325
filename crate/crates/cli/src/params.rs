//! Parameter maps: library defaults, overlaid by a JSON file, overlaid by
//! command-line flags.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

/// One flag override: a dotted key path into the parameter object.
pub struct Override {
    pub key: &'static str,
    pub value: Value,
}

pub fn set<T: Serialize>(overrides: &mut Vec<Override>, key: &'static str, value: Option<T>) {
    if let Some(v) = value {
        overrides.push(Override {
            key,
            value: serde_json::to_value(v).expect("flag values serialize"),
        });
    }
}

fn merge(base: &mut Value, patch: Value, path: &str) -> Result<(), CliError> {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                let sub = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                let slot = b
                    .get_mut(&k)
                    .ok_or_else(|| CliError::usage(format!("unknown parameter `{sub}`")))?;
                merge(slot, v, &sub)?;
            }
            Ok(())
        }
        (slot, v) => {
            *slot = v;
            Ok(())
        }
    }
}

fn assign(base: &mut Value, key: &str, value: Value) -> Result<(), CliError> {
    let mut patch = value;
    for part in key.rsplit('.') {
        let mut m = Map::new();
        m.insert(part.to_string(), patch);
        patch = Value::Object(m);
    }
    merge(base, patch, "")
}

pub fn resolve<T: Serialize + DeserializeOwned + Default>(
    file: Option<&Path>,
    overrides: Vec<Override>,
) -> Result<T, CliError> {
    let mut value = serde_json::to_value(T::default()).expect("defaults serialize");
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let parsed: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        if !parsed.is_object() {
            return Err(CliError::usage(format!(
                "{}: parameters must be a JSON object",
                path.display()
            )));
        }
        merge(&mut value, parsed, "")?;
    }
    for o in overrides {
        assign(&mut value, o.key, o.value)?;
    }
    serde_json::from_value(value).map_err(|e| CliError::usage(format!("invalid parameters: {e}")))
}
