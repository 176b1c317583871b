use std::fmt;
use std::path::Path;

use anyhow::Result;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

/// A bad flag, config entry or input document. Exits with code 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

pub fn load(path: Option<&Path>) -> Result<toml::Table> {
    let Some(path) = path else {
        return Ok(toml::Table::new());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Usage(format!("cannot read config {}: {e}", path.display())))?;
    text.parse::<toml::Table>()
        .map_err(|e| Usage(format!("config {}: {e}", path.display())).into())
}

fn to_json(key: &str, v: &toml::Value) -> Result<Value> {
    let j = serde_json::to_value(v)?;
    // Families may be written as TOML tables; the flag form is a JSON string.
    Ok(match (key, j) {
        ("family", j) if !j.is_string() => Value::String(j.to_string()),
        (_, j) => j,
    })
}

fn key(k: &str) -> String {
    k.replace('-', "_")
}

/// Top-level config scalars, then the `[command]` table, then the flags; later wins.
pub fn resolve<T: Serialize + DeserializeOwned>(
    flags: &T,
    config: &toml::Table,
    command: &str,
) -> Result<T> {
    let mut merged = Map::new();
    for (k, v) in config.iter().filter(|(_, v)| !v.is_table()) {
        merged.insert(key(k), to_json(k, v)?);
    }
    let section = config
        .get(command)
        .or_else(|| config.get(&key(command)))
        .and_then(toml::Value::as_table);
    for (k, v) in section.into_iter().flatten() {
        merged.insert(key(k), to_json(&key(k), v)?);
    }
    if let Value::Object(f) = serde_json::to_value(flags)? {
        merged.extend(f.into_iter().filter(|(_, v)| !v.is_null()));
    }
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| Usage(format!("config for `{command}`: {e}")).into())
}

/// A global setting from the config file, used when the flag is absent.
pub fn global<T: DeserializeOwned>(config: &toml::Table, name: &str) -> Result<Option<T>> {
    config
        .get(name)
        .filter(|v| !v.is_table())
        .map(|v| {
            v.clone()
                .try_into()
                .map_err(|e| Usage(format!("config `{name}`: {e}")).into())
        })
        .transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Default, Serialize, Deserialize, PartialEq)]
    struct Opts {
        n: Option<usize>,
        p: Option<f64>,
        family: Option<String>,
    }

    #[test]
    fn flags_override_sections_override_globals() {
        let cfg: toml::Table = "n = 8\np = 0.5\n[simulate]\nn = 16\n".parse().unwrap();
        let flags = Opts {
            p: Some(0.25),
            ..Default::default()
        };
        let got = resolve(&flags, &cfg, "simulate").unwrap();
        assert_eq!(got.n, Some(16));
        assert_eq!(got.p, Some(0.25));
        let other = resolve(&Opts::default(), &cfg, "lines").unwrap();
        assert_eq!(other.n, Some(8));
    }

    #[test]
    fn table_family_becomes_json() {
        let cfg: toml::Table = "[x]\nfamily = { rules = [[[0, 1]]] }".parse().unwrap();
        let got = resolve(&Opts::default(), &cfg, "x").unwrap();
        assert_eq!(got.family.as_deref(), Some(r#"{"rules":[[[0,1]]]}"#));
    }

    #[test]
    fn wrong_types_are_usage_errors() {
        let cfg: toml::Table = "n = \"big\"".parse().unwrap();
        let e = resolve(&Opts::default(), &cfg, "x").unwrap_err();
        assert!(e.downcast_ref::<Usage>().is_some());
    }
}
