//! Resolution of a run configuration: built-in defaults, then the JSON
//! config file, then command-line flags.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::output::MANIFEST_SCHEMA;
use crate::CliError;

/// Merge `file` and `flags` over `C::default()`. Keys in the file must be
/// fields of `C` (a `subcommand` key, if present, must name this command).
/// A run manifest is accepted too: its `config` object is used.
/// Flags left unset serialize to `null` and are ignored.
pub fn resolve<C, A>(command: &str, file: Option<&Value>, flags: &A) -> Result<C, CliError>
where
    C: Default + Serialize + DeserializeOwned,
    A: Serialize,
{
    let mut merged = match serde_json::to_value(C::default()) {
        Ok(Value::Object(m)) => m,
        _ => return Err(CliError::Config("internal: defaults are not an object".into())),
    };
    if let Some(file) = file {
        let obj = file.as_object().ok_or_else(|| CliError::Config("config file must hold a JSON object".into()))?;
        let mut entries = obj.clone();
        if obj.get("schema").and_then(Value::as_str) == Some(MANIFEST_SCHEMA) {
            let cfg = obj.get("config").and_then(Value::as_object).ok_or_else(|| CliError::Config("manifest has no config object".into()))?;
            entries = cfg.clone();
            if let Some(sub) = obj.get("subcommand") {
                entries.insert("subcommand".into(), sub.clone());
            }
        }
        for (k, v) in entries {
            if k == "subcommand" {
                if v.as_str() != Some(command) {
                    return Err(CliError::Config(format!("config file is for subcommand {v}, not \"{command}\"")));
                }
                continue;
            }
            merged.insert(k, v);
        }
    }
    if let Value::Object(f) = serde_json::to_value(flags).map_err(|e| CliError::Config(e.to_string()))? {
        overlay(&mut merged, f);
    }
    let de = Value::Object(merged);
    serde_path_to_error::deserialize(de).map_err(|e| CliError::Config(format!("field `{}`: {}", e.path(), e.inner())))
}

fn overlay(dst: &mut Map<String, Value>, src: Map<String, Value>) {
    for (k, v) in src {
        if !v.is_null() {
            dst.insert(k, v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Serialize, Deserialize, PartialEq)]
    #[serde(deny_unknown_fields, default)]
    struct Cfg {
        p: f64,
        alphas: Vec<f64>,
    }

    impl Default for Cfg {
        fn default() -> Self {
            Self { p: 2.0, alphas: vec![0.1] }
        }
    }

    #[derive(Serialize)]
    struct Flags {
        p: Option<f64>,
        alphas: Option<Vec<f64>>,
    }

    #[test]
    fn flags_override_file_which_overrides_defaults() {
        let file = serde_json::json!({"p": 3.0, "alphas": [0.2, 0.1]});
        let c: Cfg = resolve("x", Some(&file), &Flags { p: None, alphas: Some(vec![0.05]) }).unwrap();
        assert_eq!(c, Cfg { p: 3.0, alphas: vec![0.05] });
        let c: Cfg = resolve("x", None, &Flags { p: None, alphas: None }).unwrap();
        assert_eq!(c, Cfg::default());
    }

    #[test]
    fn bad_fields_are_named() {
        let file = serde_json::json!({"alphas": [0.1, "abc"]});
        let e = resolve::<Cfg, _>("x", Some(&file), &Flags { p: None, alphas: None }).unwrap_err();
        assert!(e.to_string().contains("alphas[1]"), "{e}");
        let file = serde_json::json!({"q": 1});
        let e = resolve::<Cfg, _>("x", Some(&file), &Flags { p: None, alphas: None }).unwrap_err();
        assert!(e.to_string().contains('q'), "{e}");
        let file = serde_json::json!({"subcommand": "y"});
        assert!(resolve::<Cfg, _>("x", Some(&file), &Flags { p: None, alphas: None }).is_err());
    }
}
