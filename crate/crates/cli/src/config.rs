//! `--config FILE`: a JSON object whose keys are long flag names. Keys are
//! appended to the argument list as flags unless the flag is already given.
//! Arrays repeat the flag, `true` adds a bare switch and `false` or `null`
//! is skipped.

use std::ffi::OsString;

use serde_json::Value;

use crate::CliError;

pub fn merge_config_file(mut args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path)?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Invalid(format!("config {}: {e}", path.to_string_lossy())))?;
    let Value::Object(map) = doc else {
        return Err(CliError::Invalid(
            "config file must hold a JSON object".into(),
        ));
    };
    let extra = flags_from(&map, &args)?;
    args.extend(extra);
    Ok(args)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

fn given(args: &[OsString], flag: &str) -> bool {
    let eq = format!("{flag}=");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&eq)
    })
}

fn scalar(key: &str, v: &Value) -> Result<Option<String>, CliError> {
    match v {
        Value::String(s) => Ok(Some(s.clone())),
        Value::Number(n) => Ok(Some(n.to_string())),
        Value::Bool(_) | Value::Null => Ok(None),
        _ => Err(CliError::Invalid(format!(
            "config key `{key}` must be a string, number or list"
        ))),
    }
}

fn flags_from(
    map: &serde_json::Map<String, Value>,
    args: &[OsString],
) -> Result<Vec<OsString>, CliError> {
    let mut out = Vec::new();
    for (key, value) in map {
        if key == "config" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        if given(args, &flag) {
            continue;
        }
        match value {
            Value::Bool(true) => out.push(flag.into()),
            Value::Array(items) => {
                for item in items {
                    if let Some(v) = scalar(key, item)? {
                        out.push(flag.clone().into());
                        out.push(v.into());
                    }
                }
            }
            other => {
                if let Some(v) = scalar(key, other)? {
                    out.push(flag.into());
                    out.push(v.into());
                }
            }
        }
    }
    Ok(out)
}
