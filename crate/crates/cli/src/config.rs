//! `--config` handling: option values from a file become extra flags.
//!
//! The file is either a TOML table or a run manifest (JSON) whose `config`
//! object was recorded by an earlier run. Keys are option names with `_` or
//! `-`; flags already on the command line win.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context};
use serde_json::Value;

fn load(path: &Path) -> anyhow::Result<serde_json::Map<String, Value>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
    let value: Value = if text.trim_start().starts_with('{') {
        let v: Value = serde_json::from_str(&text).with_context(|| format!("{}", path.display()))?;
        // a manifest carries its options under "config"
        match v.get("config") {
            Some(inner) if v.get("subcommand").is_some() => inner.clone(),
            _ => v,
        }
    } else {
        let table: toml::Table = toml::from_str(&text).with_context(|| format!("{}", path.display()))?;
        serde_json::to_value(table)?
    };
    match value {
        Value::Object(map) => Ok(map),
        _ => bail!("{}: expected a table of options", path.display()),
    }
}

fn flag_present(args: &[OsString], flag: &str) -> bool {
    args.iter().any(|a| {
        let a = a.to_string_lossy();
        a == flag || a.starts_with(&format!("{flag}="))
    })
}

fn render(value: &Value) -> Option<String> {
    match value {
        Value::Null | Value::Bool(false) => None,
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Array(items) => Some(items.iter().filter_map(render).collect::<Vec<_>>().join(",")),
        Value::Bool(true) | Value::Object(_) => None,
    }
}

/// Return the argument list with options from `--config FILE` appended.
pub fn expand_args(mut args: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let mut config_path = None;
    for (i, a) in args.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--config" {
            config_path = args.get(i + 1).map(|p| p.clone().into());
        } else if let Some(p) = s.strip_prefix("--config=") {
            config_path = Some(std::path::PathBuf::from(p));
        }
    }
    let Some(path) = config_path else {
        return Ok(args);
    };
    let options = load(&path)?;
    let mut extra = Vec::new();
    for (key, value) in options {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag == "--config" || flag_present(&args, &flag) || value.is_object() {
            continue;
        }
        match value {
            Value::Bool(true) => extra.push(OsString::from(&flag)),
            v => {
                if let Some(text) = render(&v) {
                    extra.push(OsString::from(&flag));
                    extra.push(OsString::from(text));
                }
            }
        }
    }
    args.extend(extra);
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_values_fill_missing_flags_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "seed = 7\ncount = 50\nspecs = [\"S_0124\", \"S_1111\"]\nfast = true\nslow = false\n").unwrap();
        let args: Vec<OsString> = ["crowdvote", "corpus", "build", "--seed", "9", "--config"]
            .iter()
            .map(OsString::from)
            .chain([path.clone().into_os_string()])
            .collect();
        let out: Vec<String> = expand_args(args)
            .unwrap()
            .into_iter()
            .map(|a| a.to_string_lossy().into_owned())
            .collect();
        assert!(out.windows(2).any(|w| w == ["--count", "50"]));
        assert!(out.windows(2).any(|w| w == ["--specs", "S_0124,S_1111"]));
        assert!(out.contains(&"--fast".to_string()));
        assert!(!out.contains(&"--slow".to_string()));
        assert_eq!(out.iter().filter(|a| *a == "--seed").count(), 1);
    }
}
