//! `key = value` config files. Keys are long flag names; flags given on the
//! command line win because they are parsed after the file's.

use std::collections::HashSet;
use std::ffi::OsString;

#[derive(Debug)]
pub struct ConfigError(pub String);

/// Value of `--config` in `args`, if any.
pub fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

/// Parses the file into flag tokens, keeping only keys in `known`.
/// `known` maps long names to whether the flag takes a value.
pub fn file_args(text: &str, known: &[(String, bool)]) -> Result<Vec<OsString>, ConfigError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("config line {}: expected key = value", lineno + 1)))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim().trim_matches('"');
        if !seen.insert(key.clone()) {
            return Err(ConfigError(format!("config line {}: duplicate key '{key}'", lineno + 1)));
        }
        // keys for other subcommands are ignored
        let Some((_, takes_value)) = known.iter().find(|(k, _)| *k == key) else { continue };
        if *takes_value {
            out.push(format!("--{key}").into());
            out.push(value.into());
        } else {
            match value.to_ascii_lowercase().as_str() {
                "true" | "1" | "yes" | "on" => out.push(format!("--{key}").into()),
                "false" | "0" | "no" | "off" => {}
                _ => return Err(ConfigError(format!("config line {}: '{key}' expects true or false", lineno + 1))),
            }
        }
    }
    Ok(out)
}
