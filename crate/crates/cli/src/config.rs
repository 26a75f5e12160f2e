//! Flat `key = value` config files and the resolved config written beside
//! every command's outputs.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// Parses config text into `--key value` flags. Blank lines and `#`
/// comments are skipped; `true` / `false` toggle bare switches.
pub fn config_flags(text: &str) -> Result<Vec<OsString>, CliError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::input(format!("config line {}: expected key = value", n + 1)))?;
        let (k, v) = (k.trim().replace('_', "-"), v.trim());
        if k.is_empty() {
            return Err(CliError::input(format!("config line {}: empty key", n + 1)));
        }
        match v {
            "true" => out.push(format!("--{k}").into()),
            "false" => {}
            _ => {
                out.push(format!("--{k}").into());
                out.push(v.into());
            }
        }
    }
    Ok(out)
}

/// Splices the flags of any `--config FILE` into `args` right after the
/// subcommand words, so flags given on the command line still win.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut path: Option<PathBuf> = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            let p = it.next().ok_or_else(|| CliError::input("--config needs a file"))?;
            path = Some(p.into());
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(p.into());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let flags = config_flags(&text)?;
    // program name, then subcommand words up to the first flag
    let words = 1 + rest[1..]
        .iter()
        .take_while(|a| !a.to_string_lossy().starts_with('-'))
        .count()
        .min(2);
    let mut out: Vec<OsString> = rest[..words].to_vec();
    out.extend(flags);
    out.extend_from_slice(&rest[words..]);
    Ok(out)
}

/// Writes every option of `args` as `key = value`, loadable with `--config`.
pub fn write_resolved<T: Serialize>(args: &T, command: &str, path: &Path) -> Result<(), CliError> {
    let value = serde_json::to_value(args)?;
    let mut text = format!("# resolved options of `voxcade {command}`\n");
    if let serde_json::Value::Object(map) = value {
        for (k, v) in map {
            let k = k.replace('_', "-");
            match v {
                serde_json::Value::Null => {}
                serde_json::Value::String(s) => text.push_str(&format!("{k} = {s}\n")),
                other => text.push_str(&format!("{k} = {other}\n")),
            }
        }
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn flags_from_text() {
        let f = config_flags("# c\nepochs = 3\nbatch_size=8\nreproducible = true\nverbose = false\n").unwrap();
        assert_eq!(f, os(&["--epochs", "3", "--batch-size", "8", "--reproducible"]));
        assert!(config_flags("nonsense").is_err());
    }

    #[test]
    fn command_line_comes_last() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.txt");
        std::fs::write(&p, "epochs = 3\n").unwrap();
        let args = os(&["voxcade", "train", "--config", p.to_str().unwrap(), "--epochs", "5"]);
        let out = expand_config(args).unwrap();
        assert_eq!(out, os(&["voxcade", "train", "--epochs", "3", "--epochs", "5"]));
        let args = os(&["voxcade", "dataset", "mnist2d", &format!("--config={}", p.display())]);
        assert_eq!(expand_config(args).unwrap(), os(&["voxcade", "dataset", "mnist2d", "--epochs", "3"]));
    }
}
