//! Flat `key = value` configuration files.
//!
//! Every key is the long name of a command-line flag. Values from the file
//! are spliced in front of the flags given on the command line, and since
//! repeated flags override earlier ones, the command line wins.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::path::Path;

use clap::Command;
use semrec_core::{Error, Result};

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; later duplicates replace earlier ones.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut entries: Vec<(String, String)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "config line {}: expected key = value, got {line:?}",
                n + 1
            )));
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim().to_owned();
        if key.is_empty() {
            return Err(Error::Config(format!("config line {}: empty key", n + 1)));
        }
        entries.retain(|(k, _)| *k != key);
        entries.push((key, value));
    }
    Ok(entries)
}

pub fn read_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

fn long_names(cmd: &Command) -> BTreeSet<String> {
    cmd.get_arguments()
        .filter_map(|a| a.get_long())
        .filter(|&l| l != "config" && l != "help" && l != "version")
        .map(str::to_owned)
        .collect()
}

/// Rewrites `args` so that config entries known to `subcommand` come right
/// after the subcommand name. Keys no subcommand knows are rejected; keys
/// meant for other subcommands are ignored, so one file can serve a whole
/// workflow.
pub fn splice(
    root: &Command,
    args: Vec<OsString>,
    subcommand: &str,
    entries: &[(String, String)],
) -> Result<Vec<OsString>> {
    let sub = root
        .find_subcommand(subcommand)
        .ok_or_else(|| Error::Config(format!("unknown subcommand {subcommand}")))?;
    let own = long_names(sub);
    let everywhere: BTreeSet<String> = root
        .get_subcommands()
        .flat_map(long_names)
        .chain(long_names(root))
        .collect();
    let unknown: Vec<&str> = entries
        .iter()
        .map(|(k, _)| k.as_str())
        .filter(|k| !everywhere.contains(*k))
        .collect();
    if !unknown.is_empty() {
        return Err(Error::Config(format!(
            "unknown config keys: {}",
            unknown.join(", ")
        )));
    }

    let pos = args
        .iter()
        .skip(1)
        .position(|a| a.to_str() == Some(subcommand))
        .map(|p| p + 1)
        .ok_or_else(|| Error::Config(format!("subcommand {subcommand} not found in arguments")))?;
    let mut out: Vec<OsString> = args[..=pos].to_vec();
    for (k, v) in entries.iter().filter(|(k, _)| own.contains(k)) {
        out.push(format!("--{k}={v}").into());
    }
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}
