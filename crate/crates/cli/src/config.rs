//! `key = value` config files. Entries become flags placed right after the
//! subcommand name, so flags typed on the command line come later and win.

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Command};

/// Parses `key = value` lines. `#` starts a comment; keys may use `_` or `-`.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected key = value, found {line:?}", n + 1);
        };
        out.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

/// Value of `--config` in `args`, if present.
pub fn path(args: &[String]) -> Option<String> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

/// Splices config entries into `args` after the subcommand name. Without a
/// subcommand the arguments are returned unchanged for clap to reject.
pub fn merge(cmd: &Command, mut args: Vec<String>, entries: &[(String, String)]) -> Result<Vec<String>> {
    let Some(pos) = args.iter().skip(1).position(|a| cmd.find_subcommand(a).is_some()).map(|p| p + 1) else {
        return Ok(args);
    };
    let Some(sub) = cmd.find_subcommand(&args[pos]) else {
        return Ok(args);
    };
    let mut extra = Vec::new();
    for (key, value) in entries {
        if key == "config" {
            bail!("config files cannot include other config files");
        }
        let arg = sub
            .get_arguments()
            .chain(cmd.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()))
            .with_context(|| format!("config key {key:?} is not an option of {}", sub.get_name()))?;
        match arg.get_action() {
            ArgAction::SetTrue => match value.as_str() {
                "true" => extra.push(format!("--{key}")),
                "false" => {}
                _ => bail!("config key {key:?} takes true or false, found {value:?}"),
            },
            _ => {
                extra.push(format!("--{key}"));
                extra.push(value.clone());
            }
        }
    }
    args.splice(pos + 1..pos + 1, extra);
    Ok(args)
}
