//! `key = value` config files. Each key names a long flag of the subcommand
//! being run; flags given on the command line win. Keys the subcommand does
//! not take are ignored, so one file can serve several subcommands.

use std::ffi::OsString;
use std::path::Path;

use clap::{ArgAction, Command};

pub fn parse(raw: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected `key = value`", i + 1))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(format!("config line {}: empty key", i + 1));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// Index just past the deepest subcommand named in `args`, and that subcommand.
fn leaf(root: &Command, args: &[OsString]) -> (usize, Command) {
    let mut cmd = root.clone();
    let mut pos = 1;
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if s == "--config" {
            i += 2;
            continue;
        }
        if let Some(sub) = cmd.find_subcommand(s.as_ref()) {
            cmd = sub.clone();
            pos = i + 1;
        } else if !s.starts_with('-') {
            break;
        }
        i += 1;
    }
    (pos, cmd)
}

fn given(args: &[OsString], long: &str) -> bool {
    let flag = format!("--{long}");
    let prefix = format!("--{long}=");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&prefix)
    })
}

/// Inserts config values as flags right after the subcommand path.
pub fn expand(root: &Command, args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let raw = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| format!("cannot read config {}: {e}", Path::new(&path).display()))?;
    let entries = parse(&raw)?;
    let (pos, cmd) = leaf(root, &args);
    let mut extra: Vec<OsString> = Vec::new();
    for (key, value) in entries {
        let Some(arg) = cmd.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            continue;
        };
        if key == "config" || given(&args, &key) {
            continue;
        }
        match arg.get_action() {
            ArgAction::SetTrue => match value.as_str() {
                "true" | "yes" | "1" => extra.push(format!("--{key}").into()),
                "false" | "no" | "0" => {}
                other => return Err(format!("config key `{key}`: expected true or false, got `{other}`")),
            },
            _ => extra.push(format!("--{key}={value}").into()),
        }
    }
    let mut out = args;
    out.splice(pos..pos, extra);
    Ok(out)
}
