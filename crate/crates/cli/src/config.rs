//! Merging of `key = value` configuration files into the argument list.
//!
//! Keys are long flag names (`mc-replications` or `mc_replications`). Keys
//! before any `[section]` header apply to every subcommand that has such a
//! flag; keys under `[estimate]`, `[test]` and so on apply to that
//! subcommand only and must exist there. The file's values are placed ahead
//! of the command-line flags, so the command line wins.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::CommandFactory;

use crate::args::Cli;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub section: Option<String>,
    pub key: String,
    pub value: String,
    pub line: usize,
}

pub fn parse_config(text: &str) -> Result<Vec<Entry>, CliError> {
    let mut section = None;
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = Some(name.trim().to_string());
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("line {}: expected 'key = value'", i + 1))
        })?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Config(format!("line {}: empty key", i + 1)));
        }
        let value = value.trim().trim_matches('"').to_string();
        entries.push(Entry {
            section: section.clone(),
            key,
            value,
            line: i + 1,
        });
    }
    Ok(entries)
}

fn take_config_flag(argv: &mut Vec<OsString>) -> Result<Option<PathBuf>, CliError> {
    let mut found = None;
    let mut i = 1;
    while i < argv.len() {
        let arg = argv[i].to_string_lossy().into_owned();
        if arg == "--" {
            break;
        }
        if arg == "--config" {
            if i + 1 >= argv.len() {
                return Err(CliError::Config("--config needs a file".into()));
            }
            found = Some(PathBuf::from(argv.remove(i + 1)));
            argv.remove(i);
        } else if let Some(v) = arg.strip_prefix("--config=") {
            found = Some(PathBuf::from(v));
            argv.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(found)
}

/// Returns `argv` with the flags of any `--config` file spliced in right
/// after the subcommand name.
pub fn expand_args(mut argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(file) = take_config_flag(&mut argv)? else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&file).map_err(|source| CliError::Read {
        path: file.clone(),
        source,
    })?;
    let entries = parse_config(&text)?;
    let Some(pos) = argv
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map(|p| p + 1)
    else {
        return Ok(argv);
    };
    let sub = argv[pos].to_string_lossy().into_owned();
    let command = Cli::command();
    let Some(subcommand) = command.find_subcommand(&sub) else {
        return Ok(argv);
    };
    let known: Vec<String> = subcommand
        .get_arguments()
        .filter_map(|a| a.get_long().map(str::to_string))
        .collect();
    let mut extra = Vec::new();
    for e in entries {
        let applies = match &e.section {
            None => known.contains(&e.key),
            Some(s) if *s == sub => {
                if !known.contains(&e.key) {
                    return Err(CliError::Config(format!(
                        "line {}: '{sub}' has no flag --{}",
                        e.line, e.key
                    )));
                }
                true
            }
            Some(_) => false,
        };
        if applies {
            extra.push(OsString::from(format!("--{}={}", e.key, e.value)));
        }
    }
    argv.splice(pos + 1..pos + 1, extra);
    Ok(argv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn sections_and_comments() {
        let e = parse_config("# defaults\nm = 3\n[test]\nmc_replications=500\n").unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].section, None);
        assert_eq!(e[1].key, "mc-replications");
        assert_eq!(e[1].section.as_deref(), Some("test"));
        assert!(parse_config("m 3\n").is_err());
    }

    #[test]
    fn config_values_precede_command_line() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.conf");
        fs::write(&cfg, "m = 3\nseed = 9\n[estimate]\nrobust = true\n").unwrap();
        let argv = os(&[
            "fracindex",
            "estimate",
            "--config",
            cfg.to_str().unwrap(),
            "--m",
            "4",
        ]);
        let out = expand_args(argv).unwrap();
        let out: Vec<String> = out.iter().map(|a| a.to_string_lossy().into()).collect();
        assert_eq!(
            out,
            vec!["fracindex", "estimate", "--m=3", "--robust=true", "--m", "4"]
        );
    }

    #[test]
    fn unknown_key_in_section_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("bad.conf");
        fs::write(&cfg, "[ingest]\nkappa = 3\n").unwrap();
        let argv = os(&["fracindex", "--config", cfg.to_str().unwrap(), "ingest"]);
        assert!(matches!(expand_args(argv), Err(CliError::Config(_))));
    }
}
