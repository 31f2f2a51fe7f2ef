//! Flag resolution: command line > `GSS_*` environment > TOML config file.
//!
//! clap already layers flags over environment variables. The config file is
//! folded in by turning its entries into extra `--flag=value` arguments for
//! every flag whose value still comes from its default, then parsing again.
//!
//! ```toml
//! seed = 7                 # any subcommand that has --seed
//! [score]
//! metrics = ["eigenscore_average", "semantic_entropy"]
//! alpha = 0.001
//! ```

use std::ffi::OsString;
use std::path::Path;

use clap::parser::ValueSource;
use clap::{ArgAction, ArgMatches, CommandFactory, FromArgMatches};

use crate::args::Cli;
use crate::error::CliError;

fn clap_error(e: clap::Error) -> CliError {
    use clap::error::ErrorKind::*;
    match e.kind() {
        // help and version are not errors; let clap print them and exit
        DisplayHelp | DisplayVersion | DisplayHelpOnMissingArgumentOrSubcommand => e.exit(),
        _ => {
            let msg = e.render().to_string();
            CliError::Usage(msg.strip_prefix("error: ").unwrap_or(&msg).trim_end().to_owned())
        }
    }
}

fn load_table(path: &Path) -> Result<toml::Table, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    text.parse::<toml::Table>()
        .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))
}

fn scalar(key: &str, v: &toml::Value) -> Result<String, CliError> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        other => Err(CliError::Usage(format!("config key `{key}`: unsupported value {other}"))),
    }
}

/// Extra arguments contributed by `entries` for subcommand `sub`.
fn entries_to_args(
    entries: &[(&String, &toml::Value, bool)],
    sub: &clap::Command,
    matches: &ArgMatches,
) -> Result<Vec<OsString>, CliError> {
    let mut out = Vec::new();
    for &(key, value, strict) in entries {
        let long = key.replace('_', "-");
        let Some(arg) = sub.get_arguments().find(|a| a.get_long() == Some(long.as_str())) else {
            if strict {
                return Err(CliError::Usage(format!("config key `{key}` is not a flag of `{}`", sub.get_name())));
            }
            continue;
        };
        if long == "config" {
            continue;
        }
        if matches!(
            matches.value_source(arg.get_id().as_str()),
            Some(ValueSource::CommandLine | ValueSource::EnvVariable)
        ) {
            continue;
        }
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value {
                toml::Value::Boolean(true) => out.push(format!("--{long}").into()),
                toml::Value::Boolean(false) => {}
                other => return Err(CliError::Usage(format!("config key `{key}` must be a boolean, got {other}"))),
            }
            continue;
        }
        let values = match value {
            toml::Value::Array(items) => items.iter().map(|v| scalar(key, v)).collect::<Result<Vec<_>, _>>()?,
            v => vec![scalar(key, v)?],
        };
        for v in values {
            out.push(format!("--{long}={v}").into());
        }
    }
    Ok(out)
}

/// Parses `argv` (program name first) with config-file defaults applied.
///
/// `--help` and `--version` print and exit the process, as clap does.
pub fn parse_args<I, T>(argv: I) -> Result<Cli, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let mut argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let command = Cli::command();
    let matches = command.clone().try_get_matches_from(&argv).map_err(clap_error)?;
    let Some(path) = matches.get_one::<std::path::PathBuf>("config") else {
        return Cli::from_arg_matches(&matches).map_err(clap_error);
    };
    let table = load_table(path)?;
    let (sub_name, sub_matches) = matches.subcommand().expect("subcommand is required");
    let sub = command.find_subcommand(sub_name).expect("matched subcommand exists");

    // keyed by flag name; section entries override top-level ones
    let mut entries: std::collections::BTreeMap<String, (&String, &toml::Value, bool)> = Default::default();
    for (key, value) in &table {
        if !value.is_table() {
            entries.insert(key.replace('_', "-"), (key, value, false));
        } else if command.find_subcommand(key).is_none() {
            return Err(CliError::Usage(format!("config section [{key}] is not a subcommand")));
        }
    }
    if let Some(toml::Value::Table(section)) = table.get(sub_name) {
        for (key, value) in section {
            entries.insert(key.replace('_', "-"), (key, value, true));
        }
    }
    let entries: Vec<_> = entries.into_values().collect();
    let extra = entries_to_args(&entries, sub, sub_matches)?;
    if extra.is_empty() {
        return Cli::from_arg_matches(&matches).map_err(clap_error);
    }
    argv.extend(extra);
    let matches = command.try_get_matches_from(&argv).map_err(clap_error)?;
    Cli::from_arg_matches(&matches).map_err(clap_error)
}
