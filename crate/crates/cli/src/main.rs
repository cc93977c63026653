mod audit;
mod commands;
mod config;
mod csv;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::parser::ValueSource;
use clap::{Arg, ArgMatches, Command};

use crate::commands::COMMANDS;
use crate::config::{parse_config, ConfigFile, Params};
use crate::error::{CliError, CliResult};

fn cli() -> Command {
    let mut root = Command::new("weaktherm")
        .version(csv::VERSION)
        .about("Weak-measurement thermometry: weak values, precision windows, pointer simulation and audits")
        .subcommand_required(true)
        .arg(Arg::new("config").long("config").value_name("FILE").global(true).help("`key = value` file or a previous CSV"))
        .arg(Arg::new("out").long("out").value_name("FILE").global(true).help("write CSV here instead of stdout"));
    for spec in COMMANDS {
        let mut sub = Command::new(spec.name).about(spec.about);
        for p in spec.params {
            let mut help = p.help.to_string();
            if let Some(d) = p.default {
                help.push_str(&format!(" [default: {d}]"));
            }
            sub = sub.arg(Arg::new(p.key).long(p.key).value_name("VALUE").allow_hyphen_values(true).help(help));
        }
        if let Some(pos) = spec.positional {
            sub = sub.arg(Arg::new("positional").index(1).value_name(pos).help(format!("same as --{pos}")));
        }
        root = root.subcommand(sub);
    }
    root
}

fn flag_values(spec: &config::CommandSpec, m: &ArgMatches) -> CliResult<Vec<(String, String)>> {
    let mut flags = Vec::new();
    if let Some(key) = spec.positional {
        if let Some(v) = m.get_one::<String>("positional") {
            flags.push((key.to_string(), v.clone()));
        }
    }
    for p in spec.params {
        if m.value_source(p.key) == Some(ValueSource::CommandLine) {
            if let Some(v) = m.get_one::<String>(p.key) {
                if spec.positional == Some(p.key) && !flags.is_empty() {
                    return Err(CliError::usage(format!("`{}` given both positionally and as a flag", p.key)));
                }
                flags.push((p.key.to_string(), v.clone()));
            }
        }
    }
    Ok(flags)
}

fn run(m: &ArgMatches) -> CliResult<ExitCode> {
    let (name, sub) = m.subcommand().expect("subcommand required");
    let spec = COMMANDS.iter().find(|c| c.name == name).expect("subcommands come from COMMANDS");
    let config = match sub.get_one::<String>("config") {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|source| CliError::Io { context: format!("reading config `{path}`"), source })?;
            parse_config(&text)?
        }
        None => ConfigFile::default(),
    };
    let params = Params::resolve(spec, &flag_values(spec, sub)?, &config)?;
    let output = commands::run(&params)?;
    let text = output.table.render(spec.name, params.echo());
    match sub.get_one::<String>("out").map(PathBuf::from) {
        Some(path) => std::fs::write(&path, text)
            .map_err(|source| CliError::Io { context: format!("writing `{}`", path.display()), source })?,
        None => print!("{text}"),
    }
    if !output.audit_failures.is_empty() {
        return Err(CliError::AuditFailed(output.audit_failures.join("; ")));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&matches) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
