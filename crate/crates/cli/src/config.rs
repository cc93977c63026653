//! Parameter schemas, `key = value` config files and flag/config/default merging.

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Float,
    /// Non-negative integer.
    Count,
    /// Comma-separated floats.
    FloatList,
    Choice(&'static [&'static str]),
    Text,
}

#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub key: &'static str,
    pub kind: Kind,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

#[derive(Debug, Clone, Copy)]
pub struct CommandSpec {
    pub name: &'static str,
    pub about: &'static str,
    /// Key of a parameter that is also accepted as the first positional argument.
    pub positional: Option<&'static str>,
    pub params: &'static [ParamSpec],
}

impl CommandSpec {
    fn param(&self, key: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.key == key)
    }

    fn known_keys(&self) -> String {
        self.params.iter().map(|p| p.key).collect::<Vec<_>>().join(", ")
    }
}

fn check_value(spec: &ParamSpec, value: &str) -> CliResult<()> {
    let bad = |what: &str| CliError::usage(format!("parameter `{}`: expected {what}, got `{value}`", spec.key));
    match spec.kind {
        Kind::Float => {
            value.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| bad("a finite number"))?;
        }
        Kind::Count => {
            value.trim().parse::<u64>().map_err(|_| bad("a non-negative integer"))?;
        }
        Kind::FloatList => {
            parse_list(value).ok_or_else(|| bad("a comma-separated list of numbers"))?;
        }
        Kind::Choice(options) => {
            if !options.contains(&value.trim()) {
                return Err(bad(&format!("one of {}", options.join(", "))));
            }
        }
        Kind::Text => {
            if value.trim().is_empty() {
                return Err(bad("a non-empty value"));
            }
        }
    }
    Ok(())
}

fn parse_list(value: &str) -> Option<Vec<f64>> {
    let v: Option<Vec<f64>> = value.split(',').map(|s| s.trim().parse::<f64>().ok().filter(|x| x.is_finite())).collect();
    v.filter(|v| !v.is_empty())
}

/// Contents of a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub command: Option<String>,
    pub entries: Vec<(String, String)>,
}

/// Reads `key = value` lines. Blank lines and `#` comments are skipped.
///
/// A CSV written by this tool is also accepted: its `# command = ...` and
/// `# param key = value` lines are read and the table body is ignored.
pub fn parse_config(text: &str) -> CliResult<ConfigFile> {
    let mut cfg = ConfigFile::default();
    let csv_mode = text.starts_with("# weaktherm");
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(kv) = rest.strip_prefix("param ") {
                cfg.entries.push(split_kv(kv, lineno)?);
            } else if let Some(cmd) = rest.strip_prefix("command =") {
                cfg.command = Some(cmd.trim().to_string());
            }
            continue;
        }
        if csv_mode {
            continue;
        }
        cfg.entries.push(split_kv(line, lineno)?);
    }
    Ok(cfg)
}

fn split_kv(line: &str, lineno: usize) -> CliResult<(String, String)> {
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| CliError::usage(format!("config line {}: expected `key = value`, got `{line}`", lineno + 1)))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() {
        return Err(CliError::usage(format!("config line {}: empty key", lineno + 1)));
    }
    Ok((k.to_string(), v.to_string()))
}

/// Validated parameters in schema order.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    command: &'static str,
    values: Vec<(&'static str, String)>,
}

impl Params {
    /// Flags override config entries, which override defaults.
    pub fn resolve(spec: &CommandSpec, flags: &[(String, String)], config: &ConfigFile) -> CliResult<Self> {
        if let Some(cmd) = &config.command {
            if cmd != spec.name {
                return Err(CliError::usage(format!("config file is for command `{cmd}`, not `{}`", spec.name)));
            }
        }
        for (k, _) in config.entries.iter().chain(flags) {
            if spec.param(k).is_none() {
                return Err(CliError::usage(format!(
                    "unknown parameter `{k}` for `{}`; known: {}",
                    spec.name,
                    spec.known_keys()
                )));
            }
        }
        let lookup = |list: &[(String, String)], key: &str| list.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.clone());
        let mut values = Vec::new();
        for p in spec.params {
            let v = lookup(flags, p.key)
                .or_else(|| lookup(&config.entries, p.key))
                .or_else(|| p.default.map(str::to_string));
            if let Some(v) = v {
                check_value(p, &v)?;
                values.push((p.key, v.trim().to_string()));
            }
        }
        Ok(Self { command: spec.name, values })
    }

    pub fn command(&self) -> &'static str {
        self.command
    }

    pub fn echo(&self) -> &[(&'static str, String)] {
        &self.values
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.iter().find(|(k, _)| *k == key).map(|(_, v)| v.as_str())
    }

    pub fn has(&self, key: &str) -> bool {
        self.raw(key).is_some()
    }

    fn required(&self, key: &str) -> CliResult<&str> {
        self.raw(key).ok_or_else(|| CliError::usage(format!("`{}` needs parameter `{key}`", self.command)))
    }

    pub fn f64(&self, key: &str) -> CliResult<f64> {
        Ok(self.required(key)?.parse().expect("validated"))
    }

    pub fn count(&self, key: &str) -> CliResult<u64> {
        Ok(self.required(key)?.parse().expect("validated"))
    }

    pub fn list(&self, key: &str) -> CliResult<Vec<f64>> {
        Ok(parse_list(self.required(key)?).expect("validated"))
    }

    pub fn text(&self, key: &str) -> CliResult<&str> {
        self.required(key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: CommandSpec = CommandSpec {
        name: "demo",
        about: "",
        positional: None,
        params: &[
            ParamSpec { key: "beta", kind: Kind::Float, default: Some("1"), help: "" },
            ParamSpec { key: "e", kind: Kind::FloatList, default: Some("0,1"), help: "" },
            ParamSpec { key: "model", kind: Kind::Choice(&["a", "b"]), default: None, help: "" },
        ],
    };

    fn kv(k: &str, v: &str) -> (String, String) {
        (k.into(), v.into())
    }

    #[test]
    fn precedence() {
        let cfg = parse_config("beta = 2\nmodel = b\n").unwrap();
        let p = Params::resolve(&SPEC, &[kv("beta", "3")], &cfg).unwrap();
        assert_eq!(p.f64("beta").unwrap(), 3.0);
        assert_eq!(p.text("model").unwrap(), "b");
        assert_eq!(p.list("e").unwrap(), vec![0.0, 1.0]);
        let p = Params::resolve(&SPEC, &[], &cfg).unwrap();
        assert_eq!(p.f64("beta").unwrap(), 2.0);
        let p = Params::resolve(&SPEC, &[], &ConfigFile::default()).unwrap();
        assert_eq!(p.f64("beta").unwrap(), 1.0);
        assert!(!p.has("model"));
        assert!(p.text("model").is_err());
    }

    #[test]
    fn validation() {
        let none = ConfigFile::default();
        assert!(Params::resolve(&SPEC, &[kv("beta", "x")], &none).is_err());
        assert!(Params::resolve(&SPEC, &[kv("beta", "inf")], &none).is_err());
        assert!(Params::resolve(&SPEC, &[kv("model", "c")], &none).is_err());
        assert!(Params::resolve(&SPEC, &[kv("e", "0,,1")], &none).is_err());
        assert!(Params::resolve(&SPEC, &[kv("gamma", "1")], &none).is_err());
    }

    #[test]
    fn csv_preamble_is_a_config() {
        let csv = "# weaktherm 0.1.0\n# command = demo\n# param beta = 0.5\nbeta,T\n0.5,2\n# summary x = 1\n";
        let cfg = parse_config(csv).unwrap();
        assert_eq!(cfg.command.as_deref(), Some("demo"));
        assert_eq!(cfg.entries, vec![kv("beta", "0.5")]);
        let other = CommandSpec { name: "other", ..SPEC };
        assert!(Params::resolve(&other, &[], &cfg).is_err());
    }

    #[test]
    fn malformed_lines() {
        assert!(parse_config("beta 2\n").is_err());
        assert!(parse_config(" = 2\n").is_err());
        assert_eq!(parse_config("# comment\n\n").unwrap(), ConfigFile::default());
    }
}
