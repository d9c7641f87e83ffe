//! Flat `key=value` run configuration, flag resolution and run manifests.
//!
//! Command-line flags override configuration-file entries, which override defaults. Every
//! resolved value is recorded, and the resulting manifest is itself a valid configuration
//! file, so `--config run.manifest` replays a run.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

const COMMAND_KEY: &str = "command";

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Blank lines and lines starting with `#` are ignored; keys and values are trimmed.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("config line {}: expected key=value", i + 1))
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::InvalidArgument(format!("config line {}: empty key", i + 1)));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::InvalidArgument(format!("config key {key:?} repeated")));
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }
}

/// Resolves command options and records what was used.
#[derive(Debug)]
pub struct Resolver {
    command: String,
    file: ConfigFile,
    consumed: BTreeSet<String>,
    resolved: BTreeMap<String, String>,
}

impl Resolver {
    pub fn new(command: &str, file: Option<ConfigFile>) -> Result<Self> {
        let file = file.unwrap_or_default();
        if let Some(cmd) = file.get(COMMAND_KEY) {
            if cmd != command {
                return Err(Error::InvalidArgument(format!(
                    "config file is for command {cmd:?}, not {command:?}"
                )));
            }
        }
        Ok(Self {
            command: command.to_string(),
            file,
            consumed: BTreeSet::from([COMMAND_KEY.to_string()]),
            resolved: BTreeMap::new(),
        })
    }

    /// flag, then config file, then `default`; `None` if none of them is set.
    pub fn optional<T>(&mut self, key: &str, flag: Option<T>, default: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.consumed.insert(key.to_string());
        let value = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(raw) => Some(raw.parse::<T>().map_err(|e| {
                    Error::InvalidArgument(format!("config value for {key}: {e}"))
                })?),
                None => default,
            },
        };
        if let Some(v) = &value {
            self.resolved.insert(key.to_string(), v.to_string());
        }
        Ok(value)
    }

    pub fn with_default<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        Ok(self.optional(key, flag, Some(default))?.expect("default supplied"))
    }

    pub fn required<T>(&mut self, key: &str, flag: Option<T>) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.optional(key, flag, None)?
            .ok_or_else(|| Error::InvalidArgument(format!("missing required option --{}", key.replace('_', "-"))))
    }

    /// Fails on configuration keys the command never asked for.
    pub fn finish(self) -> Result<Manifest> {
        let unknown: Vec<&String> = self
            .file
            .entries
            .keys()
            .filter(|k| !self.consumed.contains(*k))
            .collect();
        if !unknown.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "unknown config keys for {}: {unknown:?}",
                self.command
            )));
        }
        Ok(Manifest {
            command: self.command,
            values: self.resolved,
        })
    }
}

/// Every resolved option of a run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    pub command: String,
    pub values: BTreeMap<String, String>,
}

impl Manifest {
    pub fn render(&self) -> String {
        let mut out = format!("{COMMAND_KEY}={}\n", self.command);
        for (k, v) in &self.values {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }
}

/// Comma-separated list option.
#[derive(Clone, Debug, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: Display,
{
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(|p| p.trim().parse::<T>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(List)
    }
}

impl<T: Display> Display for List<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}
