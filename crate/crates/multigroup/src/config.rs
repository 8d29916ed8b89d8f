//! Flat `key = value` configuration.
//!
//! Blank lines and lines starting with `#` are ignored. A setting is resolved
//! from three layers: command-line flags override the file, and the file
//! overrides built-in defaults. A run manifest is the fully resolved layer
//! plus `command`, `version` and `output.*` entries; loading a manifest as a
//! config file reproduces the run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Keys written into manifests that carry no setting.
pub fn is_meta_key(key: &str) -> bool {
    key == "command" || key == "version" || key.starts_with("output.")
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn new() -> Self {
        Config::default()
    }

    pub fn from_pairs<K: Into<String>, V: Into<String>>(pairs: impl IntoIterator<Item = (K, V)>) -> Self {
        Config {
            entries: pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect(),
        }
    }

    /// Parses `text`; `origin` names the source in error messages.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                msg,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected `key = value`, got `{line}`")))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(bad("empty key".into()));
            }
            if entries.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(bad(format!("`{k}` set twice")));
            }
        }
        Ok(Config { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        Config::parse(&text, path)
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.insert(key.into(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// `other` wins on shared keys.
    pub fn overlay(mut self, other: &Config) -> Self {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
        self
    }

    /// Fails on any non-meta key outside `known`.
    pub fn check_keys(&self, known: &[&str]) -> Result<()> {
        for k in self.entries.keys() {
            if !is_meta_key(k) && !known.contains(&k.as_str()) {
                return Err(Error::usage(format!("unknown setting `{k}`")));
            }
        }
        Ok(())
    }

    fn required(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| {
            Error::usage(format!("missing required setting `{key}` (--{})", key.replace('_', "-")))
        })
    }

    /// Parses a required value.
    pub fn value<T: FromStr>(&self, key: &str) -> Result<T> {
        parse_value(key, self.required(key)?)
    }

    /// Parses an optional value; an empty string counts as unset.
    pub fn optional<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None | Some("") => Ok(None),
            Some(raw) => parse_value(key, raw).map(Some),
        }
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        self.required(key)?
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse_value(key, s))
            .collect()
    }

    /// One `key = value` line per entry, sorted by key.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| Error::usage(format!("`{key}`: cannot parse `{raw}`")))
}

/// Joins values with commas.
pub fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// The resolved settings of a run plus its command, library version and
/// output paths.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub settings: Config,
    pub outputs: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command: &str, settings: Config) -> Self {
        RunManifest {
            command: command.to_string(),
            settings,
            outputs: Vec::new(),
        }
    }

    pub fn output(&mut self, name: &str, path: &Path) {
        self.outputs.push((name.to_string(), path.display().to_string()));
    }

    pub fn to_config(&self) -> Config {
        let mut c = self.settings.clone();
        c.set("command", self.command.clone());
        c.set("version", env!("CARGO_PKG_VERSION"));
        for (k, v) in &self.outputs {
            c.set(format!("output.{k}"), v.clone());
        }
        c
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = format!("# multigroup run manifest\n{}", self.to_config().render());
        crate::io::write_text(path, &text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layers_and_types() {
        let defaults = Config::from_pairs([("a", "1"), ("b", "x"), ("c", "0.5,0.25")]);
        let file = Config::parse("# comment\n\nb = y\n d=3 \n", Path::new("f")).unwrap();
        let flags = Config::from_pairs([("d", "4")]);
        let c = defaults.overlay(&file).overlay(&flags);
        assert_eq!(c.value::<u32>("a").unwrap(), 1);
        assert_eq!(c.get("b"), Some("y"));
        assert_eq!(c.value::<u32>("d").unwrap(), 4);
        assert_eq!(c.list::<f64>("c").unwrap(), vec![0.5, 0.25]);
        assert!(c.value::<u32>("b").is_err());
        assert!(c.value::<u32>("zz").is_err());
        assert_eq!(c.optional::<u32>("zz").unwrap(), None);
    }

    #[test]
    fn parse_errors() {
        assert!(Config::parse("novalue\n", Path::new("f")).is_err());
        assert!(Config::parse("a = 1\na = 2\n", Path::new("f")).is_err());
        assert!(Config::parse(" = 2\n", Path::new("f")).is_err());
    }

    #[test]
    fn manifest_reloads_as_config() {
        let mut m = RunManifest::new("fit", Config::from_pairs([("lambda", "0.1"), ("seed", "7")]));
        m.output("trace", Path::new("out/trace.csv"));
        let text = m.to_config().render();
        let back = Config::parse(&text, Path::new("m")).unwrap();
        assert_eq!(back.get("command"), Some("fit"));
        assert_eq!(back.get("output.trace"), Some("out/trace.csv"));
        back.check_keys(&["lambda", "seed"]).unwrap();
        assert!(back.check_keys(&["lambda"]).is_err());
    }
}
