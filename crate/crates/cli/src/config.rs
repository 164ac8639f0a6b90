//! Flat `key = value` config files and precedence handling.
//!
//! Flags override the file, the file overrides defaults.

use std::collections::BTreeMap;
use std::fmt::Write;

use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Keys a config file may set.
pub const KEYS: &[&str] = &[
    "protocol", "n", "t", "p", "mode", "seed", "trials", "cutoff", "branch-budget", "out", "scenario", "audit",
    "instances", "bias", "allow-resilience-override",
];

/// Parses `key = value` lines. `#` starts a comment; blank lines are skipped.
pub fn parse(text: &str, origin: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError(format!("{origin}:{}: expected `key = value`, got `{line}`", no + 1)));
        };
        let (k, v) = (k.trim().replace('_', "-"), v.trim().to_string());
        if !KEYS.contains(&k.as_str()) {
            return Err(ConfigError(format!("{origin}:{}: unknown key `{k}`", no + 1)));
        }
        if out.insert(k.clone(), v).is_some() {
            return Err(ConfigError(format!("{origin}:{}: duplicate key `{k}`", no + 1)));
        }
    }
    Ok(out)
}

/// Effective settings after precedence.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn new(defaults: &[(&str, &str)], file: BTreeMap<String, String>, flags: &[(&str, Option<String>)]) -> Self {
        let mut values: BTreeMap<String, String> = defaults.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        values.extend(file);
        for (k, v) in flags {
            if let Some(v) = v {
                values.insert(k.to_string(), v.clone());
            }
        }
        Self { values }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str, ConfigError> {
        self.get(key).ok_or_else(|| ConfigError(format!("missing required setting `{key}`")))
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        let raw = self.require(key)?;
        raw.parse().map_err(|_| ConfigError(format!("setting `{key}` has invalid value `{raw}`")))
    }

    pub fn flag(&self, key: &str) -> Result<bool, ConfigError> {
        match self.get(key) {
            None | Some("false") => Ok(false),
            Some("true") => Ok(true),
            Some(other) => Err(ConfigError(format!("setting `{key}` must be true or false, got `{other}`"))),
        }
    }

    /// `key=value` lines in key order.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.values {
            writeln!(s, "{k}={v}").unwrap();
        }
        s
    }

    /// First 16 hex digits of the SHA-256 of [`Settings::render`], leaving
    /// out `out` so the destination does not change the hash.
    pub fn hash(&self) -> String {
        let mut run = self.clone();
        run.values.remove("out");
        let digest = Sha256::digest(run.render().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_errors() {
        let file = parse("n = 4\n# comment\nt=1 # inline\n", "x.cfg").unwrap();
        let s = Settings::new(&[("n", "3"), ("seed", "0")], file, &[("t", Some("2".into())), ("seed", None)]);
        assert_eq!(s.get("n"), Some("4"));
        assert_eq!(s.get("t"), Some("2"));
        assert_eq!(s.get("seed"), Some("0"));
        assert_eq!(parse("bogus = 1", "a").unwrap_err().0, "a:1: unknown key `bogus`");
        assert_eq!(parse("\nn 4", "a").unwrap_err().0, "a:2: expected `key = value`, got `n 4`");
        assert_eq!(s.hash(), s.clone().hash());
    }
}
