//! key=value config files merged with command-line flags.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use beg::BegError;
use serde_json::Value;

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, BegError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(BegError::Format(format!("config line {}: expected key=value", i + 1)));
        };
        let key = k.trim().replace('_', "-");
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(BegError::Format(format!("config line {}: duplicate key {key}", i + 1)));
        }
    }
    Ok(out)
}

/// Resolves each parameter from its flag, then the config file, then a
/// default, and records the result.
pub struct Resolver {
    file: BTreeMap<String, String>,
    seen: BTreeSet<String>,
    pub resolved: BTreeMap<String, Value>,
}

impl Resolver {
    pub fn new(file: BTreeMap<String, String>) -> Self {
        Resolver { file, seen: BTreeSet::new(), resolved: BTreeMap::new() }
    }

    fn from_file<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, BegError> {
        self.seen.insert(key.to_string());
        match self.file.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse::<T>()
                .map(Some)
                .map_err(|_| BegError::InvalidParams(format!("config key {key}: cannot parse {s:?}"))),
        }
    }

    pub fn opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, BegError>
    where
        T: FromStr + Clone + Into<Value>,
    {
        let file = self.from_file::<T>(key)?;
        let v = flag.or(file);
        if let Some(x) = &v {
            self.resolved.insert(key.to_string(), x.clone().into());
        }
        Ok(v)
    }

    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: Option<T>) -> Result<T, BegError>
    where
        T: FromStr + Clone + Into<Value>,
    {
        match self.opt(key, flag)?.or(default) {
            Some(v) => {
                self.resolved.insert(key.to_string(), v.clone().into());
                Ok(v)
            }
            None => Err(BegError::InvalidParams(format!("missing required parameter --{key}"))),
        }
    }

    pub fn flag(&mut self, key: &str, flag: bool) -> Result<bool, BegError> {
        let v = flag || self.from_file::<bool>(key)?.unwrap_or(false);
        self.resolved.insert(key.to_string(), v.into());
        Ok(v)
    }

    pub fn record(&mut self, key: &str, v: impl Into<Value>) {
        self.resolved.insert(key.to_string(), v.into());
    }

    /// Rejects config keys that no parameter of the subcommand consumed.
    pub fn finish(&self) -> Result<(), BegError> {
        let unknown: Vec<&String> = self.file.keys().filter(|k| !self.seen.contains(*k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(BegError::InvalidParams(format!("unknown config keys: {unknown:?}")))
        }
    }
}
