//! Run configuration: built-in defaults, then a `key = value` file, then
//! command-line flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use crate::CliError;

/// Every recognised key with its default, if any.
const KEYS: &[(&str, Option<&str>)] = &[
    ("in", None),
    ("out", None),
    ("out_prefix", None),
    ("lexicon", None),
    ("geo", None),
    ("cities", None),
    ("preds", None),
    ("model", None),
    ("gold", None),
    ("seed", Some("0")),
    ("lambda", Some("0.7")),
    ("learning_rate", Some("0.1")),
    ("epochs", Some("50")),
    ("batch_size", Some("32")),
    ("weight_decay", Some("1e-5")),
    ("dimension", Some("262144")),
    ("char_ngram_min", Some("2")),
    ("char_ngram_max", Some("4")),
    ("window", Some("2")),
    ("svm_regularization", Some("1e-4")),
    ("svm_epochs", Some("30")),
    ("svm_dimension", Some("262144")),
    ("ratios", Some("0.7,0.15,0.15")),
    ("min_tokens", Some("1")),
    ("policy", Some("first")),
    ("dist", Some("V:5,T:3,N:2,B:1")),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    values: BTreeMap<&'static str, String>,
}

fn known(key: &str) -> Option<&'static str> {
    KEYS.iter().map(|(k, _)| *k).find(|k| *k == key)
}

impl RunConfig {
    pub fn defaults() -> Self {
        RunConfig {
            values: KEYS
                .iter()
                .filter_map(|(k, v)| v.map(|v| (*k, v.to_string())))
                .collect(),
        }
    }

    /// Applies a config file on top of the current values.
    pub fn apply_file(&mut self, source: &str) -> Result<(), CliError> {
        let mut seen = BTreeMap::new();
        for (idx, raw) in source.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: String| CliError::config(format!("config line {}: {m}", idx + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let key = known(key).ok_or_else(|| err(format!("unknown key {key:?}")))?;
            if value.is_empty() {
                return Err(err(format!("empty value for {key}")));
            }
            if let Some(first) = seen.insert(key, idx + 1) {
                return Err(err(format!("{key} already set on line {first}")));
            }
            self.values.insert(key, value.to_string());
        }
        Ok(())
    }

    /// Flag values override whatever the defaults and file set.
    pub fn apply_flags<'a>(&mut self, flags: impl IntoIterator<Item = (&'a str, Option<String>)>) {
        for (key, value) in flags {
            let key = known(key).expect("flag maps to a config key");
            if let Some(v) = value {
                self.values.insert(key, v);
            }
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key).ok_or_else(|| {
            CliError::config(format!("missing --{} (or `{key}` in the config file)", key.replace('_', "-")))
        })
    }

    pub fn parse<T>(&self, key: &str) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|e| CliError::config(format!("{key} = {raw:?}: {e}")))
    }

    pub fn ratios(&self) -> Result<[f64; 3], CliError> {
        let raw = self.require("ratios")?;
        let parts = raw
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::config(format!("ratios = {raw:?}: {e}")))?;
        parts
            .try_into()
            .map_err(|_| CliError::config(format!("ratios = {raw:?}: expected three comma-separated numbers")))
    }

    /// The fully resolved configuration, one `key = value` per line.
    pub fn render(&self) -> String {
        self.values
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
