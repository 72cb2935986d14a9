//! Plain-text `key = value` configuration with flag overrides.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

/// Every key a configuration file may set.
pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    // corpus generation
    "size",
    "max_statements",
    "max_block_depth",
    "max_expr_depth",
    "max_leaves",
    "zipf_exponent",
    // filtering and evaluation
    "k",
    "ks",
    "folds",
    "triviality",
    "chain_ratio",
    "root_dominance",
    "ngram_order",
    // zipf
    "inner_only",
    "drop_singletons",
    // training
    "learning_rate",
    "weight_decay",
    "batch_size",
    "epochs",
    "adam_beta1",
    "adam_beta2",
    "adam_eps",
    "decoupled_weight_decay",
    "embed_dim",
    "hidden_dim",
    "head_dim",
    // defect prediction
    "undersample",
    "n_trees",
    "enn_k",
    "jit_folds",
    "synthetic_commits",
    "synthetic_dim",
    "synthetic_imbalance",
    "synthetic_shift",
    "synthetic_latent",
    "synthetic_noise",
    "synthetic_max_methods",
];

#[derive(Debug)]
pub struct ConfigError(pub String);

impl Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Merged configuration. Every value read through [`Config::get`] is
/// recorded, defaults included, so the manifest echoes the effective run.
#[derive(Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    used: BTreeMap<String, String>,
}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut c = Config::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return err(format!("config line {}: expected key = value", i + 1));
            };
            c.set(k.trim(), v.trim())?;
        }
        Ok(c)
    }

    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        match path {
            None => Ok(Config::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| ConfigError(format!("cannot read config {}: {e}", p.display())))?;
                Config::parse(&text)
            }
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), ConfigError> {
        if !KNOWN_KEYS.contains(&key) {
            return err(format!("unknown config key `{key}`"));
        }
        self.values.insert(key.to_string(), value.into());
        Ok(())
    }

    /// Applies a flag value when present; flags win over the file.
    pub fn flag<T: ToString>(&mut self, key: &str, value: Option<T>) -> Result<(), ConfigError> {
        match value {
            Some(v) => self.set(key, v.to_string()),
            None => Ok(()),
        }
    }

    pub fn get<T>(&mut self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T: FromStr + Display,
    {
        let v = match self.values.get(key) {
            Some(raw) => raw.parse().map_err(|_| ConfigError(format!("invalid value `{raw}` for `{key}`")))?,
            None => default,
        };
        self.used.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    pub fn get_list(&mut self, key: &str, default: &str) -> Result<Vec<usize>, ConfigError> {
        let raw = self.values.get(key).cloned().unwrap_or_else(|| default.to_string());
        let list = raw
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<Result<Vec<usize>, _>>()
            .map_err(|_| ConfigError(format!("invalid list `{raw}` for `{key}`")))?;
        self.used.insert(key.to_string(), raw);
        Ok(list)
    }

    /// Effective values of every key read so far.
    pub fn echo(&self) -> &BTreeMap<String, String> {
        &self.used
    }
}
