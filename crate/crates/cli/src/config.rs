//! Optional JSON config files mirroring the command-line flags.
//!
//! Precedence: an explicit command-line flag wins, then the config file
//! value under the flag's long name, then the built-in default.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::error::{io_error, CliError};

#[derive(Debug, Default)]
pub struct ConfigFile {
    values: Option<Value>,
}

impl ConfigFile {
    pub fn load(path: Option<&PathBuf>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        let values: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::io_format(format!("{}: invalid JSON: {e}", path.display())))?;
        if !values.is_object() {
            return Err(CliError::io_format(format!(
                "{}: config must be a JSON object of flag values",
                path.display()
            )));
        }
        Ok(Self {
            values: Some(values),
        })
    }

    /// The config value under a flag's long name, if present.
    pub fn get<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>, CliError> {
        match &self.values {
            Some(Value::Object(map)) => match map.get(key) {
                Some(v) => serde_json::from_value(v.clone()).map(Some).map_err(|e| {
                    CliError::argument(format!("config key `{key}`: {e}"))
                }),
                None => Ok(None),
            },
            _ => Ok(None),
        }
    }

    /// Flag > config > default.
    pub fn resolve<T: DeserializeOwned>(
        &self,
        flag: Option<T>,
        key: &str,
        default: T,
    ) -> Result<T, CliError> {
        Ok(flag.or(self.get(key)?).unwrap_or(default))
    }

    /// Flag > config, at least one required.
    pub fn require<T: DeserializeOwned>(
        &self,
        flag: Option<T>,
        key: &str,
    ) -> Result<T, CliError> {
        flag.or(self.get(key)?)
            .ok_or_else(|| CliError::argument(format!("missing required argument `--{key}`")))
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_error(path, e))
}
